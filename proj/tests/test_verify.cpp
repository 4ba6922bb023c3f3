#include "qbr/verify.hpp"

#include <gtest/gtest.h>

using namespace qbr;

namespace {

VerifySettings quick() {
    VerifySettings s;
    s.optimizer.restarts = 8;
    return s;
}

void expect_clean(const CheckReport& r) {
    EXPECT_TRUE(r.passed()) << r.check_name << " worst margin " << r.worst_margin;
    EXPECT_EQ(r.details.size(), r.instances);
    EXPECT_GE(r.worst_margin, -r.tolerance);
    for (const auto& d : r.details) {
        EXPECT_EQ(d.inputs_hash, hex64(fnv1a(d.inputs)));
        EXPECT_FALSE(d.binding.empty());
    }
}

}  // namespace

TEST(Sampler, DeterministicAndInRange) {
    for (std::size_t i = 0; i < 20; ++i) {
        const QubitInstance a = sample_qubit_instance(3, i, i % 2 == 0);
        const QubitInstance b = sample_qubit_instance(3, i, i % 2 == 0);
        EXPECT_EQ(a.alpha, b.alpha);
        EXPECT_EQ(a.battery.matrix(), b.battery.matrix());
        EXPECT_LE(std::abs(a.alpha), 1.0);
        EXPECT_NEAR(std::abs(a.gamma_phase), 1.0, 1e-12);
        EXPECT_GE(a.beta.value(), 0.2);
        EXPECT_LE(a.beta.value(), 5.0);
        EXPECT_EQ(a.pure(), i % 2 == 0);
    }
    EXPECT_NE(sample_qubit_instance(3, 0, true).alpha, sample_qubit_instance(4, 0, true).alpha);
}

TEST(Checks, PassOnSmallSamples) {
    expect_clean(check_prop1(2, 7, quick()));
    expect_clean(check_thm1(2, 7, quick()));
    expect_clean(check_thm2(2, 7, quick()));
    expect_clean(check_thm3(2, 7, quick()));
    expect_clean(check_cor1(2, 7, quick()));
    expect_clean(check_case1_factorization(7));
}

TEST(Checks, ReportsAreDeterministic) {
    const CheckReport a = check_thm1(2, 5, quick());
    const CheckReport b = check_thm1(2, 5, quick());
    EXPECT_EQ(a.worst_margin, b.worst_margin);
    ASSERT_EQ(a.details.size(), b.details.size());
    for (std::size_t k = 0; k < a.details.size(); ++k) {
        EXPECT_EQ(a.details[k].inputs, b.details[k].inputs);
        EXPECT_EQ(a.details[k].margin, b.details[k].margin);
    }
}

TEST(Suite, NamesAndErrors) {
    EXPECT_EQ(check_names().size(), 6u);
    EXPECT_THROW(run_suite("nonsense", 1, 7), ArgumentError);
    EXPECT_THROW(check_thm1(0, 7), ArgumentError);
    const auto reports = run_suite("case1", 1, 7);
    ASSERT_EQ(reports.size(), 1u);
    EXPECT_EQ(reports[0].check_name, "case1");
    EXPECT_EQ(reports[0].seed, 7u);
}
