#include "qbr/channel.hpp"
#include "qbr/measure.hpp"
#include "qbr/random.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace qbr;

namespace {

const Hamiltonian kQubit{0.0, 1.0};

DensityOperator plus_state() {
    return DensityOperator::pure(StateVector(Vector::Constant(2, 1.0 / std::sqrt(2.0))));
}

/// Reference conditioning with full Kronecker products.
std::pair<double, Matrix> reference_outcome(const DensityOperator& sigma, const Matrix& eb, const Matrix& er) {
    const auto ds = static_cast<Eigen::Index>(sigma.dims()[0]);
    const Matrix op = kron(kron(Matrix::Identity(ds, ds), eb), er);
    const Matrix x = op * sigma.matrix();
    const double p = x.trace().real();
    const Matrix reduced = detail::partial_trace_matrix(x, sigma.dims(), {true, false, false});
    return {p, reduced / p};
}

Povm random_frame(std::size_t d, std::size_t n, Rng& rng) {
    return povm_from_isometry(haar_unitary(static_cast<Eigen::Index>(n), rng).leftCols(static_cast<Eigen::Index>(d)));
}

}  // namespace

TEST(Povm, Validation) {
    EXPECT_THROW(Povm({Matrix::Identity(2, 2) * 0.5}, 2), ArgumentError);
    Matrix neg(2, 2);
    neg << 1.5, 0, 0, -0.5;
    EXPECT_THROW(Povm({neg, Matrix::Identity(2, 2) - neg}, 2), ArgumentError);
    EXPECT_THROW(rank_one_povm({Vector::Ones(2)}, {-1.0}), ArgumentError);
    EXPECT_NO_THROW(computational_povm(3));
    EXPECT_EQ(trivial_povm(2).size(), 1u);
}

TEST(RankOnePovm, Examples) {
    const Povm c = rank_one_povm({StateVector::basis(0, 2).amplitudes(), StateVector::basis(1, 2).amplitudes()}, {1.0, 1.0});
    EXPECT_LT(detail::max_abs(c.elements()[0] - computational_povm(2).elements()[0]), 1e-15);

    const double th = 0.7;
    Vector a(2), b(2);
    a << std::cos(th / 2), std::sin(th / 2);
    b << std::cos((th + M_PI) / 2), std::sin((th + M_PI) / 2);
    EXPECT_NO_THROW(rank_one_povm({a, b}, {1.0, 1.0}));

    std::vector<Vector> trine;
    for (int k = 0; k < 3; ++k) {
        Vector v(2);
        v << std::cos(2 * M_PI * k / 3), std::sin(2 * M_PI * k / 3);
        trine.push_back(v);
    }
    const Povm t = rank_one_povm(trine, {2.0 / 3, 2.0 / 3, 2.0 / 3});
    Matrix sum = Matrix::Zero(2, 2);
    for (const auto& e : t.elements()) sum += e;
    EXPECT_LT(detail::max_abs(sum - Matrix::Identity(2, 2)), 1e-12);
    EXPECT_THROW(rank_one_povm(trine, {1.0, 1.0, 1.0}), ArgumentError);
}

TEST(ConditionWeak, AlphaZeroLeavesThermalStates) {
    Rng rng(1);
    const InverseTemperature beta(1.0);
    const IsometricExtension ext = qubit_isometry(0.0, 1.0, beta);
    const DensityOperator sigma = apply_extension(ext, random_rank_state(2, 2, rng));
    const DensityOperator tau = thermal_state(kQubit, beta);
    for (const auto& o : condition_weak(sigma, random_frame(2, 4, rng)).outcomes)
        if (!o.negligible) {
            EXPECT_LT(trace_distance(o.state, tau), 1e-10);
        }
}

TEST(ConditionWeak, TrivialPovmGivesMarginal) {
    const IsometricExtension ext = qubit_isometry(0.6, 1.0, InverseTemperature(2.0));
    const DensityOperator sigma = apply_extension(ext, plus_state());
    const ConditionedEnsemble e = condition_weak(sigma, trivial_povm(2));
    ASSERT_EQ(e.outcomes.size(), 1u);
    EXPECT_NEAR(e.outcomes[0].probability, 1.0, 1e-12);
    EXPECT_LT(trace_distance(e.outcomes[0].state, partial_trace(sigma, {0})), 1e-12);
}

TEST(ConditionWeak, AlphaOnePlusStateOutcomes) {
    const IsometricExtension ext = qubit_isometry(1.0, 1.0, InverseTemperature(1.0));
    const ConditionedEnsemble e = condition_weak(apply_extension(ext, plus_state()), computational_povm(2));
    const double z = 1.0 + std::exp(-1.0);
    ASSERT_EQ(e.outcomes.size(), 2u);
    EXPECT_NEAR(e.outcomes[0].probability, 1.0 / z, 1e-12);
    EXPECT_NEAR(e.outcomes[1].probability, std::exp(-1.0) / z, 1e-12);
    Vector xi(2), psi(2);
    xi << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
    psi << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    EXPECT_LT(trace_distance(e.outcomes[0].state, DensityOperator::pure(StateVector(xi))), 1e-12);
    EXPECT_LT(trace_distance(e.outcomes[1].state, DensityOperator::pure(StateVector(psi))), 1e-12);
}

TEST(ConditionStrong, TrivialReferenceReducesToWeak) {
    Rng rng(2);
    const IsometricExtension ext = qubit_isometry(std::polar(0.4, 1.0), std::polar(1.0, 2.0), InverseTemperature(0.9));
    const DensityOperator sigma = apply_extension(ext, random_rank_state(2, 2, rng));
    const Povm pb = random_frame(2, 3, rng);
    const ConditionedEnsemble w = condition_weak(sigma, pb);
    const ConditionedEnsemble s = condition_strong(sigma, pb, trivial_povm(2));
    ASSERT_EQ(w.outcomes.size(), s.outcomes.size());
    for (std::size_t k = 0; k < w.outcomes.size(); ++k) {
        EXPECT_NEAR(w.outcomes[k].probability, s.outcomes[k].probability, 1e-12);
        EXPECT_LT(detail::max_abs(w.outcomes[k].state.matrix() - s.outcomes[k].state.matrix()), 1e-12);
    }
}

TEST(ConditionStrong, PureJointStateGivesPureBatteryStates) {
    Rng rng(3);
    for (int t = 0; t < 10; ++t) {
        const IsometricExtension ext = qubit_isometry(std::polar(std::sqrt(uniform(rng, 0.0, 1.0)), uniform(rng, 0.0, 6.0)),
                                                      1.0, InverseTemperature(uniform(rng, 0.2, 5.0)));
        const DensityOperator sigma = apply_extension(ext, DensityOperator::pure(haar_state(2, rng)));
        const Povm pb = projective_povm(haar_unitary(2, rng)), pr = projective_povm(haar_unitary(2, rng));
        for (const auto& o : condition_strong(sigma, pb, pr).outcomes)
            if (!o.negligible) {
                EXPECT_GT(o.state.purity(), 1.0 - 1e-9);
            }
    }
}

TEST(ConditionStrong, AlphaZeroComputationalBases) {
    const IsometricExtension ext = qubit_isometry(0.0, 1.0, InverseTemperature(1.0));
    const ConditionedEnsemble e = condition_strong(apply_extension(ext, plus_state()), computational_povm(2), computational_povm(2));
    const double z = 1.0 + std::exp(-1.0);
    double p_ground = 0.0, p_excited = 0.0;
    for (const auto& o : e.outcomes) {
        if (o.negligible) continue;
        const std::size_t l = o.label.second;
        EXPECT_NEAR(o.state.matrix()(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(l)).real(), 1.0, 1e-12);
        (l == 0 ? p_ground : p_excited) += o.probability;
    }
    EXPECT_NEAR(p_ground, 1.0 / z, 1e-12);
    EXPECT_NEAR(p_excited, std::exp(-1.0) / z, 1e-12);
}

TEST(Conditioning, MatchesKroneckerReference) {
    Rng rng(4);
    const Hamiltonian t{0.0, 1.0, 2.0};
    const IsometricExtension ext(random_energy_preserving_unitary(degenerate_blocks(t, t), 4), InverseTemperature(0.7));
    const DensityOperator sigma = apply_extension(ext, random_rank_state(3, 2, rng));
    const Povm pb = random_frame(3, 5, rng), pr = random_frame(3, 4, rng);
    const ConditionedEnsemble e = condition_strong(sigma, pb, pr);
    for (const auto& o : e.outcomes) {
        const auto [p, state] = reference_outcome(sigma, pb.elements()[o.label.first], pr.elements()[o.label.second]);
        EXPECT_NEAR(o.probability, p, 1e-12);
        if (!o.negligible) {
            EXPECT_LT(detail::max_abs(o.state.matrix() - state), 1e-10);
        }
    }
}

TEST(Conditioning, NoSignalingAndNormalization) {
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
        const IsometricExtension ext = qubit_isometry(std::polar(std::sqrt(uniform(rng, 0.0, 1.0)), uniform(rng, 0.0, 6.0)),
                                                      std::polar(1.0, uniform(rng, 0.0, 6.0)),
                                                      InverseTemperature(uniform(rng, 0.2, 5.0)));
        const DensityOperator sigma = apply_extension(ext, random_rank_state(2, 1 + t % 2, rng));
        const Matrix marginal = partial_trace(sigma, {0}).matrix();
        const ConditionedEnsemble w = condition_weak(sigma, random_frame(2, 2 + t % 3, rng));
        const ConditionedEnsemble s = condition_strong(sigma, random_frame(2, 4, rng), random_frame(2, 3, rng));
        for (const auto* e : {&w, &s}) {
            double total = 0.0;
            for (const auto& o : e->outcomes) {
                EXPECT_GE(o.probability, -1e-12);
                total += o.probability;
            }
            EXPECT_NEAR(total, 1.0, 1e-9);
            EXPECT_LT(detail::max_abs(e->average() - marginal), 1e-9);
        }
    }
}

TEST(Conditioning, FlagsNegligibleOutcomes) {
    // bath |0> after alpha = 1 at beta = inf: outcome 1 of the computational basis never happens
    const IsometricExtension ext = qubit_isometry(1.0, 1.0, InverseTemperature::infinite());
    const ConditionedEnsemble e = condition_weak(apply_extension(ext, plus_state()), computational_povm(2));
    EXPECT_FALSE(e.outcomes[0].negligible);
    EXPECT_TRUE(e.outcomes[1].negligible);
}

TEST(Conditioning, DimensionErrors) {
    const IsometricExtension ext = qubit_isometry(1.0, 1.0, InverseTemperature(1.0));
    const DensityOperator sigma = apply_extension(ext, plus_state());
    EXPECT_THROW(condition_weak(sigma, computational_povm(3)), DimensionError);
    EXPECT_THROW(condition_strong(sigma, computational_povm(2), computational_povm(3)), DimensionError);
    EXPECT_THROW(condition_weak(partial_trace(sigma, {0, 1}), computational_povm(2)), DimensionError);
}
