#include "qbr/config.hpp"
#include "qbr/experiment.hpp"
#include "qbr/format.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace qbr;

namespace {

const char* kAlphaOne = R"(# comment
beta = 1
extension.kind = "qubit-family"
extension.alpha = [1, 0]
battery.kind = "pure"
battery.amplitudes = [0.7071067811865476, 0.7071067811865476]
optimizer.seed = 1
optimizer.restarts = 4
)";

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
    const auto pos = s.find(from);
    return s.replace(pos, from.size(), to);
}

}  // namespace

TEST(Config, ParsesFlatFormat) {
    const RunConfig c = parse_config(kAlphaOne);
    EXPECT_EQ(c.extension.kind, "qubit-family");
    EXPECT_EQ(c.extension.alpha, cplx(1.0, 0.0));
    EXPECT_EQ(c.battery.amplitudes.size(), 2u);
    EXPECT_EQ(c.optimizer.seed, 1u);
    EXPECT_EQ(c.optimizer.restarts, 4u);
    EXPECT_EQ(c.format, "csv");
}

TEST(Config, JsonAndFlatAgree) {
    const RunConfig flat = parse_config(kAlphaOne);
    const RunConfig json = parse_config(R"({"beta": 1, "extension": {"kind": "qubit-family", "alpha": [1, 0]},
        "battery": {"kind": "pure", "amplitudes": [0.7071067811865476, 0.7071067811865476]},
        "optimizer": {"seed": 1, "restarts": 4}})");
    EXPECT_EQ(flat.canonical().dump(), json.canonical().dump());
}

TEST(Config, InfiniteBeta) {
    const RunConfig c = parse_config(replace(kAlphaOne, "beta = 1", "beta = \"inf\""));
    EXPECT_TRUE(std::isinf(c.beta));
    EXPECT_NE(error_of(replace(kAlphaOne, "beta = 1", "beta = \"hot\"")), "");
}

TEST(Config, ErrorsNameLineAndKey) {
    const std::string bad = replace(kAlphaOne, "[0.7071067811865476, 0.7071067811865476]", "[1, 1]");
    const std::string msg = error_of(bad);
    EXPECT_NE(msg.find("line 6"), std::string::npos) << msg;
    EXPECT_NE(msg.find("battery.amplitudes"), std::string::npos) << msg;

    EXPECT_NE(error_of(std::string(kAlphaOne) + "beta = 2\n").find("line 9"), std::string::npos);
    EXPECT_NE(error_of(std::string(kAlphaOne) + "battery.colour = 1\n").find("unknown key"), std::string::npos);
    EXPECT_NE(error_of(std::string(kAlphaOne) + "this is not a key\n").find("line 9"), std::string::npos);
    EXPECT_NE(error_of(replace(kAlphaOne, "[1, 0]", "[1.5, 0]")).find("extension.alpha"), std::string::npos);
    EXPECT_NE(error_of(replace(kAlphaOne, "\"pure\"", "\"solid\"")).find("battery.kind"), std::string::npos);
    EXPECT_NE(error_of(std::string(kAlphaOne) + "output.format = \"xml\"\n").find("output.format"), std::string::npos);
    EXPECT_NE(error_of(std::string(kAlphaOne) + "optimizer.outcomes_b = 1\n").find("optimizer.outcomes_b"), std::string::npos);
    EXPECT_NE(error_of("{\"beta\": 1,}"), "");
}

TEST(Config, MixedAndRandomBatteries) {
    const RunConfig m = parse_config(R"(beta = 2
extension.kind = "qubit-family"
extension.alpha = [0, 0]
battery.kind = "mixed"
battery.eigenvalues = [0.8, 0.2]
battery.eigenvectors = [[1, 0], [0, 1]]
)");
    const DensityOperator rho = build_battery(m);
    EXPECT_NEAR(rho.matrix()(0, 0).real(), 0.8, 1e-12);

    EXPECT_NE(error_of(R"(beta = 2
extension.kind = "qubit-family"
extension.alpha = [0, 0]
battery.kind = "mixed"
battery.eigenvalues = [0.8, 0.3]
battery.eigenvectors = [[1, 0], [0, 1]]
)"),
              "");
    EXPECT_NE(error_of(R"(beta = 2
extension.kind = "qubit-family"
extension.alpha = [0, 0]
battery.kind = "mixed"
battery.eigenvalues = [0.8, 0.2]
battery.eigenvectors = [[1, 0], [1, 0]]
)"),
              "");

    for (double p : {1.0 / 3.0, 0.5, 0.8, 1.0}) {
        const DensityOperator r = battery_with_purity(3, p, 4);
        EXPECT_NEAR(r.purity(), p, 1e-10);
    }
}

TEST(Config, QubitFamilyNeedsQubitHamiltonians) {
    EXPECT_NE(error_of(std::string("hamiltonian_s = [0, 1, 2]\n") + kAlphaOne).find("qubit-family"), std::string::npos);
}

TEST(Config, CanonicalHashIgnoresOutput) {
    const RunConfig a = parse_config(kAlphaOne);
    const RunConfig b = parse_config(std::string(kAlphaOne) + "output.format = \"json\"\n");
    EXPECT_EQ(a.canonical().dump(), b.canonical().dump());
    const RunConfig c = parse_config(replace(kAlphaOne, "optimizer.seed = 1", "optimizer.seed = 2"));
    EXPECT_NE(a.canonical().dump(), c.canonical().dump());
}

TEST(Experiment, ComputeAlphaOne) {
    const Record r = compute_record(parse_config(kAlphaOne), 1);
    EXPECT_NEAR(r.w_weak_raw, 0.5, 1e-6);
    EXPECT_NEAR(r.w_strong_raw, 0.5, 1e-6);
    EXPECT_NEAR(r.e_sigma, 0.5, 1e-12);
    ASSERT_TRUE(r.alpha.has_value());
    EXPECT_DOUBLE_EQ(*r.alpha, 1.0);
    ASSERT_TRUE(r.eof_sR.has_value());
    EXPECT_EQ(r.config_hash.size(), 16u);
}

TEST(Experiment, WithParameter) {
    const RunConfig base = parse_config(kAlphaOne);
    EXPECT_DOUBLE_EQ(with_parameter(base, "beta", 3.0).beta, 3.0);
    EXPECT_EQ(with_parameter(base, "alpha", 0.25).extension.alpha, cplx(0.25, 0.0));
    const RunConfig angle = with_parameter(base, "angle", M_PI / 3);
    EXPECT_NEAR(std::abs(angle.battery.amplitudes[0]), std::cos(M_PI / 3), 1e-12);
    const RunConfig p = with_parameter(base, "p", 0.5);
    EXPECT_EQ(p.battery.kind, "mixed");
    EXPECT_NEAR(build_battery(p).purity(), (1.0 + 0.5 * 0.5) / 2.0, 1e-9);
    EXPECT_THROW(with_parameter(base, "gamma", 1.0), ConfigError);
    EXPECT_THROW(with_parameter(base, "alpha", 2.0), ConfigError);
}

TEST(Experiment, CsvAndJsonWriters) {
    Record r;
    r.config_hash = "abc";
    r.battery_desc = "{\"kind\":\"pure\",\"x\":[1,2]}";
    r.w_weak_raw = 0.1;
    std::ostringstream csv, js;
    write_records_csv(csv, {r});
    const std::string text = csv.str();
    EXPECT_EQ(text.substr(0, text.find('\n')),
              "config_hash,seed,beta,alpha,battery_desc,w_weak_raw,w_weak_rescaled,w_weak_clamped,w_strong_raw,"
              "w_strong_rescaled,gap,eof_sR,e_sigma,f_sigma,converged_weak,converged_strong");
    EXPECT_NE(text.find("\"{\"\"kind\"\":\"\"pure\"\",\"\"x\"\":[1,2]}\""), std::string::npos);
    EXPECT_NE(text.find(",0.1,"), std::string::npos);
    write_records_json(js, {r});
    const auto parsed = nlohmann::json::parse(js.str());
    ASSERT_TRUE(parsed.is_array());
    EXPECT_TRUE(parsed[0]["alpha"].is_null());
    EXPECT_DOUBLE_EQ(parsed[0]["w_weak_raw"].get<double>(), 0.1);
}

TEST(Format, ShortestRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) EXPECT_EQ(std::stod(format_double(v)), v);
    EXPECT_EQ(format_double(0.5), "0.5");
    EXPECT_EQ(format_double(std::nan("")), "nan");
    EXPECT_EQ(format_double(-INFINITY), "-inf");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(hex64(fnv1a("")), "cbf29ce484222325");
}
