#include "qbr/channel.hpp"
#include "qbr/entangle.hpp"
#include "qbr/retrieval.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace qbr;

namespace {

constexpr double kSTau = 0.5822031088882179;
constexpr double kConcurrenceTau = 0.8868188839700739;  // 2 sqrt(p0 p1) at beta = 1

/// Concurrence from the non-Hermitian product rho (Y(x)Y) rho* (Y(x)Y).
double concurrence_reference(const DensityOperator& rho) {
    Matrix yy = Matrix::Zero(4, 4);
    yy(0, 3) = -1.0;
    yy(1, 2) = 1.0;
    yy(2, 1) = 1.0;
    yy(3, 0) = -1.0;
    const Matrix r = rho.matrix() * yy * rho.matrix().conjugate() * yy;
    Eigen::ComplexEigenSolver<Matrix> es(r);
    std::vector<double> l;
    for (Eigen::Index i = 0; i < 4; ++i) l.push_back(std::sqrt(std::max(0.0, es.eigenvalues()[i].real())));
    std::sort(l.rbegin(), l.rend());
    return std::max(0.0, l[0] - l[1] - l[2] - l[3]);
}

double h_nats(double p) { return -p * std::log(p) - (1 - p) * std::log(1 - p); }

StateVector ket(std::initializer_list<cplx> a, Dims dims) {
    Vector v(static_cast<Eigen::Index>(a.size()));
    Eigen::Index i = 0;
    for (cplx x : a) v[i++] = x;
    return StateVector::normalized(v, std::move(dims));
}

DensityOperator two_qubit(const DensityOperator& r) { return DensityOperator(DensityOperator::Trusted{}, r.matrix(), Dims{2, 2}); }

}  // namespace

TEST(EofPure, Examples) {
    EXPECT_NEAR(eof_pure(ket({1, 0, 0, 0}, {2, 2}), {0}).value, 0.0, 1e-12);
    EXPECT_NEAR(eof_pure(ket({1, 0, 0, 1}, {2, 2}), {0}).value, std::log(2.0), 1e-12);
    const StateVector phi = purified_thermal(Hamiltonian{0.0, 1.0}, InverseTemperature(1.0));
    const EofResult r = eof_pure(phi, {0});
    EXPECT_NEAR(r.value, kSTau, 1e-12);
    EXPECT_TRUE(r.certified);
    EXPECT_EQ(r.method, EofMethod::pure_reduction);
}

TEST(EofPure, ComplementaryCutsAgree) {
    Rng rng(1);
    for (int t = 0; t < 10; ++t) {
        const StateVector psi = StateVector::normalized(haar_state(12, rng).amplitudes(), Dims{2, 3, 2});
        EXPECT_NEAR(eof_pure(psi, {0}).value, eof_pure(psi, {1, 2}).value, 1e-10);
        EXPECT_NEAR(eof_pure(psi, {0, 2}).value, eof_pure(psi, {1}).value, 1e-10);
    }
}

TEST(EofPure, BadCuts) {
    const StateVector psi = ket({1, 0, 0, 0}, {2, 2});
    EXPECT_THROW(eof_pure(psi, {}), ArgumentError);
    EXPECT_THROW(eof_pure(psi, {0, 1}), ArgumentError);
    EXPECT_THROW(eof_pure(psi, {5}), ArgumentError);
}

TEST(Concurrence, Examples) {
    EXPECT_NEAR(concurrence(DensityOperator::pure(ket({1, 0, 0, 0}, {2, 2}))), 0.0, 1e-12);
    EXPECT_NEAR(concurrence(DensityOperator::pure(ket({1, 0, 0, 1}, {2, 2}))), 1.0, 1e-12);
    const DensityOperator phi = DensityOperator::pure(purified_thermal(Hamiltonian{0.0, 1.0}, InverseTemperature(1.0)));
    EXPECT_NEAR(concurrence(phi), kConcurrenceTau, 1e-12);
    EXPECT_THROW(concurrence(DensityOperator::maximally_mixed(4)), DimensionError);
}

TEST(Concurrence, MatchesNonHermitianReference) {
    Rng rng(2);
    for (int t = 0; t < 40; ++t) {
        const DensityOperator r = two_qubit(random_rank_state(4, 1 + t % 4, rng));
        EXPECT_NEAR(concurrence(r), concurrence_reference(r), 1e-7);
    }
}

TEST(EofWootters, Examples) {
    EXPECT_NEAR(eof_wootters(two_qubit(DensityOperator::maximally_mixed(4))).value, 0.0, 1e-12);
    EXPECT_NEAR(eof_from_concurrence(1.0), std::log(2.0), 1e-12);
    EXPECT_NEAR(eof_from_concurrence(0.0), 0.0, 1e-12);
    const DensityOperator phi = DensityOperator::pure(purified_thermal(Hamiltonian{0.0, 1.0}, InverseTemperature(1.0)));
    EXPECT_NEAR(eof_wootters(phi).value, kSTau, 1e-12);
    EXPECT_NEAR(binary_entropy(0.75), 0.5623351446188083, 1e-15);
}

TEST(EofWootters, PureStatesMatchReduction) {
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        const StateVector psi = StateVector::normalized(haar_state(4, rng).amplitudes(), Dims{2, 2});
        EXPECT_NEAR(eof_wootters(DensityOperator::pure(psi)).value, eof_pure(psi, {0}).value, 1e-9);
    }
}

TEST(EofWootters, AlphaOneMarginalAgreesWithSearch) {
    const IsometricExtension ext = qubit_isometry(1.0, 1.0, InverseTemperature(1.0));
    const DensityOperator plus = DensityOperator::pure(StateVector(Vector::Constant(2, 1.0 / std::sqrt(2.0))));
    const DensityOperator sR = partial_trace(apply_extension(ext, plus), {0, 2});
    EXPECT_NEAR(eof_wootters(sR).value, eof_search(sR, {0}).value, 1e-3);
}

TEST(EofSearch, PureInputIsExact) {
    Rng rng(4);
    const StateVector psi = StateVector::normalized(haar_state(4, rng).amplitudes(), Dims{2, 2});
    EXPECT_NEAR(eof_search(DensityOperator::pure(psi), {0}).value, eof_pure(psi, {0}).value, 1e-10);
}

TEST(EofSearch, SeparableMixtureIsZero) {
    Rng rng(5);
    Matrix m = Matrix::Zero(4, 4);
    for (int k = 0; k < 3; ++k) {
        const Vector v = kron(haar_state(2, rng).amplitudes(), haar_state(2, rng).amplitudes());
        m += (k + 1) / 6.0 * v * v.adjoint();
    }
    const DensityOperator r(m, Dims{2, 2});
    EXPECT_LE(eof_search(r, {0}).value, 1e-6);
    EXPECT_NEAR(eof_wootters(r).value, 0.0, 1e-9);
}

TEST(EofSearch, AgreesWithWootters) {
    Rng rng(6);
    for (int t = 0; t < 8; ++t) {
        const DensityOperator r = two_qubit(random_rank_state(4, 1 + t % 4, rng));
        const double w = eof_wootters(r).value;
        const EofResult s = eof_search(r, {0});
        EXPECT_FALSE(s.certified);
        EXPECT_GE(s.value, w - 1e-6);
        EXPECT_NEAR(s.value, w, 1e-3);
    }
}

TEST(EofSearch, DecompositionReconstructsState) {
    Rng rng(7);
    const DensityOperator r = two_qubit(random_rank_state(4, 3, rng));
    const EofResult s = eof_search(r, {0});
    ASSERT_TRUE(s.decomposition.has_value());
    Matrix sum = Matrix::Zero(4, 4);
    double avg = 0.0;
    for (const auto& [p, psi] : *s.decomposition) {
        sum += p * psi.amplitudes() * psi.amplitudes().adjoint();
        avg += p * eof_pure(psi, {0}).value;
    }
    EXPECT_LT(detail::max_abs(sum - r.matrix()), 1e-8);
    EXPECT_NEAR(avg, s.value, 1e-8);
}

TEST(EofSearch, DimensionCap) {
    EXPECT_THROW(eof_search(DensityOperator(DensityOperator::Trusted{}, Matrix::Identity(18, 18), Dims{3, 6}), {0}),
                 CapabilityError);
}

TEST(EofSearch, TracingOutReferenceDoesNotIncreaseEof) {
    Rng rng(8);
    for (int t = 0; t < 3; ++t) {
        const IsometricExtension ext = qubit_isometry(std::polar(std::sqrt(uniform(rng, 0.0, 1.0)), uniform(rng, 0.0, 6.0)),
                                                      1.0, InverseTemperature(uniform(rng, 0.2, 5.0)));
        const double l = uniform(rng, 0.5, 0.95);
        const DensityOperator rho = random_mixed_state({l, 1 - l}, rng);
        const DensityOperator joint = purified_joint(ext, rho);
        const double sRRp = eof_search(partial_trace(joint, {0, 2, 3}), {0}).value;
        const double sR = eof_wootters(partial_trace(joint, {0, 2})).value;
        EXPECT_LE(sR, sRRp + 1e-3);
    }
}

TEST(BinaryEntropy, MatchesFormula) {
    for (double p : {0.1, 0.3, 0.5, 0.9}) EXPECT_NEAR(binary_entropy(p), h_nats(p), 1e-15);
    EXPECT_DOUBLE_EQ(binary_entropy(1.0), 0.0);
}
