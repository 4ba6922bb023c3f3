#pragma once

// Seeded samplers for unitaries, states and frames. Every sampler takes an
// explicit engine so callers control reproducibility.

#include "qbr/qcore.hpp"

#include <cstdint>
#include <random>

namespace qbr {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; derives independent stream seeds from (seed, index).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline Matrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double re = n(rng);
            const double im = n(rng);
            m(i, j) = cplx(re, im);
        }
    return m;
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// diag(R) absorbed into Q.
inline Matrix haar_unitary(Eigen::Index dim, Rng& rng) {
    const Matrix g = complex_gaussian(dim, dim, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index k = 0; k < dim; ++k) {
        const cplx d = r(k, k);
        const double a = std::abs(d);
        q.col(k) *= a > 0.0 ? d / a : cplx(1.0);
    }
    return q;
}

inline StateVector haar_state(std::size_t dim, Rng& rng) {
    const Matrix g = complex_gaussian(static_cast<Eigen::Index>(dim), 1, rng);
    return StateVector::normalized(g.col(0), Dims{dim});
}

/// Random mixed state with the given spectrum in a Haar-random basis.
inline DensityOperator random_mixed_state(const std::vector<double>& spectrum, Rng& rng) {
    const auto d = static_cast<Eigen::Index>(spectrum.size());
    const Matrix u = haar_unitary(d, rng);
    RealVector p(d);
    for (Eigen::Index k = 0; k < d; ++k) p[k] = spectrum[static_cast<std::size_t>(k)];
    return DensityOperator(DensityOperator::Trusted{}, u * p.cast<cplx>().asDiagonal() * u.adjoint(),
                           Dims{spectrum.size()});
}

/// Ginibre-induced state of rank r: G G^dagger / Tr, G is d x r.
inline DensityOperator random_rank_state(std::size_t dim, std::size_t rank, Rng& rng) {
    const Matrix g = complex_gaussian(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(rank), rng);
    return DensityOperator(DensityOperator::Trusted{}, g * g.adjoint(), Dims{dim});
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace qbr
