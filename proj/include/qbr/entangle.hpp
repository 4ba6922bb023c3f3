#pragma once

// Entanglement of formation: pure-state reduction, the two-qubit closed form
// through the concurrence, and a decomposition search that serves as an
// independent (uncertified, upper-bound) oracle for small mixed states.

#include "qbr/nelder_mead.hpp"
#include "qbr/qcore.hpp"
#include "qbr/random.hpp"

#include <array>
#include <optional>

namespace qbr {

enum class EofMethod { pure_reduction, wootters, decomposition_search };

inline const char* to_string(EofMethod m) {
    switch (m) {
        case EofMethod::pure_reduction: return "pure-reduction";
        case EofMethod::wootters: return "wootters";
        case EofMethod::decomposition_search: return "decomposition-search";
    }
    return "?";
}

struct EofResult {
    double value = 0.0;  // nats
    EofMethod method = EofMethod::pure_reduction;
    std::optional<std::vector<std::pair<double, StateVector>>> decomposition;
    bool certified = false;
};

/// Subsystems on side A of a bipartition; the rest form side B.
using Bipartition = std::set<std::size_t>;

/// Binary entropy in nats.
inline double binary_entropy(double p) {
    RealVector v(2);
    v << p, 1.0 - p;
    return detail::shannon_nats(v);
}

namespace detail {

/// Reshapes flat vectors into d_A x d_B coefficient matrices for a cut.
class CutReshaper {
  public:
    CutReshaper(const Dims& dims, const Bipartition& side_a) {
        if (side_a.empty()) throw ArgumentError("bipartition side A is empty");
        std::vector<bool> mask(dims.size(), false);
        for (std::size_t k : side_a) {
            if (k >= dims.size()) throw ArgumentError("bipartition index out of range");
            mask[k] = true;
        }
        if (std::all_of(mask.begin(), mask.end(), [](bool b) { return b; }))
            throw ArgumentError("bipartition side B is empty");
        const IndexSplit s = split_indices(dims, mask);
        row_ = s.kept;
        col_ = s.traced;
        da_ = static_cast<Eigen::Index>(s.kept_dim);
        db_ = static_cast<Eigen::Index>(product(dims) / s.kept_dim);
    }

    Matrix reshape(const Vector& v) const {
        Matrix m(da_, db_);
        for (std::size_t f = 0; f < row_.size(); ++f)
            m(static_cast<Eigen::Index>(row_[f]), static_cast<Eigen::Index>(col_[f])) = v[static_cast<Eigen::Index>(f)];
        return m;
    }

    /// p * S(marginal of v / |v|) for an unnormalized v with p = |v|^2,
    /// i.e. -sum mu ln mu + p ln p over the squared Schmidt weights mu.
    double weighted_entropy(const Vector& v) const {
        const Matrix m = reshape(v);
        const Matrix g = da_ <= db_ ? Matrix(m * m.adjoint()) : Matrix(m.adjoint() * m);
        const RealVector mu = hermitian_eigenvalues(g);
        double p = 0.0, s = 0.0;
        for (Eigen::Index i = 0; i < mu.size(); ++i) {
            const double x = mu[i];
            if (x > 0.0) {
                p += x;
                s -= x * std::log(x);
            }
        }
        return p > 0.0 ? s + p * std::log(p) : 0.0;
    }

  private:
    std::vector<std::size_t> row_, col_;
    Eigen::Index da_ = 0, db_ = 0;
};

inline void require_two_qubits(const DensityOperator& rho) {
    if (rho.dim() != 4 || rho.dims().size() != 2 || rho.dims()[0] != 2 || rho.dims()[1] != 2)
        throw DimensionError("two-qubit state with dims [2,2] required, got " + dims_str(rho.dims()));
}

}  // namespace detail

inline EofResult eof_pure(const StateVector& psi, const Bipartition& cut) {
    const detail::CutReshaper reshaper(psi.dims(), cut);
    EofResult r;
    r.value = std::max(0.0, reshaper.weighted_entropy(psi.amplitudes()));
    r.method = EofMethod::pure_reduction;
    r.certified = true;
    r.decomposition = std::vector<std::pair<double, StateVector>>{{1.0, psi}};
    return r;
}

/// Square roots of the eigenvalues of rho (Y(x)Y) rho* (Y(x)Y), descending,
/// computed as singular values of sqrt(rho) (Y(x)Y) sqrt(rho)*.
inline std::array<double, 4> concurrence_lambdas(const DensityOperator& rho) {
    detail::require_two_qubits(rho);
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix());
    const RealVector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Matrix root = es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
    Matrix yy = Matrix::Zero(4, 4);
    yy(0, 3) = -1.0;
    yy(1, 2) = 1.0;
    yy(2, 1) = 1.0;
    yy(3, 0) = -1.0;
    Eigen::JacobiSVD<Matrix> svd(root * yy * root.conjugate());
    const RealVector s = svd.singularValues();  // descending
    return {s[0], s[1], s[2], s[3]};
}

inline double concurrence(const DensityOperator& rho) {
    const auto l = concurrence_lambdas(rho);
    return std::max(0.0, l[0] - l[1] - l[2] - l[3]);
}

/// E_f from the concurrence: h((1 + sqrt(1 - C^2)) / 2), nats.
inline double eof_from_concurrence(double c) {
    c = std::clamp(c, 0.0, 1.0);
    return binary_entropy(0.5 * (1.0 + std::sqrt(1.0 - c * c)));
}

inline EofResult eof_wootters(const DensityOperator& rho) {
    EofResult r;
    r.value = eof_from_concurrence(concurrence(rho));
    r.method = EofMethod::wootters;
    r.certified = true;
    return r;
}

struct EofSearchSettings {
    std::size_t restarts = 8;
    std::size_t max_iters = 6000;
    /// Largest decomposition tried; 0 means rank^2.
    std::size_t max_decomposition = 0;
    std::uint64_t seed = 0;
    double rank_tol = 1e-12;
};

/// Minimizes sum_i p_i S(A marginal of psi_i) over pure decompositions
/// |psi~_i> = sum_j U_ij sqrt(l_j) |e_j> with U an m x r isometry; every
/// decomposition of size m arises this way. Result is an upper bound on E_f.
inline EofResult eof_search(const DensityOperator& rho, const Bipartition& cut, const EofSearchSettings& cfg = {}) {
    if (rho.dim() > 16) throw CapabilityError("eof_search supports total dimension <= 16, got " + std::to_string(rho.dim()));
    const detail::CutReshaper reshaper(rho.dims(), cut);

    Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix());
    std::vector<Vector> weighted;  // sqrt(l_j) e_j, descending l_j
    for (Eigen::Index j = es.eigenvalues().size(); j-- > 0;)
        if (es.eigenvalues()[j] > cfg.rank_tol) weighted.emplace_back(std::sqrt(es.eigenvalues()[j]) * es.eigenvectors().col(j));
    const auto r = static_cast<Eigen::Index>(weighted.size());
    Matrix basis(static_cast<Eigen::Index>(rho.dim()), r);
    for (Eigen::Index j = 0; j < r; ++j) basis.col(j) = weighted[static_cast<std::size_t>(j)];

    auto decomposition_of = [&](const Matrix& u) {
        std::vector<std::pair<double, StateVector>> out;
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
            const Vector v = basis * u.row(i).transpose();
            const double p = v.squaredNorm();
            if (p > 1e-14) out.emplace_back(p, StateVector::normalized(v, rho.dims()));
        }
        return out;
    };

    EofResult best;
    best.method = EofMethod::decomposition_search;
    best.certified = false;
    best.value = std::numeric_limits<double>::infinity();

    if (r == 1) {
        const Matrix u = Matrix::Identity(1, 1);
        best.value = std::max(0.0, reshaper.weighted_entropy(basis.col(0)));
        best.decomposition = decomposition_of(u);
        return best;
    }

    const std::size_t cap = cfg.max_decomposition ? cfg.max_decomposition : static_cast<std::size_t>(r * r);
    std::vector<Eigen::Index> sizes{r};
    if (static_cast<std::size_t>(r) < cap) sizes.push_back(static_cast<Eigen::Index>(std::min<std::size_t>(cap, static_cast<std::size_t>(r * r))));

    for (std::size_t si = 0; si < sizes.size(); ++si) {
        const Eigen::Index m = sizes[si];
        auto objective = [&](const RealVector& x) {
            const Matrix u = isometry_from_params(x.data(), m, r);
            double total = 0.0;
            for (Eigen::Index i = 0; i < m; ++i) total += reshaper.weighted_entropy(basis * u.row(i).transpose());
            return total;
        };
        NelderMeadOptions opt;
        opt.max_iters = cfg.max_iters;
        for (std::size_t restart = 0; restart < cfg.restarts; ++restart) {
            Rng rng(mix_seed(cfg.seed, si * 1000 + restart));
            // restart 0 starts from the spectral decomposition
            const Matrix u0 = restart == 0 ? leading_columns(Matrix::Identity(m, m), r)
                                           : leading_columns(haar_unitary(m, rng), r);
            const NelderMeadResult nm = nelder_mead(objective, params_from_isometry(u0), opt);
            if (nm.f < best.value) {
                best.value = nm.f;
                best.decomposition = decomposition_of(isometry_from_params(nm.x.data(), m, r));
            }
        }
    }
    best.value = std::max(0.0, best.value);
    return best;
}

}  // namespace qbr
