#pragma once

// Dimension-tagged states and the handful of linear-algebra primitives the
// rest of the library is built on. Subsystem order is (s, b, R[, R']);
// index 0 is always the battery.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace qbr {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Dims = std::vector<std::size_t>;

inline constexpr double kStateTol = 1e-10;

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad argument values (empty keep sets, unnormalized frames, ...).
class ArgumentError : public Error {
  public:
    using Error::Error;
};

class DimensionError : public Error {
  public:
    using Error::Error;
};

class KindMismatchError : public Error {
  public:
    using Error::Error;
};

/// A request the model cannot represent (e.g. zero temperature with a
/// degenerate ground level).
class UnsupportedConfigurationError : public Error {
  public:
    using Error::Error;
};

/// Dimension caps of the numerical oracles were exceeded.
class CapabilityError : public Error {
  public:
    using Error::Error;
};

class DomainError : public Error {
  public:
    using Error::Error;
};

namespace detail {

inline std::size_t product(const Dims& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string dims_str(const Dims& dims) {
    std::string s = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(dims[i]);
    }
    return s + "]";
}

inline double max_abs(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline Matrix hermitize(const Matrix& m) {
    return (m + m.adjoint()) * 0.5;
}

inline RealVector hermitian_eigenvalues(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

/// -sum x ln x with 0 ln 0 = 0; negative round-off is clamped to zero.
inline double shannon_nats(const RealVector& p) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double x = p[i];
        if (x > 0.0) s -= x * std::log(x);
    }
    return s;
}

}  // namespace detail

class StateVector {
  public:
    StateVector(Vector amplitudes, Dims dims) : amplitudes_(std::move(amplitudes)), dims_(std::move(dims)) {
        if (detail::product(dims_) != static_cast<std::size_t>(amplitudes_.size()))
            throw DimensionError("state vector: dims " + detail::dims_str(dims_) + " do not match length " +
                                 std::to_string(amplitudes_.size()));
        if (std::abs(amplitudes_.norm() - 1.0) > kStateTol)
            throw ArgumentError("state vector is not normalized (norm " + std::to_string(amplitudes_.norm()) + ")");
    }

    /// Single-subsystem convenience.
    explicit StateVector(Vector amplitudes) : StateVector(amplitudes, Dims{static_cast<std::size_t>(amplitudes.size())}) {}

    /// Rescales to unit norm before validating.
    static StateVector normalized(const Vector& v, Dims dims) {
        const double n = v.norm();
        if (!(n > 0.0)) throw ArgumentError("cannot normalize a zero vector");
        return StateVector(v / n, std::move(dims));
    }

    static StateVector basis(std::size_t index, std::size_t dim) {
        if (index >= dim) throw ArgumentError("basis index out of range");
        Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
        v[static_cast<Eigen::Index>(index)] = 1.0;
        return StateVector(v, Dims{dim});
    }

    const Vector& amplitudes() const { return amplitudes_; }
    const Dims& dims() const { return dims_; }
    std::size_t dim() const { return static_cast<std::size_t>(amplitudes_.size()); }

  private:
    Vector amplitudes_;
    Dims dims_;
};

class DensityOperator {
  public:
    struct Trusted {};

    DensityOperator(Matrix matrix, Dims dims) : matrix_(std::move(matrix)), dims_(std::move(dims)) {
        check_shape();
        if (detail::max_abs(matrix_ - matrix_.adjoint()) > kStateTol)
            throw ArgumentError("density operator is not Hermitian");
        if (std::abs(matrix_.trace().real() - 1.0) > kStateTol || std::abs(matrix_.trace().imag()) > kStateTol)
            throw ArgumentError("density operator trace is not 1");
        matrix_ = detail::hermitize(matrix_);
        if (detail::hermitian_eigenvalues(matrix_).minCoeff() < -kStateTol)
            throw ArgumentError("density operator has a negative eigenvalue");
    }

    explicit DensityOperator(Matrix matrix) : DensityOperator(matrix, Dims{static_cast<std::size_t>(matrix.rows())}) {}

    /// For results of operations that preserve positivity: hermitizes and
    /// renormalizes the trace, skips the eigenvalue check.
    DensityOperator(Trusted, Matrix matrix, Dims dims) : matrix_(std::move(matrix)), dims_(std::move(dims)) {
        check_shape();
        matrix_ = detail::hermitize(matrix_);
        const double tr = matrix_.trace().real();
        if (!(tr > 0.0)) throw ArgumentError("density operator has non-positive trace");
        matrix_ /= tr;
    }

    static DensityOperator pure(const StateVector& psi) {
        return DensityOperator(Trusted{}, psi.amplitudes() * psi.amplitudes().adjoint(), psi.dims());
    }

    static DensityOperator maximally_mixed(std::size_t dim) {
        const auto n = static_cast<Eigen::Index>(dim);
        return DensityOperator(Trusted{}, Matrix::Identity(n, n), Dims{dim});
    }

    /// diag(p) in the computational basis; p must be a probability vector.
    static DensityOperator diagonal(const std::vector<double>& p) {
        Matrix m = Matrix::Zero(static_cast<Eigen::Index>(p.size()), static_cast<Eigen::Index>(p.size()));
        for (std::size_t i = 0; i < p.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = p[i];
        return DensityOperator(m, Dims{p.size()});
    }

    const Matrix& matrix() const { return matrix_; }
    const Dims& dims() const { return dims_; }
    std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }

    RealVector eigenvalues() const { return detail::hermitian_eigenvalues(matrix_); }

    /// Numerical rank: eigenvalues above tol.
    std::size_t rank(double tol = 1e-9) const {
        const RealVector ev = eigenvalues();
        return static_cast<std::size_t>((ev.array() > tol).count());
    }

    double purity() const { return (matrix_ * matrix_).trace().real(); }

  private:
    void check_shape() const {
        if (matrix_.rows() != matrix_.cols()) throw DimensionError("density operator must be square");
        if (detail::product(dims_) != static_cast<std::size_t>(matrix_.rows()))
            throw DimensionError("density operator: dims " + detail::dims_str(dims_) + " do not match size " +
                                 std::to_string(matrix_.rows()));
    }

    Matrix matrix_;
    Dims dims_;
};

inline Dims concat(const Dims& a, const Dims& b) {
    Dims out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Vector kron(const Vector& a, const Vector& b) {
    Vector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
    return out;
}

inline StateVector tensor(const StateVector& a, const StateVector& b) {
    return StateVector::normalized(kron(a.amplitudes(), b.amplitudes()), concat(a.dims(), b.dims()));
}

inline DensityOperator tensor(const DensityOperator& a, const DensityOperator& b) {
    return DensityOperator(DensityOperator::Trusted{}, kron(a.matrix(), b.matrix()), concat(a.dims(), b.dims()));
}

using QuantumState = std::variant<StateVector, DensityOperator>;

/// Runtime-typed tensor product; both operands must be the same kind.
inline QuantumState tensor(const QuantumState& a, const QuantumState& b) {
    if (a.index() != b.index()) throw KindMismatchError("tensor: cannot combine a state vector with a density operator");
    if (const auto* va = std::get_if<StateVector>(&a)) return tensor(*va, std::get<StateVector>(b));
    return tensor(std::get<DensityOperator>(a), std::get<DensityOperator>(b));
}

namespace detail {

/// Splits every flat index into (kept index, traced index) for a subsystem
/// selection.
struct IndexSplit {
    std::vector<std::size_t> kept;
    std::vector<std::size_t> traced;
    std::size_t kept_dim = 1;
};

inline IndexSplit split_indices(const Dims& dims, const std::vector<bool>& keep) {
    IndexSplit s;
    const std::size_t n = product(dims);
    s.kept.resize(n);
    s.traced.resize(n);
    for (std::size_t k = 0; k < dims.size(); ++k)
        if (keep[k]) s.kept_dim *= dims[k];
    for (std::size_t flat = 0; flat < n; ++flat) {
        std::size_t rem = flat, kept = 0, traced = 0, kstride = 1, tstride = 1;
        for (std::size_t k = dims.size(); k-- > 0;) {
            const std::size_t digit = rem % dims[k];
            rem /= dims[k];
            if (keep[k]) {
                kept += digit * kstride;
                kstride *= dims[k];
            } else {
                traced += digit * tstride;
                tstride *= dims[k];
            }
        }
        s.kept[flat] = kept;
        s.traced[flat] = traced;
    }
    return s;
}

inline Matrix partial_trace_matrix(const Matrix& m, const Dims& dims, const std::vector<bool>& keep) {
    const IndexSplit s = split_indices(dims, keep);
    const auto kd = static_cast<Eigen::Index>(s.kept_dim);
    Matrix out = Matrix::Zero(kd, kd);
    const auto n = static_cast<std::size_t>(m.rows());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (s.traced[i] == s.traced[j])
                out(static_cast<Eigen::Index>(s.kept[i]), static_cast<Eigen::Index>(s.kept[j])) +=
                    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
}

}  // namespace detail

inline DensityOperator partial_trace(const DensityOperator& rho, const std::set<std::size_t>& keep) {
    if (keep.empty()) throw ArgumentError("partial_trace: keep set is empty");
    const Dims& dims = rho.dims();
    std::vector<bool> mask(dims.size(), false);
    Dims kept_dims;
    for (std::size_t k : keep) {
        if (k >= dims.size())
            throw ArgumentError("partial_trace: subsystem " + std::to_string(k) + " out of range for dims " +
                                detail::dims_str(dims));
        mask[k] = true;
    }
    for (std::size_t k = 0; k < dims.size(); ++k)
        if (mask[k]) kept_dims.push_back(dims[k]);
    return DensityOperator(DensityOperator::Trusted{}, detail::partial_trace_matrix(rho.matrix(), dims, mask), kept_dims);
}

/// Reorders subsystems: output subsystem i is input subsystem order[i].
inline DensityOperator permute(const DensityOperator& rho, const std::vector<std::size_t>& order) {
    const Dims& dims = rho.dims();
    if (order.size() != dims.size()) throw ArgumentError("permute: order length mismatch");
    std::vector<bool> seen(dims.size(), false);
    Dims out_dims;
    for (std::size_t k : order) {
        if (k >= dims.size() || seen[k]) throw ArgumentError("permute: order is not a permutation");
        seen[k] = true;
        out_dims.push_back(dims[k]);
    }
    const std::size_t n = rho.dim();
    std::vector<std::size_t> map(n);  // input flat index -> output flat index
    for (std::size_t flat = 0; flat < n; ++flat) {
        std::vector<std::size_t> digit(dims.size());
        std::size_t rem = flat;
        for (std::size_t k = dims.size(); k-- > 0;) {
            digit[k] = rem % dims[k];
            rem /= dims[k];
        }
        std::size_t out = 0;
        for (std::size_t i = 0; i < order.size(); ++i) out = out * out_dims[i] + digit[order[i]];
        map[flat] = out;
    }
    Matrix m(rho.matrix().rows(), rho.matrix().cols());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            m(static_cast<Eigen::Index>(map[i]), static_cast<Eigen::Index>(map[j])) =
                rho.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return DensityOperator(DensityOperator::Trusted{}, m, out_dims);
}

/// sum_i sqrt(l_i) |e_i>|i>, eigenvalues descending, ancilla in the
/// computational basis. Output dims are [d, d] with d = rho.dim().
inline StateVector purify(const DensityOperator& rho) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix());
    const auto d = static_cast<Eigen::Index>(rho.dim());
    Vector out = Vector::Zero(d * d);
    // Eigen sorts ascending; ancilla slot i gets the i-th largest eigenvalue.
    for (Eigen::Index i = 0; i < d; ++i) {
        const Eigen::Index src = d - 1 - i;
        const double lambda = std::max(es.eigenvalues()[src], 0.0);
        const Vector e = es.eigenvectors().col(src);
        for (Eigen::Index a = 0; a < d; ++a) out[a * d + i] += std::sqrt(lambda) * e[a];
    }
    return StateVector::normalized(out, Dims{rho.dim(), rho.dim()});
}

/// Von Neumann entropy in nats.
inline double vn_entropy(const DensityOperator& rho) {
    return detail::shannon_nats(rho.eigenvalues());
}

inline double trace_distance(const DensityOperator& rho, const DensityOperator& sigma) {
    if (rho.dim() != sigma.dim())
        throw DimensionError("trace_distance: dimension mismatch (" + std::to_string(rho.dim()) + " vs " +
                             std::to_string(sigma.dim()) + ")");
    const RealVector ev = detail::hermitian_eigenvalues(rho.matrix() - sigma.matrix());
    return 0.5 * ev.cwiseAbs().sum();
}

}  // namespace qbr
