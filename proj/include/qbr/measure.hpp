#pragma once

// POVMs on the bath / reference and the battery ensembles they induce.

#include "qbr/qcore.hpp"

#include <optional>
#include <utility>

namespace qbr {

inline constexpr double kNegligibleProbability = 1e-12;

class Povm {
  public:
    Povm(std::vector<Matrix> elements, std::size_t dim) : elements_(std::move(elements)), dim_(dim) {
        if (elements_.empty()) throw ArgumentError("povm needs at least one element");
        const auto d = static_cast<Eigen::Index>(dim_);
        Matrix sum = Matrix::Zero(d, d);
        for (const Matrix& e : elements_) {
            if (e.rows() != d || e.cols() != d) throw DimensionError("povm element has wrong dimension");
            if (detail::max_abs(e - e.adjoint()) > kStateTol) throw ArgumentError("povm element is not Hermitian");
            if (detail::hermitian_eigenvalues(e).minCoeff() < -kStateTol)
                throw ArgumentError("povm element is not positive semidefinite");
            sum += e;
        }
        if (detail::max_abs(sum - Matrix::Identity(d, d)) > 1e-9) throw ArgumentError("invalid frame: povm elements do not sum to identity");
    }

    const std::vector<Matrix>& elements() const { return elements_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return elements_.size(); }

  private:
    std::vector<Matrix> elements_;
    std::size_t dim_;
};

/// Elements w_i |v_i><v_i|.
inline Povm rank_one_povm(const std::vector<Vector>& vectors, const std::vector<double>& weights) {
    if (vectors.empty() || vectors.size() != weights.size())
        throw ArgumentError("rank_one_povm: need one weight per vector");
    const std::size_t d = static_cast<std::size_t>(vectors.front().size());
    std::vector<Matrix> elements;
    elements.reserve(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (static_cast<std::size_t>(vectors[i].size()) != d) throw DimensionError("rank_one_povm: vector lengths differ");
        if (weights[i] < 0.0) throw ArgumentError("rank_one_povm: negative weight");
        elements.push_back(weights[i] * vectors[i] * vectors[i].adjoint());
    }
    return Povm(std::move(elements), d);
}

/// Rank-one POVM from an n x d isometry W (W^dagger W = I): element k is
/// W^dagger |k><k| W. This is the Naimark picture of every rank-one POVM.
inline Povm povm_from_isometry(const Matrix& w) {
    std::vector<Vector> vectors;
    std::vector<double> weights;
    for (Eigen::Index k = 0; k < w.rows(); ++k) {
        vectors.emplace_back(w.row(k).adjoint());
        weights.push_back(1.0);
    }
    return rank_one_povm(vectors, weights);
}

/// Projective measurement onto the columns of a unitary.
inline Povm projective_povm(const Matrix& basis) {
    return povm_from_isometry(basis.adjoint());
}

inline Povm computational_povm(std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    return projective_povm(Matrix::Identity(d, d));
}

inline Povm trivial_povm(std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    return Povm({Matrix::Identity(d, d)}, dim);
}

struct ConditionedOutcome {
    double probability;
    DensityOperator state;
    std::pair<std::size_t, std::size_t> label;  // (k, l); l = 0 for bath-only conditioning
    bool negligible;                             // probability below 1e-12, state is a placeholder
};

struct ConditionedEnsemble {
    std::vector<ConditionedOutcome> outcomes;

    /// sum_k p_k sigma_{s|k}
    Matrix average() const {
        const auto d = static_cast<Eigen::Index>(outcomes.front().state.dim());
        Matrix m = Matrix::Zero(d, d);
        for (const auto& o : outcomes)
            if (!o.negligible) m += o.probability * o.state.matrix();
        return m;
    }
};

namespace detail {

inline void check_joint(const DensityOperator& sigma, std::size_t expected_parts) {
    if (sigma.dims().size() != expected_parts)
        throw DimensionError("conditioning expects a joint state with dims [d_s, d_b, d_R], got " + dims_str(sigma.dims()));
}

inline ConditionedOutcome make_outcome(const Matrix& unnormalized, std::size_t ds, std::size_t k, std::size_t l) {
    const double p = std::max(0.0, unnormalized.trace().real());
    if (p < kNegligibleProbability)
        return {p, DensityOperator::maximally_mixed(ds), {k, l}, true};
    return {p, DensityOperator(DensityOperator::Trusted{}, unnormalized, Dims{ds}), {k, l}, false};
}

/// Tr_B[(I_A (x) M) X] for X on A (x) B.
inline Matrix contract_right(const Matrix& x, std::size_t da, std::size_t db, const Matrix& m) {
    const auto a = static_cast<Eigen::Index>(da);
    const auto b = static_cast<Eigen::Index>(db);
    Matrix out = Matrix::Zero(a, a);
    for (Eigen::Index i = 0; i < a; ++i)
        for (Eigen::Index j = 0; j < a; ++j) {
            cplx acc = 0.0;
            for (Eigen::Index p = 0; p < b; ++p)
                for (Eigen::Index q = 0; q < b; ++q) acc += x(i * b + p, j * b + q) * m(q, p);
            out(i, j) = acc;
        }
    return out;
}

/// Tr_B[(I_A (x) M (x) I_C) X] on A (x) B (x) C, result on A (x) C.
inline Matrix contract_middle(const Matrix& x, std::size_t da, std::size_t db, std::size_t dc, const Matrix& m) {
    const auto a = static_cast<Eigen::Index>(da);
    const auto b = static_cast<Eigen::Index>(db);
    const auto c = static_cast<Eigen::Index>(dc);
    Matrix out = Matrix::Zero(a * c, a * c);
    for (Eigen::Index i = 0; i < a; ++i)
        for (Eigen::Index r = 0; r < c; ++r)
            for (Eigen::Index j = 0; j < a; ++j)
                for (Eigen::Index t = 0; t < c; ++t) {
                    cplx acc = 0.0;
                    for (Eigen::Index p = 0; p < b; ++p)
                        for (Eigen::Index q = 0; q < b; ++q) acc += x((i * b + p) * c + r, (j * b + q) * c + t) * m(q, p);
                    out(i * c + r, j * c + t) = acc;
                }
    return out;
}

}  // namespace detail

/// Battery ensemble {p_k, sigma_{s|k}} from a POVM on the bath alone.
inline ConditionedEnsemble condition_weak(const DensityOperator& sigma_sbR, const Povm& povm_b) {
    detail::check_joint(sigma_sbR, 3);
    const std::size_t ds = sigma_sbR.dims()[0], db = sigma_sbR.dims()[1];
    if (povm_b.dim() != db) throw DimensionError("condition_weak: povm dimension does not match the bath");
    const Matrix sigma_sb = detail::partial_trace_matrix(sigma_sbR.matrix(), sigma_sbR.dims(), {true, true, false});
    ConditionedEnsemble out;
    for (std::size_t k = 0; k < povm_b.size(); ++k)
        out.outcomes.push_back(detail::make_outcome(detail::contract_right(sigma_sb, ds, db, povm_b.elements()[k]), ds, k, 0));
    return out;
}

/// Battery ensemble {p_kl, sigma_{s|k,l}} from a product POVM on bath and reference.
inline ConditionedEnsemble condition_strong(const DensityOperator& sigma_sbR, const Povm& povm_b, const Povm& povm_R) {
    detail::check_joint(sigma_sbR, 3);
    const std::size_t ds = sigma_sbR.dims()[0], db = sigma_sbR.dims()[1], dr = sigma_sbR.dims()[2];
    if (povm_b.dim() != db) throw DimensionError("condition_strong: povm dimension does not match the bath");
    if (povm_R.dim() != dr) throw DimensionError("condition_strong: povm dimension does not match the reference");
    ConditionedEnsemble out;
    for (std::size_t k = 0; k < povm_b.size(); ++k) {
        const Matrix sR = detail::contract_middle(sigma_sbR.matrix(), ds, db, dr, povm_b.elements()[k]);
        for (std::size_t l = 0; l < povm_R.size(); ++l)
            out.outcomes.push_back(detail::make_outcome(detail::contract_right(sR, ds, dr, povm_R.elements()[l]), ds, k, l));
    }
    return out;
}

}  // namespace qbr
