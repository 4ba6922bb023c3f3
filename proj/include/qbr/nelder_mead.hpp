#pragma once

// Derivative-free local search used by the POVM and decomposition
// optimizers, plus the unconstrained parameterization of isometries that
// both searches run over.

#include "qbr/qcore.hpp"

#include <limits>

namespace qbr {

struct NelderMeadOptions {
    std::size_t max_iters = 2000;
    double ftol = 1e-13;  // stop when the simplex spread in f drops below this
    double xtol = 1e-9;   // ... and the simplex diameter drops below this
    double initial_step = 0.25;
    /// Rebuild the simplex around the incumbent after convergence while the
    /// rebuild still improves f by more than ftol.
    std::size_t max_rebuilds = 4;
};

struct NelderMeadResult {
    RealVector x;
    double f = std::numeric_limits<double>::infinity();
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
};

/// Minimizes f with the dimension-adaptive coefficients of Gao and Han,
/// which behave better than the classic (1, 2, 1/2, 1/2) set beyond a
/// handful of parameters.
template <typename F>
NelderMeadResult nelder_mead(F&& f, RealVector x0, const NelderMeadOptions& opt = {}) {
    const Eigen::Index n = x0.size();
    NelderMeadResult res;
    if (n == 0) {
        res.x = x0;
        res.f = f(x0);
        res.evaluations = 1;
        return res;
    }
    const double dn = static_cast<double>(n);
    const double c_reflect = 1.0;
    const double c_expand = 1.0 + 2.0 / dn;
    const double c_contract = 0.75 - 1.0 / (2.0 * dn);
    const double c_shrink = 1.0 - 1.0 / dn;

    auto eval = [&](const RealVector& x) {
        ++res.evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::max();
    };

    std::vector<RealVector> simplex(static_cast<std::size_t>(n + 1));
    std::vector<double> fv(static_cast<std::size_t>(n + 1));
    std::vector<std::size_t> idx(static_cast<std::size_t>(n + 1));

    RealVector best = std::move(x0);
    double fbest = eval(best);

    for (std::size_t rebuild = 0; rebuild <= opt.max_rebuilds && res.iterations < opt.max_iters; ++rebuild) {
        const double f_start = fbest;
        simplex[0] = best;
        fv[0] = fbest;
        for (Eigen::Index i = 0; i < n; ++i) {
            RealVector x = best;
            x[i] += opt.initial_step;
            simplex[static_cast<std::size_t>(i + 1)] = x;
            fv[static_cast<std::size_t>(i + 1)] = eval(x);
        }

        while (res.iterations < opt.max_iters) {
            ++res.iterations;
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
            const std::size_t lo = idx.front(), hi = idx.back(), second = idx[idx.size() - 2];

            double diameter = 0.0;
            for (std::size_t i = 0; i < simplex.size(); ++i)
                diameter = std::max(diameter, (simplex[i] - simplex[lo]).cwiseAbs().maxCoeff());
            if (fv[hi] - fv[lo] <= opt.ftol && diameter <= opt.xtol) break;

            RealVector centroid = RealVector::Zero(n);
            for (std::size_t i = 0; i < simplex.size(); ++i)
                if (i != hi) centroid += simplex[i];
            centroid /= dn;

            const RealVector xr = centroid + c_reflect * (centroid - simplex[hi]);
            const double fr = eval(xr);
            if (fr < fv[lo]) {
                const RealVector xe = centroid + c_expand * (xr - centroid);
                const double fe = eval(xe);
                if (fe < fr) {
                    simplex[hi] = xe;
                    fv[hi] = fe;
                } else {
                    simplex[hi] = xr;
                    fv[hi] = fr;
                }
                continue;
            }
            if (fr < fv[second]) {
                simplex[hi] = xr;
                fv[hi] = fr;
                continue;
            }
            const bool outside = fr < fv[hi];
            const RealVector xc = outside ? RealVector(centroid + c_contract * (xr - centroid))
                                          : RealVector(centroid - c_contract * (centroid - simplex[hi]));
            const double fc = eval(xc);
            if (fc < (outside ? fr : fv[hi])) {
                simplex[hi] = xc;
                fv[hi] = fc;
                continue;
            }
            for (std::size_t i = 0; i < simplex.size(); ++i) {
                if (i == lo) continue;
                simplex[i] = simplex[lo] + c_shrink * (simplex[i] - simplex[lo]);
                fv[i] = eval(simplex[i]);
            }
        }

        const auto it = std::min_element(fv.begin(), fv.end());
        if (*it < fbest) {
            fbest = *it;
            best = simplex[static_cast<std::size_t>(it - fv.begin())];
        }
        if (f_start - fbest <= opt.ftol) break;
    }

    res.x = std::move(best);
    res.f = fbest;
    return res;
}

/// Maps 2*n*d reals (real parts then imaginary parts, column-major) to an
/// n x d isometry through the polar factor W = A (A^dagger A)^{-1/2}. Every
/// isometry is reached (A = W is a fixed point), so the search is
/// unconstrained.
inline Matrix isometry_from_params(const double* params, Eigen::Index n, Eigen::Index d) {
    Matrix a(n, d);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < n; ++i) a(i, j) = cplx(params[j * n + i], params[n * d + j * n + i]);
    Eigen::SelfAdjointEigenSolver<Matrix> es(a.adjoint() * a);
    RealVector inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    return a * (es.eigenvectors() * inv_sqrt.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint());
}

inline RealVector params_from_isometry(const Matrix& w) {
    const Eigen::Index n = w.rows(), d = w.cols();
    RealVector x(2 * n * d);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < n; ++i) {
            x[j * n + i] = w(i, j).real();
            x[n * d + j * n + i] = w(i, j).imag();
        }
    return x;
}

/// First d columns of an n x n matrix, i.e. the isometry an n-dimensional
/// unitary extension induces on d dimensions.
inline Matrix leading_columns(const Matrix& u, Eigen::Index d) {
    return u.leftCols(d);
}

}  // namespace qbr
