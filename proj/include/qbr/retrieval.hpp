#pragma once

// Retrieved free-energetic charge under bath-only (weak) and bath+reference
// (strong) assistance, optimized over rank-one POVMs.
//
// Optimized values are lower bounds on the true maxima by construction; the
// analytic sandwiches (free energy of the channel output from below, its
// energy from above) are what certify them.

#include "qbr/channel.hpp"
#include "qbr/entangle.hpp"
#include "qbr/measure.hpp"
#include "qbr/nelder_mead.hpp"
#include "qbr/random.hpp"
#include "qbr/thermo.hpp"

#include <thread>

namespace qbr {

struct OptimizerSettings {
    std::size_t restarts = 32;   // per outcome-count schedule
    std::size_t max_iters = 2000;
    double tol = 1e-8;
    std::size_t outcomes_b = 0;  // 0: try d_b then d_b^2
    std::size_t outcomes_R = 0;  // 0: try d_R then d_R^2
    std::uint64_t seed = 0;
    std::size_t workers = 1;

    void validate() const {
        if (restarts == 0) throw ArgumentError("optimizer: restarts must be positive");
        if (max_iters == 0) throw ArgumentError("optimizer: max_iters must be positive");
        if (!(tol > 0.0)) throw ArgumentError("optimizer: tol must be positive");
        if (workers == 0) throw ArgumentError("optimizer: workers must be positive");
    }
};

struct RetrievalResult {
    double value_raw = 0.0;
    double value_rescaled = 0.0;
    double value_clamped = 0.0;
    Povm achieving_povm_b;
    std::optional<Povm> achieving_povm_R;
    std::size_t restarts_used = 0;
    bool converged = false;
    std::vector<double> best_trajectory;  // best value after each restart
    Matrix frame_b;                       // isometry behind achieving_povm_b
};

/// sum_k p_k F_beta(sigma_{s|k}), raw, negligible outcomes skipped.
inline double retrieved_charge(const ConditionedEnsemble& ensemble, const Hamiltonian& h, InverseTemperature beta) {
    if (!beta.is_infinite() && beta.value() == 0.0) throw DomainError("retrieved charge is undefined at beta = 0");
    double w = 0.0;
    for (const auto& o : ensemble.outcomes)
        if (!o.negligible) w += o.probability * free_energy(o.state, h, beta, Scale::raw);
    return w;
}

namespace detail {

inline void require_positive_beta(InverseTemperature beta) {
    if (!beta.is_infinite() && beta.value() == 0.0) throw DomainError("charge retrieval needs beta > 0");
}

/// p S(X / p) and Tr(H X) for an unnormalized battery block X.
inline double weighted_free_energy(const Matrix& x, const std::vector<double>& h, double temperature) {
    double e = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) e += h[k] * x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)).real();
    RealVector mu;
    if (x.rows() == 2) {
        const double a = x(0, 0).real(), d = x(1, 1).real();
        const double m = 0.5 * (a + d);
        const double r = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(x(0, 1)));
        mu.resize(2);
        mu << m + r, m - r;
    } else {
        mu = hermitian_eigenvalues(hermitize(x));
    }
    double p = 0.0, s = 0.0;
    for (Eigen::Index i = 0; i < mu.size(); ++i)
        if (mu[i] > 0.0) {
            p += mu[i];
            s -= mu[i] * std::log(mu[i]);
        }
    const double ws = p > 0.0 ? s + p * std::log(p) : 0.0;
    return free_energy_from(e, ws, temperature);
}

/// Fast evaluation of W for rank-one frames on the bath (and reference).
class ChargeEvaluator {
  public:
    ChargeEvaluator(const DensityOperator& sigma_sbR, const Hamiltonian& hs, InverseTemperature beta)
        : ds_(sigma_sbR.dims()[0]),
          db_(sigma_sbR.dims()[1]),
          dr_(sigma_sbR.dims()[2]),
          sigma_(sigma_sbR.matrix()),
          sigma_sb_(partial_trace_matrix(sigma_sbR.matrix(), sigma_sbR.dims(), {true, true, false})),
          h_(hs.diagonal()),
          temperature_(beta.temperature()) {}

    /// Frame rows are conj(u_k): element k is |u_k><u_k| with u_k = W^dagger e_k.
    double weak(const Matrix& wb) const {
        double total = 0.0;
        for (Eigen::Index k = 0; k < wb.rows(); ++k) {
            const Matrix x = contract(sigma_sb_, ds_, db_, 1, wb.row(k));
            if (x.trace().real() >= kNegligibleProbability) total += weighted_free_energy(x, h_, temperature_);
        }
        return total;
    }

    double strong(const Matrix& wb, const Matrix& wr) const {
        double total = 0.0;
        for (Eigen::Index k = 0; k < wb.rows(); ++k) {
            const Matrix y = contract(sigma_, ds_, db_, dr_, wb.row(k));  // on s (x) R
            if (y.trace().real() < kNegligibleProbability) continue;
            for (Eigen::Index l = 0; l < wr.rows(); ++l) {
                const Matrix x = contract(y, ds_, dr_, 1, wr.row(l));
                if (x.trace().real() >= kNegligibleProbability) total += weighted_free_energy(x, h_, temperature_);
            }
        }
        return total;
    }

    Matrix marginal_b() const { return partial_trace_matrix(sigma_, {ds_, db_, dr_}, {false, true, false}); }
    Matrix marginal_r() const { return partial_trace_matrix(sigma_, {ds_, db_, dr_}, {false, false, true}); }

    std::size_t ds() const { return ds_; }
    std::size_t db() const { return db_; }
    std::size_t dr() const { return dr_; }

  private:
    /// (I_A (x) <u| (x) I_C) X (I_A (x) |u> (x) I_C) with <u| given by the
    /// frame row (row entries are the components of <u|).
    static Matrix contract(const Matrix& x, std::size_t da, std::size_t db, std::size_t dc, const Eigen::RowVectorXcd& bra) {
        const auto a = static_cast<Eigen::Index>(da), b = static_cast<Eigen::Index>(db), c = static_cast<Eigen::Index>(dc);
        Matrix out = Matrix::Zero(a * c, a * c);
        for (Eigen::Index i = 0; i < a; ++i)
            for (Eigen::Index r = 0; r < c; ++r)
                for (Eigen::Index j = 0; j < a; ++j)
                    for (Eigen::Index t = 0; t < c; ++t) {
                        cplx acc = 0.0;
                        for (Eigen::Index p = 0; p < b; ++p) {
                            if (bra[p] == cplx(0.0)) continue;
                            cplx inner = 0.0;
                            for (Eigen::Index q = 0; q < b; ++q) inner += x((i * b + p) * c + r, (j * b + q) * c + t) * std::conj(bra[q]);
                            acc += bra[p] * inner;
                        }
                        out(i * c + r, j * c + t) = acc;
                    }
        return out;
    }

    std::size_t ds_, db_, dr_;
    Matrix sigma_;
    Matrix sigma_sb_;
    std::vector<double> h_;
    double temperature_;
};

/// Eigenbasis of a marginal as a frame (rows = bras), largest weight first.
inline Matrix eigen_frame(const Matrix& marginal) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(marginal));
    const Eigen::Index d = marginal.rows();
    Matrix w(d, d);
    for (Eigen::Index k = 0; k < d; ++k) w.row(k) = es.eigenvectors().col(d - 1 - k).adjoint();
    return w;
}

/// n x d frame whose first d rows are the given d x d unitary frame.
inline Matrix pad_frame(const Matrix& w, Eigen::Index n) {
    Matrix out = Matrix::Zero(n, w.cols());
    out.topRows(w.rows()) = w;
    return out;
}

struct SearchOutcome {
    double value = -std::numeric_limits<double>::infinity();
    Matrix wb, wr;
    std::size_t restarts = 0;
    std::vector<double> trajectory;
    bool converged = false;
};

/// One seeded local search: returns (value, frames).
struct RestartResult {
    double value;
    Matrix wb, wr;
};

/// Runs restarts (optionally in parallel) and reduces deterministically:
/// max by value, ties to the lowest restart index.
template <typename Job>
std::vector<RestartResult> run_restarts(std::size_t count, std::size_t workers, Job&& job) {
    std::vector<std::optional<RestartResult>> slots(count);
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) slots[i] = job(i);
    } else {
        std::vector<std::thread> pool;
        const std::size_t nthreads = std::min(workers, count);
        for (std::size_t t = 0; t < nthreads; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t i = t; i < count; i += nthreads) slots[i] = job(i);
            });
        for (auto& th : pool) th.join();
    }
    std::vector<RestartResult> out;
    out.reserve(count);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

inline std::vector<std::size_t> outcome_schedule(std::size_t requested, std::size_t d) {
    if (requested) {
        if (requested < d) throw ArgumentError("rank-one povm needs at least as many outcomes as the dimension");
        return {requested};
    }
    return d * d > d ? std::vector<std::size_t>{d, d * d} : std::vector<std::size_t>{d};
}

inline bool is_pure(const DensityOperator& rho) {
    return rho.purity() > 1.0 - 1e-9;
}

struct SearchProblem {
    const ChargeEvaluator* eval;
    bool strong;
    double upper_bound;  // E(sigma_s): no POVM can exceed it
    std::optional<Matrix> warm_b;
};

inline SearchOutcome search(const SearchProblem& prob, const OptimizerSettings& cfg) {
    const ChargeEvaluator& ev = *prob.eval;
    const auto db = static_cast<Eigen::Index>(ev.db()), dr = static_cast<Eigen::Index>(ev.dr());
    SearchOutcome best;
    const std::vector<std::size_t> sched_b = outcome_schedule(cfg.outcomes_b, ev.db());
    const std::vector<std::size_t> sched_r = prob.strong ? outcome_schedule(cfg.outcomes_R, ev.dr()) : std::vector<std::size_t>{1};
    const std::size_t nsched = std::max(sched_b.size(), sched_r.size());

    const double attained_tol = 1e-12;
    double before_last = best.value;
    bool done = false;

    for (std::size_t si = 0; si < nsched && !done; ++si) {
        const auto nb = static_cast<Eigen::Index>(sched_b[std::min(si, sched_b.size() - 1)]);
        const auto nr = static_cast<Eigen::Index>(sched_r[std::min(si, sched_r.size() - 1)]);
        const Eigen::Index pb = 2 * nb * db;

        auto objective = [&](const RealVector& x) {
            const Matrix wb = isometry_from_params(x.data(), nb, db);
            if (!prob.strong) return -ev.weak(wb);
            return -ev.strong(wb, isometry_from_params(x.data() + pb, nr, dr));
        };

        // Deterministic starts first: computational bases, bath/reference
        // eigenbases, the warm start; then Haar-random frames.
        auto ref_frame = [&](const Matrix& w) { return prob.strong ? pad_frame(w, nr) : Matrix(); };
        std::vector<std::pair<Matrix, Matrix>> starts;
        starts.emplace_back(pad_frame(Matrix::Identity(db, db), nb), ref_frame(Matrix::Identity(dr, dr)));
        starts.emplace_back(pad_frame(eigen_frame(ev.marginal_b()), nb), ref_frame(eigen_frame(ev.marginal_r())));
        if (prob.warm_b && prob.warm_b->rows() <= nb)
            starts.emplace_back(pad_frame(*prob.warm_b, nb), ref_frame(Matrix::Identity(dr, dr)));

        auto job = [&](std::size_t restart) -> RestartResult {
            Matrix wb0, wr0;
            if (restart < starts.size()) {
                wb0 = starts[restart].first;
                wr0 = starts[restart].second;
            } else {
                Rng rng(mix_seed(cfg.seed, si * 100003 + restart));
                wb0 = leading_columns(haar_unitary(nb, rng), db);
                if (prob.strong) wr0 = leading_columns(haar_unitary(nr, rng), dr);
            }
            RealVector x0 = params_from_isometry(wb0);
            if (prob.strong) {
                const RealVector xr = params_from_isometry(wr0);
                RealVector joined(x0.size() + xr.size());
                joined << x0, xr;
                x0 = joined;
            }
            NelderMeadOptions opt;
            opt.max_iters = cfg.max_iters;
            const NelderMeadResult nm = nelder_mead(objective, x0, opt);
            RestartResult r{-nm.f, isometry_from_params(nm.x.data(), nb, db), Matrix()};
            if (prob.strong) r.wr = isometry_from_params(nm.x.data() + pb, nr, dr);
            return r;
        };

        // Evaluate the deterministic starts unoptimized first: if one already
        // attains the analytic upper bound no search can improve on it.
        for (const auto& [wb0, wr0] : starts) {
            const double v = prob.strong ? ev.strong(wb0, wr0) : ev.weak(wb0);
            if (v > best.value) {
                best.value = v;
                best.wb = wb0;
                best.wr = wr0;
            }
        }
        if (best.value >= prob.upper_bound - attained_tol) {
            best.trajectory.push_back(best.value);
            best.restarts += 1;
            best.converged = true;
            done = true;
            break;
        }

        const std::vector<RestartResult> results = run_restarts(cfg.restarts, cfg.workers, job);
        for (const RestartResult& r : results) {
            before_last = best.value;
            if (r.value > best.value) {
                best.value = r.value;
                best.wb = r.wb;
                best.wr = r.wr;
            }
            best.trajectory.push_back(best.value);
            ++best.restarts;
        }
        if (best.value >= prob.upper_bound - attained_tol) done = true;
    }
    if (!best.converged) best.converged = done || best.value - before_last < cfg.tol;
    return best;
}

inline RetrievalResult finish(const SearchOutcome& s, const DensityOperator& sigma_sbR, const IsometricExtension& ext,
                              bool strong) {
    const InverseTemperature beta = ext.beta();
    Povm pb = povm_from_isometry(s.wb);
    std::optional<Povm> pr;
    ConditionedEnsemble ens;
    if (strong) {
        pr = povm_from_isometry(s.wr);
        ens = condition_strong(sigma_sbR, pb, *pr);
    } else {
        ens = condition_weak(sigma_sbR, pb);
    }
    const double raw = retrieved_charge(ens, ext.hs(), beta);
    const DensityOperator tau = thermal_state(ext.hs(), beta);
    const double rescaled = raw - free_energy(tau, ext.hs(), beta, Scale::raw);
    return RetrievalResult{raw,      rescaled,      std::max(rescaled, 0.0), std::move(pb), std::move(pr),
                           s.restarts, s.converged, s.trajectory,           s.wb};
}

}  // namespace detail

/// W_weak lower bound: best rank-one POVM on the bath found by seeded
/// restarts of a simplex search over frame isometries.
inline RetrievalResult optimize_weak(const IsometricExtension& ext, const DensityOperator& rho, const OptimizerSettings& cfg = {}) {
    detail::require_positive_beta(ext.beta());
    cfg.validate();
    const DensityOperator sigma = apply_extension(ext, rho);
    const detail::ChargeEvaluator ev(sigma, ext.hs(), ext.beta());
    const double upper = energy(partial_trace(sigma, {0}), ext.hs());
    const detail::SearchOutcome s = detail::search({&ev, false, upper, std::nullopt}, cfg);
    return detail::finish(s, sigma, ext, false);
}

/// W_strong lower bound over product rank-one POVMs on bath and reference.
/// warm_frame_b (an n x d_b bath frame, e.g. the weak optimum) is tried as an
/// extra start paired with a computational reference measurement, which
/// makes the result at least the weak value it came from.
inline RetrievalResult optimize_strong(const IsometricExtension& ext, const DensityOperator& rho, const OptimizerSettings& cfg = {},
                                       std::optional<Matrix> warm_frame_b = std::nullopt) {
    detail::require_positive_beta(ext.beta());
    cfg.validate();
    const DensityOperator sigma = apply_extension(ext, rho);
    const detail::ChargeEvaluator ev(sigma, ext.hs(), ext.beta());
    const double upper = energy(partial_trace(sigma, {0}), ext.hs());
    const detail::SearchOutcome s = detail::search({&ev, true, upper, std::move(warm_frame_b)}, cfg);
    return detail::finish(s, sigma, ext, true);
}

/// (V (x) I_R') applied to the purification of rho: a pure state with dims
/// [d_s, d_b, d_R, d_R'] whose s-b-R marginal is apply_extension(ext, rho).
inline DensityOperator purified_joint(const IsometricExtension& ext, const DensityOperator& rho) {
    const std::size_t ds = ext.hs().dim(), db = ext.hb().dim();
    if (rho.dim() != ds) throw DimensionError("purified_joint: battery dimension does not match the extension");
    const StateVector pur = purify(rho);
    const auto d = static_cast<Eigen::Index>(ds);
    Vector big = Vector::Zero(ext.isometry().rows() * d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index a = 0; a < d; ++a) {
            const cplx c = pur.amplitudes()[i * d + a];
            if (c == cplx(0.0)) continue;
            for (Eigen::Index j = 0; j < ext.isometry().rows(); ++j) big[j * d + a] += c * ext.isometry()(j, i);
        }
    return DensityOperator::pure(StateVector::normalized(big, Dims{ds, db, db, ds}));
}

struct ClosedFormResult {
    double value;
    EofResult eof;  // E_f(sigma_sR) for pure batteries, E_f(sigma_s|RR') otherwise
};

/// E(sigma_s) - (1/beta) E_f: with sigma_sR for pure batteries (Wootters when
/// two qubits) and with the purified sigma_sRR' otherwise (search oracle).
inline ClosedFormResult weak_closed_form(const IsometricExtension& ext, const DensityOperator& rho,
                                         const EofSearchSettings& search_cfg = {}) {
    detail::require_positive_beta(ext.beta());
    const DensityOperator sigma = apply_extension(ext, rho);
    const double e = energy(partial_trace(sigma, {0}), ext.hs());
    EofResult eof;
    if (detail::is_pure(rho)) {
        const DensityOperator sigma_sR = partial_trace(sigma, {0, 2});
        if (sigma_sR.dims() == Dims{2, 2})
            eof = eof_wootters(sigma_sR);
        else if (sigma_sR.dim() <= 16)
            eof = eof_search(sigma_sR, {0}, search_cfg);
        else
            throw CapabilityError("weak_closed_form: sigma_sR of dimension " + std::to_string(sigma_sR.dim()) + " exceeds 16");
    } else {
        const std::size_t ds = ext.hs().dim(), db = ext.hb().dim();
        if (ds * db * ds > 16)
            throw CapabilityError("weak_closed_form: sigma_sRR' of dimension " + std::to_string(ds * db * ds) + " exceeds 16");
        const DensityOperator joint = purified_joint(ext, rho);
        eof = eof_search(partial_trace(joint, {0, 2, 3}), {0}, search_cfg);
    }
    return {e - ext.beta().temperature() * eof.value, eof};
}

struct AssistanceGap {
    RetrievalResult weak;
    RetrievalResult strong;
    double gap;  // strong.value_raw - weak.value_raw
};

inline AssistanceGap assistance_gap(const IsometricExtension& ext, const DensityOperator& rho, const OptimizerSettings& cfg = {}) {
    RetrievalResult weak = optimize_weak(ext, rho, cfg);
    RetrievalResult strong = optimize_strong(ext, rho, cfg, weak.frame_b);
    const double gap = strong.value_raw - weak.value_raw;
    return {std::move(weak), std::move(strong), gap};
}

}  // namespace qbr
