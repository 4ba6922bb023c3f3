#pragma once

// Hamiltonians, Gibbs states and free-energy bookkeeping.

#include "qbr/qcore.hpp"

#include <limits>
#include <optional>

namespace qbr {

/// Diagonal Hamiltonian. The input energies are the diagonal in the
/// computational basis; the class also keeps them sorted together with the
/// permutation that maps sorted levels back to basis indices.
class Hamiltonian {
  public:
    explicit Hamiltonian(std::vector<double> diagonal) : diagonal_(std::move(diagonal)) {
        if (diagonal_.size() < 2) throw ArgumentError("hamiltonian needs at least two levels");
        for (double e : diagonal_)
            if (!std::isfinite(e)) throw ArgumentError("hamiltonian energies must be finite");
        order_.resize(diagonal_.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::stable_sort(order_.begin(), order_.end(),
                         [&](std::size_t a, std::size_t b) { return diagonal_[a] < diagonal_[b]; });
        sorted_.reserve(diagonal_.size());
        for (std::size_t k : order_) sorted_.push_back(diagonal_[k]);
    }

    Hamiltonian(std::initializer_list<double> e) : Hamiltonian(std::vector<double>(e)) {}

    std::size_t dim() const { return diagonal_.size(); }
    /// Energies in nondecreasing order.
    const std::vector<double>& energies() const { return sorted_; }
    /// sorted level i lives on basis index permutation()[i].
    const std::vector<std::size_t>& permutation() const { return order_; }
    /// Energies in computational-basis order.
    const std::vector<double>& diagonal() const { return diagonal_; }
    double ground_energy() const { return sorted_.front(); }

    std::size_t ground_degeneracy(double tol = 1e-12) const {
        return static_cast<std::size_t>(
            std::count_if(sorted_.begin(), sorted_.end(), [&](double e) { return e - sorted_.front() <= tol; }));
    }

    Matrix matrix() const {
        Matrix m = Matrix::Zero(static_cast<Eigen::Index>(dim()), static_cast<Eigen::Index>(dim()));
        for (std::size_t k = 0; k < dim(); ++k) m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = diagonal_[k];
        return m;
    }

  private:
    std::vector<double> diagonal_;
    std::vector<double> sorted_;
    std::vector<std::size_t> order_;
};

/// beta = 1/(k_B T); infinite() is absolute zero.
class InverseTemperature {
  public:
    explicit InverseTemperature(double beta) : beta_(beta) {
        if (!(beta >= 0.0)) throw ArgumentError("inverse temperature must be nonnegative");
        if (std::isinf(beta)) infinite_ = true;
    }

    static InverseTemperature infinite() { return InverseTemperature(std::numeric_limits<double>::infinity()); }

    bool is_infinite() const { return infinite_; }
    double value() const { return beta_; }
    /// k_B T, zero at absolute zero. Undefined for beta = 0.
    double temperature() const {
        if (infinite_) return 0.0;
        if (beta_ == 0.0) throw DomainError("1/beta diverges at beta = 0");
        return 1.0 / beta_;
    }

  private:
    double beta_;
    bool infinite_ = false;
};

/// Boltzmann weights e^{-beta (E_k - E_min)} in basis order. At beta = inf
/// the weight is 1 on the ground subspace and 0 elsewhere.
inline std::vector<double> boltzmann_weights(const Hamiltonian& h, InverseTemperature beta) {
    std::vector<double> w(h.dim());
    const double e0 = h.ground_energy();
    for (std::size_t k = 0; k < h.dim(); ++k) {
        const double gap = h.diagonal()[k] - e0;
        if (beta.is_infinite())
            w[k] = gap <= 1e-12 ? 1.0 : 0.0;
        else
            w[k] = std::exp(-beta.value() * gap);
    }
    return w;
}

/// Z = sum_k e^{-beta E_k}. Only finite beta.
inline double partition_function(const Hamiltonian& h, InverseTemperature beta) {
    if (beta.is_infinite()) throw DomainError("partition function is not defined at beta = inf");
    double z = 0.0;
    for (double e : h.diagonal()) z += std::exp(-beta.value() * e);
    return z;
}

inline DensityOperator thermal_state(const Hamiltonian& h, InverseTemperature beta) {
    const std::vector<double> w = boltzmann_weights(h, beta);
    double z = 0.0;
    for (double x : w) z += x;
    std::vector<double> p(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) p[k] = w[k] / z;
    return DensityOperator::diagonal(p);
}

/// (1/sqrt Z) sum_k e^{-beta E_k/2} |k>_b |k>_R, dims [d, d].
inline StateVector purified_thermal(const Hamiltonian& h, InverseTemperature beta) {
    if (beta.is_infinite() && h.ground_degeneracy() > 1)
        throw UnsupportedConfigurationError("purified thermal state at beta = inf needs a unique ground state");
    const std::vector<double> w = boltzmann_weights(h, beta);
    const auto d = static_cast<Eigen::Index>(h.dim());
    Vector v = Vector::Zero(d * d);
    for (Eigen::Index k = 0; k < d; ++k) v[k * d + k] = std::sqrt(w[static_cast<std::size_t>(k)]);
    return StateVector::normalized(v, Dims{h.dim(), h.dim()});
}

inline double energy(const DensityOperator& rho, const Hamiltonian& h) {
    if (rho.dim() != h.dim())
        throw DimensionError("energy: state has dimension " + std::to_string(rho.dim()) + ", hamiltonian " +
                             std::to_string(h.dim()));
    double e = 0.0;
    for (std::size_t k = 0; k < h.dim(); ++k)
        e += h.diagonal()[k] * rho.matrix()(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)).real();
    return e;
}

enum class Scale { raw, rescaled };

namespace detail {

/// E - S/beta from precomputed pieces; the single place the free-energy
/// sign convention lives.
inline double free_energy_from(double energy, double entropy, double temperature) {
#ifdef QBR_MUTATION_FLIP_FREE_ENERGY_SIGN
    return energy + temperature * entropy;
#else
    return energy - temperature * entropy;
#endif
}

}  // namespace detail

inline double free_energy(const DensityOperator& rho, const Hamiltonian& h, InverseTemperature beta,
                          Scale scale = Scale::rescaled) {
    if (!beta.is_infinite() && beta.value() == 0.0)
        throw DomainError("free energy is undefined at beta = 0");
    const double raw = detail::free_energy_from(energy(rho, h), vn_entropy(rho), beta.temperature());
    if (scale == Scale::raw) return raw;
    const DensityOperator tau = thermal_state(h, beta);
    return raw - detail::free_energy_from(energy(tau, h), vn_entropy(tau), beta.temperature());
}

}  // namespace qbr
