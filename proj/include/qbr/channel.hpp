#pragma once

// Energy-preserving system-bath unitaries and the isometric extension
//   V|psi> = (U_sb (x) I_R)(|psi>_s (x) |phi+_beta>_bR)
// that realizes a thermal operation in the battery-bath-reference picture.

#include "qbr/qcore.hpp"
#include "qbr/random.hpp"
#include "qbr/thermo.hpp"

namespace qbr {

inline constexpr double kDegeneracyTol = 1e-9;

struct EnergyBlock {
    double energy;
    std::vector<std::size_t> indices;  // flat s (x) b product-basis indices
};

/// Partition of the s (x) b product basis into total-energy levels.
struct BlockStructure {
    Hamiltonian hs;
    Hamiltonian hb;
    std::vector<EnergyBlock> blocks;

    std::size_t dim() const { return hs.dim() * hb.dim(); }
};

inline BlockStructure degenerate_blocks(const Hamiltonian& hs, const Hamiltonian& hb, double tol = kDegeneracyTol) {
    if (!(tol > 0.0)) throw ArgumentError("degenerate_blocks: tolerance must be positive");
    const std::size_t db = hb.dim();
    std::vector<std::pair<double, std::size_t>> levels;
    for (std::size_t i = 0; i < hs.dim(); ++i)
        for (std::size_t k = 0; k < db; ++k) levels.emplace_back(hs.diagonal()[i] + hb.diagonal()[k], i * db + k);
    std::stable_sort(levels.begin(), levels.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    BlockStructure out{hs, hb, {}};
    for (const auto& [e, idx] : levels) {
        // Chain grouping against the block's first energy keeps groups tight.
        if (out.blocks.empty() || e - out.blocks.back().energy > tol)
            out.blocks.push_back({e, {idx}});
        else
            out.blocks.back().indices.push_back(idx);
    }
    for (auto& b : out.blocks) std::sort(b.indices.begin(), b.indices.end());
    return out;
}

/// Total-energy operator H_s (x) I + I (x) H_b.
inline Matrix total_hamiltonian(const Hamiltonian& hs, const Hamiltonian& hb) {
    const auto ds = static_cast<Eigen::Index>(hs.dim());
    const auto db = static_cast<Eigen::Index>(hb.dim());
    return kron(hs.matrix(), Matrix::Identity(db, db)) + kron(Matrix::Identity(ds, ds), hb.matrix());
}

class EnergyPreservingUnitary {
  public:
    EnergyPreservingUnitary(Matrix u, const BlockStructure& blocks) : matrix_(std::move(u)), blocks_(blocks) {
        const auto n = static_cast<Eigen::Index>(blocks_.dim());
        if (matrix_.rows() != n || matrix_.cols() != n)
            throw DimensionError("energy-preserving unitary must act on d_s * d_b = " + std::to_string(n));
        if (detail::max_abs(matrix_.adjoint() * matrix_ - Matrix::Identity(n, n)) > kStateTol)
            throw ArgumentError("matrix is not unitary");
        const Matrix h = total_hamiltonian(blocks_.hs, blocks_.hb);
        if (detail::max_abs(matrix_ * h - h * matrix_) > 1e-9)
            throw ArgumentError("unitary does not commute with the total Hamiltonian");
        std::vector<std::size_t> block_of(static_cast<std::size_t>(n));
        for (std::size_t b = 0; b < blocks_.blocks.size(); ++b)
            for (std::size_t i : blocks_.blocks[b].indices) block_of[i] = b;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (block_of[static_cast<std::size_t>(i)] != block_of[static_cast<std::size_t>(j)] &&
                    std::abs(matrix_(i, j)) > 1e-9)
                    throw ArgumentError("unitary couples different energy blocks");
    }

    const Matrix& matrix() const { return matrix_; }
    const Hamiltonian& hs() const { return blocks_.hs; }
    const Hamiltonian& hb() const { return blocks_.hb; }
    const BlockStructure& block_structure() const { return blocks_; }

  private:
    Matrix matrix_;
    BlockStructure blocks_;
};

/// Independent Haar unitary on every degenerate block.
inline EnergyPreservingUnitary random_energy_preserving_unitary(const BlockStructure& blocks, std::uint64_t seed) {
    Rng rng(seed);
    const auto n = static_cast<Eigen::Index>(blocks.dim());
    Matrix u = Matrix::Zero(n, n);
    for (const auto& block : blocks.blocks) {
        const auto m = static_cast<Eigen::Index>(block.indices.size());
        const Matrix local = haar_unitary(m, rng);
        for (Eigen::Index a = 0; a < m; ++a)
            for (Eigen::Index b = 0; b < m; ++b)
                u(static_cast<Eigen::Index>(block.indices[static_cast<std::size_t>(a)]),
                  static_cast<Eigen::Index>(block.indices[static_cast<std::size_t>(b)])) = local(a, b);
    }
    return EnergyPreservingUnitary(std::move(u), blocks);
}

class IsometricExtension {
  public:
    IsometricExtension(EnergyPreservingUnitary unitary, InverseTemperature beta)
        : unitary_(std::move(unitary)), bath_(purified_thermal(unitary_.hb(), beta)), beta_(beta) {
        const auto ds = static_cast<Eigen::Index>(ds_());
        const auto dbr = static_cast<Eigen::Index>(db_() * db_());
        const Matrix uext = kron(unitary_.matrix(), Matrix::Identity(static_cast<Eigen::Index>(db_()),
                                                                    static_cast<Eigen::Index>(db_())));
        isometry_ = Matrix::Zero(ds * dbr, ds);
        for (Eigen::Index i = 0; i < ds; ++i) {
            Vector e = Vector::Zero(ds);
            e[i] = 1.0;
            isometry_.col(i) = uext * kron(e, bath_.amplitudes());
        }
        if (detail::max_abs(isometry_.adjoint() * isometry_ - Matrix::Identity(ds, ds)) > kStateTol)
            throw ArgumentError("extension is not an isometry");
    }

    const EnergyPreservingUnitary& unitary() const { return unitary_; }
    const StateVector& bath_purification() const { return bath_; }
    InverseTemperature beta() const { return beta_; }
    const Hamiltonian& hs() const { return unitary_.hs(); }
    const Hamiltonian& hb() const { return unitary_.hb(); }

    /// V as a (d_s d_b d_R) x d_s matrix.
    const Matrix& isometry() const { return isometry_; }
    /// [d_s, d_b, d_R]
    Dims joint_dims() const { return Dims{ds_(), db_(), db_()}; }

  private:
    std::size_t ds_() const { return unitary_.hs().dim(); }
    std::size_t db_() const { return unitary_.hb().dim(); }

    EnergyPreservingUnitary unitary_;
    StateVector bath_;
    InverseTemperature beta_;
    Matrix isometry_;
};

/// Two-qubit family with H_s = H_b = diag(0, 1): fixes |00>, |11> and acts on
/// the degenerate pair as |01> -> a|01> + g|10>, |10> -> g*|01> - a*|10>
/// with g = sqrt(1 - |a|^2) * gamma_phase.
inline IsometricExtension qubit_isometry(cplx alpha, cplx gamma_phase, InverseTemperature beta) {
    if (std::abs(alpha) > 1.0 + kStateTol) throw ArgumentError("qubit_isometry: |alpha| exceeds 1");
    if (std::abs(std::abs(gamma_phase) - 1.0) > kStateTol) throw ArgumentError("qubit_isometry: |gamma_phase| must be 1");
    const double a2 = std::norm(alpha);
    const cplx gamma = std::sqrt(std::max(0.0, 1.0 - a2)) * gamma_phase;
    if (std::abs(a2 + std::norm(gamma) - 1.0) > kStateTol) throw ArgumentError("qubit_isometry: |alpha|^2 + |gamma|^2 != 1");

    Matrix u = Matrix::Zero(4, 4);
    u(0, 0) = 1.0;
    u(3, 3) = 1.0;
    // columns are images of |01> (index 1) and |10> (index 2)
    u(1, 1) = alpha;
    u(2, 1) = gamma;
    u(1, 2) = std::conj(gamma);
    u(2, 2) = -std::conj(alpha);
    const Hamiltonian h{0.0, 1.0};
    return IsometricExtension(EnergyPreservingUnitary(std::move(u), degenerate_blocks(h, h)), beta);
}

/// U_s (x) U_b with both factors diagonal phases (energy preserving for
/// nondegenerate spectra). Generates no correlations.
inline IsometricExtension local_phase_extension(const Hamiltonian& hs, const Hamiltonian& hb, InverseTemperature beta,
                                                std::uint64_t seed) {
    Rng rng(seed);
    auto phases = [&](std::size_t d) {
        Matrix m = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(d); ++k) m(k, k) = std::polar(1.0, uniform(rng, 0.0, 2 * M_PI));
        return m;
    };
    return IsometricExtension(EnergyPreservingUnitary(kron(phases(hs.dim()), phases(hb.dim())), degenerate_blocks(hs, hb)),
                              beta);
}

/// sigma_sbR = V rho V^dagger with dims [d_s, d_b, d_R].
inline DensityOperator apply_extension(const IsometricExtension& ext, const DensityOperator& rho) {
    if (rho.dim() != ext.hs().dim())
        throw DimensionError("apply_extension: battery dimension " + std::to_string(rho.dim()) + ", extension expects " +
                             std::to_string(ext.hs().dim()));
    return DensityOperator(DensityOperator::Trusted{}, ext.isometry() * rho.matrix() * ext.isometry().adjoint(),
                           ext.joint_dims());
}

/// Lambda_beta(rho): the battery marginal of the joint state.
inline DensityOperator channel_output(const IsometricExtension& ext, const DensityOperator& rho) {
    return partial_trace(apply_extension(ext, rho), {0});
}

}  // namespace qbr
