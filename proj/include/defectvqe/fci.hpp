#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "defectvqe/fermion.hpp"

namespace dvqe {

/// Slater determinant as a spin-orbital occupation bitmask (bit j set means
/// spin orbital j occupied, with the up-block-then-down-block convention).
struct Determinant {
    std::uint64_t occupation = 0;

    int electrons() const { return std::popcount(occupation); }
    bool occupied(int j) const { return (occupation >> j) & 1ull; }
    bool operator==(const Determinant& o) const { return occupation == o.occupation; }
    bool operator<(const Determinant& o) const { return occupation < o.occupation; }
};

// Phase convention: |D> = a+_{j1} a+_{j2} ... |vac> with j1 < j2 < ... written
// left to right, i.e. creation operators applied in descending index order.
// Applying a ladder operator then costs (-1)^(occupied below the index).

/// (sign, new determinant); nullopt when the operator annihilates the state.
inline std::optional<std::pair<int, Determinant>> apply_ladder_op(Determinant d,
                                                                  const LadderOp& op) {
    const std::uint64_t bit = 1ull << op.index;
    if (op.create == bool(d.occupation & bit)) return std::nullopt;
    const int below = std::popcount(d.occupation & (bit - 1));
    d.occupation ^= bit;
    return std::make_pair((below % 2) ? -1 : 1, d);
}

/// Applies a product of ladder operators (right to left, as written).
inline std::optional<std::pair<int, Determinant>> apply_ladder_product(
    Determinant d, const std::vector<LadderOp>& ops) {
    int sign = 1;
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
        auto step = apply_ladder_op(d, *it);
        if (!step) return std::nullopt;
        sign *= step->first;
        d = step->second;
    }
    return std::make_pair(sign, d);
}

/// All determinants with n_e electrons (and S_z = sz when given), ascending
/// numeric order.  An impossible sector yields an empty list.
inline std::vector<Determinant> enumerate_sector(const ActiveSpace& space, int n_e,
                                                 std::optional<double> sz = std::nullopt) {
    space.validate();
    if (n_e < 0 || n_e > space.n_spin_orbitals())
        throw std::invalid_argument("enumerate_sector: electron count out of range");
    std::optional<int> twice_sz;
    if (sz) {
        const double t = 2.0 * *sz;
        if (std::abs(t - std::round(t)) > 1e-9)
            throw std::invalid_argument("enumerate_sector: S_z must be a half-integer");
        twice_sz = static_cast<int>(std::round(t));
    }
    const int n = space.n_spatial;
    const std::uint64_t up_mask = (1ull << n) - 1;
    std::vector<Determinant> out;
    for (std::uint64_t mask = 0; mask < (1ull << (2 * n)); ++mask) {
        if (std::popcount(mask) != n_e) continue;
        if (twice_sz) {
            const int n_up = std::popcount(mask & up_mask);
            const int n_down = n_e - n_up;
            if (n_up - n_down != *twice_sz) continue;
        }
        out.push_back({mask});
    }
    return out;
}

/// Eigenpairs of the Hamiltonian in a fixed-sector determinant basis.
struct FciSolution {
    std::vector<Determinant> basis;
    std::vector<double> energies;  // ascending, eV
    Eigen::MatrixXd states;        // column k = coefficients of level k over basis
    int n_electrons = 0;
    std::optional<double> sz;
};

namespace detail {

// Slater-Condon matrix element between determinants differing in zero, one or
// two spin orbitals, built directly from the spatial integrals.
class SlaterCondon {
public:
    explicit SlaterCondon(const FermionHamiltonian& h) : h_(h), n_(h.space.n_spatial) {}

    double diagonal(Determinant d) const {
        double e = h_.e_core;
        const auto occ = occ_list(d);
        for (int k : occ) e += h_.h1()(sp(k), sp(k));
        for (int k : occ)
            for (int l : occ) {
                e += 0.5 * h_.h2(sp(k), sp(k), sp(l), sp(l));
                if (spin(k) == spin(l)) e -= 0.5 * h_.h2(sp(k), sp(l), sp(l), sp(k));
            }
        return e;
    }

    // <D'|H|D> with D' = D - K + M.
    double single(Determinant d, int k_removed, int m_added) const {
        const int k = k_removed, m = m_added;
        if (spin(k) != spin(m)) return 0.0;
        double v = h_.h1()(sp(m), sp(k));
        for (int c : occ_list(d)) {
            if (c == k) continue;
            v += h_.h2(sp(m), sp(k), sp(c), sp(c));
            if (spin(c) == spin(k)) v -= h_.h2(sp(m), sp(c), sp(c), sp(k));
        }
        return ladder_sign(d, {{m, true}, {k, false}}) * v;
    }

    // <D'|H|D> with D' = D - {K,L} + {M,N}; hole/particle order is fixed by
    // the operator string a+_M a+_N a_L a_K whose sign multiplies the bracket.
    double double_exc(Determinant d, int k, int l, int m, int n) const {
        double v = 0.0;
        if (spin(m) == spin(k) && spin(n) == spin(l))
            v += h_.h2(sp(m), sp(k), sp(n), sp(l));
        if (spin(n) == spin(k) && spin(m) == spin(l))
            v -= h_.h2(sp(n), sp(k), sp(m), sp(l));
        if (v == 0.0) return 0.0;
        return ladder_sign(d, {{m, true}, {n, true}, {l, false}, {k, false}}) * v;
    }

private:
    const FermionHamiltonian& h_;
    int n_;

    int sp(int j) const { return spatial_of(j, n_); }
    int spin(int j) const { return spin_of(j, n_); }

    static int ladder_sign(Determinant d, const std::vector<LadderOp>& ops) {
        auto r = apply_ladder_product(d, ops);
        if (!r) throw std::logic_error("SlaterCondon: vanishing ladder product");
        return r->first;
    }

    std::vector<int> occ_list(Determinant d) const {
        std::vector<int> occ;
        for (int j = 0; j < 2 * n_; ++j)
            if (d.occupied(j)) occ.push_back(j);
        return occ;
    }
};

}  // namespace detail

/// Sector Hamiltonian matrix over the given determinant basis, built with
/// Slater-Condon rules (fermionic signs included).
inline Eigen::MatrixXd build_sector_matrix(const FermionHamiltonian& h,
                                           const std::vector<Determinant>& basis) {
    const detail::SlaterCondon sc(h);
    const int dim = static_cast<int>(basis.size());
    Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(dim, dim);
    for (int col = 0; col < dim; ++col) {
        for (int row = 0; row < dim; ++row) {
            const std::uint64_t diff = basis[row].occupation ^ basis[col].occupation;
            const int ndiff = std::popcount(diff);
            if (ndiff == 0) {
                mat(row, col) = sc.diagonal(basis[col]);
            } else if (ndiff == 2) {
                const std::uint64_t removed = diff & basis[col].occupation;
                const std::uint64_t added = diff & basis[row].occupation;
                mat(row, col) = sc.single(basis[col], std::countr_zero(removed),
                                          std::countr_zero(added));
            } else if (ndiff == 4) {
                const std::uint64_t removed = diff & basis[col].occupation;
                const std::uint64_t added = diff & basis[row].occupation;
                const int k = std::countr_zero(removed);
                const int l = 63 - std::countl_zero(removed);
                const int m = std::countr_zero(added);
                const int n = 63 - std::countl_zero(added);
                mat(row, col) = sc.double_exc(basis[col], k, l, m, n);
            }
        }
    }
    return mat;
}

/// Builds the sector Hamiltonian with Slater-Condon rules and diagonalizes it
/// densely.
inline FciSolution solve_fci(const FermionHamiltonian& h, int n_e,
                             std::optional<double> sz = std::nullopt,
                             std::size_t max_basis = 5000) {
    auto basis = enumerate_sector(h.space, n_e, sz);
    if (basis.empty()) throw std::invalid_argument("solve_fci: empty sector");
    if (basis.size() > max_basis)
        throw std::invalid_argument("solve_fci: basis exceeds dense limit");

    Eigen::MatrixXd mat = build_sector_matrix(h, basis);
    const int dim = static_cast<int>(basis.size());
    const double asym = (mat - mat.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-9) throw std::runtime_error("solve_fci: non-Hermitian sector matrix");
    mat = 0.5 * (mat + mat.transpose().eval());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat);
    if (es.info() != Eigen::Success) throw std::runtime_error("solve_fci: eigensolver failed");

    FciSolution sol;
    sol.basis = std::move(basis);
    sol.energies.assign(es.eigenvalues().data(), es.eigenvalues().data() + dim);
    sol.states = es.eigenvectors();
    sol.n_electrons = n_e;
    sol.sz = sz;
    return sol;
}

/// Gaps E_k - E_0 for k >= 1.
inline std::vector<double> excitation_energies(const FciSolution& sol) {
    if (sol.energies.size() < 2)
        throw std::invalid_argument("excitation_energies: need at least two levels");
    std::vector<double> gaps;
    gaps.reserve(sol.energies.size() - 1);
    for (std::size_t k = 1; k < sol.energies.size(); ++k)
        gaps.push_back(sol.energies[k] - sol.energies[0]);
    return gaps;
}

/// CSV report: level,energy_eV,gap_eV.
inline void write_fci_csv(const FciSolution& sol, std::ostream& os) {
    os << "level,energy_eV,gap_eV\n";
    char buf[40];
    for (std::size_t k = 0; k < sol.energies.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g", sol.energies[k]);
        os << k << ',' << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", sol.energies[k] - sol.energies[0]);
        os << buf << '\n';
    }
}

}  // namespace dvqe
