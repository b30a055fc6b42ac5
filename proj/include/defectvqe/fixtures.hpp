#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "defectvqe/fci.hpp"
#include "defectvqe/fermion.hpp"
#include "defectvqe/mapping.hpp"

namespace dvqe {

/// Built-in synthetic Hamiltonian standing in for unpublished embedding
/// integrals, with a documented construction and frozen parameters.
struct Fixture {
    std::string name;
    FermionHamiltonian hamiltonian;
    Determinant reference;   // open-shell trial determinant for VQE
    int n_electrons = 0;
    double sz = 0.0;
    std::pair<int, int> sector_parities{1, 1};
    std::string description;
};

namespace detail {

// Shared two-orbital "e shell" integral pattern: an O(2)-symmetric open shell
// (x,y) on top of inert doubly-occupied core orbitals.  The symmetry relation
// U_e = J_xy + 2 K_xy makes the shell exactly degenerate under x<->y, so the
// m_s = 0 triplet is exactly the two-determinant recoupling state and the 1E
// and 3E pairs are exactly degenerate.
struct ShellParams {
    double u_core = 1.0;    // (cc|cc) per core orbital
    double u_e = 0.9;       // (xx|xx) = (yy|yy)
    double k_xy = 0.25;     // (xy|yx); J_xy = u_e - 2 k_xy
    double j_core_e = 0.6;  // (cc|xx)
    double k_core_e = 0.15; // (cx|xc)
};

}  // namespace detail

/// One spatial orbital, two electrons: h = -1 eV, U = 0.5 eV.  FCI ground
/// energy is 2h + U = -1.5 eV; the UCCSD ansatz has no virtuals and therefore
/// no parameters.
inline Fixture fixture_hubbard1() {
    Fixture f;
    f.name = "hubbard1";
    ActiveSpace space{1, 2, std::optional<int>(1)};
    FermionHamiltonian h(space);
    h.set_h1(0, 0, -1.0);
    h.set_h2(0, 0, 0, 0, 0.5);
    f.hamiltonian = h;
    f.reference = Determinant{0b11};
    f.n_electrons = 2;
    f.sz = 0.0;
    f.sector_parities = MappingSpec::parities_for(2, 1);
    f.description =
        "one-orbital Hubbard atom: h1 = -1 eV, (00|00) = 0.5 eV; ground energy 2h+U = -1.5 eV";
    return f;
}

/// (4e,3o) model with orbitals (a1, ex, ey): diagonal h1 = (-4, -2, -2) eV and
/// the O(2)-symmetric shell integrals above.  The FCI ground state is the
/// m_s = 0 triplet spread over |a1 a1~ ex ey~> and |a1 a1~ ex~ ey> with
/// weights 1/sqrt(2), every other determinant exactly zero.
inline Fixture fixture_triplet_nv_shape() {
    Fixture f;
    f.name = "triplet-nv-shape";
    detail::ShellParams p;
    ActiveSpace space{3, 4, std::optional<int>(3)};
    FermionHamiltonian h(space);
    h.set_h1(0, 0, -4.0);
    h.set_h1(1, 1, -2.0);
    h.set_h1(2, 2, -2.0);
    h.set_h2(0, 0, 0, 0, p.u_core);
    for (int e : {1, 2}) {
        h.set_h2(e, e, e, e, p.u_e);
        h.set_h2(0, 0, e, e, p.j_core_e);
        h.set_h2(0, e, e, 0, p.k_core_e);
    }
    h.set_h2(1, 1, 2, 2, p.u_e - 2 * p.k_xy);
    h.set_h2(1, 2, 2, 1, p.k_xy);
    f.hamiltonian = h;
    f.reference = Determinant{0b101011};  // |a1 a1~ ex ey~>: modes {0,1,3,5}
    f.n_electrons = 4;
    f.sz = 0.0;
    f.sector_parities = MappingSpec::parities_for(4, 2);
    f.description =
        "(4e,3o) open-shell triplet model: eps = (-4,-2,-2) eV, U_core = 1.0, U_e = 0.9, "
        "J_xy = 0.4, K_xy = 0.25, J_core-e = 0.6, K_core-e = 0.15 eV; exchange favors the "
        "two-determinant m_s = 0 triplet ground state";
    return f;
}

/// (6e,4o) analog with orbitals (a1', a1, ex, ey): diagonal h1 =
/// (-5, -4, -2, -2) eV, two inert cores and the same open e shell.
inline Fixture fixture_triplet_vv_shape() {
    Fixture f;
    f.name = "triplet-vv-shape";
    detail::ShellParams p;
    ActiveSpace space{4, 6, std::optional<int>(3)};
    FermionHamiltonian h(space);
    h.set_h1(0, 0, -5.0);
    h.set_h1(1, 1, -4.0);
    h.set_h1(2, 2, -2.0);
    h.set_h1(3, 3, -2.0);
    for (int c : {0, 1}) {
        h.set_h2(c, c, c, c, p.u_core);
        for (int e : {2, 3}) {
            h.set_h2(c, c, e, e, p.j_core_e);
            h.set_h2(c, e, e, c, p.k_core_e);
        }
    }
    h.set_h2(0, 0, 1, 1, 0.7);   // core-core Coulomb
    h.set_h2(0, 1, 1, 0, 0.12);  // core-core exchange
    for (int e : {2, 3}) h.set_h2(e, e, e, e, p.u_e);
    h.set_h2(2, 2, 3, 3, p.u_e - 2 * p.k_xy);
    h.set_h2(2, 3, 3, 2, p.k_xy);
    f.hamiltonian = h;
    // |a1' a1'~ a1 a1~ ex ey~>: up modes {0,1,2}, down modes {4,5,7}
    f.reference = Determinant{0b10110111};
    f.n_electrons = 6;
    f.sz = 0.0;
    f.sector_parities = MappingSpec::parities_for(6, 3);
    f.description =
        "(6e,4o) open-shell triplet model: eps = (-5,-4,-2,-2) eV, two inert core orbitals "
        "(U = 1.0, J = 0.7, K = 0.12 eV) under the same O(2) e shell as triplet-nv-shape";
    return f;
}

inline Fixture build_fixture(const std::string& name) {
    if (name == "hubbard1") return fixture_hubbard1();
    if (name == "triplet-nv-shape") return fixture_triplet_nv_shape();
    if (name == "triplet-vv-shape") return fixture_triplet_vv_shape();
    throw std::invalid_argument("unknown fixture '" + name + "'");
}

inline std::vector<std::string> fixture_names() {
    return {"hubbard1", "triplet-nv-shape", "triplet-vv-shape"};
}

/// Default tapered parity mapping for a fixture's declared sector.  A
/// two-spin-orbital register has nothing left after removing both symmetry
/// qubits, so tapering only applies to larger registers.
inline MappingSpec fixture_mapping(const Fixture& f, bool taper = true) {
    MappingSpec spec;
    spec.kind = MappingKind::parity;
    spec.n_spin_orbitals = f.hamiltonian.space.n_spin_orbitals();
    spec.taper = taper && spec.n_spin_orbitals > 2;
    if (spec.taper) spec.sector_parities = f.sector_parities;
    return spec;
}

}  // namespace dvqe
