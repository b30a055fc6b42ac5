#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "defectvqe/fci.hpp"
#include "defectvqe/fermion.hpp"
#include "defectvqe/pauli.hpp"

namespace dvqe {

enum class MappingKind { jordan_wigner, parity };

inline MappingKind mapping_kind_from_string(const std::string& s) {
    if (s == "jordan_wigner" || s == "jw") return MappingKind::jordan_wigner;
    if (s == "parity") return MappingKind::parity;
    throw std::invalid_argument("unknown mapping kind '" + s + "'");
}

/// Fermion-to-qubit transform selection.  Tapering removes the two qubits
/// whose Z values are fixed by the spin-up-count and total-count parities; it
/// is available only under the parity mapping, where those parities live on
/// single qubits (positions n/2-1 and n-1).
struct MappingSpec {
    MappingKind kind = MappingKind::jordan_wigner;
    int n_spin_orbitals = 0;
    bool taper = false;
    // (total-number parity, spin-up-number parity) as Z eigenvalues, required
    // when tapering: +1 for an even count, -1 for odd.
    std::optional<std::pair<int, int>> sector_parities;

    void validate() const {
        if (n_spin_orbitals <= 0)
            throw std::invalid_argument("MappingSpec: n_spin_orbitals must be positive");
        if (taper) {
            if (kind != MappingKind::parity)
                throw std::invalid_argument("MappingSpec: tapering requires the parity mapping");
            if (n_spin_orbitals % 2 != 0)
                throw std::invalid_argument("MappingSpec: tapering requires an even register");
            if (!sector_parities)
                throw std::invalid_argument("MappingSpec: tapering requires sector_parities");
            auto [t, u] = *sector_parities;
            if ((t != 1 && t != -1) || (u != 1 && u != -1))
                throw std::invalid_argument("MappingSpec: sector parities must be +1 or -1");
        }
    }

    int n_qubits_full() const { return n_spin_orbitals; }
    int n_qubits() const { return taper ? n_spin_orbitals - 2 : n_spin_orbitals; }
    std::array<int, 2> removed_positions() const {
        return {n_spin_orbitals / 2 - 1, n_spin_orbitals - 1};
    }

    /// Parities of a given sector: ((-1)^n_e, (-1)^n_up).
    static std::pair<int, int> parities_for(int n_electrons, int n_up) {
        return {(n_electrons % 2) ? -1 : 1, (n_up % 2) ? -1 : 1};
    }
};

/// Bit bookkeeping between the full and two-qubit-reduced registers.
struct TaperedRegister {
    int n_qubits_full = 0;
    int n_qubits_reduced = 0;
    std::array<int, 2> removed_positions{};
    std::pair<int, int> sector_parities{1, 1};  // (total, up) Z eigenvalues

    explicit TaperedRegister(const MappingSpec& spec) {
        spec.validate();
        if (!spec.taper) throw std::invalid_argument("TaperedRegister: spec does not taper");
        n_qubits_full = spec.n_qubits_full();
        n_qubits_reduced = n_qubits_full - 2;
        removed_positions = spec.removed_positions();
        sector_parities = *spec.sector_parities;
    }

    bool removed(int q) const { return q == removed_positions[0] || q == removed_positions[1]; }

    /// Z eigenvalue pinned at a removed position.
    int eigenvalue_at(int q) const {
        if (q == removed_positions[0]) return sector_parities.second;  // spin-up parity
        if (q == removed_positions[1]) return sector_parities.first;   // total parity
        throw std::invalid_argument("TaperedRegister: position not removed");
    }

    /// Fixed bit value at a removed position (Z=+1 -> 0, Z=-1 -> 1).
    int fixed_bit_at(int q) const { return eigenvalue_at(q) == 1 ? 0 : 1; }

    /// Drop the removed positions, keeping relative qubit order.
    std::uint64_t encode_bits(std::uint64_t full_bits) const {
        std::uint64_t out = 0;
        int r = 0;
        for (int q = 0; q < n_qubits_full; ++q) {
            if (removed(q)) continue;
            if ((full_bits >> q) & 1ull) out |= 1ull << r;
            ++r;
        }
        return out;
    }

    /// Reinsert the sector-fixed bits.
    std::uint64_t decode_bits(std::uint64_t reduced_bits) const {
        std::uint64_t out = 0;
        int r = 0;
        for (int q = 0; q < n_qubits_full; ++q) {
            if (removed(q)) {
                if (fixed_bit_at(q)) out |= 1ull << q;
            } else {
                if ((reduced_bits >> r) & 1ull) out |= 1ull << q;
                ++r;
            }
        }
        return out;
    }
};

// Basis-state labels print most-significant qubit first (|q_{N-1} ... q_0>),
// the usual ket convention.  Pauli letter strings are the opposite: qubit 0
// first.  Both are fixed so published tapering examples reproduce verbatim.
inline std::string bits_to_label(std::uint64_t bits, int n_qubits) {
    std::string s(n_qubits, '0');
    for (int q = 0; q < n_qubits; ++q)
        if ((bits >> q) & 1ull) s[n_qubits - 1 - q] = '1';
    return s;
}

inline std::uint64_t label_to_bits(const std::string& label) {
    std::uint64_t bits = 0;
    const int n = static_cast<int>(label.size());
    for (int q = 0; q < n; ++q) {
        const char c = label[n - 1 - q];
        if (c == '1') bits |= 1ull << q;
        else if (c != '0') throw std::invalid_argument("basis label must be 0/1");
    }
    return bits;
}

namespace detail {

// Encoded ladder operator, two Pauli terms each.
//   JW:      a+_j = 1/2 (prod_{k<j} Z_k) (X_j - i Y_j)
//   parity:  a+_j = 1/2 (prod_{k>j} X_k) (X_j Z_{j-1} - i Y_j)   [Z_{j-1} for j>0]
// Annihilation flips the sign of the iY term.
inline PauliSum ladder_pauli(const LadderOp& op, MappingKind kind, int n_qubits) {
    PauliSum sum(n_qubits);
    PauliString base(n_qubits);
    const int j = op.index;
    if (kind == MappingKind::jordan_wigner) {
        for (int k = 0; k < j; ++k) base.letters[k] = Pauli::Z;
    } else {
        for (int k = j + 1; k < n_qubits; ++k) base.letters[k] = Pauli::X;
    }
    PauliString x_term = base;
    x_term.letters[j] = Pauli::X;
    if (kind == MappingKind::parity && j > 0) x_term.letters[j - 1] = Pauli::Z;
    PauliString y_term = base;
    y_term.letters[j] = Pauli::Y;
    sum.add(x_term, 0.5);
    sum.add(y_term, op.create ? complexd(0, -0.5) : complexd(0, 0.5));
    return sum;
}

inline PauliSum identity_sum(int n_qubits, complexd coeff) {
    PauliSum s(n_qubits);
    s.add(PauliString(n_qubits), coeff);
    return s;
}

}  // namespace detail

/// Substitutes the pinned Z eigenvalues at the removed positions and drops
/// them from every string.  X or Y at a removed position means the operator
/// does not commute with the tapering symmetries.
inline PauliSum taper_sum(const PauliSum& full, const MappingSpec& spec) {
    const TaperedRegister reg(spec);
    PauliSum out(reg.n_qubits_reduced, full.prune_threshold());
    for (const auto& [letters, coeff] : full.terms()) {
        complexd c = coeff;
        std::string reduced;
        reduced.reserve(reg.n_qubits_reduced);
        for (int q = 0; q < reg.n_qubits_full; ++q) {
            const char l = letters[q];
            if (reg.removed(q)) {
                if (l == 'Z') c *= static_cast<double>(reg.eigenvalue_at(q));
                else if (l != 'I')
                    throw std::logic_error(
                        "taper_sum: X/Y on a tapered qubit; operator breaks the sector symmetry");
            } else {
                reduced.push_back(l);
            }
        }
        out.add(PauliString::from_letters(reduced), c);
    }
    return out;
}

/// Encodes a fermionic operator as a PauliSum on the full (or, when tapering,
/// reduced) register.
inline PauliSum map_operator(const FermionOperator& op, const MappingSpec& spec) {
    spec.validate();
    if (op.n_spin_orbitals > spec.n_spin_orbitals)
        throw std::invalid_argument("map_operator: operator does not fit the register");
    const int n = spec.n_qubits_full();
    PauliSum full(n);
    for (const FermionTerm& term : op.terms) {
        PauliSum acc = detail::identity_sum(n, term.coeff);
        for (const LadderOp& lop : term.ops)
            acc = acc * detail::ladder_pauli(lop, spec.kind, n);
        full += acc;
    }
    return spec.taper ? taper_sum(full, spec) : full;
}

/// Integer basis index of the encoded determinant (bit q = qubit q).
inline std::uint64_t map_state_bits(const Determinant& d, const MappingSpec& spec) {
    spec.validate();
    std::uint64_t bits = 0;
    if (spec.kind == MappingKind::jordan_wigner) {
        bits = d.occupation;
    } else {
        // Qubit j stores the cumulative occupation parity of modes 0..j.
        int parity = 0;
        for (int j = 0; j < spec.n_spin_orbitals; ++j) {
            parity ^= static_cast<int>((d.occupation >> j) & 1ull);
            if (parity) bits |= 1ull << j;
        }
    }
    if (!spec.taper) return bits;
    const TaperedRegister reg(spec);
    for (int q : reg.removed_positions)
        if (static_cast<int>((bits >> q) & 1ull) != reg.fixed_bit_at(q))
            throw std::invalid_argument("map_state: determinant outside the tapering sector");
    return reg.encode_bits(bits);
}

/// Basis-state label of the encoded determinant, most-significant qubit first.
inline std::string map_state(const Determinant& d, const MappingSpec& spec) {
    return bits_to_label(map_state_bits(d, spec), spec.n_qubits());
}

/// Mapped (and tapered) total number operator; diagonal in either encoding.
inline PauliSum mapped_number_operator(const MappingSpec& spec) {
    return map_operator(number_operator(spec.n_spin_orbitals), spec);
}

/// Electron number implied by a measured basis state, evaluated from the
/// diagonal of the mapped-and-tapered number operator.
inline int electron_count_of_bits(std::uint64_t bits, const PauliSum& mapped_number) {
    double count = 0.0;
    for (const auto& [letters, coeff] : mapped_number.terms()) {
        double sign = 1.0;
        for (std::size_t q = 0; q < letters.size(); ++q) {
            if (letters[q] == 'Z') {
                if ((bits >> q) & 1ull) sign = -sign;
            } else if (letters[q] != 'I') {
                throw std::logic_error("electron_count_of_bits: number operator not diagonal");
            }
        }
        count += coeff.real() * sign;
    }
    const double rounded = std::round(count);
    if (std::abs(count - rounded) > 1e-6)
        throw std::logic_error("electron_count_of_bits: non-integer electron count");
    return static_cast<int>(rounded);
}

inline int electron_count_of_bitstring(const std::string& label, const MappingSpec& spec) {
    if (static_cast<int>(label.size()) != spec.n_qubits())
        throw std::invalid_argument("electron_count_of_bitstring: label length mismatch");
    return electron_count_of_bits(label_to_bits(label), mapped_number_operator(spec));
}

}  // namespace dvqe
