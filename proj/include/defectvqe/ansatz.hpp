#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "defectvqe/circuit.hpp"
#include "defectvqe/density.hpp"
#include "defectvqe/fci.hpp"
#include "defectvqe/fermion.hpp"
#include "defectvqe/mapping.hpp"
#include "defectvqe/pauli.hpp"

namespace dvqe {

/// One variational parameter and its anti-Hermitian generator E - E^dagger.
/// The compiled rotation is exp((theta/2) * generator), so a lone two-state
/// excitation produces amplitudes (cos(theta/2), sin(theta/2)).
struct Excitation {
    std::string name;
    FermionOperator generator;
};

struct UccsdAnsatz {
    ActiveSpace space;
    Determinant reference;
    bool spin_conserving_only = true;
    std::vector<Excitation> excitations;

    std::size_t parameter_count() const { return excitations.size(); }
    std::vector<std::string> parameter_names() const {
        std::vector<std::string> names;
        names.reserve(excitations.size());
        for (const auto& e : excitations) names.push_back(e.name);
        return names;
    }
};

namespace detail {

inline FermionOperator minus_adjoint(const FermionOperator& e) { return e - e.adjoint(); }

inline FermionOperator single_op(int n, int i, int a) {
    FermionOperator e(n);
    e.add(1.0, {{a, true}, {i, false}});
    return e;
}

// Double excitation with annihilators in ascending written order (a_i a_j for
// i<j); the antisymmetrized cluster sum leaves this sign free, and this choice
// is the one whose compiled rotation reaches the exchange-coupled triplet at
// theta = +pi/2.
inline FermionOperator double_op(int n, int i, int j, int a, int b) {
    FermionOperator e(n);
    e.add(1.0, {{a, true}, {b, true}, {i, false}, {j, false}});
    return e;
}

/// Per-spatial-orbital occupation (0, 1 or 2) of a determinant.
inline std::vector<int> spatial_profile(Determinant d, int n_spatial) {
    std::vector<int> m(n_spatial, 0);
    for (int j = 0; j < 2 * n_spatial; ++j)
        if (d.occupied(j)) ++m[spatial_of(j, n_spatial)];
    return m;
}

inline bool closed_shell(const std::vector<int>& profile) {
    return std::all_of(profile.begin(), profile.end(), [](int m) { return m == 0 || m == 2; });
}

}  // namespace detail

/// Enumerates singles and doubles from the reference's occupied to virtual
/// spin orbitals, in deterministic order (singles by (i,a), then doubles by
/// (i,j,a,b)).  With spin_conserving set, excitations are restricted to the
/// S_z-conserving set; additionally
///   - a closed-shell reference ties each spin-up single to its spin-down
///     mirror under one shared amplitude (restricted singles), and
///   - an open-shell reference keeps only the excitations that preserve the
///     per-spatial-orbital occupation profile, i.e. the spin-recoupling
///     rotations that pin the reference's configuration character.
inline UccsdAnsatz build_uccsd(const ActiveSpace& space, Determinant reference,
                               bool spin_conserving) {
    space.validate();
    const int n = space.n_spatial;
    const int n_so = 2 * n;
    if (reference.electrons() != space.n_electrons)
        throw std::invalid_argument("build_uccsd: reference does not match the electron count");
    if (reference.occupation >> n_so)
        throw std::invalid_argument("build_uccsd: reference uses orbitals outside the space");

    std::vector<int> occ, vir;
    for (int j = 0; j < n_so; ++j) (reference.occupied(j) ? occ : vir).push_back(j);

    const auto ref_profile = detail::spatial_profile(reference, n);
    const bool closed = detail::closed_shell(ref_profile);
    auto spin = [&](int j) { return spin_of(j, n); };

    UccsdAnsatz ansatz;
    ansatz.space = space;
    ansatz.reference = reference;
    ansatz.spin_conserving_only = spin_conserving;

    auto profile_preserved = [&](std::vector<int> holes, std::vector<int> parts) {
        Determinant d = reference;
        for (int h : holes) d.occupation ^= 1ull << h;
        for (int p : parts) d.occupation |= 1ull << p;
        return detail::spatial_profile(d, n) == ref_profile;
    };

    std::vector<std::pair<int, int>> tied;  // spin-up singles already absorbed
    for (int i : occ)
        for (int a : vir) {
            if (spin_conserving) {
                if (spin(i) != spin(a)) continue;
                if (closed) {
                    // the spin-down partner rides along with the up amplitude
                    if (spin(i) == 1) continue;
                    FermionOperator gen =
                        detail::minus_adjoint(detail::single_op(n_so, i, a));
                    gen += detail::minus_adjoint(
                        detail::single_op(n_so, down_orbital(spatial_of(i, n), n),
                                          down_orbital(spatial_of(a, n), n)));
                    ansatz.excitations.push_back(
                        {"s" + std::to_string(i) + "_" + std::to_string(a) + "r",
                         std::move(gen)});
                    tied.emplace_back(i, a);
                    continue;
                }
                if (!profile_preserved({i}, {a})) continue;
            }
            ansatz.excitations.push_back(
                {"s" + std::to_string(i) + "_" + std::to_string(a),
                 detail::minus_adjoint(detail::single_op(n_so, i, a))});
        }

    for (std::size_t ii = 0; ii < occ.size(); ++ii)
        for (std::size_t jj = ii + 1; jj < occ.size(); ++jj)
            for (std::size_t aa = 0; aa < vir.size(); ++aa)
                for (std::size_t bb = aa + 1; bb < vir.size(); ++bb) {
                    const int i = occ[ii], j = occ[jj], a = vir[aa], b = vir[bb];
                    if (spin_conserving) {
                        if (spin(i) + spin(j) != spin(a) + spin(b)) continue;
                        if (!closed && !profile_preserved({i, j}, {a, b})) continue;
                    }
                    ansatz.excitations.push_back(
                        {"d" + std::to_string(i) + std::to_string(j) + "_" +
                             std::to_string(a) + std::to_string(b),
                         detail::minus_adjoint(detail::double_op(n_so, i, j, a, b))});
                }
    return ansatz;
}

/// X gates on the qubits that are 1 in the encoded reference label.
inline Circuit prepare_reference(const Determinant& reference, const MappingSpec& spec) {
    Circuit c;
    c.n_qubits = spec.n_qubits();
    const std::uint64_t bits = map_state_bits(reference, spec);
    for (int q = 0; q < c.n_qubits; ++q)
        if ((bits >> q) & 1ull) c.append(Gate::x(q));
    return c;
}

/// Reference preparation plus one exponential block per generator, each block
/// one gadget per Pauli term repeated `replication` consecutive times with
/// 1/replication angles; the noiseless unitary is independent of replication.
struct CompiledAnsatz {
    Circuit circuit;
    int replication = 1;
    MappingSpec mapping;
    Determinant reference;
    std::vector<std::string> parameter_names;

    Circuit bound(std::span<const double> thetas) const { return circuit.bind(thetas); }
};

namespace detail {

struct MappedTerm {
    PauliString string;  // phase +1
    double weight = 0;   // G = i * sum_t weight_t P_t
};

// exp(i alpha P) acting on a vector, via cos(alpha) I + i sin(alpha) P.
inline Eigen::VectorXcd pauli_exponential_apply(const PauliString& p, double alpha,
                                                const Eigen::VectorXcd& psi) {
    Eigen::VectorXcd rotated = Eigen::VectorXcd::Zero(psi.size());
    for (std::uint64_t col = 0; col < static_cast<std::uint64_t>(psi.size()); ++col) {
        if (psi(col) == complexd{0, 0}) continue;
        auto [row, phase] = pauli_action(p, col);
        rotated(row) += phase * psi(col);
    }
    return std::cos(alpha) * psi + complexd{0, 1} * std::sin(alpha) * rotated;
}

// Basis changes, CNOT ladder to the last active qubit, Rz, and the inverse;
// realizes exp(i * theta * (scale/2) * P) with theta drawn from the slot.
inline void emit_gadget(Circuit& circuit, const PauliString& p, int slot, double scale) {
    std::vector<int> active;
    for (int q = 0; q < p.n_qubits(); ++q)
        if (p.letters[q] != Pauli::I) active.push_back(q);
    if (active.empty()) return;  // identity term: global phase only

    int y_count = 0;
    for (int q : active) {
        if (p.letters[q] == Pauli::X) circuit.append(Gate::h(q));
        else if (p.letters[q] == Pauli::Y) {
            circuit.append(Gate::rx(q, -std::numbers::pi / 2));
            ++y_count;
        }
    }
    for (std::size_t k = 0; k + 1 < active.size(); ++k)
        circuit.append(Gate::cnot(active[k], active[k + 1]));

    // Basis changes map P to s * Z-string with s = (-1)^#Y; Rz(phi) applies
    // exp(-i phi/2 * s * P), so phi = -theta * scale * s hits the target.
    const double sign = (y_count % 2) ? -1.0 : 1.0;
    circuit.append(Gate::rz_slot(active.back(), slot, -scale * sign));

    for (std::size_t k = active.size() - 1; k-- > 0;)
        circuit.append(Gate::cnot(active[k], active[k + 1]));
    for (int q : active) {
        if (p.letters[q] == Pauli::X) circuit.append(Gate::h(q));
        else if (p.letters[q] == Pauli::Y) circuit.append(Gate::rx(q, std::numbers::pi / 2));
    }
}

inline std::vector<MappedTerm> mapped_generator_terms(const FermionOperator& gen,
                                                      const MappingSpec& spec) {
    const PauliSum sum = map_operator(gen, spec);
    std::vector<MappedTerm> terms;
    for (const auto& [letters, coeff] : sum.terms()) {
        if (std::abs(coeff.real()) > 1e-10)
            throw std::logic_error("ansatz generator mapped with a Hermitian component");
        terms.push_back({PauliString::from_letters(letters), coeff.imag()});
    }
    std::sort(terms.begin(), terms.end(), [](const MappedTerm& a, const MappedTerm& b) {
        return a.string.to_letters() < b.string.to_letters();
    });
    return terms;
}

}  // namespace detail

/// Maps each generator, emits gadget blocks in generator order (one-step
/// first-order splitting e^A e^B), and replicates every gadget n times with
/// angles theta/n.  A single-generator ansatz whose two mapped Pauli terms
/// commute and act identically on the reference collapses to one exponential
/// (the depth-6 circuit); the rewrite is applied only after a dense check on
/// the reference state confirms it.
inline CompiledAnsatz compile_ansatz(const UccsdAnsatz& ansatz, const MappingSpec& spec,
                                     int replication, bool merge_single_generator = true) {
    spec.validate();
    if (replication < 1) throw std::invalid_argument("compile_ansatz: replication must be >= 1");
    if (spec.n_spin_orbitals != ansatz.space.n_spin_orbitals())
        throw std::invalid_argument("compile_ansatz: mapping register mismatch");

    CompiledAnsatz out;
    out.replication = replication;
    out.mapping = spec;
    out.reference = ansatz.reference;
    out.parameter_names = ansatz.parameter_names();
    out.circuit = prepare_reference(ansatz.reference, spec);
    out.circuit.parameter_names = out.parameter_names;

    const int nq = spec.n_qubits();
    const std::uint64_t dim = 1ull << nq;
    Eigen::VectorXcd ref_state = Eigen::VectorXcd::Zero(dim);
    ref_state(map_state_bits(ansatz.reference, spec)) = 1.0;

    for (std::size_t k = 0; k < ansatz.excitations.size(); ++k) {
        auto terms = detail::mapped_generator_terms(ansatz.excitations[k].generator, spec);

        if (merge_single_generator && ansatz.excitations.size() == 1 && terms.size() > 1) {
            // A lone excitation whose mapped terms pairwise commute and share
            // one flip mask keeps the reference orbit two-dimensional; the
            // whole block then collapses to a single exponential of the
            // lexicographically first term.  Only applied when the dense
            // check below confirms the equivalence.
            bool commuting = true;
            bool same_mask = true;
            auto flip_mask = [&](const PauliString& p) {
                std::uint64_t m = 0;
                for (int q = 0; q < p.n_qubits(); ++q)
                    if (p.letters[q] == Pauli::X || p.letters[q] == Pauli::Y) m |= 1ull << q;
                return m;
            };
            const std::uint64_t mask0 = flip_mask(terms[0].string);
            for (std::size_t i = 0; i < terms.size() && commuting; ++i) {
                if (flip_mask(terms[i].string) != mask0) same_mask = false;
                for (std::size_t j = i + 1; j < terms.size(); ++j)
                    if (!commute(terms[i].string, terms[j].string)) commuting = false;
            }
            if (commuting && same_mask && mask0 != 0) {
                // effective weight from the summed action on the reference
                const std::uint64_t ref_bits = map_state_bits(ansatz.reference, spec);
                complexd total{0, 0};
                for (const auto& t : terms) {
                    auto [tgt, phase] = pauli_action(t.string, ref_bits);
                    total += t.weight * phase;
                }
                auto [tgt0, phase0] = pauli_action(terms[0].string, ref_bits);
                const complexd ratio = total / phase0;
                if (std::abs(ratio.imag()) < 1e-12) {
                    detail::MappedTerm merged{terms[0].string, ratio.real()};
                    Eigen::VectorXcd tgt_state = Eigen::VectorXcd::Zero(dim);
                    tgt_state(tgt0) = 1.0;
                    bool equivalent = true;
                    for (double theta : {0.37, 1.21}) {
                        for (const Eigen::VectorXcd& probe : {ref_state, tgt_state}) {
                            Eigen::VectorXcd full = probe;
                            for (const auto& t : terms)
                                full = detail::pauli_exponential_apply(
                                    t.string, 0.5 * theta * t.weight, full);
                            Eigen::VectorXcd short_form = detail::pauli_exponential_apply(
                                merged.string, 0.5 * theta * merged.weight, probe);
                            if ((full - short_form).cwiseAbs().maxCoeff() > 1e-12)
                                equivalent = false;
                        }
                    }
                    if (equivalent) terms = {merged};
                }
            }
        }

        for (const auto& term : terms) {
            // per-gadget target: exp(i * (theta/2) * weight / n * P)
            const double scale = term.weight / static_cast<double>(replication);
            const std::size_t start = out.circuit.gates.size();
            detail::emit_gadget(out.circuit, term.string, static_cast<int>(k), scale);
            const std::size_t end = out.circuit.gates.size();

            // compile-time self-check: the emitted gadget realizes the
            // exponential exactly at a probe angle
            {
                const double probe = 0.83;
                std::vector<double> thetas(ansatz.excitations.size(), 0.0);
                thetas[k] = probe;
                Circuit gadget;
                gadget.n_qubits = nq;
                for (std::size_t g = start; g < end; ++g) gadget.append(out.circuit.gates[g]);
                const Circuit bound = gadget.bind(thetas);
                std::mt19937_64 rng(17);
                std::normal_distribution<double> gauss;
                for (int trial = 0; trial < 2; ++trial) {
                    Eigen::VectorXcd psi(dim);
                    for (std::uint64_t i = 0; i < dim; ++i) psi(i) = complexd(gauss(rng), gauss(rng));
                    psi.normalize();
                    Eigen::VectorXcd via_gates = run_statevector(bound, psi);
                    Eigen::VectorXcd direct =
                        detail::pauli_exponential_apply(term.string, 0.5 * probe * scale, psi);
                    if ((via_gates - direct).cwiseAbs().maxCoeff() > 1e-11)
                        throw std::logic_error("compile_ansatz: gadget/exponential mismatch");
                }
            }

            for (int rep = 1; rep < replication; ++rep)
                for (std::size_t g = start; g < end; ++g)
                    out.circuit.gates.push_back(out.circuit.gates[g]);
        }
    }
    return out;
}

}  // namespace dvqe
