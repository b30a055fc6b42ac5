#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "defectvqe/circuit.hpp"
#include "defectvqe/mapping.hpp"
#include "defectvqe/noise.hpp"
#include "defectvqe/pauli.hpp"

namespace dvqe {

/// Bitstring counts from one measured circuit; keys are basis labels
/// (most-significant qubit first).  shots = kept counts + discarded.
struct ShotTable {
    MeasurementGroup group;
    std::map<std::string, long> counts;
    long shots = 0;
    long discarded = 0;

    long kept() const { return shots - discarded; }
};

namespace detail {

inline Eigen::Matrix2cd gate_unitary(GateKind kind, double angle) {
    Eigen::Matrix2cd u;
    const complexd i{0, 1};
    switch (kind) {
    case GateKind::X: u << 0, 1, 1, 0; break;
    case GateKind::H: u << 1, 1, 1, -1; u /= std::numbers::sqrt2; break;
    case GateKind::Rx: {
        const double c = std::cos(angle / 2), s = std::sin(angle / 2);
        u << c, -i * s, -i * s, c;
        break;
    }
    case GateKind::Rz: {
        u << std::exp(-i * (angle / 2)), 0, 0, std::exp(i * (angle / 2));
        break;
    }
    default: throw std::logic_error("gate_unitary: not a one-qubit gate");
    }
    return u;
}

}  // namespace detail

/// Noiseless gate action on a statevector (bit q of the index = qubit q).
inline void apply_to_statevector(Eigen::VectorXcd& psi, const Gate& g) {
    if (!g.bound()) throw std::invalid_argument("apply_to_statevector: unbound parameter");
    const std::uint64_t dim = psi.size();
    if (g.kind == GateKind::Cnot) {
        const std::uint64_t cb = 1ull << g.q0, tb = 1ull << g.q1;
        for (std::uint64_t i = 0; i < dim; ++i) {
            if (!(i & cb) || (i & tb)) continue;
            std::swap(psi(i), psi(i | tb));
        }
        return;
    }
    const Eigen::Matrix2cd u = detail::gate_unitary(g.kind, g.angle);
    const std::uint64_t bit = 1ull << g.q0;
    for (std::uint64_t i = 0; i < dim; ++i) {
        if (i & bit) continue;
        const complexd a = psi(i), b = psi(i | bit);
        psi(i) = u(0, 0) * a + u(0, 1) * b;
        psi(i | bit) = u(1, 0) * a + u(1, 1) * b;
    }
}

inline Eigen::VectorXcd run_statevector(const Circuit& c, Eigen::VectorXcd psi) {
    if ((1ll << c.n_qubits) != psi.size())
        throw std::invalid_argument("run_statevector: dimension mismatch");
    for (const Gate& g : c.gates) apply_to_statevector(psi, g);
    return psi;
}

/// Density-matrix register. rho indices use bit q = qubit q; gates update
/// rho in place as U rho U^dagger followed by the configured noise channel.
class DensityState {
public:
    explicit DensityState(int n_qubits) : n_(n_qubits), dim_(1ull << n_qubits) {
        if (n_qubits < 1 || n_qubits > 12)
            throw std::invalid_argument("DensityState: unsupported register size");
        rho_ = Eigen::MatrixXcd::Zero(dim_, dim_);
        rho_(0, 0) = 1.0;
    }

    static DensityState zero_state(int n_qubits) { return DensityState(n_qubits); }

    static DensityState from_pure(const Eigen::VectorXcd& psi) {
        const int n = static_cast<int>(std::llround(std::log2(double(psi.size()))));
        if ((1ll << n) != psi.size())
            throw std::invalid_argument("DensityState: state dimension must be a power of two");
        DensityState s(n);
        s.rho_ = psi * psi.adjoint();
        return s;
    }

    int n_qubits() const { return n_; }
    const Eigen::MatrixXcd& rho() const { return rho_; }

    double trace() const { return rho_.trace().real(); }
    double purity() const { return (rho_ * rho_).trace().real(); }

    void apply(const Gate& g, const NoiseModel* noise = nullptr) {
        if (!g.bound()) throw std::invalid_argument("DensityState::apply: unbound parameter");
        if (g.kind == GateKind::Cnot) {
            apply_cnot(g.q0, g.q1);
            if (noise) {
                if (noise->p2 > 0) depolarize2(g.q0, g.q1, noise->p2);
                if (noise->damping) { damp(g.q0, *noise, noise->gate_time_2q_us);
                                      damp(g.q1, *noise, noise->gate_time_2q_us); }
            }
        } else {
            apply_1q(detail::gate_unitary(g.kind, g.angle), g.q0);
            if (noise) {
                if (noise->p1[g.q0] > 0) depolarize1(g.q0, noise->p1[g.q0]);
                if (noise->damping) damp(g.q0, *noise, noise->gate_time_1q_us);
            }
        }
    }

    void run(const Circuit& c, const NoiseModel* noise = nullptr) {
        if (c.n_qubits != n_) throw std::invalid_argument("DensityState::run: register mismatch");
        if (noise && noise->n_qubits != n_)
            throw std::invalid_argument("DensityState::run: noise model register mismatch");
        for (const Gate& g : c.gates) apply(g, noise);
    }

    /// Tr(rho * obs); imaginary residue beyond numerical noise is an error
    /// for the Hermitian observables this overload expects.
    double expectation(const PauliSum& obs) const {
        const complexd v = expectation_complex(obs);
        if (std::abs(v.imag()) > 1e-8)
            throw std::invalid_argument("DensityState::expectation: non-Hermitian observable");
        return v.real();
    }

    complexd expectation_complex(const PauliSum& obs) const {
        if (obs.n_qubits() != n_)
            throw std::invalid_argument("DensityState::expectation: register mismatch");
        complexd total{0, 0};
        for (const auto& [letters, coeff] : obs.terms()) {
            const PauliString p = PauliString::from_letters(letters);
            complexd tr{0, 0};
            for (std::uint64_t i = 0; i < dim_; ++i) {
                auto [pi, phase] = pauli_action(p, i);
                tr += phase * rho_(i, pi);
            }
            total += coeff * tr;
        }
        return total;
    }

    /// Appends the group's basis rotations (H for X, Rx(pi/2) for Y), samples
    /// bitstrings from the rotated diagonal and applies per-qubit readout
    /// flips.  Deterministic for a fixed generator state.
    ShotTable sample(const MeasurementGroup& group, long shots, const NoiseModel* noise,
                     std::mt19937_64& rng) const {
        if (shots <= 0) throw std::invalid_argument("DensityState::sample: shots must be positive");
        DensityState rotated = *this;
        if (!group.basis_rotation.empty()) {
            if (static_cast<int>(group.basis_rotation.size()) != n_)
                throw std::invalid_argument("DensityState::sample: group register mismatch");
            for (int q = 0; q < n_; ++q) {
                if (group.basis_rotation[q] == Pauli::X)
                    rotated.apply(Gate::h(q), noise);
                else if (group.basis_rotation[q] == Pauli::Y)
                    rotated.apply(Gate::rx(q, std::numbers::pi / 2), noise);
            }
        }

        std::vector<double> cumulative(dim_);
        double acc = 0;
        for (std::uint64_t i = 0; i < dim_; ++i) {
            acc += std::max(0.0, rotated.rho_(i, i).real());
            cumulative[i] = acc;
        }
        if (acc <= 0) throw std::runtime_error("DensityState::sample: vanishing trace");

        std::uniform_real_distribution<double> uni(0.0, acc);
        std::uniform_real_distribution<double> flip(0.0, 1.0);
        ShotTable table;
        table.group = group;
        table.shots = shots;
        for (long s = 0; s < shots; ++s) {
            const double r = uni(rng);
            const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), r);
            std::uint64_t bits = static_cast<std::uint64_t>(it - cumulative.begin());
            if (bits >= dim_) bits = dim_ - 1;
            if (noise) {
                for (int q = 0; q < n_; ++q) {
                    const bool one = (bits >> q) & 1ull;
                    const double p = one ? noise->readout[q].p10 : noise->readout[q].p01;
                    if (p > 0 && flip(rng) < p) bits ^= 1ull << q;
                }
            }
            ++table.counts[bits_to_label(bits, n_)];
        }
        return table;
    }

private:
    int n_;
    std::uint64_t dim_;
    Eigen::MatrixXcd rho_;

    void apply_1q(const Eigen::Matrix2cd& u, int t) {
        const std::uint64_t bit = 1ull << t;
        // rows: rho <- U rho
        for (std::uint64_t i = 0; i < dim_; ++i) {
            if (i & bit) continue;
            for (std::uint64_t j = 0; j < dim_; ++j) {
                const complexd r0 = rho_(i, j), r1 = rho_(i | bit, j);
                rho_(i, j) = u(0, 0) * r0 + u(0, 1) * r1;
                rho_(i | bit, j) = u(1, 0) * r0 + u(1, 1) * r1;
            }
        }
        // columns: rho <- rho U^dagger
        for (std::uint64_t j = 0; j < dim_; ++j) {
            if (j & bit) continue;
            for (std::uint64_t i = 0; i < dim_; ++i) {
                const complexd c0 = rho_(i, j), c1 = rho_(i, j | bit);
                rho_(i, j) = c0 * std::conj(u(0, 0)) + c1 * std::conj(u(0, 1));
                rho_(i, j | bit) = c0 * std::conj(u(1, 0)) + c1 * std::conj(u(1, 1));
            }
        }
    }

    void apply_cnot(int control, int target) {
        const std::uint64_t cb = 1ull << control, tb = 1ull << target;
        auto flipped = [&](std::uint64_t i) { return (i & cb) ? (i ^ tb) : i; };
        // permutation conjugation: swap rows then columns
        for (std::uint64_t i = 0; i < dim_; ++i) {
            const std::uint64_t fi = flipped(i);
            if (fi <= i) continue;
            rho_.row(i).swap(rho_.row(fi));
        }
        for (std::uint64_t j = 0; j < dim_; ++j) {
            const std::uint64_t fj = flipped(j);
            if (fj <= j) continue;
            rho_.col(j).swap(rho_.col(fj));
        }
    }

    // Replace qubit t by the maximally mixed state: I/2 (x) Tr_t(rho).
    Eigen::MatrixXcd mix_qubit(int t) const {
        const std::uint64_t bit = 1ull << t;
        Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim_, dim_);
        for (std::uint64_t i = 0; i < dim_; ++i)
            for (std::uint64_t j = 0; j < dim_; ++j) {
                if ((i & bit) != (j & bit)) continue;
                const complexd avg =
                    0.5 * (rho_(i & ~bit, j & ~bit) + rho_(i | bit, j | bit));
                out(i, j) = avg;
            }
        return out;
    }

    Eigen::MatrixXcd mix_pair(int a, int b) const {
        const std::uint64_t ba = 1ull << a, bb = 1ull << b;
        Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim_, dim_);
        for (std::uint64_t i = 0; i < dim_; ++i)
            for (std::uint64_t j = 0; j < dim_; ++j) {
                if ((i & ba) != (j & ba) || (i & bb) != (j & bb)) continue;
                complexd avg{0, 0};
                for (int m = 0; m < 4; ++m) {
                    std::uint64_t ii = i & ~(ba | bb), jj = j & ~(ba | bb);
                    if (m & 1) { ii |= ba; jj |= ba; }
                    if (m & 2) { ii |= bb; jj |= bb; }
                    avg += rho_(ii, jj);
                }
                out(i, j) = 0.25 * avg;
            }
        return out;
    }

    // Depolarizing with p = full-replacement probability, so p = 1 leaves the
    // touched qubits maximally mixed: rho -> (1-p) rho + p [I/2 (x) Tr_t rho].
    void depolarize1(int t, double p) { rho_ = (1.0 - p) * rho_ + p * mix_qubit(t); }

    void depolarize2(int a, int b, double p) { rho_ = (1.0 - p) * rho_ + p * mix_pair(a, b); }

    void apply_kraus_1q(const std::vector<Eigen::Matrix2cd>& ks, int t) {
        DensityState scratch = *this;
        Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(dim_, dim_);
        for (const auto& k : ks) {
            scratch.rho_ = rho_;
            scratch.apply_1q(k, t);
            sum += scratch.rho_;
        }
        rho_ = sum;
    }

    // Amplitude damping for T1 plus the extra pure dephasing needed so that
    // off-diagonals decay by exp(-t/T2) overall.
    void damp(int q, const NoiseModel& noise, double duration_us) {
        const double t1 = noise.t1_us[q], t2 = noise.t2_us[q];
        const double gamma = 1.0 - std::exp(-duration_us / t1);
        Eigen::Matrix2cd k0, k1;
        k0 << 1, 0, 0, std::sqrt(1.0 - gamma);
        k1 << 0, std::sqrt(gamma), 0, 0;
        apply_kraus_1q({k0, k1}, q);

        const double dephase = 1.0 / t2 - 0.5 / t1;
        if (dephase > 0) {
            const double f = std::exp(-duration_us * dephase);
            const double flip = 0.5 * (1.0 - f);
            Eigen::Matrix2cd z;
            z << 1, 0, 0, -1;
            Eigen::Matrix2cd a = std::sqrt(1.0 - flip) * Eigen::Matrix2cd::Identity();
            Eigen::Matrix2cd b = std::sqrt(flip) * z;
            apply_kraus_1q({a, b}, q);
        }
    }
};

}  // namespace dvqe
