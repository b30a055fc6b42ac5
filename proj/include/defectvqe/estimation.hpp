#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "defectvqe/ansatz.hpp"
#include "defectvqe/density.hpp"
#include "defectvqe/mapping.hpp"
#include "defectvqe/noise.hpp"
#include "defectvqe/pauli.hpp"
#include "defectvqe/rng.hpp"

namespace dvqe {

struct EnergyEstimate {
    double value = 0.0;
    double std_error = 0.0;
    struct GroupStat {
        int group_id = 0;
        double contribution = 0.0;
        long shots_kept = 0;
    };
    std::vector<GroupStat> per_group;
    double discarded_fraction = 0.0;
};

/// Complex-valued observable estimate (QSE matrix elements).
struct ObservableEstimate {
    complexd value{0, 0};
    double std_error_re = 0.0;
    double std_error_im = 0.0;
    long shots_kept = 0;
    double discarded_fraction = 0.0;
};

struct EstimationSettings {
    long shots = 8192;        // 0 selects the exact-expectation backend
    bool post_select = false;
    int n_target = 0;         // electron count enforced by post-selection
    std::uint64_t seed = 0;
    // Optional readout unfolding hook applied to each group's kept-count
    // probability vector (wired to mitigation::unfold by the pipeline).
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> readout_unfold;
};

/// Drops kept counts whose decoded electron number differs from n_target.
/// Only the diagonal group measures the (diagonal) number operator, so only
/// there is the filter meaningful.
inline ShotTable post_select(const ShotTable& table, const MappingSpec& spec, int n_target) {
    if (!table.group.is_diagonal)
        throw std::invalid_argument("post_select: only the diagonal group can be filtered");
    const PauliSum n_op = mapped_number_operator(spec);
    ShotTable out;
    out.group = table.group;
    out.shots = table.shots;
    out.discarded = table.discarded;
    for (const auto& [label, count] : table.counts) {
        if (electron_count_of_bits(label_to_bits(label), n_op) == n_target)
            out.counts.emplace(label, count);
        else
            out.discarded += count;
    }
    return out;
}

namespace detail {

inline double pauli_sign(const PauliString& p, std::uint64_t bits) {
    // after basis rotation every non-I letter is read from the measured bit
    double sign = 1.0;
    for (int q = 0; q < p.n_qubits(); ++q)
        if (p.letters[q] != Pauli::I && ((bits >> q) & 1ull)) sign = -sign;
    return sign;
}

struct GroupResult {
    complexd contribution{0, 0};
    double var_re = 0.0;  // variance of the group's mean contribution
    double var_im = 0.0;
    long kept = 0;
    long shots = 0;
};

// Weighted per-shot statistics of sum_{P in group} c_P <P>.  With a readout
// hook the raw counts are unfolded into corrected probabilities first and
// post-selection then zeroes the wrong-electron-count components; without it
// the count-based path applies post_select() directly.
inline GroupResult measure_group(const DensityState& state, const MeasurementGroup& group,
                                 const PauliSum& h, const MappingSpec& mapping,
                                 const NoiseModel& noise, const EstimationSettings& s,
                                 std::uint64_t group_seed) {
    std::mt19937_64 rng(group_seed);
    ShotTable table = state.sample(group, s.shots, &noise, rng);

    GroupResult r;
    r.shots = table.shots;

    if (s.readout_unfold) {
        const std::uint64_t dim = 1ull << state.n_qubits();
        Eigen::VectorXd p = Eigen::VectorXd::Zero(dim);
        for (const auto& [label, count] : table.counts)
            p(label_to_bits(label)) = static_cast<double>(count) / table.shots;
        Eigen::VectorXd corrected = s.readout_unfold(p);

        double kept_mass = 1.0;
        if (s.post_select && group.is_diagonal) {
            const PauliSum n_op = mapped_number_operator(mapping);
            kept_mass = 0.0;
            for (std::uint64_t bits = 0; bits < dim; ++bits) {
                if (electron_count_of_bits(bits, n_op) != s.n_target) corrected(bits) = 0.0;
                kept_mass += corrected(bits);
            }
            if (kept_mass <= 0)
                throw std::runtime_error("estimate: post-selection discarded every shot");
            corrected /= kept_mass;
        }
        r.kept = std::max<long>(1, std::lround(kept_mass * table.shots));

        complexd mean{0, 0};
        double second_re = 0, second_im = 0;
        for (std::uint64_t bits = 0; bits < dim; ++bits) {
            if (corrected(bits) == 0.0) continue;
            complexd v{0, 0};
            for (const PauliString& m : group.members)
                v += h.coefficient(m.to_letters()) * pauli_sign(m, bits);
            mean += corrected(bits) * v;
            second_re += corrected(bits) * v.real() * v.real();
            second_im += corrected(bits) * v.imag() * v.imag();
        }
        r.contribution = mean;
        r.var_re = std::max(0.0, second_re - mean.real() * mean.real()) / r.kept;
        r.var_im = std::max(0.0, second_im - mean.imag() * mean.imag()) / r.kept;
        return r;
    }

    if (s.post_select && group.is_diagonal) table = post_select(table, mapping, s.n_target);
    r.kept = table.kept();
    if (r.kept == 0) throw std::runtime_error("estimate: post-selection discarded every shot");

    complexd mean{0, 0};
    double second_re = 0, second_im = 0;
    for (const auto& [label, count] : table.counts) {
        const std::uint64_t bits = label_to_bits(label);
        complexd v{0, 0};
        for (const PauliString& m : group.members)
            v += h.coefficient(m.to_letters()) * pauli_sign(m, bits);
        const double w = static_cast<double>(count) / r.kept;
        mean += w * v;
        second_re += w * v.real() * v.real();
        second_im += w * v.imag() * v.imag();
    }
    r.contribution = mean;
    // binomial-style variance of the mean from the per-shot spread
    r.var_re = std::max(0.0, second_re - mean.real() * mean.real()) / r.kept;
    r.var_im = std::max(0.0, second_im - mean.imag() * mean.imag()) / r.kept;
    return r;
}

inline void check_coverage(const PauliSum& h, const std::vector<MeasurementGroup>& groups) {
    std::size_t covered = 0;
    for (const auto& g : groups)
        for (const auto& m : g.members)
            if (h.terms().count(m.to_letters())) ++covered;
    std::size_t non_identity = 0;
    for (const auto& [k, c] : h.terms())
        if (k.find_first_not_of('I') != std::string::npos) ++non_identity;
    if (covered < non_identity)
        throw std::invalid_argument("estimate: groups do not cover every non-identity term");
}

}  // namespace detail

/// Generic estimator: runs one sampled execution per group (or the exact
/// expectation backend when shots == 0) and combines member expectations with
/// their coefficients.  The identity term enters exactly, with no circuit.
inline ObservableEstimate estimate_observable(const Circuit& bound_circuit, const PauliSum& h,
                                              const std::vector<MeasurementGroup>& groups,
                                              const MappingSpec& mapping,
                                              const NoiseModel& noise,
                                              const EstimationSettings& s) {
    if (!bound_circuit.is_bound())
        throw std::invalid_argument("estimate: circuit has unbound parameters");
    noise.validate();

    ObservableEstimate est;
    if (s.shots == 0) {
        DensityState state(bound_circuit.n_qubits);
        state.run(bound_circuit, noise.is_ideal() ? nullptr : &noise);
        est.value = state.expectation_complex(h);
        return est;
    }

    detail::check_coverage(h, groups);
    DensityState state(bound_circuit.n_qubits);
    state.run(bound_circuit, &noise);

    est.value = h.identity_coefficient();
    double var_re = 0, var_im = 0;
    long kept_min = s.shots;
    long discarded = 0, total = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        bool all_identity = true;
        for (const auto& m : groups[g].members)
            if (!m.is_identity()) all_identity = false;
        if (all_identity) continue;  // constant contribution already counted

        MeasurementGroup run_group = groups[g];
        run_group.members.erase(
            std::remove_if(run_group.members.begin(), run_group.members.end(),
                           [](const PauliString& m) { return m.is_identity(); }),
            run_group.members.end());
        auto r = detail::measure_group(state, run_group, h, mapping, noise, s,
                                       derive_seed(s.seed, g));
        est.value += r.contribution;
        var_re += r.var_re;
        var_im += r.var_im;
        kept_min = std::min(kept_min, r.kept);
        discarded += r.shots - r.kept;
        total += r.shots;
    }
    est.std_error_re = std::sqrt(var_re);
    est.std_error_im = std::sqrt(var_im);
    est.shots_kept = kept_min;
    est.discarded_fraction = total > 0 ? static_cast<double>(discarded) / total : 0.0;
    return est;
}

/// Energy estimator for Hermitian h: runs the groups, applies electron-number
/// post-selection to the diagonal group when requested, and propagates the
/// per-group binomial variances.
inline EnergyEstimate estimate_energy(const Circuit& bound_circuit, const PauliSum& h,
                                      const std::vector<MeasurementGroup>& groups,
                                      const MappingSpec& mapping, const NoiseModel& noise,
                                      const EstimationSettings& s) {
    if (!h.is_hermitian())
        throw std::invalid_argument("estimate_energy: Hamiltonian must be Hermitian");
    if (!bound_circuit.is_bound())
        throw std::invalid_argument("estimate: circuit has unbound parameters");
    noise.validate();

    EnergyEstimate est;
    if (s.shots == 0) {
        DensityState state(bound_circuit.n_qubits);
        state.run(bound_circuit, noise.is_ideal() ? nullptr : &noise);
        est.value = state.expectation(h);
        return est;
    }

    detail::check_coverage(h, groups);
    DensityState state(bound_circuit.n_qubits);
    state.run(bound_circuit, &noise);

    est.value = h.identity_coefficient().real();
    double var = 0;
    long discarded = 0, total = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        bool all_identity = true;
        for (const auto& m : groups[g].members)
            if (!m.is_identity()) all_identity = false;
        if (all_identity) continue;

        MeasurementGroup run_group = groups[g];
        run_group.members.erase(
            std::remove_if(run_group.members.begin(), run_group.members.end(),
                           [](const PauliString& m) { return m.is_identity(); }),
            run_group.members.end());
        auto r = detail::measure_group(state, run_group, h, mapping, noise, s,
                                       derive_seed(s.seed, g));
        est.value += r.contribution.real();
        var += r.var_re;
        est.per_group.push_back({static_cast<int>(g), r.contribution.real(), r.kept});
        discarded += r.shots - r.kept;
        total += r.shots;
    }
    est.std_error = std::sqrt(var);
    est.discarded_fraction = total > 0 ? static_cast<double>(discarded) / total : 0.0;
    return est;
}

/// Energy scan over a theta grid for a single-parameter ansatz; one estimate
/// per grid point with an independent derived seed.
inline std::vector<EnergyEstimate> scan_theta(const CompiledAnsatz& ansatz, const PauliSum& h,
                                              const std::vector<MeasurementGroup>& groups,
                                              const std::vector<double>& thetas,
                                              const NoiseModel& noise,
                                              const EstimationSettings& settings) {
    if (ansatz.parameter_names.size() != 1)
        throw std::invalid_argument("scan_theta: single-parameter ansatz required");
    std::vector<EnergyEstimate> out;
    out.reserve(thetas.size());
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        EstimationSettings s = settings;
        s.seed = derive_seed(settings.seed, 0x5ca9, i);
        const double theta = thetas[i];
        out.push_back(
            estimate_energy(ansatz.bound({&theta, 1}), h, groups, ansatz.mapping, noise, s));
    }
    return out;
}

/// CSV: theta_rad,energy_eV,std_err_eV,discarded_fraction.
inline void write_scan_csv(const std::vector<double>& thetas,
                           const std::vector<EnergyEstimate>& estimates, std::ostream& os) {
    os << "theta_rad,energy_eV,std_err_eV,discarded_fraction\n";
    char buf[40];
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", thetas[i]);
        os << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", estimates[i].value);
        os << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", estimates[i].std_error);
        os << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", estimates[i].discarded_fraction);
        os << buf << '\n';
    }
}

}  // namespace dvqe
