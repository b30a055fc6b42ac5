#pragma once

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "defectvqe/config.hpp"
#include "defectvqe/estimation.hpp"
#include "defectvqe/fixtures.hpp"
#include "defectvqe/mitigation.hpp"
#include "defectvqe/parallel.hpp"
#include "defectvqe/qse.hpp"
#include "defectvqe/vqe.hpp"

namespace dvqe {

/// Everything a run needs, resolved once from the configuration.
struct ResolvedProblem {
    FermionHamiltonian hamiltonian;
    int electrons = 0;
    double sz = 0.0;
    Determinant reference;
    MappingSpec spec;
    PauliSum h_q{1};
    std::vector<MeasurementGroup> groups;
    UccsdAnsatz ansatz;
    NoiseModel noise;
    bool noisy = false;
    std::shared_ptr<const ConfusionMatrix> confusion;  // set when readout mitigation is on
};

namespace detail {

inline Determinant aufbau_reference(int n_spatial, int electrons, double sz) {
    const int twice_sz = static_cast<int>(std::llround(2.0 * sz));
    const int n_up = (electrons + twice_sz) / 2;
    const int n_down = electrons - n_up;
    if (n_up < 0 || n_down < 0 || n_up > n_spatial || n_down > n_spatial ||
        n_up - n_down != twice_sz)
        throw ConfigError("cannot build a reference determinant for this (electrons, sz)");
    Determinant d;
    for (int p = 0; p < n_up; ++p) d.occupation |= 1ull << p;
    for (int p = 0; p < n_down; ++p) d.occupation |= 1ull << (n_spatial + p);
    return d;
}

inline NoiseModel resolve_noise(const std::string& noise, int n_qubits) {
    if (noise == "none") return NoiseModel::ideal(n_qubits);
    if (noise == "casablanca") return casablanca_noise(n_qubits);
    std::ifstream f(noise);
    if (!f.good()) throw ConfigError("cannot open noise file '" + noise + "'");
    return DeviceCalibration::parse(f).to_noise_model(n_qubits);
}

}  // namespace detail

inline ResolvedProblem resolve_problem(const RunConfig& cfg) {
    ResolvedProblem p;
    if (!cfg.fixture.empty()) {
        Fixture f = build_fixture(cfg.fixture);
        p.hamiltonian = f.hamiltonian;
        p.electrons = cfg.electrons > 0 ? cfg.electrons : f.n_electrons;
        p.sz = cfg.raw.count("sz") ? cfg.sz : f.sz;
        p.reference = f.reference;
    } else {
        std::ifstream in(cfg.hamiltonian_path);
        if (!in.good())
            throw ConfigError("cannot open FCIDUMP '" + cfg.hamiltonian_path + "'");
        std::vector<std::string> warnings;
        p.hamiltonian = parse_fcidump(in, &warnings);
        p.electrons = cfg.electrons > 0 ? cfg.electrons : p.hamiltonian.space.n_electrons;
        p.sz = cfg.sz;
        p.reference = detail::aufbau_reference(p.hamiltonian.space.n_spatial, p.electrons, p.sz);
    }
    if (!cfg.reference_modes.empty()) {
        Determinant d;
        for (int m : cfg.reference_modes) {
            if (m < 0 || m >= p.hamiltonian.space.n_spin_orbitals())
                throw ConfigError("reference mode out of range");
            d.occupation |= 1ull << m;
        }
        p.reference = d;
    }
    if (p.reference.electrons() != p.electrons)
        throw ConfigError("reference determinant does not match the electron count");

    p.spec.kind = cfg.mapping;
    p.spec.n_spin_orbitals = p.hamiltonian.space.n_spin_orbitals();
    p.spec.taper = cfg.taper && p.spec.n_spin_orbitals > 2;
    if (p.spec.taper) {
        if (cfg.sector) {
            p.spec.sector_parities = cfg.sector;
        } else {
            int n_up = 0;
            for (int j = 0; j < p.hamiltonian.space.n_spatial; ++j)
                if (p.reference.occupied(j)) ++n_up;
            p.spec.sector_parities = MappingSpec::parities_for(p.electrons, n_up);
        }
    }
    p.spec.validate();

    p.h_q = map_operator(to_fermion_operator(p.hamiltonian), p.spec);
    p.groups = group_commuting(p.h_q);
    p.ansatz = build_uccsd(p.hamiltonian.space, p.reference, cfg.spin_conserving);

    p.noise = detail::resolve_noise(cfg.noise, p.spec.n_qubits());
    p.noise.seed = cfg.seed;
    p.noisy = !p.noise.is_ideal();
    if (cfg.readout_mitigation)
        p.confusion = std::make_shared<const ConfusionMatrix>(
            calibrate(p.noise, p.spec.n_qubits(), std::max<long>(cfg.shots, 8192),
                      CalibrationMode::per_qubit_product, derive_seed(cfg.seed, 0xca1)));
    return p;
}

inline EstimationSettings estimation_settings(const RunConfig& cfg, const ResolvedProblem& p) {
    EstimationSettings s;
    s.shots = cfg.shots;
    s.post_select = cfg.post_select;
    s.n_target = p.electrons;
    s.seed = cfg.seed;
    if (p.confusion) s.readout_unfold = unfold_hook(p.confusion);
    return s;
}

// ---------------------------------------------------------------------------
// Report plumbing.
// ---------------------------------------------------------------------------

struct RunArtifacts {
    std::vector<std::string> files;
    nlohmann::json report;
};

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f.good()) throw std::runtime_error("cannot write " + path.string());
    f << text;
}

inline std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

inline nlohmann::json json_matrix(const Eigen::MatrixXcd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back({{"re", m(i, j).real()}, {"im", m(i, j).imag()}});
        rows.push_back(row);
    }
    return rows;
}

inline nlohmann::json json_matrix(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

/// Levels grouped into degenerate multiplets (within tol) for gap reporting.
inline std::vector<std::vector<int>> degenerate_groups(const std::vector<double>& energies,
                                                       double tol = 1e-6) {
    std::vector<std::vector<int>> groups;
    for (int k = 0; k < static_cast<int>(energies.size()); ++k) {
        if (!groups.empty() && std::abs(energies[groups.back().back()] - energies[k]) < tol)
            groups.back().push_back(k);
        else
            groups.push_back({k});
    }
    return groups;
}

}  // namespace detail

/// Fits theta for the QSE reference state: the exact-expectation optimum
/// ("exact", avoiding error propagation from the noisy optimization) or the
/// noisy VQE tail-average ("vqe").
inline std::vector<double> qse_reference_theta(const RunConfig& cfg, const ResolvedProblem& p) {
    if (p.ansatz.parameter_count() == 0) return {};
    CompiledAnsatz compiled = compile_ansatz(p.ansatz, p.spec, 1);
    if (cfg.qse_reference == "exact") {
        EstimationSettings s;
        s.shots = 0;
        OptimizerConfig opt;
        opt.kind = OptimizerKind::nelder_mead;
        opt.max_iterations = 600;
        opt.tolerance = 1e-12;
        opt.tail_average = 1;
        VqeTrace t = run_vqe(compiled, p.h_q, p.groups, NoiseModel::ideal(p.spec.n_qubits()),
                             s, opt);
        return t.theta_bar.empty() ? std::vector<double>{} : t.theta_bar;
    }
    VqeTrace t = run_vqe(compiled, p.h_q, p.groups, p.noise, estimation_settings(cfg, p),
                         cfg.optimizer);
    return t.theta_bar;
}

// ---------------------------------------------------------------------------
// Mode drivers.  Each returns the artifacts it wrote plus a report fragment.
// ---------------------------------------------------------------------------

inline RunArtifacts run_fci(const RunConfig& cfg, const ResolvedProblem& p,
                            const std::filesystem::path& out) {
    FciSolution sol = solve_fci(p.hamiltonian, p.electrons, p.sz);
    std::ostringstream csv;
    write_fci_csv(sol, csv);
    detail::write_text(out / "fci.csv", csv.str());

    RunArtifacts a;
    a.files = {"fci.csv"};
    a.report["levels"] = sol.energies;
    a.report["ground_energy_eV"] = sol.energies.front();
    a.report["basis_size"] = sol.basis.size();
    return a;
}

inline RunArtifacts run_vqe_mode(const RunConfig& cfg, const ResolvedProblem& p,
                                 const std::filesystem::path& out) {
    CompiledAnsatz compiled = compile_ansatz(p.ansatz, p.spec, 1);
    {
        std::ostringstream net;
        compiled.circuit.netlist(net);
        detail::write_text(out / "circuit.net", net.str());
    }
    VqeTrace trace =
        run_vqe(compiled, p.h_q, p.groups, p.noise, estimation_settings(cfg, p), cfg.optimizer);
    std::ostringstream csv;
    write_vqe_csv(trace, compiled.parameter_names, csv);
    detail::write_text(out / "vqe_trace.csv", csv.str());

    RunArtifacts a;
    a.files = {"circuit.net", "vqe_trace.csv"};
    a.report["final_energy_eV"] = trace.final_energy;
    a.report["final_std_error_eV"] = trace.final_std_error;
    a.report["theta_bar"] = trace.theta_bar;
    a.report["parameter_names"] = compiled.parameter_names;
    a.report["iterations"] = trace.iterations.size();
    a.report["evaluations"] = trace.evaluations;
    a.report["converged"] = trace.converged;
    return a;
}

inline RunArtifacts run_scan(const RunConfig& cfg, const ResolvedProblem& p,
                             const std::filesystem::path& out) {
    if (p.ansatz.parameter_count() != 1)
        throw std::runtime_error("scan mode needs a single-parameter ansatz");
    CompiledAnsatz compiled = compile_ansatz(p.ansatz, p.spec, 1);
    std::vector<double> thetas;
    for (int k = 0; k < cfg.scan_points; ++k)
        thetas.push_back(-std::numbers::pi +
                         k * (2 * std::numbers::pi / cfg.scan_points));
    auto estimates = scan_theta(compiled, p.h_q, p.groups, thetas, p.noise,
                                estimation_settings(cfg, p));
    std::ostringstream csv;
    write_scan_csv(thetas, estimates, csv);
    detail::write_text(out / "scan.csv", csv.str());

    std::size_t argmin = 0;
    for (std::size_t i = 1; i < estimates.size(); ++i)
        if (estimates[i].value < estimates[argmin].value) argmin = i;

    RunArtifacts a;
    a.files = {"scan.csv"};
    a.report["theta_min_rad"] = thetas[argmin];
    a.report["energy_min_eV"] = estimates[argmin].value;
    a.report["points"] = thetas.size();
    return a;
}

inline RunArtifacts run_zne_mode(const RunConfig& cfg, const ResolvedProblem& p,
                                 const std::filesystem::path& out) {
    const std::vector<double> theta = qse_reference_theta(cfg, p);
    std::map<int, Circuit> circuits;
    for (int n : cfg.replications)
        circuits[n] = compile_ansatz(p.ansatz, p.spec, n).bound(theta);

    const EstimationSettings base = estimation_settings(cfg, p);
    auto eval = [&](int n, std::uint64_t seed) {
        EstimationSettings s = base;
        s.seed = seed;
        return estimate_energy(circuits.at(n), p.h_q, p.groups, p.spec, p.noise, s).value;
    };

    // repetitions at all levels run as one flat task list with derived seeds
    const std::size_t levels = cfg.replications.size();
    std::vector<std::vector<double>> raw(levels,
                                         std::vector<double>(cfg.repetitions, 0.0));
    parallel_for(levels * cfg.repetitions, cfg.workers, [&](std::size_t task) {
        const std::size_t level = task / cfg.repetitions;
        const std::size_t rep = task % cfg.repetitions;
        raw[level][rep] =
            eval(cfg.replications[level], derive_seed(cfg.seed, level, rep));
    });

    ZneSeries series;
    for (std::size_t level = 0; level < levels; ++level) {
        double mean = 0;
        for (double v : raw[level]) mean += v;
        mean /= cfg.repetitions;
        double var = 0;
        for (double v : raw[level]) var += (v - mean) * (v - mean);
        const double sem = cfg.repetitions > 1
                               ? std::sqrt(var / (cfg.repetitions - 1) / cfg.repetitions)
                               : 0.0;
        series.points.push_back({cfg.replications[level], mean, sem, cfg.repetitions});
    }
    ExtrapolationFit fit = fit_series(series, cfg.fit, cfg.seed);

    nlohmann::json j;
    j["theta"] = theta;
    j["series"] = nlohmann::json::array();
    for (const auto& pt : series.points)
        j["series"].push_back({{"n", pt.replication},
                               {"mean_eV", pt.mean},
                               {"std_error_eV", pt.std_error},
                               {"repetitions", pt.repetitions}});
    j["fit"] = {{"kind", cfg.fit == FitKind::linear      ? "linear"
                         : cfg.fit == FitKind::quadratic ? "quadratic"
                                                         : "exponential"},
                {"coefficients", std::vector<double>(fit.coefficients.data(),
                                                     fit.coefficients.data() +
                                                         fit.coefficients.size())},
                {"coefficient_errors",
                 std::vector<double>(fit.coefficient_errors.data(),
                                     fit.coefficient_errors.data() +
                                         fit.coefficient_errors.size())},
                {"zero_noise_eV", fit.zero_noise},
                {"zero_noise_error_eV", fit.zero_noise_error},
                {"residual", fit.residual},
                {"fallback_linear", fit.fallback_linear}};
    j["raw_energies_eV"] = raw;
    detail::write_text(out / "zne.json", j.dump(2) + "\n");

    RunArtifacts a;
    a.files = {"zne.json"};
    a.report["zero_noise_eV"] = fit.zero_noise;
    a.report["zero_noise_error_eV"] = fit.zero_noise_error;
    a.report["unmitigated_eV"] = series.points.front().mean;
    return a;
}

inline RunArtifacts run_qse(const RunConfig& cfg, const ResolvedProblem& p,
                            const std::filesystem::path& out) {
    QseOperators ops = build_qse_operators(p.hamiltonian.space, p.reference, p.spec);
    const std::vector<double> theta = qse_reference_theta(cfg, p);
    const EstimationSettings base = estimation_settings(cfg, p);
    FciSolution fci = solve_fci(p.hamiltonian, p.electrons, p.sz);
    const auto degenerate = detail::degenerate_groups(fci.energies);

    nlohmann::json j;
    j["operators"] = ops.labels;
    j["fci_levels_eV"] = fci.energies;

    auto spectrum_json = [&](const QseProblem& problem) {
        GeneralizedSolution sol =
            solve_generalized(problem.h, problem.s, cfg.s_threshold);
        nlohmann::json s;
        s["energies_eV"] = sol.energies;
        s["retained"] = sol.retained;
        std::vector<double> gaps;
        for (std::size_t k = 1; k < sol.energies.size(); ++k)
            gaps.push_back(sol.energies[k] - sol.energies.front());
        s["gaps_eV"] = gaps;
        // spurious splitting of levels that are degenerate in the exact
        // spectrum (nonzero only through noise)
        nlohmann::json split = nlohmann::json::array();
        for (const auto& group : degenerate) {
            if (group.size() < 2) continue;
            if (group.back() >= static_cast<int>(sol.energies.size())) continue;
            split.push_back({{"levels", group},
                             {"splitting_eV", sol.energies[group.back()] -
                                                  sol.energies[group.front()]}});
        }
        s["degeneracy_splitting"] = split;
        return s;
    };

    RunArtifacts a;
    const bool extrapolate = p.noisy && cfg.shots > 0 && cfg.replications.size() >= 2;
    if (!extrapolate) {
        CompiledAnsatz compiled = compile_ansatz(p.ansatz, p.spec, 1);
        QseProblem problem =
            build_qse(compiled.bound(theta), p.h_q, ops, p.spec, p.noise, base);
        j["matrices"] = {{"h", detail::json_matrix(problem.h)},
                         {"s", detail::json_matrix(problem.s)},
                         {"h_err", detail::json_matrix(problem.h_err)},
                         {"s_err", detail::json_matrix(problem.s_err)}};
        j["spectrum"] = spectrum_json(problem);
        a.report["energies_eV"] = j["spectrum"]["energies_eV"];
    } else {
        auto circuit_at = [&](int n) {
            return compile_ansatz(p.ansatz, p.spec, n).bound(theta);
        };
        QseZneResult zne = qse_with_zne(circuit_at, p.h_q, ops, p.spec, p.noise, base,
                                        cfg.replications, cfg.repetitions, cfg.seed);
        nlohmann::json variants;
        for (const auto& [kind, problem] : zne.variants) {
            nlohmann::json v;
            v["matrices"] = {{"h", detail::json_matrix(problem.h)},
                             {"s", detail::json_matrix(problem.s)}};
            v["spectrum"] = spectrum_json(problem);
            variants[qse_extrapolation_name(kind)] = v;
        }
        j["variants"] = variants;
        j["replications"] = cfg.replications;
        j["repetitions"] = cfg.repetitions;
        a.report["variants"] = {
            {"no_extrapolation",
             variants["no_extrapolation"]["spectrum"]["gaps_eV"]},
            {"linear", variants["linear"]["spectrum"]["gaps_eV"]},
            {"quadratic", variants["quadratic"]["spectrum"]["gaps_eV"]},
            {"exponential", variants["exponential"]["spectrum"]["gaps_eV"]}};
    }
    j["theta"] = theta;
    detail::write_text(out / "qse.json", j.dump(2) + "\n");
    a.files.push_back("qse.json");
    return a;
}

/// Configuration-driven driver: ingest -> map -> solve -> mitigate -> report.
/// Writes the mode artifacts plus report.json (resolved config and seeds
/// embedded; the optional timestamp stays in its own field).
inline RunArtifacts run(const RunConfig& cfg, std::ostream& log) {
    const auto diagnostics = cfg.validate();
    if (!diagnostics.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& d : diagnostics) msg += "\n  " + d.key + ": " + d.message;
        throw ConfigError(msg);
    }
    const std::filesystem::path out(cfg.output_dir);
    std::filesystem::create_directories(out);

    ResolvedProblem p = resolve_problem(cfg);
    log << "register: " << p.spec.n_qubits() << " qubits, "
        << p.h_q.size() << " Pauli terms, " << p.groups.size() << " measurement groups\n";

    RunArtifacts a;
    switch (cfg.mode) {
    case RunMode::fci: a = run_fci(cfg, p, out); break;
    case RunMode::vqe: a = run_vqe_mode(cfg, p, out); break;
    case RunMode::scan: a = run_scan(cfg, p, out); break;
    case RunMode::qse: a = run_qse(cfg, p, out); break;
    case RunMode::zne: a = run_zne_mode(cfg, p, out); break;
    }

    nlohmann::json report;
    report["config"] = cfg.to_json();
    report["seed"] = cfg.seed;
    report["results"] = a.report;
    report["artifacts"] = a.files;
    if (cfg.emit_timestamp) report["timestamp"] = detail::timestamp_utc();
    detail::write_text(out / "report.json", report.dump(2) + "\n");
    a.files.push_back("report.json");
    a.report = std::move(report);

    for (const std::string& f : a.files) log << "wrote " << (out / f).string() << '\n';
    return a;
}

}  // namespace dvqe
