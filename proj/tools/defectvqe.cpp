// Command-line driver: configured pipeline runs, one-shot FCI on an FCIDUMP
// file, and config validation with machine-readable diagnostics.
//
// Exit codes: 0 success, 1 domain error, 2 configuration/usage error.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "defectvqe/pipeline.hpp"

namespace {

int run_command(const std::string& config_path, const std::vector<std::string>& overrides) {
    dvqe::KeyValueConfig kv = dvqe::KeyValueConfig::parse_file(config_path);
    for (const std::string& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0)
            throw dvqe::ConfigError("--set expects key=value, got '" + o + "'");
        kv.set(o.substr(0, eq), o.substr(eq + 1));
    }
    dvqe::RunConfig cfg = dvqe::RunConfig::resolve(kv);
    dvqe::run(cfg, std::cout);
    return 0;
}

int fci_command(const std::string& fcidump_path, int electrons, std::optional<double> sz,
                const std::string& output) {
    std::ifstream in(fcidump_path);
    if (!in.good()) throw dvqe::ConfigError("cannot open FCIDUMP '" + fcidump_path + "'");
    std::vector<std::string> warnings;
    dvqe::FermionHamiltonian h = dvqe::parse_fcidump(in, &warnings);
    for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';

    dvqe::FciSolution sol = dvqe::solve_fci(h, electrons, sz);
    if (output.empty()) {
        dvqe::write_fci_csv(sol, std::cout);
    } else {
        std::ofstream out(output, std::ios::binary);
        if (!out.good()) throw std::runtime_error("cannot write '" + output + "'");
        dvqe::write_fci_csv(sol, out);
        std::cout << "wrote " << output << '\n';
    }
    return 0;
}

int validate_command(const std::string& config_path) {
    nlohmann::json out;
    out["ok"] = false;
    out["errors"] = nlohmann::json::array();
    try {
        dvqe::KeyValueConfig kv = dvqe::KeyValueConfig::parse_file(config_path);
        dvqe::RunConfig cfg = dvqe::RunConfig::resolve(kv);
        const auto diagnostics = cfg.validate();
        for (const auto& d : diagnostics)
            out["errors"].push_back({{"key", d.key}, {"message", d.message}});
        out["ok"] = diagnostics.empty();
    } catch (const dvqe::ConfigError& e) {
        out["errors"].push_back({{"key", ""}, {"message", e.what()}});
    }
    std::cout << out.dump(2) << '\n';
    return out["ok"].get<bool>() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"defectvqe: spin-defect minimum models on a simulated noisy quantum device"};
    app.require_subcommand(1);

    std::string run_config;
    std::vector<std::string> overrides;
    CLI::App* run_cmd = app.add_subcommand("run", "execute a configured pipeline run");
    run_cmd->add_option("config", run_config, "key = value run configuration file")->required();
    run_cmd->add_option("--set", overrides, "override a config key (key=value), repeatable");

    std::string fci_path, fci_output;
    int electrons = 0;
    double sz_value = 0.0;
    CLI::App* fci_cmd = app.add_subcommand("fci", "exact spectrum of an FCIDUMP Hamiltonian");
    fci_cmd->add_option("fcidump", fci_path, "FCIDUMP input file")->required();
    fci_cmd->add_option("--electrons", electrons, "electron count of the sector")->required();
    CLI::Option* sz_opt = fci_cmd->add_option("--sz", sz_value, "optional S_z of the sector");
    fci_cmd->add_option("--output", fci_output, "CSV output path (default: stdout)");

    std::string validate_path;
    CLI::App* validate_cmd =
        app.add_subcommand("validate", "check a run configuration, print JSON diagnostics");
    validate_cmd->add_option("config", validate_path, "configuration file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run_cmd->parsed()) return run_command(run_config, overrides);
        if (fci_cmd->parsed()) {
            std::optional<double> sz;
            if (sz_opt->count() > 0) sz = sz_value;
            return fci_command(fci_path, electrons, sz, fci_output);
        }
        if (validate_cmd->parsed()) return validate_command(validate_path);
    } catch (const dvqe::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
