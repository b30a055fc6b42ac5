#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "defectvqe/pipeline.hpp"
#include "oracles.hpp"

using namespace dvqe;
using Catch::Approx;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("dvqe_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

RunConfig config_from(const std::string& text) {
    std::istringstream in(text);
    return RunConfig::resolve(KeyValueConfig::parse(in));
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

}  // namespace

TEST_CASE("key-value config parsing") {
    std::istringstream in(
        "# comment\n"
        "fixture = \"triplet-nv-shape\"\n"
        "shots = 4096\n"
        "post_select = true\n"
        "sz = -0.5\n"
        "replications = [1, 2, 3]\n");
    KeyValueConfig kv = KeyValueConfig::parse(in);
    CHECK(kv.get_string("fixture") == "triplet-nv-shape");
    CHECK(kv.get_int("shots", 0) == 4096);
    CHECK(kv.get_bool("post_select", false));
    CHECK(kv.get_double("sz", 0.0) == -0.5);
    CHECK(kv.get_int_list("replications", {}) == std::vector<long>{1, 2, 3});
    CHECK(kv.get_string("missing", "fallback") == "fallback");

    std::istringstream bad("key value\n");
    CHECK_THROWS_AS(KeyValueConfig::parse(bad), ConfigError);
    CHECK_THROWS_AS(kv.get_int("fixture", 0), ConfigError);
}

TEST_CASE("config validation produces keyed diagnostics") {
    RunConfig missing = config_from("mode = \"vqe\"\n");
    auto d1 = missing.validate();
    REQUIRE_FALSE(d1.empty());
    CHECK(d1.front().key == "fixture");

    RunConfig bad_fix = config_from("mode = \"fci\"\nfixture = \"nope\"\n");
    REQUIRE_FALSE(bad_fix.validate().empty());

    RunConfig good = config_from("mode = \"fci\"\nfixture = \"hubbard1\"\n");
    CHECK(good.validate().empty());

    RunConfig bad_noise =
        config_from("mode = \"vqe\"\nfixture = \"hubbard1\"\nnoise = \"/no/such/file\"\n");
    REQUIRE_FALSE(bad_noise.validate().empty());
}

TEST_CASE("fci mode writes the expected spectrum") {
    TempDir tmp;
    RunConfig cfg = config_from("mode = \"fci\"\nfixture = \"hubbard1\"\noutput_dir = \"" +
                                tmp.path.string() + "\"\n");
    std::ostringstream log;
    run(cfg, log);
    const std::string csv = slurp(tmp.path / "fci.csv");
    CHECK(csv.rfind("level,energy_eV,gap_eV\n0,-1.5,0\n", 0) == 0);
    auto report = read_json(tmp.path / "report.json");
    CHECK(report["results"]["ground_energy_eV"].get<double>() == Approx(-1.5).margin(1e-12));
    CHECK_FALSE(report.contains("timestamp"));
}

TEST_CASE("noiseless vqe report matches the fci report") {
    TempDir tmp;
    RunConfig cfg = config_from(
        "mode = \"vqe\"\nfixture = \"triplet-nv-shape\"\nshots = 0\n"
        "optimizer = \"nelder_mead\"\nmax_iterations = 400\ntolerance = 1e-12\n"
        "output_dir = \"" + tmp.path.string() + "\"\n");
    std::ostringstream log;
    run(cfg, log);
    auto report = read_json(tmp.path / "report.json");
    const double vqe_energy = report["results"]["final_energy_eV"].get<double>();

    Fixture f = fixture_triplet_nv_shape();
    const double fci = solve_fci(f.hamiltonian, 4, 0.0).energies.front();
    CHECK(std::abs(vqe_energy - fci) < 1e-6);

    // trace csv exists with the parameter column
    const std::string trace = slurp(tmp.path / "vqe_trace.csv");
    CHECK(trace.rfind("iter,d15_24,energy_eV,stderr_eV", 0) == 0);
    // netlist artifact exists
    CHECK(fs::exists(tmp.path / "circuit.net"));
}

TEST_CASE("noiseless scan finds the published minimum location") {
    TempDir tmp;
    RunConfig cfg = config_from(
        "mode = \"scan\"\nfixture = \"triplet-nv-shape\"\nshots = 0\n"
        "scan_points = 12\noutput_dir = \"" + tmp.path.string() + "\"\n");
    std::ostringstream log;
    run(cfg, log);
    auto report = read_json(tmp.path / "report.json");
    const double theta_min = report["results"]["theta_min_rad"].get<double>();
    CHECK(theta_min == Approx(std::numbers::pi / 2).margin(2 * std::numbers::pi / 12));
}

TEST_CASE("zne mode emits series, fit and raw energies") {
    TempDir tmp;
    RunConfig cfg = config_from(
        "mode = \"zne\"\nfixture = \"triplet-nv-shape\"\nnoise = \"casablanca\"\n"
        "shots = 2048\nrepetitions = 6\nreplications = [1, 2, 3]\nseed = 5\n"
        "output_dir = \"" + tmp.path.string() + "\"\n");
    std::ostringstream log;
    run(cfg, log);
    auto zne = read_json(tmp.path / "zne.json");
    REQUIRE(zne["series"].size() == 3);
    REQUIRE(zne["raw_energies_eV"].size() == 3);
    CHECK(zne["raw_energies_eV"][0].size() == 6);
    CHECK(zne["fit"]["kind"] == "linear");
    CHECK(zne["fit"].contains("zero_noise_eV"));

    // extrapolation from increasing-noise data lands below the n=1 mean
    const double n1 = zne["series"][0]["mean_eV"].get<double>();
    const double star = zne["fit"]["zero_noise_eV"].get<double>();
    CHECK(star < n1);
}

TEST_CASE("qse mode on a noiseless register reproduces fci levels") {
    TempDir tmp;
    RunConfig cfg = config_from(
        "mode = \"qse\"\nfixture = \"triplet-nv-shape\"\nshots = 0\n"
        "output_dir = \"" + tmp.path.string() + "\"\n");
    std::ostringstream log;
    run(cfg, log);
    auto qse = read_json(tmp.path / "qse.json");
    auto energies = qse["spectrum"]["energies_eV"].get<std::vector<double>>();
    auto fci = qse["fci_levels_eV"].get<std::vector<double>>();
    REQUIRE(energies.size() == fci.size());
    for (std::size_t k = 0; k < energies.size(); ++k)
        REQUIRE(energies[k] == Approx(fci[k]).margin(1e-8));
    // noiseless degenerate pairs report (numerically) zero splitting
    for (const auto& split : qse["spectrum"]["degeneracy_splitting"])
        REQUIRE(std::abs(split["splitting_eV"].get<double>()) < 1e-8);
}

TEST_CASE("noisy qse emits the four extrapolation variants") {
    TempDir tmp;
    RunConfig cfg = config_from(
        "mode = \"qse\"\nfixture = \"triplet-nv-shape\"\nnoise = \"casablanca\"\n"
        "shots = 2048\nreplications = [1, 2, 3]\nrepetitions = 2\nseed = 9\n"
        "readout_mitigation = true\n"
        "output_dir = \"" + tmp.path.string() + "\"\n");
    std::ostringstream log;
    run(cfg, log);
    auto qse = read_json(tmp.path / "qse.json");
    for (const char* variant : {"no_extrapolation", "linear", "quadratic", "exponential"}) {
        REQUIRE(qse["variants"].contains(variant));
        REQUIRE(qse["variants"][variant]["spectrum"].contains("degeneracy_splitting"));
    }
}

TEST_CASE("seeded reruns are byte-identical") {
    TempDir tmp1, tmp2;
    auto config_text = [](const std::string& dir) {
        return "mode = \"vqe\"\nfixture = \"triplet-nv-shape\"\nnoise = \"casablanca\"\n"
               "shots = 2048\nmax_iterations = 8\nseed = 21\noutput_dir = \"" + dir + "\"\n";
    };
    std::ostringstream log;
    run(config_from(config_text(tmp1.path.string())), log);
    run(config_from(config_text(tmp2.path.string())), log);
    for (const char* f : {"vqe_trace.csv", "circuit.net"})
        REQUIRE(slurp(tmp1.path / f) == slurp(tmp2.path / f));
    // the report embeds the output path, so compare it with the path patched out
    auto r1 = read_json(tmp1.path / "report.json");
    auto r2 = read_json(tmp2.path / "report.json");
    r1["config"]["output_dir"] = r2["config"]["output_dir"] = "";
    REQUIRE(r1 == r2);
}

TEST_CASE("fcidump ingestion with an aufbau reference") {
    TempDir tmp;
    RunConfig cfg = config_from(
        "mode = \"fci\"\nhamiltonian = \"" + std::string(DVQE_SOURCE_DIR) +
        "/data/hubbard1.fcidump\"\nelectrons = 2\noutput_dir = \"" + tmp.path.string() + "\"\n");
    REQUIRE(cfg.validate().empty());
    std::ostringstream log;
    run(cfg, log);
    auto report = read_json(tmp.path / "report.json");
    CHECK(report["results"]["ground_energy_eV"].get<double>() == Approx(-1.5).margin(1e-12));
}

TEST_CASE("invalid configuration raises a config error") {
    RunConfig cfg = config_from("mode = \"vqe\"\n");
    std::ostringstream log;
    CHECK_THROWS_AS(run(cfg, log), ConfigError);
}

TEST_CASE("fixtures have the documented structure") {
    // basis sizes
    Fixture nv = build_fixture("triplet-nv-shape");
    CHECK(enumerate_sector(nv.hamiltonian.space, 4, 0.0).size() == 9);
    Fixture vv = build_fixture("triplet-vv-shape");
    CHECK(enumerate_sector(vv.hamiltonian.space, 6, 0.0).size() == 16);
    CHECK_THROWS_AS(build_fixture("nope"), std::invalid_argument);

    // the FCI ground state is the two-determinant recoupling state
    for (const Fixture& f : {nv, vv}) {
        FciSolution sol = solve_fci(f.hamiltonian, f.n_electrons, f.sz);
        Determinant partner = f.reference;
        const int n = f.hamiltonian.space.n_spatial;
        // swap the open-shell pair: top two spatial orbitals exchange spins
        partner.occupation ^= (1ull << (n - 1)) | (1ull << (n - 2));
        partner.occupation ^= (1ull << (2 * n - 1)) | (1ull << (2 * n - 2));
        int i_ref = -1, i_partner = -1;
        for (std::size_t k = 0; k < sol.basis.size(); ++k) {
            if (sol.basis[k] == f.reference) i_ref = static_cast<int>(k);
            if (sol.basis[k] == partner) i_partner = static_cast<int>(k);
        }
        REQUIRE(i_ref >= 0);
        REQUIRE(i_partner >= 0);
        CHECK(std::abs(std::abs(sol.states(i_ref, 0)) - 1 / std::sqrt(2.0)) < 1e-10);
        CHECK(std::abs(std::abs(sol.states(i_partner, 0)) - 1 / std::sqrt(2.0)) < 1e-10);
        for (std::size_t k = 0; k < sol.basis.size(); ++k) {
            if (static_cast<int>(k) == i_ref || static_cast<int>(k) == i_partner) continue;
            REQUIRE(std::abs(sol.states(k, 0)) < 1e-8);
        }
        // triplet: degenerate with the m_s = +1 component
        FciSolution up = solve_fci(f.hamiltonian, f.n_electrons, 1.0);
        CHECK(up.energies.front() == Approx(sol.energies.front()).margin(1e-9));
    }
}

TEST_CASE("parallel workers do not change results") {
    TempDir tmp1, tmp2;
    auto config_text = [](const std::string& dir, int workers) {
        return "mode = \"zne\"\nfixture = \"triplet-nv-shape\"\nnoise = \"casablanca\"\n"
               "shots = 1024\nrepetitions = 4\nreplications = [1, 2]\nseed = 3\n"
               "workers = " + std::to_string(workers) + "\noutput_dir = \"" + dir + "\"\n";
    };
    std::ostringstream log;
    run(config_from(config_text(tmp1.path.string(), 1)), log);
    run(config_from(config_text(tmp2.path.string(), 3)), log);
    auto z1 = read_json(tmp1.path / "zne.json");
    auto z2 = read_json(tmp2.path / "zne.json");
    REQUIRE(z1["raw_energies_eV"] == z2["raw_energies_eV"]);
}
