#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "defectvqe/fci.hpp"
#include "defectvqe/mapping.hpp"
#include "oracles.hpp"

using namespace dvqe;
using Catch::Approx;

namespace {

MappingSpec jw(int n) {
    MappingSpec s;
    s.kind = MappingKind::jordan_wigner;
    s.n_spin_orbitals = n;
    return s;
}

MappingSpec parity(int n) {
    MappingSpec s;
    s.kind = MappingKind::parity;
    s.n_spin_orbitals = n;
    return s;
}

MappingSpec parity_tapered(int n, int n_e, int n_up) {
    MappingSpec s = parity(n);
    s.taper = true;
    s.sector_parities = MappingSpec::parities_for(n_e, n_up);
    return s;
}

std::vector<double> fock_spectrum(const FermionHamiltonian& h) {
    std::vector<double> all;
    for (int n_e = 0; n_e <= h.space.n_spin_orbitals(); ++n_e) {
        auto sol = solve_fci(h, n_e);
        all.insert(all.end(), sol.energies.begin(), sol.energies.end());
    }
    return oracle::sorted(all);
}

std::vector<double> eigenvalues(const Eigen::MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    return std::vector<double>(es.eigenvalues().data(),
                               es.eigenvalues().data() + es.eigenvalues().size());
}

}  // namespace

TEST_CASE("JW number operator on one mode") {
    FermionOperator n_op(1);
    n_op.add(1.0, {{0, true}, {0, false}});
    PauliSum p = map_operator(n_op, jw(1));
    CHECK(p.coefficient("I").real() == Approx(0.5).margin(1e-14));
    CHECK(p.coefficient("Z").real() == Approx(-0.5).margin(1e-14));
    CHECK(p.size() == 2);
}

TEST_CASE("JW hopping term maps to (XX + YY)/2") {
    FermionOperator hop(2);
    hop.add(1.0, {{0, true}, {1, false}});
    hop.add(1.0, {{1, true}, {0, false}});
    PauliSum p = map_operator(hop, jw(2));
    Eigen::MatrixXcd got = p.to_dense();
    Eigen::MatrixXcd expect = oracle::fermion_dense(hop, 2);
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(p.coefficient("XX").real() == Approx(0.5).margin(1e-14));
    CHECK(p.coefficient("YY").real() == Approx(0.5).margin(1e-14));
}

TEST_CASE("ladder operators anticommute correctly under both mappings") {
    for (auto kind : {MappingKind::jordan_wigner, MappingKind::parity}) {
        const int n = 4;
        MappingSpec spec;
        spec.kind = kind;
        spec.n_spin_orbitals = n;
        const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(1 << n, 1 << n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                FermionOperator ai(n), adj(n);
                ai.add(1.0, {{i, false}});
                adj.add(1.0, {{j, true}});
                Eigen::MatrixXcd ma = map_operator(ai, spec).to_dense();
                Eigen::MatrixXcd mc = map_operator(adj, spec).to_dense();
                Eigen::MatrixXcd anti = ma * mc + mc * ma;
                if (i == j) {
                    REQUIRE((anti - id).cwiseAbs().maxCoeff() < 1e-12);
                } else {
                    REQUIRE(anti.cwiseAbs().maxCoeff() < 1e-12);
                }
                // {a_i, a_j} = 0 as well
                FermionOperator aj(n);
                aj.add(1.0, {{j, false}});
                Eigen::MatrixXcd mb = map_operator(aj, spec).to_dense();
                REQUIRE((ma * mb + mb * ma).cwiseAbs().maxCoeff() < 1e-12);
            }
    }
}

TEST_CASE("mapped spectra reproduce the Fock-space spectrum") {
    for (std::uint64_t seed : {10ull, 20ull}) {
        for (int n_spatial : {2, 3}) {
            auto h = oracle::random_hamiltonian(n_spatial, 2, seed);
            auto reference = fock_spectrum(h);
            FermionOperator op = to_fermion_operator(h);
            for (auto kind : {MappingKind::jordan_wigner, MappingKind::parity}) {
                MappingSpec spec;
                spec.kind = kind;
                spec.n_spin_orbitals = 2 * n_spatial;
                auto got = eigenvalues(map_operator(op, spec).to_dense());
                REQUIRE(got.size() == reference.size());
                for (std::size_t k = 0; k < got.size(); ++k)
                    REQUIRE(got[k] == Approx(reference[k]).margin(1e-10));
            }
        }
    }
}

TEST_CASE("tapering keeps the declared symmetry sectors") {
    auto h = oracle::random_hamiltonian(3, 4, 77);
    FermionOperator op = to_fermion_operator(h);

    auto untapered = eigenvalues(map_operator(op, parity(6)).to_dense());
    auto tapered = eigenvalues(map_operator(op, parity_tapered(6, 4, 2)).to_dense());
    REQUIRE(tapered.size() == 16);

    // tapered spectrum is a sub-multiset of the untapered one
    std::vector<double> pool = untapered;
    for (double e : tapered) {
        auto it = std::min_element(pool.begin(), pool.end(), [&](double a, double b) {
            return std::abs(a - e) < std::abs(b - e);
        });
        REQUIRE(std::abs(*it - e) < 1e-9);
        pool.erase(it);
    }

    // and equals the union of the parity-compatible particle/spin sectors
    std::vector<double> expected;
    for (int n_up : {0, 2}) {
        for (int n_down : {0, 2}) {
            const int n_e = n_up + n_down;
            const double sz = 0.5 * (n_up - n_down);
            auto sol = solve_fci(h, n_e, sz);
            expected.insert(expected.end(), sol.energies.begin(), sol.energies.end());
        }
    }
    expected = oracle::sorted(expected);
    REQUIRE(expected.size() == tapered.size());
    for (std::size_t k = 0; k < expected.size(); ++k)
        REQUIRE(tapered[k] == Approx(expected[k]).margin(1e-9));

    // the (4e, Sz=0) eigenvalues all appear in the tapered spectrum
    auto sector = solve_fci(h, 4, 0.0).energies;
    for (double e : sector) {
        bool found = false;
        for (double t : tapered)
            if (std::abs(t - e) < 1e-9) found = true;
        REQUIRE(found);
    }
}

TEST_CASE("published tapering example reproduces exactly") {
    // NV minimum model: modes 0,1,2 spin-up and 3,4,5 spin-down, ascending
    // energy; the two open-shell determinants of the m_s=0 triplet.
    MappingSpec full = parity(6);
    MappingSpec reduced = parity_tapered(6, 4, 2);

    Determinant d1{0b101011};  // modes {0,1,3,5}
    Determinant d2{0b011101};  // modes {0,2,3,4}

    CHECK(map_state(d1, full) == "011001");
    CHECK(map_state(d2, full) == "001011");
    CHECK(map_state(d1, reduced) == "1101");
    CHECK(map_state(d2, reduced) == "0111");
}

TEST_CASE("JW basis labels equal the occupation bitmask") {
    MappingSpec spec = jw(6);
    Determinant d{0b101011};
    CHECK(map_state_bits(d, spec) == d.occupation);
    CHECK(map_state(d, spec) == "101011");
}

TEST_CASE("map_state is injective within a sector") {
    MappingSpec spec = parity_tapered(6, 4, 2);
    ActiveSpace space{3, 4, std::nullopt};
    std::set<std::string> labels;
    for (const Determinant& d : enumerate_sector(space, 4, 0.0))
        labels.insert(map_state(d, spec));
    CHECK(labels.size() == 9);
}

TEST_CASE("map_state rejects determinants outside the tapering sector") {
    MappingSpec spec = parity_tapered(6, 4, 2);
    Determinant wrong_sector{0b000111};  // 3 up electrons, odd up parity
    CHECK_THROWS_AS(map_state(wrong_sector, spec), std::invalid_argument);
}

TEST_CASE("tapering a symmetry-breaking operator is an internal error") {
    FermionOperator lone(6);
    lone.add(1.0, {{0, true}});  // changes particle number parity
    CHECK_THROWS_AS(map_operator(lone, parity_tapered(6, 4, 2)), std::logic_error);
}

TEST_CASE("electron count decodes from the tapered number operator") {
    MappingSpec spec = parity_tapered(6, 4, 2);
    CHECK(electron_count_of_bitstring("1101", spec) == 4);
    CHECK(electron_count_of_bitstring("0111", spec) == 4);

    MappingSpec plain = jw(4);
    CHECK(electron_count_of_bitstring("0000", plain) == 0);
    CHECK(electron_count_of_bitstring("1010", plain) == 2);

    // every sector determinant decodes to 4 electrons
    ActiveSpace space{3, 4, std::nullopt};
    for (const Determinant& d : enumerate_sector(space, 4, 0.0))
        REQUIRE(electron_count_of_bitstring(map_state(d, spec), spec) == 4);
}

TEST_CASE("mapping spec validation") {
    MappingSpec taper_jw = jw(4);
    taper_jw.taper = true;
    taper_jw.sector_parities = {{1, 1}};
    CHECK_THROWS_AS(taper_jw.validate(), std::invalid_argument);

    MappingSpec no_sector = parity(4);
    no_sector.taper = true;
    CHECK_THROWS_AS(no_sector.validate(), std::invalid_argument);

    MappingSpec odd_taper = parity(5);
    odd_taper.taper = true;
    odd_taper.sector_parities = {{1, 1}};
    CHECK_THROWS_AS(odd_taper.validate(), std::invalid_argument);
}
