#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "defectvqe/mapping.hpp"
#include "defectvqe/pauli.hpp"
#include "oracles.hpp"

using namespace dvqe;
using Catch::Approx;

namespace {

// Independent greedy grouping, recomputed from scratch on letter strings.
int greedy_group_count(const PauliSum& h) {
    std::vector<std::pair<std::string, double>> terms;
    for (const auto& [k, c] : h.terms()) terms.emplace_back(k, std::abs(c));
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    auto diag = [](const std::string& s) {
        return s.find_first_not_of("IZ") == std::string::npos;
    };
    auto compatible = [](const std::string& a, const std::string& b) {
        for (std::size_t q = 0; q < a.size(); ++q)
            if (a[q] != 'I' && b[q] != 'I' && a[q] != b[q]) return false;
        return true;
    };
    std::vector<std::vector<std::string>> groups;
    std::vector<std::string> diagonal;
    for (const auto& [k, m] : terms)
        if (diag(k)) diagonal.push_back(k);
    if (!diagonal.empty()) groups.push_back(diagonal);
    const std::size_t first_open = diagonal.empty() ? 0 : 1;
    for (const auto& [k, m] : terms) {
        if (diag(k)) continue;
        bool placed = false;
        for (std::size_t g = first_open; g < groups.size() && !placed; ++g) {
            bool ok = true;
            for (const auto& member : groups[g])
                if (!compatible(k, member)) { ok = false; break; }
            if (ok) { groups[g].push_back(k); placed = true; }
        }
        if (!placed) groups.push_back({k});
    }
    return static_cast<int>(groups.size());
}

}  // namespace

TEST_CASE("pauli string products") {
    auto xi = PauliString::from_letters("XI");
    auto ii = PauliString::from_letters("II");
    auto prod = multiply(xi, ii);
    CHECK(prod.to_letters() == "XI");
    CHECK(prod.phase() == complexd(1, 0));

    auto x = PauliString::from_letters("X");
    auto y = PauliString::from_letters("Y");
    auto xy = multiply(x, y);
    CHECK(xy.to_letters() == "Z");
    CHECK(xy.phase() == complexd(0, 1));

    auto zx_zy = multiply(PauliString::from_letters("ZX"), PauliString::from_letters("ZY"));
    CHECK(zx_zy.to_letters() == "IZ");
    CHECK(zx_zy.phase() == complexd(0, 1));
    // dense 4x4 oracle for the same product
    Eigen::MatrixXcd lhs = oracle::dense_from_letters("ZX") * oracle::dense_from_letters("ZY");
    Eigen::MatrixXcd rhs = zx_zy.phase() * oracle::dense_from_letters("IZ");
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("pauli multiply matches dense products exhaustively on 2 qubits") {
    const std::string alphabet = "IXYZ";
    std::vector<std::string> strings;
    for (char a : alphabet)
        for (char b : alphabet) strings.push_back(std::string{a, b});
    for (const auto& sa : strings)
        for (const auto& sb : strings) {
            auto p = multiply(PauliString::from_letters(sa), PauliString::from_letters(sb));
            Eigen::MatrixXcd expect =
                oracle::dense_from_letters(sa) * oracle::dense_from_letters(sb);
            Eigen::MatrixXcd got = p.phase() * oracle::dense_from_letters(p.to_letters());
            REQUIRE((expect - got).cwiseAbs().maxCoeff() < 1e-14);
        }
    // associativity on a sample of triples
    std::mt19937_64 rng(11);
    for (int t = 0; t < 50; ++t) {
        const auto& a = strings[rng() % strings.size()];
        const auto& b = strings[rng() % strings.size()];
        const auto& c = strings[rng() % strings.size()];
        auto left = multiply(multiply(PauliString::from_letters(a), PauliString::from_letters(b)),
                             PauliString::from_letters(c));
        auto right = multiply(PauliString::from_letters(a),
                              multiply(PauliString::from_letters(b), PauliString::from_letters(c)));
        REQUIRE(left == right);
    }
}

TEST_CASE("pauli multiply rejects size mismatch") {
    CHECK_THROWS_AS(multiply(PauliString::from_letters("X"), PauliString::from_letters("XI")),
                    std::invalid_argument);
}

TEST_CASE("to_dense basics") {
    PauliSum number(1);
    number.add("I", 0.5);
    number.add("Z", -0.5);
    Eigen::MatrixXcd m = number.to_dense();
    CHECK(std::abs(m(0, 0)) < 1e-15);
    CHECK(std::abs(m(1, 1) - 1.0) < 1e-15);

    PauliSum x(1);
    x.add("X", 1.0);
    Eigen::MatrixXcd mx = x.to_dense();
    CHECK(std::abs(mx(0, 1) - 1.0) < 1e-15);
    CHECK(std::abs(mx(1, 0) - 1.0) < 1e-15);
    CHECK(std::abs(mx(0, 0)) < 1e-15);

    PauliSum big(11);
    big.add(std::string(11, 'I'), 1.0);
    CHECK_THROWS_AS(big.to_dense(), std::invalid_argument);
}

TEST_CASE("hermitian sums have hermitian dense matrices") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 5; ++trial) {
        PauliSum h(3);
        for (int t = 0; t < 12; ++t) {
            std::string s;
            for (int q = 0; q < 3; ++q) s.push_back("IXYZ"[rng() % 4]);
            h.add(s, u(rng));
        }
        if (h.empty()) continue;
        Eigen::MatrixXcd m = h.to_dense();
        REQUIRE((m - m.adjoint().eval()).cwiseAbs().maxCoeff() < 1e-13);
        REQUIRE(h.is_hermitian());
    }
}

TEST_CASE("group_commuting partitions and flags the diagonal group") {
    PauliSum h(2);
    h.add("ZZ", 1.0);
    h.add("IZ", 0.5);
    h.add("ZI", 0.25);
    auto groups = group_commuting(h);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].is_diagonal);
    CHECK(groups[0].members.size() == 3);

    PauliSum zx(1);
    zx.add("Z", 1.0);
    zx.add("X", 1.0);
    auto g2 = group_commuting(zx);
    REQUIRE(g2.size() == 2);

    CHECK_THROWS_AS(group_commuting(PauliSum(2)), std::invalid_argument);
}

TEST_CASE("group_commuting covers every term exactly once") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PauliSum h(4);
    for (int t = 0; t < 40; ++t) {
        std::string s;
        for (int q = 0; q < 4; ++q) s.push_back("IXYZ"[rng() % 4]);
        h.add(s, u(rng));
    }
    auto groups = group_commuting(h);
    std::map<std::string, int> seen;
    int diag_groups = 0;
    for (const auto& g : groups) {
        if (g.is_diagonal) ++diag_groups;
        for (const auto& m : g.members) {
            ++seen[m.to_letters()];
            for (const auto& m2 : g.members) REQUIRE(qubitwise_commute(m, m2));
            if (g.is_diagonal) REQUIRE(m.is_diagonal());
        }
    }
    REQUIRE(seen.size() == h.size());
    for (const auto& [k, n] : seen) {
        REQUIRE(n == 1);
        REQUIRE(h.terms().count(k) == 1);
    }
    CHECK(diag_groups <= 1);
    // every diagonal term sits in the diagonal group
    for (const auto& [k, c] : h.terms()) {
        if (PauliString::from_letters(k).is_diagonal()) {
            bool found = false;
            for (const auto& g : groups)
                if (g.is_diagonal)
                    for (const auto& m : g.members)
                        if (m.to_letters() == k) found = true;
            REQUIRE(found);
        }
    }
}

TEST_CASE("grouping of a mapped four-qubit Hamiltonian matches a greedy oracle") {
    // Defect-style (4e,3o) Hamiltonian: diagonal h1 plus Coulomb and exchange
    // integrals only.
    ActiveSpace space{3, 4, std::nullopt};
    FermionHamiltonian fh(space);
    fh.set_h1(0, 0, -4.0);
    fh.set_h1(1, 1, -2.0);
    fh.set_h1(2, 2, -2.0);
    for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) {
            fh.set_h2(p, p, q, q, 0.8 - 0.1 * (p + q));
            if (p != q) fh.set_h2(p, q, q, p, 0.1 + 0.02 * (p + q));
        }
    MappingSpec spec;
    spec.kind = MappingKind::parity;
    spec.n_spin_orbitals = 6;
    spec.taper = true;
    spec.sector_parities = MappingSpec::parities_for(4, 2);
    PauliSum hq = map_operator(to_fermion_operator(fh), spec);
    REQUIRE(hq.n_qubits() == 4);
    REQUIRE(hq.size() <= 64);
    auto groups = group_commuting(hq);
    CHECK(static_cast<int>(groups.size()) == greedy_group_count(hq));
}

TEST_CASE("energy reconstruction from groups equals the dense expectation") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PauliSum h(3);
    for (int t = 0; t < 25; ++t) {
        std::string s;
        for (int q = 0; q < 3; ++q) s.push_back("IXYZ"[rng() % 4]);
        h.add(s, u(rng));
    }
    Eigen::VectorXcd psi = oracle::random_state(8, 31);
    Eigen::MatrixXcd hd = h.to_dense();
    const double exact = (psi.adjoint() * hd * psi)(0).real();

    double rebuilt = 0.0;
    for (const auto& g : group_commuting(h)) {
        for (const auto& m : g.members) {
            Eigen::MatrixXcd pm = m.phase() * oracle::dense_from_letters(m.to_letters());
            const double expect = (psi.adjoint() * pm * psi)(0).real();
            rebuilt += h.coefficient(m.to_letters()).real() * expect;
        }
    }
    CHECK(rebuilt == Approx(exact).margin(1e-10));
}

TEST_CASE("text serialization round-trips bit-exactly") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PauliSum h(4);
    h.add("XIYZ", 0.25);
    h.add("IIII", 1.0 / 3.0);
    for (int t = 0; t < 10; ++t) {
        std::string s;
        for (int q = 0; q < 4; ++q) s.push_back("IXYZ"[rng() % 4]);
        h.add(s, u(rng));
    }
    std::ostringstream first;
    h.save(first);
    std::istringstream in(first.str());
    PauliSum back = PauliSum::load(in);
    std::ostringstream second;
    back.save(second);
    REQUIRE(first.str() == second.str());
    for (const auto& [k, c] : h.terms()) REQUIRE(back.coefficient(k) == c);

    PauliSum complex_sum(1);
    complex_sum.add("X", complexd(0, 1));
    std::ostringstream sink;
    CHECK_THROWS_AS(complex_sum.save(sink), std::invalid_argument);
}

TEST_CASE("pruning drops negligible coefficients") {
    PauliSum h(2);
    h.add("XY", 1e-13);
    CHECK(h.empty());
    h.add("XY", 1.0);
    h.add("XY", -1.0);
    CHECK(h.empty());
}
