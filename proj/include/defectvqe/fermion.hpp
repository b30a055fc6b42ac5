#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dvqe {

/// Active space of a defect minimum model, e.g. (4e, 3o).
struct ActiveSpace {
    int n_spatial = 0;
    int n_electrons = 0;
    std::optional<int> multiplicity_hint;  // target 2S+1, informational

    int n_spin_orbitals() const { return 2 * n_spatial; }

    void validate() const {
        if (n_spatial <= 0) throw std::invalid_argument("ActiveSpace: n_spatial must be positive");
        if (n_electrons <= 0 || n_electrons > 2 * n_spatial)
            throw std::invalid_argument("ActiveSpace: electron count outside 0 < n <= 2*orbitals");
    }
};

// Spin-orbital convention used throughout: spin-up spatial orbitals first
// (indices 0..n-1 in ascending energy order), then spin-down (n..2n-1).
inline int spatial_of(int spin_orbital, int n_spatial) { return spin_orbital % n_spatial; }
inline int spin_of(int spin_orbital, int n_spatial) { return spin_orbital / n_spatial; }
inline int up_orbital(int spatial, int /*n_spatial*/) { return spatial; }
inline int down_orbital(int spatial, int n_spatial) { return n_spatial + spatial; }

/// Effective Hamiltonian on an active space: one-electron integrals h1[p][q],
/// two-electron integrals (pq|rs) in chemists' notation with 8-fold symmetry,
/// and a constant core energy.  All values in eV, all real.
class FermionHamiltonian {
public:
    ActiveSpace space;
    double e_core = 0.0;

    FermionHamiltonian() = default;
    explicit FermionHamiltonian(ActiveSpace s) : space(s) {
        space.validate();
        const int n = space.n_spatial;
        h1_ = Eigen::MatrixXd::Zero(n, n);
        h2_.assign(static_cast<std::size_t>(n) * n * n * n, 0.0);
    }

    const Eigen::MatrixXd& h1() const { return h1_; }

    /// Sets h1[p][q] and its transpose.
    void set_h1(int p, int q, double v) {
        check_orb(p); check_orb(q);
        h1_(p, q) = v;
        h1_(q, p) = v;
    }

    double h2(int p, int q, int r, int s) const {
        check_orb(p); check_orb(q); check_orb(r); check_orb(s);
        return h2_[idx(p, q, r, s)];
    }

    /// Sets (pq|rs) and all seven symmetry-equivalent entries.
    void set_h2(int p, int q, int r, int s, double v) {
        check_orb(p); check_orb(q); check_orb(r); check_orb(s);
        for (auto [a, b, c, d] : equivalents(p, q, r, s)) h2_[idx(a, b, c, d)] = v;
    }

    static std::array<std::array<int, 4>, 8> equivalents(int p, int q, int r, int s) {
        return {{{p, q, r, s}, {q, p, r, s}, {p, q, s, r}, {q, p, s, r},
                 {r, s, p, q}, {s, r, p, q}, {r, s, q, p}, {s, r, q, p}}};
    }

private:
    Eigen::MatrixXd h1_;
    std::vector<double> h2_;

    std::size_t idx(int p, int q, int r, int s) const {
        const std::size_t n = space.n_spatial;
        return ((static_cast<std::size_t>(p) * n + q) * n + r) * n + s;
    }
    void check_orb(int p) const {
        if (p < 0 || p >= space.n_spatial)
            throw std::out_of_range("FermionHamiltonian: orbital index out of range");
    }
};

/// One creation or annihilation operator on a spin orbital.
struct LadderOp {
    int index = 0;
    bool create = false;
};

struct FermionTerm {
    double coeff = 0.0;
    std::vector<LadderOp> ops;  // applied right to left, as written
};

/// Real-coefficient linear combination of ladder-operator products.
struct FermionOperator {
    int n_spin_orbitals = 0;
    std::vector<FermionTerm> terms;

    explicit FermionOperator(int n = 0) : n_spin_orbitals(n) {}

    void add(double coeff, std::vector<LadderOp> ops) {
        for (const LadderOp& op : ops)
            if (op.index < 0 || op.index >= n_spin_orbitals)
                throw std::out_of_range("FermionOperator: spin-orbital index out of range");
        terms.push_back({coeff, std::move(ops)});
    }

    void add_constant(double c) { terms.push_back({c, {}}); }

    /// Hermitian conjugate: reverse each product and swap dagger flags.
    FermionOperator adjoint() const {
        FermionOperator out(n_spin_orbitals);
        out.terms.reserve(terms.size());
        for (const FermionTerm& t : terms) {
            FermionTerm a;
            a.coeff = t.coeff;
            a.ops.assign(t.ops.rbegin(), t.ops.rend());
            for (LadderOp& op : a.ops) op.create = !op.create;
            out.terms.push_back(std::move(a));
        }
        return out;
    }

    FermionOperator& operator+=(const FermionOperator& o) {
        if (o.n_spin_orbitals != n_spin_orbitals)
            throw std::invalid_argument("FermionOperator +=: size mismatch");
        terms.insert(terms.end(), o.terms.begin(), o.terms.end());
        return *this;
    }

    FermionOperator& operator*=(double s) {
        for (FermionTerm& t : terms) t.coeff *= s;
        return *this;
    }

    FermionOperator operator-(const FermionOperator& o) const {
        FermionOperator out = *this;
        FermionOperator neg = o;
        neg *= -1.0;
        out += neg;
        return out;
    }
};

/// Second-quantized form of the Hamiltonian:
///   H = e_core + sum_{pq,s} h1[pq] a+_{ps} a_{qs}
///            + 1/2 sum_{pqrs,st} (pq|rs) a+_{ps} a+_{rt} a_{st} a_{qs}.
inline FermionOperator to_fermion_operator(const FermionHamiltonian& h) {
    const int n = h.space.n_spatial;
    FermionOperator op(2 * n);
    if (h.e_core != 0.0) op.add_constant(h.e_core);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
            const double v = h.h1()(p, q);
            if (v == 0.0) continue;
            for (int spin = 0; spin < 2; ++spin) {
                const int off = spin * n;
                op.add(v, {{p + off, true}, {q + off, false}});
            }
        }
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r)
                for (int s = 0; s < n; ++s) {
                    const double v = h.h2(p, q, r, s);
                    if (v == 0.0) continue;
                    for (int sig = 0; sig < 2; ++sig)
                        for (int tau = 0; tau < 2; ++tau) {
                            const int po = sig * n, to = tau * n;
                            op.add(0.5 * v, {{p + po, true},
                                             {r + to, true},
                                             {s + to, false},
                                             {q + po, false}});
                        }
                }
    return op;
}

/// Total electron number operator over n_spin_orbitals modes.
inline FermionOperator number_operator(int n_spin_orbitals) {
    FermionOperator op(n_spin_orbitals);
    for (int j = 0; j < n_spin_orbitals; ++j)
        op.add(1.0, {{j, true}, {j, false}});
    return op;
}

inline FermionOperator number_operator(const ActiveSpace& space) {
    return number_operator(space.n_spin_orbitals());
}

// ---------------------------------------------------------------------------
// FCIDUMP (Molpro convention) interchange format.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string upper(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace detail

/// Parses an FCIDUMP stream: a `&FCI ... &END` (or `/`-terminated) header with
/// NORB/NELEC/MS2 keys, then `value i j k l` lines (1-based indices; k=l=0 for
/// h1, all-zero indices for the core energy).  Symmetry-equivalent entries are
/// merged; on a conflicting restatement the last occurrence wins and a warning
/// is recorded.  ORBSYM/ISYM are parsed and ignored.
inline FermionHamiltonian parse_fcidump(std::istream& is,
                                        std::vector<std::string>* warnings = nullptr) {
    auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back(msg);
    };
    auto fail = [](int lineno, const std::string& msg) -> void {
        throw std::runtime_error("fcidump line " + std::to_string(lineno) + ": " + msg);
    };

    std::string header;
    std::string line;
    int lineno = 0;
    bool header_done = false;
    while (!header_done && std::getline(is, line)) {
        ++lineno;
        header += ' ' + line;
        const std::string u = detail::upper(line);
        if (u.find("&END") != std::string::npos || u.find('/') != std::string::npos)
            header_done = true;
    }
    if (!header_done) throw std::runtime_error("fcidump: header not terminated by &END or /");
    const std::string uh = detail::upper(header);
    if (uh.find("&FCI") == std::string::npos)
        throw std::runtime_error("fcidump: missing &FCI header");

    auto int_key = [&](const std::string& key) -> std::optional<int> {
        auto pos = uh.find(key + "=");
        if (pos == std::string::npos) return std::nullopt;
        pos += key.size() + 1;
        std::size_t end = pos;
        while (end < uh.size() && (std::isdigit(static_cast<unsigned char>(uh[end])) ||
                                   uh[end] == '-' || uh[end] == '+'))
            ++end;
        if (end == pos) return std::nullopt;
        return std::stoi(uh.substr(pos, end - pos));
    };

    const auto norb = int_key("NORB");
    const auto nelec = int_key("NELEC");
    if (!norb || !nelec) throw std::runtime_error("fcidump: header must define NORB and NELEC");
    const auto ms2 = int_key("MS2");

    ActiveSpace space;
    space.n_spatial = *norb;
    space.n_electrons = *nelec;
    if (ms2) space.multiplicity_hint = std::abs(*ms2) + 1;
    FermionHamiltonian h(space);

    const int n = space.n_spatial;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> seen1 =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
    std::vector<bool> seen2(static_cast<std::size_t>(n) * n * n * n, false);
    bool seen_core = false;
    bool any_data = false;

    while (std::getline(is, line)) {
        ++lineno;
        std::string trimmed = line;
        if (trimmed.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(trimmed);
        std::string value_token;
        long i, j, k, l;
        if (!(ls >> value_token >> i >> j >> k >> l)) fail(lineno, "expected `value i j k l`");
        char* endp = nullptr;
        const double value = std::strtod(value_token.c_str(), &endp);
        if (endp == value_token.c_str() || *endp != '\0') {
            // Complex-valued FCIDUMPs (e.g. "(re,im)") are rejected: the
            // effective Hamiltonians handled here are real.
            fail(lineno, "non-numeric value '" + value_token + "'");
        }
        if (!std::isfinite(value)) fail(lineno, "non-finite value");
        std::string extra;
        if (ls >> extra) fail(lineno, "trailing tokens after indices");
        any_data = true;

        auto in_range = [&](long x) { return x >= 0 && x <= n; };
        if (!in_range(i) || !in_range(j) || !in_range(k) || !in_range(l))
            fail(lineno, "orbital index out of range");

        if (i == 0 && j == 0 && k == 0 && l == 0) {
            if (seen_core && h.e_core != value)
                warn("fcidump line " + std::to_string(lineno) + ": core energy restated, last wins");
            h.e_core = value;
            seen_core = true;
        } else if (k == 0 && l == 0) {
            if (i == 0 || j == 0) fail(lineno, "mixed zero/nonzero one-electron indices");
            const int p = static_cast<int>(i) - 1, q = static_cast<int>(j) - 1;
            if (seen1(p, q) && h.h1()(p, q) != value)
                warn("fcidump line " + std::to_string(lineno) + ": h1 entry restated, last wins");
            h.set_h1(p, q, value);
            seen1(p, q) = seen1(q, p) = true;
        } else if (i != 0 && j != 0 && k != 0 && l != 0) {
            const int p = static_cast<int>(i) - 1, q = static_cast<int>(j) - 1;
            const int r = static_cast<int>(k) - 1, s = static_cast<int>(l) - 1;
            const std::size_t id =
                ((static_cast<std::size_t>(p) * n + q) * n + r) * n + s;
            if (seen2[id] && h.h2(p, q, r, s) != value)
                warn("fcidump line " + std::to_string(lineno) + ": h2 entry restated, last wins");
            h.set_h2(p, q, r, s, value);
            for (auto [a, b, c, d] : FermionHamiltonian::equivalents(p, q, r, s))
                seen2[((static_cast<std::size_t>(a) * n + b) * n + c) * n + d] = true;
        } else {
            fail(lineno, "unsupported index pattern");
        }
    }
    if (!any_data) warn("fcidump: empty body after header, Hamiltonian is all zero");
    return h;
}

/// Writes the canonical FCIDUMP form: unique h2 entries, then h1, then core.
inline void emit_fcidump(const FermionHamiltonian& h, std::ostream& os) {
    const int n = h.space.n_spatial;
    os << "&FCI NORB=" << n << ",NELEC=" << h.space.n_electrons << ",MS2="
       << (h.space.multiplicity_hint ? *h.space.multiplicity_hint - 1 : 0) << ",\n";
    os << " ORBSYM=";
    for (int p = 0; p < n; ++p) os << "1,";
    os << "\n ISYM=1,\n&END\n";
    char buf[40];
    auto put = [&](double v, int i, int j, int k, int l) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        os << ' ' << buf << ' ' << i << ' ' << j << ' ' << k << ' ' << l << '\n';
    };
    std::vector<bool> done(static_cast<std::size_t>(n) * n * n * n, false);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q <= p; ++q)
            for (int r = 0; r < n; ++r)
                for (int s = 0; s <= r; ++s) {
                    const std::size_t id =
                        ((static_cast<std::size_t>(p) * n + q) * n + r) * n + s;
                    if (done[id]) continue;
                    for (auto [a, b, c, d] : FermionHamiltonian::equivalents(p, q, r, s))
                        done[((static_cast<std::size_t>(a) * n + b) * n + c) * n + d] = true;
                    const double v = h.h2(p, q, r, s);
                    if (v != 0.0) put(v, p + 1, q + 1, r + 1, s + 1);
                }
    for (int p = 0; p < n; ++p)
        for (int q = 0; q <= p; ++q)
            if (h.h1()(p, q) != 0.0) put(h.h1()(p, q), p + 1, q + 1, 0, 0);
    put(h.e_core, 0, 0, 0, 0);
}

}  // namespace dvqe
