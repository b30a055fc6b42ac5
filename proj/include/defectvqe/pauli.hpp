#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dvqe {

using complexd = std::complex<double>;

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

inline char pauli_char(Pauli p) { return "IXYZ"[static_cast<int>(p)]; }

inline Pauli pauli_from_char(char c) {
    switch (c) {
    case 'I': return Pauli::I;
    case 'X': return Pauli::X;
    case 'Y': return Pauli::Y;
    case 'Z': return Pauli::Z;
    default: throw std::invalid_argument(std::string("invalid Pauli letter '") + c + "'");
    }
}

/// Tensor product of single-qubit Paulis with a tracked fourth-root-of-unity
/// phase.  letters[q] acts on qubit q; phase = i^phase_power.
struct PauliString {
    std::vector<Pauli> letters;
    int phase_power = 0;  // phase = i^phase_power, normalized to {0,1,2,3}

    PauliString() = default;
    explicit PauliString(int n_qubits) : letters(n_qubits, Pauli::I) {}

    /// Parse from a letter string, little-endian: s[0] acts on qubit 0.
    static PauliString from_letters(const std::string& s, int phase_power = 0) {
        PauliString p;
        p.letters.reserve(s.size());
        for (char c : s) p.letters.push_back(pauli_from_char(c));
        p.phase_power = ((phase_power % 4) + 4) % 4;
        return p;
    }

    int n_qubits() const { return static_cast<int>(letters.size()); }

    complexd phase() const {
        static const complexd table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        return table[((phase_power % 4) + 4) % 4];
    }

    bool is_identity() const {
        return std::all_of(letters.begin(), letters.end(), [](Pauli p) { return p == Pauli::I; });
    }

    /// True when only I and Z letters appear (measurable in the computational basis).
    bool is_diagonal() const {
        return std::all_of(letters.begin(), letters.end(),
                           [](Pauli p) { return p == Pauli::I || p == Pauli::Z; });
    }

    /// Letter string, little-endian (qubit 0 leftmost).
    std::string to_letters() const {
        std::string s;
        s.reserve(letters.size());
        for (Pauli p : letters) s.push_back(pauli_char(p));
        return s;
    }

    bool operator==(const PauliString& o) const {
        return letters == o.letters && ((phase_power - o.phase_power) % 4 + 4) % 4 == 0;
    }
};

namespace detail {

// Single-qubit product table: a*b = phase * c, phase in {1, i, -i}.
// Encoded as (letter, phase_power) with phase = i^power.
inline std::pair<Pauli, int> pauli_product(Pauli a, Pauli b) {
    if (a == Pauli::I) return {b, 0};
    if (b == Pauli::I) return {a, 0};
    if (a == b) return {Pauli::I, 0};
    const int ia = static_cast<int>(a), ib = static_cast<int>(b);
    // XY=iZ, YZ=iX, ZX=iY; reversed order picks up -i.
    const Pauli c = static_cast<Pauli>(6 - ia - ib);
    const bool forward = (ib - ia + 3) % 3 == 1;
    return {c, forward ? 1 : 3};
}

}  // namespace detail

/// Operator product a*b with tracked phase.
inline PauliString multiply(const PauliString& a, const PauliString& b) {
    if (a.n_qubits() != b.n_qubits())
        throw std::invalid_argument("PauliString multiply: qubit count mismatch");
    PauliString out(a.n_qubits());
    out.phase_power = a.phase_power + b.phase_power;
    for (int q = 0; q < a.n_qubits(); ++q) {
        auto [c, ph] = detail::pauli_product(a.letters[q], b.letters[q]);
        out.letters[q] = c;
        out.phase_power += ph;
    }
    out.phase_power = ((out.phase_power % 4) + 4) % 4;
    return out;
}

/// Qubit-wise commutation: at every position the letters are equal or one is I.
inline bool qubitwise_commute(const PauliString& a, const PauliString& b) {
    for (int q = 0; q < a.n_qubits(); ++q) {
        const Pauli pa = a.letters[q], pb = b.letters[q];
        if (pa != Pauli::I && pb != Pauli::I && pa != pb) return false;
    }
    return true;
}

/// Full commutation: even number of anticommuting positions.
inline bool commute(const PauliString& a, const PauliString& b) {
    int anti = 0;
    for (int q = 0; q < a.n_qubits(); ++q) {
        const Pauli pa = a.letters[q], pb = b.letters[q];
        if (pa != Pauli::I && pb != Pauli::I && pa != pb) ++anti;
    }
    return anti % 2 == 0;
}

/// Action on a computational basis state: P|index> = coeff |out_index>.
/// Bit q of the index is qubit q.
inline std::pair<std::uint64_t, complexd> pauli_action(const PauliString& p, std::uint64_t index) {
    std::uint64_t out = index;
    int power = p.phase_power;
    for (int q = 0; q < p.n_qubits(); ++q) {
        const bool bit = (index >> q) & 1u;
        switch (p.letters[q]) {
        case Pauli::I: break;
        case Pauli::X: out ^= (1ull << q); break;
        case Pauli::Y:
            out ^= (1ull << q);
            power += bit ? 3 : 1;  // Y|0>=i|1>, Y|1>=-i|0>
            break;
        case Pauli::Z:
            if (bit) power += 2;
            break;
        }
    }
    static const complexd table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    return {out, table[power % 4]};
}

/// Weighted sum of phase-normalized Pauli strings.  Coefficients are complex
/// in general; Hermitian sums carry real coefficients.  Terms whose magnitude
/// falls below prune_threshold are dropped.
class PauliSum {
public:
    explicit PauliSum(int n_qubits, double prune_threshold = 1e-12)
        : n_qubits_(n_qubits), prune_(prune_threshold) {}

    int n_qubits() const { return n_qubits_; }
    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }
    double prune_threshold() const { return prune_; }

    /// Add coeff * p; p's phase is absorbed into the coefficient.
    void add(const PauliString& p, complexd coeff) {
        if (p.n_qubits() != n_qubits_)
            throw std::invalid_argument("PauliSum::add: qubit count mismatch");
        coeff *= p.phase();
        auto key = p.to_letters();
        auto it = terms_.find(key);
        if (it == terms_.end()) {
            if (std::abs(coeff) > prune_) terms_.emplace(std::move(key), coeff);
        } else {
            it->second += coeff;
            if (std::abs(it->second) <= prune_) terms_.erase(it);
        }
    }

    void add(const std::string& letters, complexd coeff) {
        add(PauliString::from_letters(letters), coeff);
    }

    complexd coefficient(const std::string& letters) const {
        auto it = terms_.find(letters);
        return it == terms_.end() ? complexd{0, 0} : it->second;
    }

    /// Terms keyed by little-endian letter string (deterministic order).
    const std::map<std::string, complexd>& terms() const { return terms_; }

    PauliSum& operator+=(const PauliSum& o) {
        if (o.n_qubits_ != n_qubits_) throw std::invalid_argument("PauliSum +=: qubit mismatch");
        for (const auto& [k, c] : o.terms_) add(PauliString::from_letters(k), c);
        return *this;
    }

    PauliSum& operator*=(complexd s) {
        for (auto it = terms_.begin(); it != terms_.end();) {
            it->second *= s;
            if (std::abs(it->second) <= prune_) it = terms_.erase(it);
            else ++it;
        }
        return *this;
    }

    friend PauliSum operator*(const PauliSum& a, const PauliSum& b) {
        if (a.n_qubits_ != b.n_qubits_) throw std::invalid_argument("PauliSum *: qubit mismatch");
        PauliSum out(a.n_qubits_, std::min(a.prune_, b.prune_));
        for (const auto& [ka, ca] : a.terms_)
            for (const auto& [kb, cb] : b.terms_) {
                PauliString p = multiply(PauliString::from_letters(ka), PauliString::from_letters(kb));
                out.add(p, ca * cb);
            }
        return out;
    }

    /// Hermitian conjugate (conjugate coefficients; strings are Hermitian).
    PauliSum adjoint() const {
        PauliSum out(n_qubits_, prune_);
        for (const auto& [k, c] : terms_) out.terms_.emplace(k, std::conj(c));
        return out;
    }

    bool is_hermitian(double tol = 1e-10) const {
        for (const auto& [k, c] : terms_)
            if (std::abs(c.imag()) > tol) return false;
        return true;
    }

    complexd identity_coefficient() const {
        return coefficient(std::string(n_qubits_, 'I'));
    }

    /// Dense 2^N x 2^N matrix; bit q of the row/column index is qubit q.
    Eigen::MatrixXcd to_dense(int max_qubits = 10) const {
        if (n_qubits_ > max_qubits)
            throw std::invalid_argument("PauliSum::to_dense: register exceeds dense limit");
        const std::uint64_t dim = 1ull << n_qubits_;
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
        for (const auto& [k, c] : terms_) {
            const PauliString p = PauliString::from_letters(k);
            for (std::uint64_t col = 0; col < dim; ++col) {
                auto [row, ph] = pauli_action(p, col);
                m(row, col) += c * ph;
            }
        }
        return m;
    }

    /// One term per line, `<coeff> <letters>`, lines sorted by letter string.
    /// Coefficients print at 17 significant digits, so real sums round-trip
    /// bit-exactly.  Non-real sums are not serializable in this format.
    void save(std::ostream& os) const {
        for (const auto& [k, c] : terms_) {
            if (std::abs(c.imag()) > 1e-12)
                throw std::invalid_argument("PauliSum::save: non-real coefficient for " + k);
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", c.real());
            os << buf << ' ' << k << '\n';
        }
    }

    static PauliSum load(std::istream& is) {
        std::vector<std::pair<std::string, double>> rows;
        std::string line;
        int lineno = 0;
        std::size_t width = 0;
        while (std::getline(is, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ls(line);
            double coeff;
            std::string letters;
            if (!(ls >> coeff >> letters))
                throw std::runtime_error("PauliSum::load: malformed line " + std::to_string(lineno));
            if (width == 0) width = letters.size();
            if (letters.size() != width)
                throw std::runtime_error("PauliSum::load: inconsistent width at line " +
                                         std::to_string(lineno));
            rows.emplace_back(letters, coeff);
        }
        if (rows.empty()) throw std::runtime_error("PauliSum::load: empty input");
        PauliSum out(static_cast<int>(width));
        for (auto& [k, c] : rows) out.add(PauliString::from_letters(k), c);
        return out;
    }

private:
    int n_qubits_;
    double prune_;
    std::map<std::string, complexd> terms_;
};

/// Set of qubit-wise commuting strings measurable from one circuit execution.
/// basis_rotation[q] names the single-qubit basis (Z when untouched); the
/// diagonal group holds every I/Z-only string.
struct MeasurementGroup {
    std::vector<PauliString> members;
    std::vector<Pauli> basis_rotation;
    bool is_diagonal = false;

    /// Compatible iff every non-I letter lands on an unpinned basis slot or
    /// matches the pinned letter (equivalent to qubit-wise commutation with
    /// all members, but O(N)).
    bool accepts(const PauliString& p) const {
        if (basis_rotation.empty()) return true;
        for (int q = 0; q < p.n_qubits(); ++q) {
            const Pauli need = p.letters[q];
            if (need == Pauli::I) continue;
            if (basis_pinned_[q] && basis_rotation[q] != need) return false;
        }
        return true;
    }

    void insert(const PauliString& p) {
        if (basis_rotation.empty()) {
            basis_rotation.assign(p.n_qubits(), Pauli::Z);
            basis_pinned_.assign(p.n_qubits(), false);
        }
        for (int q = 0; q < p.n_qubits(); ++q) {
            if (p.letters[q] == Pauli::I) continue;
            basis_rotation[q] = p.letters[q];
            basis_pinned_[q] = true;
        }
        members.push_back(p);
        is_diagonal = std::all_of(members.begin(), members.end(),
                                  [](const PauliString& m) { return m.is_diagonal(); });
    }

private:
    std::vector<bool> basis_pinned_;
};

/// Greedy qubit-wise-commuting grouping.  Terms are taken in descending |g|
/// order (letters break ties); the diagonal group is seeded first with every
/// I/Z-only string so number post-selection always has a home.
inline std::vector<MeasurementGroup> group_commuting(const PauliSum& h) {
    if (h.empty()) throw std::invalid_argument("group_commuting: empty sum");
    std::vector<std::pair<std::string, complexd>> terms(h.terms().begin(), h.terms().end());
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
        const double ma = std::abs(a.second), mb = std::abs(b.second);
        if (ma != mb) return ma > mb;
        return a.first < b.first;
    });

    std::vector<MeasurementGroup> groups;
    MeasurementGroup diagonal;
    bool have_diagonal = false;
    for (const auto& [k, c] : terms) {
        PauliString p = PauliString::from_letters(k);
        if (p.is_diagonal()) {
            diagonal.insert(p);
            have_diagonal = true;
        }
    }
    if (have_diagonal) groups.push_back(std::move(diagonal));

    for (const auto& [k, c] : terms) {
        PauliString p = PauliString::from_letters(k);
        if (p.is_diagonal()) continue;
        bool placed = false;
        // The diagonal group stays diagonal; off-diagonal terms go elsewhere.
        for (std::size_t g = have_diagonal ? 1 : 0; g < groups.size(); ++g) {
            if (groups[g].accepts(p)) {
                groups[g].insert(p);
                placed = true;
                break;
            }
        }
        if (!placed) {
            MeasurementGroup fresh;
            fresh.insert(p);
            groups.push_back(std::move(fresh));
        }
    }
    return groups;
}

}  // namespace dvqe
