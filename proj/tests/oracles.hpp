#pragma once

// Test-only reference implementations, kept independent of the library code
// paths they are used to check.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "defectvqe/fci.hpp"
#include "defectvqe/fermion.hpp"

namespace oracle {

using complexd = std::complex<double>;

inline Eigen::Matrix2cd pauli_matrix(char c) {
    Eigen::Matrix2cd m;
    const complexd i{0, 1};
    switch (c) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, -i, i, 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: throw std::invalid_argument("bad pauli letter");
    }
    return m;
}

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Dense matrix of a Pauli letter string (little-endian: s[0] acts on qubit 0,
// which is the least significant index bit), built by Kronecker products.
inline Eigen::MatrixXcd dense_from_letters(const std::string& letters) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
    for (auto it = letters.rbegin(); it != letters.rend(); ++it)
        m = kron(m, pauli_matrix(*it));
    return m;
}

inline std::uint64_t binom(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::uint64_t r = 1;
    for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return r;
}

// Fock-space matrix of a fermionic operator over 2^n_modes occupation states,
// using direct ladder-operator application (no qubit encoding involved).
inline Eigen::MatrixXcd fermion_dense(const dvqe::FermionOperator& op, int n_modes) {
    const std::uint64_t dim = 1ull << n_modes;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::uint64_t col = 0; col < dim; ++col) {
        for (const dvqe::FermionTerm& t : op.terms) {
            auto r = dvqe::apply_ladder_product(dvqe::Determinant{col}, t.ops);
            if (r) m(r->second.occupation, col) += t.coeff * static_cast<double>(r->first);
        }
    }
    return m;
}

// Random real symmetric-integral Hamiltonian with full 8-fold h2 symmetry.
inline dvqe::FermionHamiltonian random_hamiltonian(int n_spatial, int n_electrons,
                                                   std::uint64_t seed) {
    dvqe::ActiveSpace space;
    space.n_spatial = n_spatial;
    space.n_electrons = n_electrons;
    dvqe::FermionHamiltonian h(space);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    h.e_core = u(rng);
    for (int p = 0; p < n_spatial; ++p)
        for (int q = 0; q <= p; ++q) h.set_h1(p, q, u(rng));
    for (int p = 0; p < n_spatial; ++p)
        for (int q = 0; q <= p; ++q)
            for (int r = 0; r < n_spatial; ++r)
                for (int s = 0; s <= r; ++s) h.set_h2(p, q, r, s, 0.5 * u(rng));
    return h;
}

inline Eigen::VectorXcd random_state(int dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXcd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = complexd(g(rng), g(rng));
    v.normalize();
    return v;
}

inline std::vector<double> sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace oracle
