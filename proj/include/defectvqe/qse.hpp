#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "defectvqe/ansatz.hpp"
#include "defectvqe/estimation.hpp"
#include "defectvqe/fci.hpp"
#include "defectvqe/mitigation.hpp"

namespace dvqe {

/// Expansion operator set {identity} + number- and S_z-conserving singles and
/// doubles on the reference's occupied/virtual split: applied to the
/// reference configuration they span the full fixed-sector determinant space.
struct QseOperators {
    std::vector<std::string> labels;
    std::vector<FermionOperator> fermion_ops;
    std::vector<PauliSum> mapped_ops;  // on the (possibly tapered) register
};

inline QseOperators build_qse_operators(const ActiveSpace& space, Determinant reference,
                                        const MappingSpec& spec) {
    space.validate();
    const int n = space.n_spatial;
    const int n_so = 2 * n;
    QseOperators out;

    FermionOperator identity(n_so);
    identity.add_constant(1.0);
    out.labels.push_back("1");
    out.fermion_ops.push_back(identity);

    std::vector<int> occ, vir;
    for (int j = 0; j < n_so; ++j) (reference.occupied(j) ? occ : vir).push_back(j);
    auto spin = [&](int j) { return spin_of(j, n); };

    for (int i : occ)
        for (int a : vir) {
            if (spin(i) != spin(a)) continue;
            FermionOperator op(n_so);
            op.add(1.0, {{a, true}, {i, false}});
            out.labels.push_back("s" + std::to_string(i) + "_" + std::to_string(a));
            out.fermion_ops.push_back(std::move(op));
        }
    for (std::size_t ii = 0; ii < occ.size(); ++ii)
        for (std::size_t jj = ii + 1; jj < occ.size(); ++jj)
            for (std::size_t aa = 0; aa < vir.size(); ++aa)
                for (std::size_t bb = aa + 1; bb < vir.size(); ++bb) {
                    const int i = occ[ii], j = occ[jj], a = vir[aa], b = vir[bb];
                    if (spin(i) + spin(j) != spin(a) + spin(b)) continue;
                    FermionOperator op(n_so);
                    op.add(1.0, {{a, true}, {b, true}, {i, false}, {j, false}});
                    out.labels.push_back("d" + std::to_string(i) + std::to_string(j) + "_" +
                                         std::to_string(a) + std::to_string(b));
                    out.fermion_ops.push_back(std::move(op));
                }

    out.mapped_ops.reserve(out.fermion_ops.size());
    for (const FermionOperator& op : out.fermion_ops)
        out.mapped_ops.push_back(map_operator(op, spec));
    return out;
}

/// Subspace matrices H_ij = <Psi|O_i^+ H O_j|Psi>, S_ij = <Psi|O_i^+ O_j|Psi>
/// with per-element standard errors.
struct QseProblem {
    std::vector<std::string> labels;
    Eigen::MatrixXcd h, s;
    Eigen::MatrixXd h_err, s_err;

    /// Hermitized copies (M + M^+)/2.
    Eigen::MatrixXcd h_hermitian() const { return 0.5 * (h + h.adjoint().eval()); }
    Eigen::MatrixXcd s_hermitian() const { return 0.5 * (s + s.adjoint().eval()); }
};

namespace detail {

inline ObservableEstimate measure_element(const Circuit& circuit, const PauliSum& op,
                                          const MappingSpec& spec, const NoiseModel& noise,
                                          const EstimationSettings& settings) {
    if (op.empty()) return {};
    if (settings.shots == 0)
        return estimate_observable(circuit, op, {}, spec, noise, settings);
    return estimate_observable(circuit, op, group_commuting(op), spec, noise, settings);
}

}  // namespace detail

/// Measures every matrix element of the subspace problem on the given
/// reference-preparation circuit.  Each element runs its own measurement
/// groups with a seed derived from (seed, element, which-matrix).
inline QseProblem build_qse(const Circuit& reference_circuit, const PauliSum& h_q,
                            const QseOperators& ops, const MappingSpec& spec,
                            const NoiseModel& noise, const EstimationSettings& settings) {
    const int dim = static_cast<int>(ops.mapped_ops.size());
    QseProblem out;
    out.labels = ops.labels;
    out.h = Eigen::MatrixXcd::Zero(dim, dim);
    out.s = Eigen::MatrixXcd::Zero(dim, dim);
    out.h_err = Eigen::MatrixXd::Zero(dim, dim);
    out.s_err = Eigen::MatrixXd::Zero(dim, dim);

    for (int i = 0; i < dim; ++i) {
        const PauliSum adj_i = ops.mapped_ops[i].adjoint();
        for (int j = 0; j < dim; ++j) {
            const PauliSum s_op = adj_i * ops.mapped_ops[j];
            const PauliSum h_op = adj_i * h_q * ops.mapped_ops[j];

            EstimationSettings si = settings;
            si.seed = derive_seed(settings.seed, i * dim + j, 0);
            const ObservableEstimate se =
                detail::measure_element(reference_circuit, s_op, spec, noise, si);
            si.seed = derive_seed(settings.seed, i * dim + j, 1);
            const ObservableEstimate he =
                detail::measure_element(reference_circuit, h_op, spec, noise, si);

            out.s(i, j) = se.value;
            out.h(i, j) = he.value;
            out.s_err(i, j) = std::hypot(se.std_error_re, se.std_error_im);
            out.h_err(i, j) = std::hypot(he.std_error_re, he.std_error_im);
        }
    }
    return out;
}

struct GeneralizedSolution {
    std::vector<double> energies;   // ascending
    Eigen::MatrixXcd vectors;       // columns in the original operator basis
    int retained = 0;               // dimension of the well-conditioned subspace
};

/// Canonical orthogonalization: diagonalize S, drop eigenvalues below
/// s_threshold, transform H into the retained subspace and diagonalize.
inline GeneralizedSolution solve_generalized(const Eigen::MatrixXcd& h_in,
                                             const Eigen::MatrixXcd& s_in, double s_threshold) {
    if (h_in.rows() != h_in.cols() || s_in.rows() != s_in.cols() || h_in.rows() != s_in.rows())
        throw std::invalid_argument("solve_generalized: square matrices of equal size required");
    const Eigen::MatrixXcd h = 0.5 * (h_in + h_in.adjoint().eval());
    const Eigen::MatrixXcd s = 0.5 * (s_in + s_in.adjoint().eval());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s);
    if (es.info() != Eigen::Success) throw std::runtime_error("solve_generalized: S diagonalization failed");

    std::vector<int> keep;
    for (int k = 0; k < s.rows(); ++k)
        if (es.eigenvalues()(k) >= s_threshold) keep.push_back(k);
    if (keep.empty())
        throw std::runtime_error("solve_generalized: every overlap eigenvalue fell below threshold");

    Eigen::MatrixXcd x(s.rows(), keep.size());
    for (std::size_t c = 0; c < keep.size(); ++c)
        x.col(c) = es.eigenvectors().col(keep[c]) / std::sqrt(es.eigenvalues()(keep[c]));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> hs(x.adjoint() * h * x);
    if (hs.info() != Eigen::Success) throw std::runtime_error("solve_generalized: H diagonalization failed");

    GeneralizedSolution out;
    out.retained = static_cast<int>(keep.size());
    out.energies.assign(hs.eigenvalues().data(), hs.eigenvalues().data() + keep.size());
    out.vectors = x * hs.eigenvectors();
    return out;
}

// ---------------------------------------------------------------------------
// QSE with per-element zero-noise extrapolation (Table-I style variants).
// ---------------------------------------------------------------------------

/// Extrapolation layouts: raw n=1 values, linear everywhere, and quadratic or
/// exponential on the diagonal with linear off-diagonals.
enum class QseExtrapolation { none, linear, quadratic_diagonal, exponential_diagonal };

inline const char* qse_extrapolation_name(QseExtrapolation v) {
    switch (v) {
    case QseExtrapolation::none: return "no_extrapolation";
    case QseExtrapolation::linear: return "linear";
    case QseExtrapolation::quadratic_diagonal: return "quadratic";
    case QseExtrapolation::exponential_diagonal: return "exponential";
    }
    return "?";
}

struct QseZneResult {
    std::vector<int> replications;
    std::vector<QseProblem> per_replication;  // measured matrices at each n
    // variant -> extrapolated problem
    std::vector<std::pair<QseExtrapolation, QseProblem>> variants;
};

namespace detail {

inline ZneSeries element_series(const std::vector<QseProblem>& per_n,
                                const std::vector<int>& replications, bool h_matrix, int i,
                                int j, bool imag_part) {
    ZneSeries series;
    for (std::size_t k = 0; k < per_n.size(); ++k) {
        const auto& m = h_matrix ? per_n[k].h : per_n[k].s;
        const auto& err = h_matrix ? per_n[k].h_err : per_n[k].s_err;
        const double v = imag_part ? m(i, j).imag() : m(i, j).real();
        series.points.push_back({replications[k], v, err(i, j), 0});
    }
    return series;
}

inline complexd extrapolate_element(const std::vector<QseProblem>& per_n,
                                    const std::vector<int>& replications, bool h_matrix, int i,
                                    int j, FitKind kind, std::uint64_t seed) {
    const ZneSeries re = element_series(per_n, replications, h_matrix, i, j, false);
    const ZneSeries im = element_series(per_n, replications, h_matrix, i, j, true);
    const double re0 = fit_series(re, kind, seed).zero_noise;
    // exponential fits only apply to the (real) diagonal; imaginary parts of
    // off-diagonals always extrapolate linearly
    const FitKind imag_kind = kind == FitKind::exponential ? FitKind::linear : kind;
    const double im0 = fit_series(im, imag_kind, seed).zero_noise;
    return {re0, im0};
}

}  // namespace detail

/// Measures the QSE matrices at each replication factor (averaging
/// `repetitions` independent estimates per element) and assembles the four
/// extrapolation variants.
inline QseZneResult qse_with_zne(
    const std::function<Circuit(int replication)>& circuit_at, const PauliSum& h_q,
    const QseOperators& ops, const MappingSpec& spec, const NoiseModel& noise,
    const EstimationSettings& settings, const std::vector<int>& replications, int repetitions,
    std::uint64_t seed) {
    if (replications.size() < 2)
        throw std::invalid_argument("qse_with_zne: need at least two replication factors");
    if (repetitions < 1) throw std::invalid_argument("qse_with_zne: repetitions must be positive");

    const int dim = static_cast<int>(ops.mapped_ops.size());
    QseZneResult out;
    out.replications = replications;

    for (std::size_t k = 0; k < replications.size(); ++k) {
        const Circuit circuit = circuit_at(replications[k]);
        QseProblem mean;
        mean.labels = ops.labels;
        mean.h = Eigen::MatrixXcd::Zero(dim, dim);
        mean.s = Eigen::MatrixXcd::Zero(dim, dim);
        mean.h_err = Eigen::MatrixXd::Zero(dim, dim);
        mean.s_err = Eigen::MatrixXd::Zero(dim, dim);

        Eigen::MatrixXd h2 = Eigen::MatrixXd::Zero(dim, dim);
        Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(dim, dim);
        for (int rep = 0; rep < repetitions; ++rep) {
            EstimationSettings s = settings;
            s.seed = derive_seed(seed, k, rep);
            QseProblem one = build_qse(circuit, h_q, ops, spec, noise, s);
            mean.h += one.h;
            mean.s += one.s;
            h2 += one.h.cwiseAbs2();
            s2 += one.s.cwiseAbs2();
        }
        mean.h /= double(repetitions);
        mean.s /= double(repetitions);
        if (repetitions > 1) {
            // standard error of the per-element mean across repetitions
            mean.h_err = ((h2 / repetitions - mean.h.cwiseAbs2()).cwiseMax(0.0) /
                          double(repetitions - 1))
                             .cwiseSqrt();
            mean.s_err = ((s2 / repetitions - mean.s.cwiseAbs2()).cwiseMax(0.0) /
                          double(repetitions - 1))
                             .cwiseSqrt();
        }
        out.per_replication.push_back(std::move(mean));
    }

    auto make_variant = [&](QseExtrapolation v) {
        QseProblem p;
        p.labels = ops.labels;
        p.h = Eigen::MatrixXcd::Zero(dim, dim);
        p.s = Eigen::MatrixXcd::Zero(dim, dim);
        p.h_err = Eigen::MatrixXd::Zero(dim, dim);
        p.s_err = Eigen::MatrixXd::Zero(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                if (v == QseExtrapolation::none) {
                    p.h(i, j) = out.per_replication.front().h(i, j);
                    p.s(i, j) = out.per_replication.front().s(i, j);
                    p.h_err(i, j) = out.per_replication.front().h_err(i, j);
                    p.s_err(i, j) = out.per_replication.front().s_err(i, j);
                    continue;
                }
                FitKind kind = FitKind::linear;
                if (i == j && v == QseExtrapolation::quadratic_diagonal)
                    kind = FitKind::quadratic;
                if (i == j && v == QseExtrapolation::exponential_diagonal)
                    kind = FitKind::exponential;
                p.h(i, j) = detail::extrapolate_element(out.per_replication, replications, true,
                                                        i, j, kind, derive_seed(seed, 7, i * dim + j));
                p.s(i, j) = detail::extrapolate_element(out.per_replication, replications, false,
                                                        i, j, kind, derive_seed(seed, 8, i * dim + j));
            }
        return p;
    };

    // quadratic and exponential diagonals need at least three noise levels
    std::vector<QseExtrapolation> kinds{QseExtrapolation::none, QseExtrapolation::linear};
    if (replications.size() >= 3) {
        kinds.push_back(QseExtrapolation::quadratic_diagonal);
        kinds.push_back(QseExtrapolation::exponential_diagonal);
    }
    for (QseExtrapolation v : kinds) out.variants.emplace_back(v, make_variant(v));
    return out;
}

}  // namespace dvqe
