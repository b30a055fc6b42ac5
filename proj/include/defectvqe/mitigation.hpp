#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "defectvqe/density.hpp"
#include "defectvqe/estimation.hpp"
#include "defectvqe/noise.hpp"
#include "defectvqe/rng.hpp"

namespace dvqe {

enum class CalibrationMode { per_qubit_product, full_register };

/// Readout confusion matrix with rows indexed by the prepared state and
/// columns by the measured state: C_ij = p(measure j | prepare i); every row
/// sums to one.  Folding a true distribution applies C^T; unfolding solves
/// the transposed system.
class ConfusionMatrix {
public:
    ConfusionMatrix(Eigen::MatrixXd c, CalibrationMode provenance)
        : c_(std::move(c)), provenance_(provenance) {
        if (c_.rows() != c_.cols() || c_.rows() < 2)
            throw std::invalid_argument("ConfusionMatrix: square matrix required");
        for (Eigen::Index i = 0; i < c_.rows(); ++i) {
            if (std::abs(c_.row(i).sum() - 1.0) > 1e-9)
                throw std::invalid_argument("ConfusionMatrix: rows must sum to 1");
            for (Eigen::Index j = 0; j < c_.cols(); ++j)
                if (c_(i, j) < -1e-12 || c_(i, j) > 1.0 + 1e-12)
                    throw std::invalid_argument("ConfusionMatrix: entries must be probabilities");
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(c_);
        const double smin = svd.singularValues().minCoeff();
        const double smax = svd.singularValues().maxCoeff();
        condition_ = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
        lu_.compute(c_.transpose());
    }

    const Eigen::MatrixXd& matrix() const { return c_; }
    CalibrationMode provenance() const { return provenance_; }
    double condition_number() const { return condition_; }
    int dim() const { return static_cast<int>(c_.rows()); }

    /// Measured distribution produced by ideal statistics: p_meas = C^T p.
    Eigen::VectorXd fold(const Eigen::VectorXd& p) const {
        check(p);
        return c_.transpose() * p;
    }

    /// Recovered ideal distribution: solve C^T x = p_meas, clip negative
    /// components to zero and renormalize.
    Eigen::VectorXd unfold(const Eigen::VectorXd& p_meas) const {
        check(p_meas);
        if (condition_ > 1e8)
            throw std::runtime_error("ConfusionMatrix::unfold: matrix is numerically singular");
        Eigen::VectorXd x = lu_.solve(p_meas);
        double total = 0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (x(i) < 0) x(i) = 0;
            total += x(i);
        }
        if (total <= 0)
            throw std::runtime_error("ConfusionMatrix::unfold: no probability mass left");
        return x / total;
    }

private:
    Eigen::MatrixXd c_;
    CalibrationMode provenance_;
    double condition_ = 1.0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;

    void check(const Eigen::VectorXd& p) const {
        if (p.size() != c_.rows())
            throw std::invalid_argument("ConfusionMatrix: vector dimension mismatch");
    }
};

/// Analytic confusion matrix implied by a noise model's readout rates
/// (tensor product of the per-qubit 2x2 blocks).
inline ConfusionMatrix confusion_from_noise_model(const NoiseModel& noise) {
    const int n = noise.n_qubits;
    const std::uint64_t dim = 1ull << n;
    Eigen::MatrixXd c(dim, dim);
    for (std::uint64_t prep = 0; prep < dim; ++prep)
        for (std::uint64_t meas = 0; meas < dim; ++meas) {
            double p = 1.0;
            for (int q = 0; q < n; ++q) {
                const bool b = (prep >> q) & 1ull;
                const bool m = (meas >> q) & 1ull;
                const double flip = b ? noise.readout[q].p10 : noise.readout[q].p01;
                p *= (b == m) ? 1.0 - flip : flip;
            }
            c(prep, meas) = p;
        }
    return ConfusionMatrix(std::move(c), CalibrationMode::per_qubit_product);
}

/// Measures the confusion matrix on the simulator.  Product mode runs 2N
/// single-qubit preparation circuits and tensors the 2x2 blocks; full mode
/// prepares each of the 2^N basis states with X gates and fills C row by row.
inline ConfusionMatrix calibrate(const NoiseModel& noise, int n_qubits, long shots,
                                 CalibrationMode mode, std::uint64_t seed) {
    noise.validate();
    if (shots <= 0) throw std::invalid_argument("calibrate: shots must be positive");
    MeasurementGroup diagonal_all;
    {
        PauliString all_z(n_qubits);
        for (auto& l : all_z.letters) l = Pauli::Z;
        diagonal_all.insert(all_z);
    }
    if (mode == CalibrationMode::per_qubit_product) {
        std::vector<Eigen::Matrix2d> blocks;
        for (int q = 0; q < n_qubits; ++q) {
            Eigen::Matrix2d block;
            for (int prep = 0; prep < 2; ++prep) {
                DensityState state(n_qubits);
                if (prep == 1) state.apply(Gate::x(q), &noise);
                std::mt19937_64 rng(derive_seed(seed, q, prep));
                ShotTable t = state.sample(diagonal_all, shots, &noise, rng);
                long ones = 0;
                for (const auto& [label, count] : t.counts)
                    if ((label_to_bits(label) >> q) & 1ull) ones += count;
                const double p1 = static_cast<double>(ones) / shots;
                block(prep, 0) = 1.0 - p1;
                block(prep, 1) = p1;
            }
            blocks.push_back(block);
        }
        const std::uint64_t dim = 1ull << n_qubits;
        Eigen::MatrixXd c = Eigen::MatrixXd::Ones(dim, dim);
        for (std::uint64_t i = 0; i < dim; ++i)
            for (std::uint64_t j = 0; j < dim; ++j)
                for (int q = 0; q < n_qubits; ++q)
                    c(i, j) *= blocks[q]((i >> q) & 1ull, (j >> q) & 1ull);
        return ConfusionMatrix(std::move(c), CalibrationMode::per_qubit_product);
    }

    const std::uint64_t dim = 1ull << n_qubits;
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(dim, dim);
    for (std::uint64_t prep = 0; prep < dim; ++prep) {
        DensityState state(n_qubits);
        for (int q = 0; q < n_qubits; ++q)
            if ((prep >> q) & 1ull) state.apply(Gate::x(q), &noise);
        std::mt19937_64 rng(derive_seed(seed, prep));
        ShotTable t = state.sample(diagonal_all, shots, &noise, rng);
        for (const auto& [label, count] : t.counts)
            c(prep, label_to_bits(label)) = static_cast<double>(count) / shots;
    }
    return ConfusionMatrix(std::move(c), CalibrationMode::full_register);
}

/// Readout-unfolding hook for EstimationSettings.
inline std::function<Eigen::VectorXd(const Eigen::VectorXd&)> unfold_hook(
    std::shared_ptr<const ConfusionMatrix> c) {
    return [c](const Eigen::VectorXd& p) { return c->unfold(p); };
}

// ---------------------------------------------------------------------------
// Zero-noise extrapolation.
// ---------------------------------------------------------------------------

struct ZnePoint {
    int replication = 1;
    double mean = 0.0;       // eV
    double std_error = 0.0;  // standard error of the mean
    int repetitions = 0;
};

struct ZneSeries {
    std::vector<ZnePoint> points;

    void validate() const {
        if (points.empty()) throw std::invalid_argument("ZneSeries: empty");
        std::set<int> ns;
        for (const auto& p : points) {
            if (p.replication < 1 || p.std_error < 0)
                throw std::invalid_argument("ZneSeries: bad point");
            ns.insert(p.replication);
        }
        if (ns.size() != points.size())
            throw std::invalid_argument("ZneSeries: replication factors must be distinct");
    }
};

enum class FitKind { linear, quadratic, exponential };

inline FitKind fit_kind_from_string(const std::string& s) {
    if (s == "linear") return FitKind::linear;
    if (s == "quadratic") return FitKind::quadratic;
    if (s == "exponential") return FitKind::exponential;
    throw std::invalid_argument("unknown fit kind '" + s + "'");
}

/// Fit outcome: coefficients with propagated uncertainties and the
/// zero-replication intercept.  Polynomial fits store alpha_0..alpha_p;
/// the exponential fit stores (E*, b, r) for E(n) = E* + b r^n.
struct ExtrapolationFit {
    FitKind kind = FitKind::linear;
    Eigen::VectorXd coefficients;
    Eigen::VectorXd coefficient_errors;
    double zero_noise = 0.0;
    double zero_noise_error = 0.0;
    double residual = 0.0;     // rms over the fitted points
    bool fallback_linear = false;  // exponential fit that did not converge
};

/// Unweighted polynomial least squares through the normal equations
/// L alpha = K, with the uncertainty propagation
/// sigma_alpha^2 = (A had A)(sigma_E had sigma_E), A = L^{-1} V^T.
inline ExtrapolationFit fit_polynomial(const ZneSeries& series, int degree) {
    series.validate();
    const int m = static_cast<int>(series.points.size());
    if (degree < 0 || m < degree + 1)
        throw std::invalid_argument("fit_polynomial: need at least degree+1 points");

    Eigen::MatrixXd vandermonde(m, degree + 1);
    Eigen::VectorXd e(m), sigma(m);
    for (int i = 0; i < m; ++i) {
        double pw = 1.0;
        for (int j = 0; j <= degree; ++j) {
            vandermonde(i, j) = pw;
            pw *= series.points[i].replication;
        }
        e(i) = series.points[i].mean;
        sigma(i) = series.points[i].std_error;
    }

    const Eigen::MatrixXd l = vandermonde.transpose() * vandermonde;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(l);
    if (!lu.isInvertible()) throw std::runtime_error("fit_polynomial: rank-deficient system");
    const Eigen::MatrixXd a = lu.inverse() * vandermonde.transpose();

    ExtrapolationFit fit;
    fit.kind = degree <= 1 ? FitKind::linear : FitKind::quadratic;
    fit.coefficients = a * e;
    fit.coefficient_errors =
        ((a.array() * a.array()).matrix() * (sigma.array() * sigma.array()).matrix())
            .array()
            .sqrt();
    fit.zero_noise = fit.coefficients(0);
    fit.zero_noise_error = fit.coefficient_errors(0);
    fit.residual = std::sqrt(
        (vandermonde * fit.coefficients - e).squaredNorm() / static_cast<double>(m));
    return fit;
}

/// Exponential decay toward the zero-noise limit, E(n) = E* + b r^n, fit by
/// Gauss-Newton from a log-difference initial guess.  The uncertainty on E*
/// comes from a seeded parametric bootstrap over the point errors.  A
/// non-convergent fit falls back to the linear extrapolation, flagged.
inline ExtrapolationFit fit_exponential(const ZneSeries& series, int bootstrap_resamples = 200,
                                        std::uint64_t seed = 0,
                                        std::vector<std::string>* warnings = nullptr) {
    series.validate();
    const int m = static_cast<int>(series.points.size());
    if (m < 3) throw std::invalid_argument("fit_exponential: need at least 3 points");

    std::vector<ZnePoint> pts = series.points;
    std::sort(pts.begin(), pts.end(),
              [](const ZnePoint& a, const ZnePoint& b) { return a.replication < b.replication; });

    bool monotone = true;
    for (int i = 2; i < m; ++i)
        if ((pts[i].mean - pts[i - 1].mean) * (pts[1].mean - pts[0].mean) < 0) monotone = false;
    if (!monotone && warnings)
        warnings->push_back("fit_exponential: series means are not monotone");

    auto solve = [&](const Eigen::VectorXd& values,
                     bool& converged) -> Eigen::Vector3d {
        // variable-projection start: r from neighbor differences, then the
        // linear subproblem for (E*, b)
        double r0 = 0.5;
        {
            std::vector<double> ratios;
            for (int i = 0; i + 2 < m; ++i) {
                const double d1 = values(i + 1) - values(i);
                const double d2 = values(i + 2) - values(i + 1);
                if (d1 != 0.0 && d2 / d1 > 0) ratios.push_back(d2 / d1);
            }
            if (!ratios.empty()) {
                std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2,
                                 ratios.end());
                r0 = std::clamp(ratios[ratios.size() / 2], 0.05, 0.95);
            }
        }
        auto linear_given_r = [&](double r) {
            Eigen::MatrixXd x(m, 2);
            for (int i = 0; i < m; ++i) {
                x(i, 0) = 1.0;
                x(i, 1) = std::pow(r, pts[i].replication);
            }
            return Eigen::Vector2d(
                (x.transpose() * x).ldlt().solve(x.transpose() * values));
        };
        Eigen::Vector2d eb = linear_given_r(r0);
        Eigen::Vector3d p(eb(0), eb(1), r0);

        converged = false;
        for (int it = 0; it < 100; ++it) {
            Eigen::VectorXd resid(m);
            Eigen::MatrixXd jac(m, 3);
            for (int i = 0; i < m; ++i) {
                const int n = pts[i].replication;
                const double rn = std::pow(p(2), n);
                resid(i) = values(i) - (p(0) + p(1) * rn);
                jac(i, 0) = 1.0;
                jac(i, 1) = rn;
                jac(i, 2) = p(1) * n * std::pow(p(2), n - 1);
            }
            Eigen::Vector3d step =
                (jac.transpose() * jac +
                 1e-12 * Eigen::Matrix3d::Identity())
                    .ldlt()
                    .solve(jac.transpose() * resid);
            p += step;
            if (!(p(2) > 0.0) || !(p(2) < 10.0) || !std::isfinite(p.sum())) return p;
            if (step.cwiseAbs().maxCoeff() < 1e-12) {
                converged = true;
                break;
            }
        }
        return p;
    };

    Eigen::VectorXd means(m);
    for (int i = 0; i < m; ++i) means(i) = pts[i].mean;

    // A flat series has no decay to fit; report the mean directly.
    const double spread = means.maxCoeff() - means.minCoeff();
    ExtrapolationFit fit;
    fit.kind = FitKind::exponential;
    if (spread < 1e-14) {
        fit.coefficients = Eigen::Vector3d(means.mean(), 0.0, 0.5);
        fit.coefficient_errors = Eigen::Vector3d::Zero();
        fit.zero_noise = means.mean();
        return fit;
    }

    bool converged = false;
    Eigen::Vector3d p = solve(means, converged);
    if (!converged) {
        if (warnings) warnings->push_back("fit_exponential: Gauss-Newton did not converge");
        ExtrapolationFit fallback = fit_polynomial(series, 1);
        fallback.kind = FitKind::exponential;
        fallback.fallback_linear = true;
        return fallback;
    }

    fit.coefficients = p;
    fit.zero_noise = p(0) + p(1);  // n -> 0 limit of E* + b r^n
    double rms = 0.0;
    for (int i = 0; i < m; ++i) {
        const double model = p(0) + p(1) * std::pow(p(2), pts[i].replication);
        rms += (means(i) - model) * (means(i) - model);
    }
    fit.residual = std::sqrt(rms / m);

    // parametric bootstrap for the uncertainty on the zero-noise value
    std::mt19937_64 rng(derive_seed(seed, 0xb007));
    std::normal_distribution<double> gauss;
    std::vector<double> zn;
    Eigen::Vector3d acc_err = Eigen::Vector3d::Zero();
    int used = 0;
    for (int b = 0; b < bootstrap_resamples; ++b) {
        Eigen::VectorXd resampled(m);
        for (int i = 0; i < m; ++i)
            resampled(i) = means(i) + pts[i].std_error * gauss(rng);
        bool ok = false;
        Eigen::Vector3d q = solve(resampled, ok);
        if (!ok) continue;
        zn.push_back(q(0) + q(1));
        acc_err += (q - p).cwiseProduct(q - p);
        ++used;
    }
    if (used > 1) {
        double mean_zn = 0;
        for (double z : zn) mean_zn += z;
        mean_zn /= used;
        double var = 0;
        for (double z : zn) var += (z - mean_zn) * (z - mean_zn);
        fit.zero_noise_error = std::sqrt(var / (used - 1));
        fit.coefficient_errors = (acc_err / used).cwiseSqrt();
    } else {
        fit.coefficient_errors = Eigen::Vector3d::Zero();
    }
    return fit;
}

inline ExtrapolationFit fit_series(const ZneSeries& series, FitKind kind,
                                   std::uint64_t seed = 0) {
    switch (kind) {
    case FitKind::linear: return fit_polynomial(series, 1);
    case FitKind::quadratic: return fit_polynomial(series, 2);
    case FitKind::exponential: return fit_exponential(series, 200, seed);
    }
    throw std::logic_error("fit_series: unreachable");
}

/// One ZNE experiment: an estimator evaluated at each replication factor,
/// `repetitions` independent seeded times; the per-n mean and its standard
/// error sigma/sqrt(N) feed the chosen extrapolation.
struct ZneResult {
    ZneSeries series;
    ExtrapolationFit fit;
    std::vector<std::vector<double>> raw;  // [n index][repetition]
};

inline ZneResult run_zne(const std::function<double(int replication, std::uint64_t seed)>& eval,
                         const std::vector<int>& replications, int repetitions, FitKind kind,
                         std::uint64_t seed) {
    if (replications.size() < 2)
        throw std::invalid_argument("run_zne: need at least two replication factors");
    if (repetitions < 1) throw std::invalid_argument("run_zne: repetitions must be positive");

    ZneResult out;
    for (std::size_t i = 0; i < replications.size(); ++i) {
        const int n = replications[i];
        std::vector<double> values;
        values.reserve(repetitions);
        for (int r = 0; r < repetitions; ++r)
            values.push_back(eval(n, derive_seed(seed, i, r)));
        double mean = 0;
        for (double v : values) mean += v;
        mean /= repetitions;
        double var = 0;
        for (double v : values) var += (v - mean) * (v - mean);
        const double sem =
            repetitions > 1 ? std::sqrt(var / (repetitions - 1) / repetitions) : 0.0;
        out.series.points.push_back({n, mean, sem, repetitions});
        out.raw.push_back(std::move(values));
    }
    out.fit = fit_series(out.series, kind, seed);
    return out;
}

}  // namespace dvqe
