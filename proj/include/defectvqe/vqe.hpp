#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "defectvqe/estimation.hpp"
#include "defectvqe/rng.hpp"

namespace dvqe {

enum class OptimizerKind { spsa, nelder_mead };

/// SPSA gain schedules a_k = a/(k+1+A)^alpha, c_k = c/(k+1)^gamma; the
/// defaults follow the usual guidelines, since no values are published for
/// these systems.
struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::spsa;
    int max_iterations = 250;
    double a = 0.2;
    double c = 0.1;
    double alpha = 0.602;
    double gamma = 0.101;
    double big_a = 0.0;
    std::uint64_t seed = 0;
    double tolerance = 1e-8;  // convergence threshold on parameter drift
    int tail_average = 10;    // iterates averaged into the final parameter

    void validate() const {
        if (max_iterations < 1) throw std::invalid_argument("optimizer: max_iterations < 1");
        if (a <= 0 || c <= 0) throw std::invalid_argument("optimizer: gains must be positive");
        if (tolerance <= 0) throw std::invalid_argument("optimizer: tolerance must be positive");
        if (tail_average < 1) throw std::invalid_argument("optimizer: tail_average < 1");
    }
};

/// Objective: parameters -> (value, std_error); the evaluation index feeds
/// per-call seed derivation so runs are reproducible.
using Objective =
    std::function<std::pair<double, double>(std::span<const double>, std::uint64_t eval_index)>;

struct VqeIteration {
    std::vector<double> theta;
    double energy = 0.0;
    double std_error = 0.0;
};

struct VqeTrace {
    std::vector<VqeIteration> iterations;
    std::vector<double> theta_bar;  // tail average of the iterates
    double final_energy = 0.0;
    double final_std_error = 0.0;
    bool converged = false;
    int evaluations = 0;
};

namespace detail {

inline std::vector<double> tail_mean(const std::vector<VqeIteration>& its, int k) {
    const std::size_t dim = its.back().theta.size();
    std::vector<double> mean(dim, 0.0);
    const std::size_t take = std::min<std::size_t>(k, its.size());
    for (std::size_t i = its.size() - take; i < its.size(); ++i)
        for (std::size_t d = 0; d < dim; ++d) mean[d] += its[i].theta[d];
    for (double& m : mean) m /= static_cast<double>(take);
    return mean;
}

inline VqeTrace run_spsa(const Objective& f, std::vector<double> theta,
                         const OptimizerConfig& opt) {
    std::mt19937_64 rng(derive_seed(opt.seed, 0x5b5a));
    std::bernoulli_distribution coin(0.5);

    VqeTrace trace;
    std::uint64_t evals = 0;
    bool converged = false;
    for (int k = 0; k < opt.max_iterations && !converged; ++k) {
        const double ak = opt.a / std::pow(k + 1 + opt.big_a, opt.alpha);
        const double ck = opt.c / std::pow(k + 1, opt.gamma);

        std::vector<double> delta(theta.size());
        for (double& d : delta) d = coin(rng) ? 1.0 : -1.0;

        std::vector<double> plus = theta, minus = theta;
        for (std::size_t d = 0; d < theta.size(); ++d) {
            plus[d] += ck * delta[d];
            minus[d] -= ck * delta[d];
        }
        const auto [ep, sp] = f(plus, evals++);
        const auto [em, sm] = f(minus, evals++);

        trace.iterations.push_back(
            {theta, 0.5 * (ep + em), 0.5 * std::sqrt(sp * sp + sm * sm)});

        double drift = 0.0;
        for (std::size_t d = 0; d < theta.size(); ++d) {
            const double step = ak * (ep - em) / (2.0 * ck) * delta[d];
            theta[d] -= step;
            drift = std::max(drift, std::abs(step));
        }
        if (drift < opt.tolerance) converged = true;
    }
    trace.converged = converged;
    trace.evaluations = static_cast<int>(evals);
    return trace;
}

// Standard Nelder-Mead simplex (reflection 1, expansion 2, contraction 1/2,
// shrink 1/2), deterministic.  Stands in for the paper's derivative-free
// optimizer choice.
inline VqeTrace run_nelder_mead(const Objective& f, std::vector<double> x0,
                                const OptimizerConfig& opt) {
    const std::size_t n = x0.size();
    std::uint64_t evals = 0;
    auto eval = [&](const std::vector<double>& x) { return f(x, evals++); };

    std::vector<std::vector<double>> simplex{x0};
    for (std::size_t d = 0; d < n; ++d) {
        auto v = x0;
        v[d] += 0.25;
        simplex.push_back(v);
    }
    std::vector<std::pair<double, double>> value(simplex.size());
    for (std::size_t i = 0; i < simplex.size(); ++i) value[i] = eval(simplex[i]);

    VqeTrace trace;
    bool converged = false;
    for (int it = 0; it < opt.max_iterations && !converged; ++it) {
        std::vector<std::size_t> order(simplex.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return value[a].first < value[b].first; });
        const std::size_t best = order.front(), worst = order.back();
        const std::size_t second_worst = order[order.size() - 2];

        trace.iterations.push_back({simplex[best], value[best].first, value[best].second});

        double spread = 0.0;
        for (std::size_t d = 0; d < n; ++d)
            spread = std::max(spread,
                              std::abs(simplex[worst][d] - simplex[best][d]));
        if (spread < opt.tolerance) { converged = true; break; }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < simplex.size(); ++i) {
            if (i == worst) continue;
            for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[i][d];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](double t) {
            std::vector<double> x(n);
            for (std::size_t d = 0; d < n; ++d)
                x[d] = centroid[d] + t * (simplex[worst][d] - centroid[d]);
            return x;
        };

        const auto reflected = blend(-1.0);
        const auto fr = eval(reflected);
        if (fr.first < value[best].first) {
            const auto expanded = blend(-2.0);
            const auto fe = eval(expanded);
            if (fe.first < fr.first) { simplex[worst] = expanded; value[worst] = fe; }
            else { simplex[worst] = reflected; value[worst] = fr; }
        } else if (fr.first < value[second_worst].first) {
            simplex[worst] = reflected;
            value[worst] = fr;
        } else {
            const auto contracted = blend(0.5);
            const auto fc = eval(contracted);
            if (fc.first < value[worst].first) { simplex[worst] = contracted; value[worst] = fc; }
            else {
                for (std::size_t i = 0; i < simplex.size(); ++i) {
                    if (i == best) continue;
                    for (std::size_t d = 0; d < n; ++d)
                        simplex[i][d] = 0.5 * (simplex[i][d] + simplex[best][d]);
                    value[i] = eval(simplex[i]);
                }
            }
        }
    }
    trace.converged = converged;
    trace.evaluations = static_cast<int>(evals);
    return trace;
}

}  // namespace detail

/// Minimizes the objective from theta0.  The returned parameter is the tail
/// average of the SPSA iterates (the last-iterations average); the final
/// energy is a fresh evaluation there.
inline VqeTrace minimize(const Objective& f, std::vector<double> theta0,
                         const OptimizerConfig& opt) {
    opt.validate();
    if (theta0.empty()) {
        // no variational freedom: a single evaluation is the whole story
        VqeTrace trace;
        const auto [e, s] = f({}, 0);
        trace.iterations.push_back({{}, e, s});
        trace.final_energy = e;
        trace.final_std_error = s;
        trace.converged = true;
        trace.evaluations = 1;
        return trace;
    }
    VqeTrace trace = opt.kind == OptimizerKind::spsa ? detail::run_spsa(f, theta0, opt)
                                                     : detail::run_nelder_mead(f, theta0, opt);
    trace.theta_bar = detail::tail_mean(trace.iterations, opt.tail_average);
    const auto [e, s] = f(trace.theta_bar, static_cast<std::uint64_t>(trace.evaluations));
    trace.final_energy = e;
    trace.final_std_error = s;
    ++trace.evaluations;
    return trace;
}

/// VQE driver: energy objective from the compiled ansatz and the estimation
/// settings; per-evaluation seeds derive from (settings.seed, eval index).
inline VqeTrace run_vqe(const CompiledAnsatz& ansatz, const PauliSum& h,
                        const std::vector<MeasurementGroup>& groups, const NoiseModel& noise,
                        const EstimationSettings& settings, const OptimizerConfig& opt,
                        std::vector<double> theta0 = {}) {
    if (theta0.empty()) theta0.assign(ansatz.parameter_names.size(), 0.0);
    if (theta0.size() != ansatz.parameter_names.size())
        throw std::invalid_argument("run_vqe: theta0 size mismatch");
    Objective objective = [&](std::span<const double> theta, std::uint64_t eval) {
        EstimationSettings s = settings;
        s.seed = derive_seed(settings.seed, 0xe5c1, eval);
        const EnergyEstimate est =
            estimate_energy(ansatz.bound(theta), h, groups, ansatz.mapping, noise, s);
        return std::make_pair(est.value, est.std_error);
    };
    return minimize(objective, std::move(theta0), opt);
}

/// CSV: iter,theta...,energy_eV,stderr_eV.
inline void write_vqe_csv(const VqeTrace& trace, const std::vector<std::string>& names,
                          std::ostream& os) {
    os << "iter";
    for (const auto& n : names) os << ',' << n;
    os << ",energy_eV,stderr_eV\n";
    char buf[40];
    for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
        os << i;
        for (double t : trace.iterations[i].theta) {
            std::snprintf(buf, sizeof(buf), "%.17g", t);
            os << ',' << buf;
        }
        std::snprintf(buf, sizeof(buf), "%.17g", trace.iterations[i].energy);
        os << ',' << buf;
        std::snprintf(buf, sizeof(buf), "%.17g", trace.iterations[i].std_error);
        os << ',' << buf << '\n';
    }
}

}  // namespace dvqe
