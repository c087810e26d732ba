#include "quantcorr/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <thread>

#include "quantcorr/random.hpp"
#include "quantcorr/synthetic.hpp"

namespace quantcorr {

namespace {

constexpr double kWinsor = 1e-6;
constexpr std::size_t kMaxReasons = 20;

struct Replicate {
    std::optional<std::array<Vector, 2>> beta;
    std::optional<Vector> gamma;
    std::vector<double> phi;
    std::string reason;
};

double std_dev(std::span<const double> v) {
    if (v.size() < 2) return v.empty() ? std::numeric_limits<double>::quiet_NaN() : 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

CoefficientSummary summarise(std::vector<std::string> names, const Vector& estimate, const std::vector<Vector>& draws,
                             double level) {
    const Eigen::Index p = estimate.size();
    const double z = normal_quantile(0.5 + 0.5 * level);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CoefficientSummary s;
    s.names = std::move(names);
    s.estimate = estimate;
    s.se = Vector::Constant(p, nan);
    s.wald_lower = s.wald_upper = s.percentile_lower = s.percentile_upper = Vector::Constant(p, nan);
    if (draws.empty()) return s;
    std::vector<double> column(draws.size());
    for (Eigen::Index j = 0; j < p; ++j) {
        for (std::size_t r = 0; r < draws.size(); ++r) column[r] = draws[r](j);
        s.se(j) = std_dev(column);
        s.wald_lower(j) = estimate(j) - z * s.se(j);
        s.wald_upper(j) = estimate(j) + z * s.se(j);
        s.percentile_lower(j) = sample_quantile(column, 0.5 - 0.5 * level);
        s.percentile_upper(j) = sample_quantile(column, 0.5 + 0.5 * level);
    }
    return s;
}

Vector flatten(const Matrix& gamma) {
    const Eigen::Index q = gamma.rows();
    Vector theta(q * gamma.cols());
    for (Eigen::Index c = 0; c < gamma.cols(); ++c) theta.segment(c * q, q) = gamma.col(c);
    return theta;
}

std::vector<std::string> gamma_names(const MultinomialFit& fit) {
    std::vector<std::string> names;
    for (const auto& c : fit.categories) {
        for (const auto& n : fit.names) names.push_back(c + ":" + n);
    }
    return names;
}

Replicate run_replicate(const Dataset& data, const AnalysisSpec& spec, const EvaluationGrid& grid, double tau,
                        std::uint64_t seed, std::size_t r) {
    Replicate rep;
    const auto rows = resample_indices(data.rows(), seed, r);
    const Dataset sample = data.take_rows(rows);
    TwoStepResult fit;
    try {
        run_step_one(sample, spec, tau, fit);
    } catch (const Error& e) {
        rep.reason = e.what();
        return rep;
    }
    rep.beta = std::array<Vector, 2>{fit.step1[0].beta, fit.step1[1].beta};
    try {
        run_step_two(sample, spec, grid, fit);
    } catch (const Error& e) {
        rep.reason = e.what();
        return rep;
    }
    if (!fit.step2.converged) {
        rep.reason = "step 2 did not converge";
        return rep;
    }
    rep.gamma = flatten(fit.step2.gamma);
    rep.phi = fit.surface.phi_hat;
    return rep;
}

double logit(double u) { return std::log(u / (1.0 - u)); }
double expit(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed, std::size_t replicate) {
    Rng rng(seed, replicate);
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = static_cast<std::size_t>(rng.index(n));
    return rows;
}

IntervalEstimate phi_interval(std::span<const double> draws, double estimate, double tau, double level) {
    if (draws.empty()) throw InvalidArgument("phi interval needs at least one draw");
    if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");
    const PhiBounds b = phi_bounds(tau);
    const double width = b.phi_max - b.phi_min;
    auto to_unit = [&](double p) { return (p - b.phi_min) / width; };
    auto from_unit = [&](double u) { return b.phi_min + width * u; };

    IntervalEstimate out;
    const bool all_low = std::all_of(draws.begin(), draws.end(), [&](double d) { return to_unit(d) <= kWinsor; });
    const bool all_high = std::all_of(draws.begin(), draws.end(), [&](double d) { return to_unit(d) >= 1.0 - kWinsor; });
    if (all_low || all_high) {
        out.degenerate = true;
        out.lower = out.upper = all_low ? b.phi_min : b.phi_max;
        out.winsorized = draws.size();
        return out;
    }

    std::vector<double> transformed;
    transformed.reserve(draws.size());
    for (double d : draws) {
        double u = to_unit(d);
        if (u < kWinsor || u > 1.0 - kWinsor) {
            u = std::clamp(u, kWinsor, 1.0 - kWinsor);
            ++out.winsorized;
        }
        transformed.push_back(logit(u));
    }
    const auto [lo, hi] = std::minmax_element(transformed.begin(), transformed.end());
    const double se = *lo == *hi ? 0.0 : std_dev(transformed);
    if (se == 0.0) {
        out.lower = out.upper = estimate;
        return out;
    }
    const double center = logit(std::clamp(to_unit(estimate), kWinsor, 1.0 - kWinsor));
    const double z = normal_quantile(0.5 + 0.5 * level);
    out.lower = from_unit(expit(center - z * se));
    out.upper = from_unit(expit(center + z * se));
    return out;
}

BootstrapResult bootstrap(const Dataset& data, const AnalysisSpec& spec, TwoStepResult& estimate,
                          const BootstrapOptions& options) {
    if (options.replicates < 2) throw InvalidArgument("bootstrap needs at least 2 replicates");
    if (!(options.level > 0.0 && options.level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");

    const std::size_t B = options.replicates;
    const double tau = estimate.tau;
    const EvaluationGrid& grid = estimate.surface.grid;
    std::vector<Replicate> reps(B);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r = next++; r < B; r = next++) {
            reps[r] = run_replicate(data, spec, grid, tau, options.seed, r);
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(B)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    BootstrapResult res;
    res.replicates = B;
    res.seed = options.seed;
    res.level = options.level;
    res.tau = tau;
    for (std::size_t r = 0; r < B; ++r) {
        Replicate& rep = reps[r];
        if (rep.beta) {
            res.step1_ok.push_back(r);
            res.beta_draws[0].push_back(std::move((*rep.beta)[0]));
            res.beta_draws[1].push_back(std::move((*rep.beta)[1]));
        } else {
            ++res.step1_failures;
        }
        if (rep.gamma) {
            res.step2_ok.push_back(r);
            res.gamma_draws.push_back(std::move(*rep.gamma));
            res.phi_draws.push_back(std::move(rep.phi));
        } else {
            ++res.failures;
            if (res.failure_reasons.size() < kMaxReasons) {
                res.failure_reasons.push_back("replicate " + std::to_string(r) + ": " + rep.reason);
            }
        }
    }

    for (std::size_t j = 0; j < 2; ++j) {
        res.beta[j] = summarise(estimate.step1[j].names, estimate.step1[j].beta, res.beta_draws[j], options.level);
    }
    res.gamma = summarise(gamma_names(estimate.step2), flatten(estimate.step2.gamma), res.gamma_draws, options.level);

    PhiSurface& surface = estimate.surface;
    if (!res.phi_draws.empty()) {
        std::vector<double> lower, upper, column(res.phi_draws.size());
        for (std::size_t i = 0; i < surface.size(); ++i) {
            for (std::size_t r = 0; r < res.phi_draws.size(); ++r) column[r] = res.phi_draws[r][i];
            res.phi_se.push_back(std_dev(column));
            const IntervalEstimate iv = phi_interval(column, surface.phi_hat[i], tau, options.level);
            res.phi_intervals.push_back(iv);
            lower.push_back(iv.lower);
            upper.push_back(iv.upper);
        }
        surface.lower = std::move(lower);
        surface.upper = std::move(upper);
    }

    if (static_cast<double>(res.failures) > options.max_failure_fraction * static_cast<double>(B)) {
        throw InferenceUnreliable(std::to_string(res.failures) + " of " + std::to_string(B) +
                                      " bootstrap replicates failed; inference is unreliable",
                                  std::make_shared<const BootstrapResult>(res));
    }
    return res;
}

BootstrapResult bootstrap(const Dataset& data, const AnalysisSpec& spec, double tau, const BootstrapOptions& options) {
    TwoStepResult estimate = run_two_step(data, spec, tau);
    return bootstrap(data, spec, estimate, options);
}

}  // namespace quantcorr
