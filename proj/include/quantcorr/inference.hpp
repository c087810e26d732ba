#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "quantcorr/error.hpp"
#include "quantcorr/pipeline.hpp"

namespace quantcorr {

struct BootstrapOptions {
    std::size_t replicates = 1000;
    std::uint64_t seed = 1;
    double level = 0.95;
    unsigned threads = 1;
    double max_failure_fraction = 0.2;
};

// Per-coefficient bootstrap summary: SE is the standard deviation of the
// draws, the Wald interval is estimate +/- z SE, the percentile interval
// uses the empirical (1 -/+ level) / 2 quantiles of the draws.
struct CoefficientSummary {
    std::vector<std::string> names;
    Vector estimate;
    Vector se;
    Vector wald_lower, wald_upper;
    Vector percentile_lower, percentile_upper;
};

struct IntervalEstimate {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t winsorized = 0;
    bool degenerate = false;
};

struct BootstrapResult {
    std::size_t replicates = 0;
    std::uint64_t seed = 0;
    double level = 0.95;
    double tau = 0.5;

    // Replicate indices behind each set of draws.
    std::vector<std::size_t> step1_ok;
    std::vector<std::size_t> step2_ok;
    std::size_t step1_failures = 0;
    std::size_t failures = 0;  // replicates lost at any step
    std::vector<std::string> failure_reasons;

    std::array<std::vector<Vector>, 2> beta_draws;
    std::vector<Vector> gamma_draws;  // flattened category-major
    std::vector<std::vector<double>> phi_draws;

    std::array<CoefficientSummary, 2> beta;
    CoefficientSummary gamma;
    std::vector<double> phi_se;
    std::vector<IntervalEstimate> phi_intervals;
};

class InferenceUnreliable : public Error {
public:
    InferenceUnreliable(std::string message, std::shared_ptr<const BootstrapResult> partial)
        : Error(std::move(message)), partial_(std::move(partial)) {}

    const BootstrapResult& partial() const { return *partial_; }

private:
    std::shared_ptr<const BootstrapResult> partial_;
};

// Row indices for replicate `replicate`: n draws with replacement from the
// (seed, replicate) substream.
std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed, std::size_t replicate);

// Paired bootstrap of the whole two-step procedure around `estimate`, with
// phi-hat evaluated on the estimate's grid. Also fills the estimate's
// surface bands.
BootstrapResult bootstrap(const Dataset& data, const AnalysisSpec& spec, TwoStepResult& estimate,
                          const BootstrapOptions& options);

BootstrapResult bootstrap(const Dataset& data, const AnalysisSpec& spec, double tau, const BootstrapOptions& options);

// Interval for phi from bootstrap draws on the logit scale of
// u = (phi - phi_min) / (phi_max - phi_min); draws outside the open range
// are pulled 1e-6 inside it before the transform.
IntervalEstimate phi_interval(std::span<const double> draws, double estimate, double tau, double level);

}  // namespace quantcorr
