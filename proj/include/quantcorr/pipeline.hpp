#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "quantcorr/basis.hpp"
#include "quantcorr/concordance.hpp"
#include "quantcorr/dataset.hpp"
#include "quantcorr/multinomial.hpp"
#include "quantcorr/qr_core.hpp"

namespace quantcorr {

// Evaluation profile for one covariate. Without explicit values the
// covariate sweeps `points` equally spaced values between its observed
// min and max ({0, 1} for binary columns). Every other column is held at
// its median (continuous) or mode (binary) unless listed in `hold`.
struct GridSpec {
    std::string covariate;
    std::vector<double> values;
    int points = 100;
    std::map<std::string, double> hold;

    bool operator==(const GridSpec&) const = default;
};

struct AnalysisSpec {
    std::array<std::string, 2> responses{"y1", "y2"};
    std::vector<double> taus{0.5};
    std::vector<TermSpec> step1_terms;
    bool step1_intercept = true;
    std::vector<TermSpec> step2_terms;
    bool step2_intercept = true;
    bool merged = false;
    std::vector<GridSpec> grids;
    std::vector<std::string> binary_columns;

    void validate() const;
    // Columns the analysis reads, responses first.
    std::vector<std::string> columns_used() const;

    bool operator==(const AnalysisSpec&) const = default;
};

// Label used for the single profile row of a model without step-2 covariates.
inline constexpr const char* kOverallCovariate = "(all)";

struct EvaluationGrid {
    Dataset rows;
    std::vector<std::string> covariate;  // profile each row belongs to
    std::vector<double> value;           // NaN for the overall row
};

EvaluationGrid make_grid(const Dataset& data, const AnalysisSpec& spec);

struct PhiSurface {
    double tau = 0.5;
    EvaluationGrid grid;
    std::vector<CellProbabilities> cells;
    std::vector<double> phi_hat;
    PhiBounds bounds;
    std::optional<std::vector<double>> lower;
    std::optional<std::vector<double>> upper;
    std::vector<bool> extrapolated;

    std::size_t size() const { return phi_hat.size(); }
    bool out_of_bounds(std::size_t row) const {
        return phi_hat[row] < bounds.phi_min || phi_hat[row] > bounds.phi_max;
    }
};

struct TwoStepResult {
    double tau = 0.5;
    std::array<QuantileFit, 2> step1;
    std::array<BasisRecipe, 2> step1_recipe;
    std::vector<Label> labels;
    BasisRecipe step2_recipe;
    MultinomialFit step2;
    PhiSurface surface;
};

// Step one: both quantile regressions and the concordance labels (first
// digit from responses[0]). Fills step1, step1_recipe and labels.
void run_step_one(const Dataset& data, const AnalysisSpec& spec, double tau, TwoStepResult& out);

// Step two: multinomial model on out.labels and phi-hat on `grid`.
void run_step_two(const Dataset& data, const AnalysisSpec& spec, const EvaluationGrid& grid, TwoStepResult& out);

// Both steps. Errors carry the step they came from.
TwoStepResult run_two_step(const Dataset& data, const AnalysisSpec& spec, double tau, const EvaluationGrid& grid);
TwoStepResult run_two_step(const Dataset& data, const AnalysisSpec& spec, double tau);

struct ProfileRow {
    double tau = 0.5;
    std::string covariate;
    double value = 0.0;
    double phi_hat = 0.0;
    std::optional<double> ci_lower;
    std::optional<double> ci_upper;
    double phi_min = -1.0;
    double phi_max = 1.0;
    bool out_of_bounds = false;
};

// Long-format rows for one covariate across all surfaces (in surface order).
std::vector<ProfileRow> phi_profile(std::span<const PhiSurface> surfaces, const std::string& covariate);

}  // namespace quantcorr
