#pragma once

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "quantcorr/dataset.hpp"
#include "quantcorr/qr_core.hpp"

namespace quantcorr {

enum class Transform { identity, center, spline, interaction };

// One declared model term. A spline term expands to three natural cubic
// spline columns with boundary knots at the observed min/max and interior
// knots at the empirical tertiles; an interaction is the product of two
// raw columns.
struct TermSpec {
    std::string column;
    Transform transform = Transform::identity;
    double center = 0.0;
    std::string partner;

    static TermSpec identity(std::string column) { return {std::move(column), Transform::identity, 0.0, {}}; }
    static TermSpec centered(std::string column, double c) { return {std::move(column), Transform::center, c, {}}; }
    static TermSpec spline(std::string column) { return {std::move(column), Transform::spline, 0.0, {}}; }
    static TermSpec interaction(std::string a, std::string b) {
        return {std::move(a), Transform::interaction, 0.0, std::move(b)};
    }

    std::vector<std::string> columns_used() const;
    bool operator==(const TermSpec&) const = default;
};

using Knots = std::array<double, 4>;

// Everything needed to rebuild a design on new rows: the declared terms plus
// the knots estimated from the training data.
struct BasisRecipe {
    bool intercept = true;
    std::vector<TermSpec> terms;
    std::vector<Knots> knots;  // parallel to terms; meaningful for splines only
    std::vector<std::string> column_names;

    std::vector<std::string> columns_used() const;
};

// Sample quantile with linear interpolation between order statistics
// (position (n - 1) p, the usual "type 7" definition).
double sample_quantile(std::span<const double> values, double p);

// Natural cubic spline basis without the constant: x, then K - 2 columns
// from the truncated-power construction. Linear beyond the boundary knots.
std::array<double, 3> natural_spline_row(double x, const Knots& knots);

std::pair<DesignMatrix, BasisRecipe> build_design(const Dataset& data, const std::vector<TermSpec>& terms,
                                                  bool intercept);

// Reuses the stored knots; never re-estimates from `grid`.
DesignMatrix apply_recipe(const BasisRecipe& recipe, const Dataset& grid);

// True for rows where some spline covariate lies outside its boundary knots.
std::vector<bool> extrapolated_rows(const BasisRecipe& recipe, const Dataset& grid);

}  // namespace quantcorr
