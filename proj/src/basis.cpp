#include "quantcorr/basis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "quantcorr/error.hpp"

namespace quantcorr {

namespace {

constexpr std::size_t kMinSplineDistinct = 8;

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::vector<std::string> term_column_names(const TermSpec& t) {
    switch (t.transform) {
        case Transform::identity: return {t.column};
        case Transform::center: return {t.column + "-" + format_number(t.center)};
        case Transform::spline: return {"ns(" + t.column + ")1", "ns(" + t.column + ")2", "ns(" + t.column + ")3"};
        case Transform::interaction: return {t.column + ":" + t.partner};
    }
    return {};
}

Knots fit_knots(std::span<const double> x, const std::string& name) {
    std::set<double> distinct(x.begin(), x.end());
    if (distinct.size() < kMinSplineDistinct) {
        throw InvalidArgument("spline term '" + name + "' needs at least " + std::to_string(kMinSplineDistinct) +
                              " distinct values, found " + std::to_string(distinct.size()));
    }
    Knots k{*distinct.begin(), sample_quantile(x, 1.0 / 3.0), sample_quantile(x, 2.0 / 3.0), *distinct.rbegin()};
    if (!(k[0] < k[1] && k[1] < k[2] && k[2] < k[3])) {
        throw InvalidArgument("spline term '" + name + "' has tied knots; too many repeated values");
    }
    return k;
}

}  // namespace

std::vector<std::string> TermSpec::columns_used() const {
    if (transform == Transform::interaction) return {column, partner};
    return {column};
}

std::vector<std::string> BasisRecipe::columns_used() const {
    std::vector<std::string> out;
    for (const auto& t : terms) {
        for (auto& c : t.columns_used()) {
            if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(std::move(c));
        }
    }
    return out;
}

double sample_quantile(std::span<const double> values, double p) {
    if (values.empty()) throw InvalidArgument("quantile of an empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::array<double, 3> natural_spline_row(double x, const Knots& k) {
    const double last = k[3];
    if (x > last) {
        // Exactly linear continuation from the last knot.
        std::array<double, 3> out{x, 0.0, 0.0};
        for (int j = 0; j < 2; ++j) {
            const double value = (last - k[j]) * (last - k[j]) - (last - k[2]) * (last - k[2]);
            const double slope = 3.0 * (k[2] - k[j]);
            out[static_cast<std::size_t>(j) + 1] = value + slope * (x - last);
        }
        return out;
    }
    auto cube = [](double u) { return u > 0.0 ? u * u * u : 0.0; };
    auto d = [&](int j) { return (cube(x - k[j]) - cube(x - last)) / (last - k[j]); };
    const double d2 = d(2);
    return {x, d(0) - d2, d(1) - d2};
}

DesignMatrix apply_recipe(const BasisRecipe& recipe, const Dataset& data) {
    const std::size_t n = data.rows();
    const std::size_t q = recipe.column_names.size();
    Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
    Eigen::Index col = 0;
    if (recipe.intercept) values.col(col++).setOnes();
    for (std::size_t t = 0; t < recipe.terms.size(); ++t) {
        const TermSpec& term = recipe.terms[t];
        const auto x = data.column(term.column);
        switch (term.transform) {
            case Transform::identity:
                for (std::size_t i = 0; i < n; ++i) values(static_cast<Eigen::Index>(i), col) = x[i];
                ++col;
                break;
            case Transform::center:
                for (std::size_t i = 0; i < n; ++i) values(static_cast<Eigen::Index>(i), col) = x[i] - term.center;
                ++col;
                break;
            case Transform::interaction: {
                const auto other = data.column(term.partner);
                for (std::size_t i = 0; i < n; ++i) values(static_cast<Eigen::Index>(i), col) = x[i] * other[i];
                ++col;
                break;
            }
            case Transform::spline:
                for (std::size_t i = 0; i < n; ++i) {
                    const auto row = natural_spline_row(x[i], recipe.knots[t]);
                    for (std::size_t j = 0; j < 3; ++j) {
                        values(static_cast<Eigen::Index>(i), col + static_cast<Eigen::Index>(j)) = row[j];
                    }
                }
                col += 3;
                break;
        }
    }
    return DesignMatrix(std::move(values), recipe.column_names, recipe.intercept);
}

std::pair<DesignMatrix, BasisRecipe> build_design(const Dataset& data, const std::vector<TermSpec>& terms,
                                                  bool intercept) {
    BasisRecipe recipe;
    recipe.intercept = intercept;
    recipe.terms = terms;
    if (intercept) recipe.column_names.emplace_back("(Intercept)");
    for (const auto& term : terms) {
        for (const auto& c : term.columns_used()) {
            if (!data.has_column(c)) throw InvalidArgument("term refers to missing column '" + c + "'");
            for (double v : data.column(c)) {
                if (!std::isfinite(v)) throw InvalidArgument("column '" + c + "' contains non-numeric values");
            }
        }
        Knots knots{};
        if (term.transform == Transform::spline) knots = fit_knots(data.column(term.column), term.column);
        recipe.knots.push_back(knots);
        for (auto& name : term_column_names(term)) recipe.column_names.push_back(std::move(name));
    }
    DesignMatrix design = apply_recipe(recipe, data);
    return {std::move(design), std::move(recipe)};
}

std::vector<bool> extrapolated_rows(const BasisRecipe& recipe, const Dataset& grid) {
    std::vector<bool> out(grid.rows(), false);
    for (std::size_t t = 0; t < recipe.terms.size(); ++t) {
        if (recipe.terms[t].transform != Transform::spline) continue;
        const auto x = grid.column(recipe.terms[t].column);
        const Knots& k = recipe.knots[t];
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (x[i] < k[0] || x[i] > k[3]) out[i] = true;
        }
    }
    return out;
}

}  // namespace quantcorr
