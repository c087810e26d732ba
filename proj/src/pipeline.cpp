#include "quantcorr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "quantcorr/error.hpp"

namespace quantcorr {

namespace {

void append_unique(std::vector<std::string>& out, const std::string& name) {
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
}

bool is_binary(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

double held_value(std::span<const double> x, bool binary) {
    if (binary) {
        const auto ones = static_cast<std::size_t>(std::count(x.begin(), x.end(), 1.0));
        return ones * 2 > x.size() ? 1.0 : 0.0;
    }
    return sample_quantile(x, 0.5);
}

Vector column_vector(std::span<const double> x) {
    return Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
}

}  // namespace

void AnalysisSpec::validate() const {
    if (responses[0].empty() || responses[1].empty() || responses[0] == responses[1]) {
        throw ConfigError("the two responses must be distinct, non-empty column names");
    }
    if (taus.empty()) throw ConfigError("at least one tau is required");
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] > 0.0 && taus[i] < 1.0)) {
            throw ConfigError("tau values must lie in (0, 1), got " + std::to_string(taus[i]));
        }
        if (i > 0 && !(taus[i] > taus[i - 1])) throw ConfigError("tau values must be strictly increasing");
    }
    for (const auto* terms : {&step1_terms, &step2_terms}) {
        for (const auto& t : *terms) {
            for (const auto& c : t.columns_used()) {
                if (c == responses[0] || c == responses[1]) {
                    throw ConfigError("response column '" + c + "' cannot be used as a covariate");
                }
            }
        }
    }
    for (const auto& g : grids) {
        if (g.covariate.empty()) throw ConfigError("grid without a covariate name");
        if (g.values.empty() && g.points < 1) throw ConfigError("grid for '" + g.covariate + "' has no points");
    }
}

std::vector<std::string> AnalysisSpec::columns_used() const {
    std::vector<std::string> out{responses[0], responses[1]};
    for (const auto* terms : {&step1_terms, &step2_terms}) {
        for (const auto& t : *terms) {
            for (const auto& c : t.columns_used()) append_unique(out, c);
        }
    }
    for (const auto& g : grids) {
        append_unique(out, g.covariate);
        for (const auto& [name, value] : g.hold) append_unique(out, name);
    }
    return out;
}

EvaluationGrid make_grid(const Dataset& data, const AnalysisSpec& spec) {
    std::vector<std::string> covariates;
    for (const auto& c : spec.columns_used()) {
        if (c != spec.responses[0] && c != spec.responses[1]) covariates.push_back(c);
    }

    std::vector<GridSpec> grids = spec.grids;
    if (grids.empty()) {
        std::vector<std::string> step2_columns;
        for (const auto& t : spec.step2_terms) {
            for (const auto& c : t.columns_used()) append_unique(step2_columns, c);
        }
        for (const auto& c : step2_columns) grids.push_back(GridSpec{c, {}, 100, {}});
    }

    auto binary = [&](const std::string& name) {
        return std::find(spec.binary_columns.begin(), spec.binary_columns.end(), name) != spec.binary_columns.end() ||
               is_binary(data.column(name));
    };

    std::vector<double> defaults;
    for (const auto& c : covariates) defaults.push_back(held_value(data.column(c), binary(c)));

    EvaluationGrid grid;
    std::vector<std::vector<double>> columns(covariates.size());
    auto push_row = [&](const GridSpec* g, double value) {
        for (std::size_t j = 0; j < covariates.size(); ++j) {
            double v = defaults[j];
            if (g != nullptr) {
                if (auto it = g->hold.find(covariates[j]); it != g->hold.end()) v = it->second;
                if (covariates[j] == g->covariate) v = value;
            }
            columns[j].push_back(v);
        }
        grid.covariate.push_back(g != nullptr ? g->covariate : kOverallCovariate);
        grid.value.push_back(value);
    };

    if (grids.empty()) {
        push_row(nullptr, std::numeric_limits<double>::quiet_NaN());
    }
    for (const auto& g : grids) {
        if (!data.has_column(g.covariate)) throw InvalidArgument("grid covariate '" + g.covariate + "' is not in the data");
        std::vector<double> values = g.values;
        if (values.empty()) {
            const auto x = data.column(g.covariate);
            if (binary(g.covariate)) {
                values = {0.0, 1.0};
            } else {
                const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
                const int m = g.points;
                for (int i = 0; i < m; ++i) {
                    values.push_back(m == 1 ? *lo : *lo + (*hi - *lo) * static_cast<double>(i) / (m - 1));
                }
            }
        }
        for (double v : values) push_row(&g, v);
    }
    for (std::size_t j = 0; j < covariates.size(); ++j) grid.rows.add_column(covariates[j], std::move(columns[j]));
    if (covariates.empty()) {
        grid.rows.set_row_ids(std::vector<std::size_t>(grid.value.size(), 0));
    }
    return grid;
}

void run_step_one(const Dataset& data, const AnalysisSpec& spec, double tau, TwoStepResult& out) {
    out.tau = tau;
    std::array<std::vector<std::uint8_t>, 2> signs;
    std::optional<std::pair<DesignMatrix, BasisRecipe>> design1;
    for (std::size_t j = 0; j < 2; ++j) {
        try {
            if (!design1) design1 = build_design(data, spec.step1_terms, spec.step1_intercept);
            out.step1[j] = fit_quantile_regression(design1->first, column_vector(data.column(spec.responses[j])), tau);
            out.step1_recipe[j] = design1->second;
        } catch (Error& e) {
            e.prepend_context("step 1 (response '" + spec.responses[j] + "', tau " + std::to_string(tau) + ")");
            throw;
        }
        signs[j] = residual_signs(out.step1[j]);
    }
    out.labels = classify(signs[0], signs[1]);
}

void run_step_two(const Dataset& data, const AnalysisSpec& spec, const EvaluationGrid& grid, TwoStepResult& out) {
    const double tau = out.tau;
    try {
        auto [X2, recipe2] = build_design(data, spec.step2_terms, spec.step2_intercept);
        out.step2 = fit_multinomial(X2, out.labels, spec.merged, tau);
        out.step2_recipe = std::move(recipe2);

        PhiSurface& s = out.surface;
        s = PhiSurface{};
        s.tau = tau;
        s.grid = grid;
        s.bounds = phi_bounds(tau);
        const DesignMatrix G = apply_recipe(out.step2_recipe, grid.rows);
        s.extrapolated = extrapolated_rows(out.step2_recipe, grid.rows);
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(G.rows()); ++i) {
            const CellProbabilities cells = predict_cells(out.step2, G.values().row(i).transpose());
            s.cells.push_back(cells);
            s.phi_hat.push_back(phi(cells));
        }
    } catch (Error& e) {
        e.prepend_context("step 2 (tau " + std::to_string(tau) + ")");
        throw;
    }
}

TwoStepResult run_two_step(const Dataset& data, const AnalysisSpec& spec, double tau, const EvaluationGrid& grid) {
    TwoStepResult out;
    run_step_one(data, spec, tau, out);
    run_step_two(data, spec, grid, out);
    return out;
}

TwoStepResult run_two_step(const Dataset& data, const AnalysisSpec& spec, double tau) {
    return run_two_step(data, spec, tau, make_grid(data, spec));
}

std::vector<ProfileRow> phi_profile(std::span<const PhiSurface> surfaces, const std::string& covariate) {
    std::vector<ProfileRow> rows;
    bool known = false;
    for (const auto& s : surfaces) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s.grid.covariate[i] != covariate) continue;
            known = true;
            ProfileRow r;
            r.tau = s.tau;
            r.covariate = covariate;
            r.value = s.grid.value[i];
            r.phi_hat = s.phi_hat[i];
            if (s.lower) r.ci_lower = (*s.lower)[i];
            if (s.upper) r.ci_upper = (*s.upper)[i];
            r.phi_min = s.bounds.phi_min;
            r.phi_max = s.bounds.phi_max;
            r.out_of_bounds = s.out_of_bounds(i);
            rows.push_back(std::move(r));
        }
    }
    if (!known) throw InvalidArgument("no profile grid for covariate '" + covariate + "'");
    return rows;
}

}  // namespace quantcorr
