#include "quantcorr/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "quantcorr/error.hpp"

namespace quantcorr {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
}

json step_to_json(bool intercept, const std::vector<TermSpec>& terms) {
    json arr = json::array();
    for (const auto& t : terms) arr.push_back(to_json(t));
    return {{"intercept", intercept}, {"terms", arr}};
}

void step_from_json(const json& j, const std::string& where, bool& intercept, std::vector<TermSpec>& terms) {
    check_keys(j, {"intercept", "terms"}, where);
    intercept = get_or(j, "intercept", true);
    terms.clear();
    if (j.contains("terms")) {
        for (const auto& t : j.at("terms")) terms.push_back(term_from_json(t));
    }
}

}  // namespace

std::vector<double> TauRange::expand() const {
    if (!(step > 0.0) || !(from > 0.0) || !(to < 1.0) || from > to) {
        throw ConfigError("tau range needs 0 < from <= to < 1 and step > 0");
    }
    std::vector<double> out;
    for (int i = 0;; ++i) {
        const double t = std::round((from + i * step) * 1e10) / 1e10;
        if (t > to + 1e-12) break;
        out.push_back(t);
    }
    return out;
}

std::vector<double> RunConfig::resolved_taus() const { return tau_range ? tau_range->expand() : analysis.taus; }

json to_json(const TermSpec& t) {
    json j{{"column", t.column}};
    switch (t.transform) {
        case Transform::identity: j["transform"] = "identity"; break;
        case Transform::center:
            j["transform"] = "center";
            j["value"] = t.center;
            break;
        case Transform::spline: j["transform"] = "spline"; break;
        case Transform::interaction:
            j["transform"] = "interaction";
            j["with"] = t.partner;
            break;
    }
    return j;
}

TermSpec term_from_json(const json& j) {
    if (j.is_string()) return TermSpec::identity(j.get<std::string>());
    check_keys(j, {"column", "transform", "value", "with"}, "term");
    if (!j.contains("column")) throw ConfigError("term without 'column'");
    const auto column = j.at("column").get<std::string>();
    std::string transform = get_or<std::string>(j, "transform", j.contains("with") ? "interaction" : "identity");
    if (transform == "identity") return TermSpec::identity(column);
    if (transform == "center") {
        if (!j.contains("value")) throw ConfigError("center term for '" + column + "' needs 'value'");
        return TermSpec::centered(column, j.at("value").get<double>());
    }
    if (transform == "spline") return TermSpec::spline(column);
    if (transform == "interaction") {
        if (!j.contains("with")) throw ConfigError("interaction term for '" + column + "' needs 'with'");
        return TermSpec::interaction(column, j.at("with").get<std::string>());
    }
    throw ConfigError("unknown transform '" + transform + "' (expected identity, center, spline, interaction)");
}

json to_json(const RunConfig& c) {
    const AnalysisSpec& a = c.analysis;
    json grids = json::array();
    for (const auto& g : a.grids) {
        grids.push_back({{"covariate", g.covariate}, {"values", g.values}, {"points", g.points}, {"hold", g.hold}});
    }
    json j{{"input", c.input},
           {"output_dir", c.output_dir},
           {"responses", {a.responses[0], a.responses[1]}},
           {"binary_columns", a.binary_columns},
           {"taus", a.taus},
           {"step1", step_to_json(a.step1_intercept, a.step1_terms)},
           {"step2", step_to_json(a.step2_intercept, a.step2_terms)},
           {"merged", a.merged},
           {"grids", grids},
           {"bootstrap",
            {{"enabled", c.bootstrap.enabled},
             {"replicates", c.bootstrap.replicates},
             {"seed", c.bootstrap.seed},
             {"level", c.bootstrap.level}}},
           {"threads", c.threads}};
    if (c.tau_range) {
        j["tau_range"] = {{"from", c.tau_range->from}, {"to", c.tau_range->to}, {"step", c.tau_range->step}};
    }
    return j;
}

RunConfig run_config_from_json(const json& j) {
    check_keys(j,
               {"input", "output_dir", "responses", "binary_columns", "taus", "tau_range", "step1", "step2", "merged",
                "grids", "bootstrap", "threads"},
               "run config");
    RunConfig c;
    AnalysisSpec& a = c.analysis;
    c.input = get_or<std::string>(j, "input", "");
    c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir);
    if (j.contains("responses")) {
        const auto r = j.at("responses").get<std::vector<std::string>>();
        if (r.size() != 2) throw ConfigError("'responses' must list exactly two columns");
        a.responses = {r[0], r[1]};
    }
    a.binary_columns = get_or(j, "binary_columns", std::vector<std::string>{});
    a.taus = get_or(j, "taus", a.taus);
    if (j.contains("tau_range")) {
        const json& r = j.at("tau_range");
        check_keys(r, {"from", "to", "step"}, "tau_range");
        c.tau_range = TauRange{get_or(r, "from", 0.1), get_or(r, "to", 0.9), get_or(r, "step", 0.1)};
    }
    if (j.contains("step1")) step_from_json(j.at("step1"), "step1", a.step1_intercept, a.step1_terms);
    if (j.contains("step2")) step_from_json(j.at("step2"), "step2", a.step2_intercept, a.step2_terms);
    a.merged = get_or(j, "merged", false);
    if (j.contains("grids")) {
        for (const auto& gj : j.at("grids")) {
            check_keys(gj, {"covariate", "values", "points", "hold"}, "grid");
            GridSpec g;
            g.covariate = get_or<std::string>(gj, "covariate", "");
            g.values = get_or(gj, "values", std::vector<double>{});
            g.points = get_or(gj, "points", 100);
            g.hold = get_or(gj, "hold", std::map<std::string, double>{});
            a.grids.push_back(std::move(g));
        }
    }
    if (j.contains("bootstrap")) {
        const json& b = j.at("bootstrap");
        check_keys(b, {"enabled", "replicates", "seed", "level"}, "bootstrap");
        c.bootstrap.enabled = get_or(b, "enabled", c.bootstrap.enabled);
        c.bootstrap.replicates = get_or(b, "replicates", c.bootstrap.replicates);
        c.bootstrap.seed = get_or(b, "seed", c.bootstrap.seed);
        c.bootstrap.level = get_or(b, "level", c.bootstrap.level);
    }
    c.threads = get_or(j, "threads", 1u);

    AnalysisSpec resolved = c.analysis;
    resolved.taus = c.resolved_taus();
    resolved.validate();
    if (!(c.bootstrap.level > 0.0 && c.bootstrap.level < 1.0)) throw ConfigError("bootstrap level must lie in (0, 1)");
    if (c.bootstrap.enabled && c.bootstrap.replicates < 2) throw ConfigError("bootstrap needs at least 2 replicates");
    return c;
}

RunConfig load_run_config(const std::string& path) {
    RunConfig c = run_config_from_json(read_json_file(path));
    const std::filesystem::path input(c.input);
    if (!c.input.empty() && input.is_relative()) {
        c.input = (std::filesystem::path(path).parent_path() / input).lexically_normal().string();
    }
    return c;
}

json to_json(const ScenarioSpec& s) {
    json covs = json::array();
    for (const auto& c : s.covariates) {
        json cj{{"name", c.name}};
        if (c.kind == CovariateGenerator::Kind::uniform) {
            cj["kind"] = "uniform";
            cj["low"] = c.low;
            cj["high"] = c.high;
        } else {
            cj["kind"] = "binary";
            cj["p"] = c.p;
            cj["balanced"] = c.balanced;
        }
        covs.push_back(std::move(cj));
    }
    json j{{"n", s.n},
           {"rho", s.rho},
           {"covariates", covs},
           {"beta1", s.beta1},
           {"beta2", s.beta2},
           {"responses", {s.responses[0], s.responses[1]}},
           {"exchange_probability", s.exchange_probability},
           {"seed", s.seed},
           {"taus", s.taus}};
    if (s.rho_by_group) {
        j["rho_by_group"] = {{"covariate", s.rho_by_group->covariate},
                             {"rho0", s.rho_by_group->rho0},
                             {"rho1", s.rho_by_group->rho1}};
    }
    return j;
}

ScenarioSpec scenario_from_json(const json& j) {
    check_keys(j,
               {"n", "rho", "rho_by_group", "covariates", "beta1", "beta2", "responses", "exchange_probability", "seed",
                "taus"},
               "scenario");
    ScenarioSpec s;
    s.n = get_or(j, "n", s.n);
    s.rho = get_or(j, "rho", s.rho);
    if (j.contains("rho_by_group")) {
        const json& g = j.at("rho_by_group");
        check_keys(g, {"covariate", "rho0", "rho1"}, "rho_by_group");
        s.rho_by_group = GroupDependence{get_or<std::string>(g, "covariate", ""), get_or(g, "rho0", 0.0),
                                         get_or(g, "rho1", 0.0)};
    }
    if (j.contains("covariates")) {
        for (const auto& cj : j.at("covariates")) {
            check_keys(cj, {"name", "kind", "low", "high", "p", "balanced"}, "covariate");
            CovariateGenerator c;
            c.name = get_or<std::string>(cj, "name", "");
            const auto kind = get_or<std::string>(cj, "kind", "uniform");
            if (kind == "uniform") {
                c.kind = CovariateGenerator::Kind::uniform;
            } else if (kind == "binary") {
                c.kind = CovariateGenerator::Kind::binary;
            } else {
                throw ConfigError("unknown covariate kind '" + kind + "'");
            }
            c.low = get_or(cj, "low", c.low);
            c.high = get_or(cj, "high", c.high);
            c.p = get_or(cj, "p", c.p);
            c.balanced = get_or(cj, "balanced", false);
            s.covariates.push_back(std::move(c));
        }
    }
    s.beta1 = get_or(j, "beta1", std::vector<double>{});
    s.beta2 = get_or(j, "beta2", std::vector<double>{});
    if (j.contains("responses")) {
        const auto r = j.at("responses").get<std::vector<std::string>>();
        if (r.size() != 2) throw ConfigError("'responses' must list exactly two names");
        s.responses = {r[0], r[1]};
    }
    s.exchange_probability = get_or(j, "exchange_probability", 0.0);
    s.seed = get_or(j, "seed", s.seed);
    s.taus = get_or(j, "taus", s.taus);
    return s;
}

ScenarioSpec load_scenario(const std::string& path) { return scenario_from_json(read_json_file(path)); }

}  // namespace quantcorr
