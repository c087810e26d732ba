#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "quantcorr/app.hpp"
#include "quantcorr/config.hpp"
#include "quantcorr/error.hpp"
#include "quantcorr/inference.hpp"
#include "quantcorr/pipeline.hpp"
#include "quantcorr/synthetic.hpp"

namespace py = pybind11;
using namespace quantcorr;

namespace {

Dataset to_dataset(const std::map<std::string, std::vector<double>>& columns, const std::vector<std::string>& order) {
    Dataset d;
    for (const auto& name : order) d.add_column(name, columns.at(name));
    for (const auto& [name, values] : columns) {
        if (!d.has_column(name)) d.add_column(name, values);
    }
    return d;
}

py::dict from_dataset(const Dataset& d) {
    py::dict out;
    for (std::size_t c = 0; c < d.cols(); ++c) {
        const auto col = d.column(c);
        out[py::str(d.names()[c])] = std::vector<double>(col.begin(), col.end());
    }
    return out;
}

std::vector<Label> to_labels(const std::vector<std::string>& z) {
    std::vector<Label> out;
    out.reserve(z.size());
    for (const auto& s : z) out.push_back(label_from_string(s));
    return out;
}

AnalysisSpec spec_from(const std::string& config_json) {
    nlohmann::json j = nlohmann::json::parse(config_json);
    return run_config_from_json(j).analysis;
}

py::dict surface_dict(const PhiSurface& s) {
    py::dict out;
    out["tau"] = s.tau;
    out["covariate"] = s.grid.covariate;
    out["value"] = s.grid.value;
    out["phi_hat"] = s.phi_hat;
    std::vector<std::array<double, 4>> cells;
    for (const auto& c : s.cells) cells.push_back({c.p00, c.p11, c.p01, c.p10});
    out["cells"] = cells;
    out["phi_min"] = s.bounds.phi_min;
    out["phi_max"] = s.bounds.phi_max;
    out["lower"] = s.lower;
    out["upper"] = s.upper;
    out["extrapolated"] = s.extrapolated;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Quantile sign-concordance analysis";
    m.attr("__version__") = kVersion;

    auto& base = py::register_exception<Error>(m, "QuantcorrError");
    py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
    py::register_exception<SingularDesign>(m, "SingularDesign", base.ptr());
    py::register_exception<NonConvergence>(m, "NonConvergence", base.ptr());
    py::register_exception<EmptyCategory>(m, "EmptyCategory", base.ptr());
    py::register_exception<IngestError>(m, "IngestError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<InferenceUnreliable>(m, "InferenceUnreliable", base.ptr());

    py::class_<QuantileFit>(m, "QuantileFit")
        .def_readonly("beta", &QuantileFit::beta)
        .def_readonly("residuals", &QuantileFit::residuals)
        .def_readonly("objective", &QuantileFit::objective)
        .def_readonly("tau", &QuantileFit::tau)
        .def_readonly("iterations", &QuantileFit::iterations)
        .def_readonly("converged", &QuantileFit::converged)
        .def_readonly("names", &QuantileFit::names)
        .def_readonly("basis", &QuantileFit::basis);

    py::class_<MultinomialFit>(m, "MultinomialFit")
        .def_readonly("merged", &MultinomialFit::merged)
        .def_readonly("categories", &MultinomialFit::categories)
        .def_readonly("names", &MultinomialFit::names)
        .def_readonly("gamma", &MultinomialFit::gamma)
        .def_readonly("log_likelihood", &MultinomialFit::log_likelihood)
        .def_readonly("converged", &MultinomialFit::converged)
        .def_readonly("iterations", &MultinomialFit::iterations)
        .def_readonly("vcov", &MultinomialFit::vcov)
        .def_readonly("warnings", &MultinomialFit::warnings);

    m.def("pinball_loss", &pinball_loss, py::arg("u"), py::arg("tau"));

    m.def(
        "fit_quantile_regression",
        [](const Matrix& X, const Vector& y, double tau, std::vector<std::string> names, bool intercept) {
            if (names.empty()) {
                for (Eigen::Index j = 0; j < X.cols(); ++j) names.push_back("x" + std::to_string(j));
            }
            return fit_quantile_regression(DesignMatrix(X, std::move(names), intercept), y, tau);
        },
        py::arg("X"), py::arg("y"), py::arg("tau"), py::arg("names") = std::vector<std::string>{},
        py::arg("intercept") = false, "Quantile regression of y on the columns of X (no intercept is added).");

    m.def(
        "phi",
        [](double p00, double p11, double p01, double p10, double tau) {
            return phi(CellProbabilities{p00, p11, p01, p10, tau});
        },
        py::arg("p00"), py::arg("p11"), py::arg("p01"), py::arg("p10"), py::arg("tau"));

    m.def(
        "phi_bounds",
        [](double tau) {
            const auto b = phi_bounds(tau);
            return py::make_tuple(b.phi_min, b.phi_indep, b.phi_max);
        },
        py::arg("tau"), "(phi_min, phi_indep, phi_max) for quantile level tau.");

    m.def(
        "classify",
        [](const std::vector<std::uint8_t>& omega1, const std::vector<std::uint8_t>& omega2) {
            std::vector<std::string> out;
            for (Label l : classify(omega1, omega2)) out.emplace_back(to_string(l));
            return out;
        },
        py::arg("omega1"), py::arg("omega2"));

    m.def(
        "fit_multinomial",
        [](const Matrix& X, const std::vector<std::string>& labels, bool merged, double tau,
           std::vector<std::string> names) {
            if (names.empty()) {
                for (Eigen::Index j = 0; j < X.cols(); ++j) names.push_back("x" + std::to_string(j));
            }
            const auto z = to_labels(labels);
            return fit_multinomial(DesignMatrix(X, std::move(names), true), z, merged, tau);
        },
        py::arg("X"), py::arg("labels"), py::arg("merged") = false, py::arg("tau") = 0.5,
        py::arg("names") = std::vector<std::string>{});

    m.def(
        "predict_cells",
        [](const MultinomialFit& fit, const Vector& x) {
            const auto c = predict_cells(fit, x);
            return py::make_tuple(c.p00, c.p11, c.p01, c.p10);
        },
        py::arg("fit"), py::arg("x"), "(p00, p11, p01, p10) at design row x.");

    m.def("oracle_phi_gaussian", &oracle_phi_gaussian, py::arg("rho"), py::arg("tau"));
    m.def("bivariate_normal_cdf", &bivariate_normal_cdf, py::arg("h"), py::arg("k"), py::arg("rho"));

    m.def(
        "_generate",
        [](const std::string& scenario_json) {
            return from_dataset(generate(scenario_from_json(nlohmann::json::parse(scenario_json))));
        },
        py::arg("scenario_json"));

    m.def(
        "_run_two_step",
        [](const std::map<std::string, std::vector<double>>& columns, double tau, const std::string& config_json) {
            const AnalysisSpec spec = spec_from(config_json);
            const TwoStepResult r = run_two_step(to_dataset(columns, spec.columns_used()), spec, tau);
            py::dict out;
            out["tau"] = r.tau;
            out["step1"] = std::vector<QuantileFit>{r.step1[0], r.step1[1]};
            std::vector<std::string> labels;
            for (Label l : r.labels) labels.emplace_back(to_string(l));
            out["labels"] = labels;
            out["step2"] = r.step2;
            out["surface"] = surface_dict(r.surface);
            return out;
        },
        py::arg("columns"), py::arg("tau"), py::arg("config_json"));

    m.def(
        "_bootstrap",
        [](const std::map<std::string, std::vector<double>>& columns, double tau, const std::string& config_json) {
            const RunConfig config = run_config_from_json(nlohmann::json::parse(config_json));
            const Dataset data = to_dataset(columns, config.analysis.columns_used());
            BootstrapOptions opts;
            opts.replicates = config.bootstrap.replicates;
            opts.seed = config.bootstrap.seed;
            opts.level = config.bootstrap.level;
            opts.threads = config.threads;
            TwoStepResult estimate;
            BootstrapResult res;
            {
                py::gil_scoped_release release;
                estimate = run_two_step(data, config.analysis, tau);
                res = bootstrap(data, config.analysis, estimate, opts);
            }
            py::dict out;
            out["replicates"] = res.replicates;
            out["failures"] = res.failures;
            out["phi_se"] = res.phi_se;
            out["phi_draws"] = res.phi_draws;
            out["surface"] = surface_dict(estimate.surface);
            return out;
        },
        py::arg("columns"), py::arg("tau"), py::arg("config_json"));

    m.def(
        "_analyze",
        [](const std::string& config_json, const std::string& base_dir) {
            RunConfig config = run_config_from_json(nlohmann::json::parse(config_json));
            if (!config.input.empty() && std::filesystem::path(config.input).is_relative() && !base_dir.empty()) {
                config.input = (std::filesystem::path(base_dir) / config.input).string();
            }
            std::ostringstream log;
            {
                py::gil_scoped_release release;
                run_analysis(config, log);
            }
            return log.str();
        },
        py::arg("config_json"), py::arg("base_dir") = "");

    m.def(
        "_synth",
        [](const std::string& scenario_json, const std::string& csv_path) {
            run_synth(scenario_from_json(nlohmann::json::parse(scenario_json)), csv_path);
            return oracle_sidecar_path(csv_path);
        },
        py::arg("scenario_json"), py::arg("csv_path"));

    m.def(
        "load_run_config",
        [](const std::string& path) { return to_json(load_run_config(path)).dump(); }, py::arg("path"),
        "Validated run configuration as a JSON string, with the input path resolved.");
}
