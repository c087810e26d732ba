#include "quantcorr/app.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>

#include "quantcorr/error.hpp"
#include "quantcorr/inference.hpp"
#include "quantcorr/io.hpp"
#include "quantcorr/synthetic.hpp"

namespace fs = std::filesystem;

namespace quantcorr {

namespace {

struct TauRun {
    TwoStepResult estimate;
    std::optional<BootstrapResult> boot;
};

std::string file_stem_for(const std::string& covariate) {
    if (covariate == kOverallCovariate) return "all";
    std::string out;
    for (char ch : covariate) {
        const bool keep = std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-';
        out += keep ? ch : '_';
    }
    return out;
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string tau_label(double tau) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "tau=%.2f", tau);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    return out;
}

double at_or_nan(const std::optional<Vector>& v, Eigen::Index j) {
    return v ? (*v)(j) : std::numeric_limits<double>::quiet_NaN();
}

void write_step1(const fs::path& dir, const RunConfig& config, const std::vector<TauRun>& runs) {
    const auto& responses = config.analysis.responses;
    {
        std::ofstream out = open_out(dir / "step1_coefficients.csv");
        out << "tau,response,term,estimate,se,ci_lower,ci_upper\n";
        for (const auto& run : runs) {
            for (std::size_t j = 0; j < 2; ++j) {
                const QuantileFit& fit = run.estimate.step1[j];
                for (Eigen::Index k = 0; k < fit.beta.size(); ++k) {
                    std::optional<Vector> se, lo, hi;
                    if (run.boot) {
                        se = run.boot->beta[j].se;
                        lo = run.boot->beta[j].percentile_lower;
                        hi = run.boot->beta[j].percentile_upper;
                    }
                    out << format_full(run.estimate.tau) << ',' << responses[j] << ','
                        << fit.names[static_cast<std::size_t>(k)] << ',' << format_full(fit.beta(k)) << ','
                        << format_full(at_or_nan(se, k)) << ',' << format_full(at_or_nan(lo, k)) << ','
                        << format_full(at_or_nan(hi, k)) << '\n';
                }
            }
        }
    }
    std::ofstream out = open_out(dir / "step1_coefficients.txt");
    out << "Estimated quantile regression coefficients";
    out << (runs.front().boot ? " (bootstrap standard errors)\n" : "\n");
    for (std::size_t j = 0; j < 2; ++j) {
        const auto& names = runs.front().estimate.step1[j].names;
        std::size_t width = 12;
        for (const auto& n : names) width = std::max(width, n.size() + 2);
        out << '\n' << responses[j] << '\n';
        out << pad_right("", width);
        for (const auto& run : runs) out << " | " << pad(tau_label(run.estimate.tau), 19);
        out << '\n' << pad_right("", width);
        for (std::size_t r = 0; r < runs.size(); ++r) out << " | " << pad("Coefficient", 11) << pad("SE", 8);
        out << '\n';
        for (std::size_t k = 0; k < names.size(); ++k) {
            out << pad_right(names[k], width);
            for (const auto& run : runs) {
                const auto idx = static_cast<Eigen::Index>(k);
                const double se = run.boot ? run.boot->beta[j].se(idx) : std::numeric_limits<double>::quiet_NaN();
                out << " | " << pad(format_short(run.estimate.step1[j].beta(idx)), 11) << pad(format_short(se), 8);
            }
            out << '\n';
        }
    }
}

void write_step2(const fs::path& dir, const std::vector<TauRun>& runs) {
    {
        std::ofstream out = open_out(dir / "step2_coefficients.csv");
        out << "tau,category,term,estimate,se,ci_lower,ci_upper\n";
        for (const auto& run : runs) {
            const MultinomialFit& fit = run.estimate.step2;
            const auto q = static_cast<Eigen::Index>(fit.names.size());
            for (std::size_t c = 0; c < fit.categories.size(); ++c) {
                for (Eigen::Index k = 0; k < q; ++k) {
                    const Eigen::Index flat = static_cast<Eigen::Index>(c) * q + k;
                    std::optional<Vector> se, lo, hi;
                    if (run.boot) {
                        se = run.boot->gamma.se;
                        lo = run.boot->gamma.percentile_lower;
                        hi = run.boot->gamma.percentile_upper;
                    }
                    out << format_full(run.estimate.tau) << ',' << fit.categories[c] << ','
                        << fit.names[static_cast<std::size_t>(k)] << ','
                        << format_full(fit.gamma(k, static_cast<Eigen::Index>(c))) << ','
                        << format_full(at_or_nan(se, flat)) << ',' << format_full(at_or_nan(lo, flat)) << ','
                        << format_full(at_or_nan(hi, flat)) << '\n';
                }
            }
        }
    }
    std::ofstream out = open_out(dir / "step2_coefficients.txt");
    out << "Estimated multinomial coefficients (reference category \"00\")\n";
    for (const auto& run : runs) {
        const MultinomialFit& fit = run.estimate.step2;
        const auto q = static_cast<Eigen::Index>(fit.names.size());
        std::size_t width = 12;
        for (const auto& n : fit.names) width = std::max(width, n.size() + 2);
        out << '\n' << tau_label(run.estimate.tau) << '\n';
        for (std::size_t c = 0; c < fit.categories.size(); ++c) {
            out << "  Z = \"" << fit.categories[c] << "\" vs \"00\"\n";
            out << "  " << pad_right("", width) << pad("Coefficient", 12) << pad("SE", 9) << pad("CI lower", 10)
                << pad("CI upper", 10) << '\n';
            for (Eigen::Index k = 0; k < q; ++k) {
                const Eigen::Index flat = static_cast<Eigen::Index>(c) * q + k;
                const double nan = std::numeric_limits<double>::quiet_NaN();
                out << "  " << pad_right(fit.names[static_cast<std::size_t>(k)], width)
                    << pad(format_short(fit.gamma(k, static_cast<Eigen::Index>(c))), 12)
                    << pad(format_short(run.boot ? run.boot->gamma.se(flat) : nan), 9)
                    << pad(format_short(run.boot ? run.boot->gamma.percentile_lower(flat) : nan), 10)
                    << pad(format_short(run.boot ? run.boot->gamma.percentile_upper(flat) : nan), 10) << '\n';
            }
        }
    }
}

void write_profiles(const fs::path& dir, const std::vector<TauRun>& runs) {
    std::vector<PhiSurface> surfaces;
    for (const auto& r : runs) surfaces.push_back(r.estimate.surface);
    std::vector<std::string> covariates;
    for (const auto& c : surfaces.front().grid.covariate) {
        if (std::find(covariates.begin(), covariates.end(), c) == covariates.end()) covariates.push_back(c);
    }
    for (const auto& cov : covariates) {
        std::ofstream out = open_out(dir / ("phi_profile_" + file_stem_for(cov) + ".csv"));
        out << "tau,covariate,value,phi_hat,ci_lower,ci_upper,phi_min,phi_max,out_of_bounds_flag\n";
        for (const auto& row : phi_profile(surfaces, cov)) {
            out << format_full(row.tau) << ',' << row.covariate << ',' << format_full(row.value) << ','
                << format_full(row.phi_hat) << ',' << (row.ci_lower ? format_full(*row.ci_lower) : "") << ','
                << (row.ci_upper ? format_full(*row.ci_upper) : "") << ',' << format_full(row.phi_min) << ','
                << format_full(row.phi_max) << ',' << (row.out_of_bounds ? 1 : 0) << '\n';
        }
    }
}

void write_metadata(const fs::path& dir, const RunConfig& config, const IngestResult& ingested,
                    const std::vector<TauRun>& runs) {
    nlohmann::json meta;
    meta["version"] = kVersion;
    meta["config"] = to_json(config);
    meta["input"] = {{"path", config.input},
                     {"rows_read", ingested.rows_read},
                     {"rows_used", ingested.data.rows()},
                     {"rows_dropped", ingested.dropped_rows.size()},
                     {"dropped_rows", ingested.dropped_rows}};
    meta["rng"] = {{"algorithm", "mt19937_64 seeded by std::seed_seq(seed, replicate)"},
                   {"seed", config.bootstrap.seed}};
    nlohmann::json per_tau = nlohmann::json::array();
    for (const auto& run : runs) {
        const TwoStepResult& e = run.estimate;
        nlohmann::json t;
        t["tau"] = e.tau;
        for (std::size_t j = 0; j < 2; ++j) {
            t["step1"].push_back({{"response", config.analysis.responses[j]},
                                  {"objective", e.step1[j].objective},
                                  {"iterations", e.step1[j].iterations},
                                  {"converged", e.step1[j].converged}});
        }
        std::map<std::string, std::size_t> counts;
        for (Label l : kAllLabels) counts[std::string(to_string(l))] = 0;
        for (Label l : e.labels) ++counts[std::string(to_string(l))];
        t["label_counts"] = counts;
        t["step2"] = {{"categories", e.step2.categories},
                      {"converged", e.step2.converged},
                      {"iterations", e.step2.iterations},
                      {"log_likelihood", e.step2.log_likelihood},
                      {"warnings", e.step2.warnings}};
        std::size_t oob = 0, extrapolated = 0;
        for (std::size_t i = 0; i < e.surface.size(); ++i) {
            oob += e.surface.out_of_bounds(i) ? 1 : 0;
            extrapolated += e.surface.extrapolated[i] ? 1 : 0;
        }
        t["grid_rows"] = e.surface.size();
        t["out_of_bounds_rows"] = oob;
        t["extrapolated_rows"] = extrapolated;
        if (run.boot) {
            t["bootstrap"] = {{"replicates", run.boot->replicates},
                              {"failures", run.boot->failures},
                              {"step1_failures", run.boot->step1_failures},
                              {"failure_reasons", run.boot->failure_reasons}};
        }
        per_tau.push_back(std::move(t));
    }
    meta["runs"] = per_tau;
    std::ofstream out = open_out(dir / "run_metadata.json");
    out << meta.dump(2) << '\n';
}

}  // namespace

void run_analysis(const RunConfig& config, std::ostream& log) {
    AnalysisSpec spec = config.analysis;
    spec.taus = config.resolved_taus();
    spec.validate();
    if (config.input.empty()) throw ConfigError("no input file configured");

    const IngestResult ingested = ingest(config.input, spec.columns_used(), spec.binary_columns);
    log << "read " << ingested.rows_read << " rows from " << config.input << ", dropped "
        << ingested.dropped_rows.size() << " with missing values\n";
    const Dataset& data = ingested.data;
    const EvaluationGrid grid = make_grid(data, spec);

    std::vector<TauRun> runs;
    for (double tau : spec.taus) {
        TauRun run{run_two_step(data, spec, tau, grid), std::nullopt};
        if (config.bootstrap.enabled) {
            BootstrapOptions opts;
            opts.replicates = config.bootstrap.replicates;
            opts.seed = config.bootstrap.seed;
            opts.level = config.bootstrap.level;
            opts.threads = config.threads;
            try {
                run.boot = bootstrap(data, spec, run.estimate, opts);
            } catch (Error& e) {
                e.prepend_context("bootstrap (tau " + std::to_string(tau) + ")");
                throw;
            }
        }
        log << tau_label(tau) << ": step 2 " << (run.estimate.step2.converged ? "converged" : "did NOT converge")
            << " in " << run.estimate.step2.iterations << " iterations\n";
        runs.push_back(std::move(run));
    }

    const fs::path out_dir(config.output_dir);
    const fs::path staging = out_dir / ".quantcorr-staging";
    fs::create_directories(out_dir);
    fs::remove_all(staging);
    fs::create_directories(staging);
    try {
        write_step1(staging, config, runs);
        write_step2(staging, runs);
        write_profiles(staging, runs);
        write_metadata(staging, config, ingested, runs);
    } catch (...) {
        fs::remove_all(staging);
        throw;
    }
    for (const auto& entry : fs::directory_iterator(staging)) {
        fs::rename(entry.path(), out_dir / entry.path().filename());
    }
    fs::remove_all(staging);
    log << "wrote results to " << out_dir.string() << '\n';
}

int analyze(const RunConfig& config, std::ostream& log, std::ostream& err) {
    try {
        run_analysis(config, log);
        return 0;
    } catch (const std::exception& e) {
        err << "analyze failed: " << e.what() << '\n';
        return 1;
    }
}

std::string oracle_sidecar_path(const std::string& csv_path) {
    fs::path p(csv_path);
    const std::string stem = p.stem().string();
    return (p.parent_path() / (stem + "_oracle.csv")).string();
}

void run_synth(const ScenarioSpec& scenario, const std::string& csv_path) {
    const Dataset data = generate(scenario);
    const auto oracle = oracle_table(scenario);
    const fs::path path(csv_path);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    {
        std::ofstream out = open_out(path);
        write_csv(out, data);
    }
    std::ofstream side = open_out(oracle_sidecar_path(csv_path));
    side << "group,rho,tau,phi_oracle\n";
    for (const auto& row : oracle) {
        side << row.group << ',' << format_full(row.rho) << ',' << format_full(row.tau) << ','
             << format_full(row.phi) << '\n';
    }
}

int synth(const ScenarioSpec& scenario, const std::string& csv_path, std::ostream& err) {
    try {
        run_synth(scenario, csv_path);
        return 0;
    } catch (const std::exception& e) {
        err << "synth failed: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace quantcorr
