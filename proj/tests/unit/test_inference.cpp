#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include <boost/math/distributions/beta.hpp>

#include "doctest.h"
#include "quantcorr/error.hpp"
#include "quantcorr/inference.hpp"
#include "quantcorr/synthetic.hpp"

using namespace quantcorr;

namespace {

Dataset small_data(std::size_t n, std::uint64_t seed) {
    ScenarioSpec s;
    s.n = n;
    s.rho = 0.5;
    s.seed = seed;
    s.covariates = {{"x", CovariateGenerator::Kind::uniform, 0.0, 1.0, 0.5, false}};
    s.beta1 = {0.0, 1.0};
    s.beta2 = {0.5, -1.0};
    return generate(s);
}

AnalysisSpec x_spec() {
    AnalysisSpec spec;
    spec.step1_terms = {TermSpec::identity("x")};
    spec.step2_terms = {TermSpec::identity("x")};
    spec.grids = {GridSpec{"x", {0.25, 0.5, 0.75}, 100, {}}};
    return spec;
}

double logit_u(double phi, double tau) {
    const auto b = phi_bounds(tau);
    const double u = (phi - b.phi_min) / (b.phi_max - b.phi_min);
    return std::log(u / (1.0 - u));
}

std::size_t row_hash(const Dataset& d, std::size_t i) {
    std::size_t h = 0;
    for (std::size_t c = 0; c < d.cols(); ++c) h = h * 1000003u ^ std::hash<double>{}(d.column(c)[i]);
    return h;
}

bool same_result(const BootstrapResult& a, const BootstrapResult& b) {
    if (a.step2_ok != b.step2_ok || a.failures != b.failures || a.phi_draws != b.phi_draws) return false;
    if (a.gamma_draws.size() != b.gamma_draws.size()) return false;
    for (std::size_t i = 0; i < a.gamma_draws.size(); ++i)
        if (a.gamma_draws[i] != b.gamma_draws[i]) return false;
    for (std::size_t j = 0; j < 2; ++j) {
        if (a.beta_draws[j].size() != b.beta_draws[j].size()) return false;
        for (std::size_t i = 0; i < a.beta_draws[j].size(); ++i)
            if (a.beta_draws[j][i] != b.beta_draws[j][i]) return false;
    }
    return a.phi_se == b.phi_se;
}

}  // namespace

TEST_CASE("resampling is deterministic per replicate and in range") {
    const auto a = resample_indices(50, 42, 3);
    const auto b = resample_indices(50, 42, 3);
    const auto c = resample_indices(50, 42, 4);
    const auto d = resample_indices(50, 43, 3);
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a != d);
    CHECK(a.size() == 50);
    CHECK(*std::max_element(a.begin(), a.end()) < 50);
}

TEST_CASE("resampled rows are exact copies of original rows") {
    const Dataset data = small_data(50, 1);
    std::set<std::size_t> originals;
    for (std::size_t i = 0; i < data.rows(); ++i) originals.insert(row_hash(data, i));
    for (std::size_t r = 0; r < 20; ++r) {
        const auto idx = resample_indices(data.rows(), 9, r);
        const Dataset rep = data.take_rows(idx);
        for (std::size_t i = 0; i < rep.rows(); ++i) {
            CHECK(originals.count(row_hash(rep, i)) == 1);
            CHECK(rep.row_ids()[i] == data.row_ids()[idx[i]]);
        }
    }
}

TEST_CASE("replicate draws equal a refit on the resampled rows") {
    const Dataset data = small_data(200, 2);
    const AnalysisSpec spec = x_spec();
    BootstrapOptions opts;
    opts.replicates = 5;
    opts.seed = 77;
    const BootstrapResult res = bootstrap(data, spec, 0.5, opts);
    REQUIRE(res.step2_ok.size() == 5);
    const std::size_t r = res.step2_ok[2];
    const auto idx = resample_indices(data.rows(), 77, r);
    TwoStepResult refit = run_two_step(data.take_rows(idx), spec, 0.5, make_grid(data, spec));
    CHECK(res.beta_draws[0][2] == refit.step1[0].beta);
    CHECK(res.beta_draws[1][2] == refit.step1[1].beta);
    CHECK(res.phi_draws[2] == refit.surface.phi_hat);
}

TEST_CASE("bootstrap is reproducible and thread-count independent") {
    const Dataset data = small_data(150, 3);
    const AnalysisSpec spec = x_spec();
    BootstrapOptions opts;
    opts.replicates = 40;
    opts.seed = 2024;
    const BootstrapResult a = bootstrap(data, spec, 0.4, opts);
    const BootstrapResult b = bootstrap(data, spec, 0.4, opts);
    opts.threads = 3;
    const BootstrapResult c = bootstrap(data, spec, 0.4, opts);
    CHECK(same_result(a, b));
    CHECK(same_result(a, c));
    CHECK(a.phi_draws.size() == a.replicates - a.failures);
    CHECK(a.gamma_draws.size() == a.replicates - a.failures);
    opts.seed = 2025;
    const BootstrapResult d = bootstrap(data, spec, 0.4, opts);
    CHECK(!same_result(a, d));
}

TEST_CASE("bootstrap fills the surface bands and coefficient summaries") {
    const Dataset data = small_data(300, 4);
    const AnalysisSpec spec = x_spec();
    TwoStepResult est = run_two_step(data, spec, 0.5);
    BootstrapOptions opts;
    opts.replicates = 60;
    const BootstrapResult res = bootstrap(data, spec, est, opts);
    REQUIRE(est.surface.lower.has_value());
    REQUIRE(est.surface.upper.has_value());
    for (std::size_t i = 0; i < est.surface.size(); ++i) {
        CHECK((*est.surface.lower)[i] <= est.surface.phi_hat[i]);
        CHECK(est.surface.phi_hat[i] <= (*est.surface.upper)[i]);
        CHECK(res.phi_se[i] > 0.0);
    }
    CHECK(res.gamma.se.size() == 6);
    CHECK(res.beta[0].se.size() == 2);
    for (Eigen::Index j = 0; j < res.gamma.se.size(); ++j) {
        CHECK(res.gamma.wald_lower(j) < res.gamma.estimate(j));
        CHECK(res.gamma.percentile_lower(j) <= res.gamma.percentile_upper(j));
    }
}

TEST_CASE("responses without residual variance leave no discordance to model") {
    Dataset d;
    std::vector<double> x(40), y(40);
    for (std::size_t i = 0; i < 40; ++i) {
        x[i] = static_cast<double>(i);
        y[i] = 2.0 + 0.5 * x[i];
    }
    d.add_column("y1", y);
    d.add_column("y2", y);
    d.add_column("x", x);
    AnalysisSpec spec;
    spec.step1_terms = {TermSpec::identity("x")};
    BootstrapOptions opts;
    opts.replicates = 10;
    // Every residual is zero, so every label is "11".
    CHECK_THROWS_AS(bootstrap(d, spec, 0.5, opts), EmptyCategory);
}

TEST_CASE("too many failed replicates is an error carrying partial results") {
    // Two rows carry all of the discordance; most resamples lose one of them.
    Dataset d;
    std::vector<double> y1(60), y2(60);
    for (std::size_t i = 0; i < 60; ++i) y1[i] = y2[i] = static_cast<double>((i * 37) % 60);
    const auto lo = static_cast<std::size_t>(std::min_element(y1.begin(), y1.end()) - y1.begin());
    const auto hi = static_cast<std::size_t>(std::max_element(y1.begin(), y1.end()) - y1.begin());
    std::swap(y2[lo], y2[hi]);
    d.add_column("y1", y1);
    d.add_column("y2", y2);
    BootstrapOptions opts;
    opts.replicates = 50;
    try {
        bootstrap(d, AnalysisSpec{}, 0.5, opts);
        FAIL("expected InferenceUnreliable");
    } catch (const InferenceUnreliable& e) {
        const BootstrapResult& partial = e.partial();
        CHECK(partial.failures > 10);
        CHECK(partial.phi_draws.size() == 50 - partial.failures);
        CHECK(!partial.failure_reasons.empty());
    }
}

TEST_CASE("phi interval: constant draws give a point") {
    const std::vector<double> draws(100, 0.3);
    const auto iv = phi_interval(draws, 0.3, 0.5, 0.95);
    CHECK(iv.lower == 0.3);
    CHECK(iv.upper == 0.3);
    CHECK(!iv.degenerate);
}

TEST_CASE("phi interval: symmetric draws at the median") {
    std::vector<double> draws;
    for (int i = 1; i <= 50; ++i) {
        draws.push_back(0.01 * i);
        draws.push_back(-0.01 * i);
    }
    const auto iv = phi_interval(draws, 0.0, 0.5, 0.9);
    CHECK(iv.lower < 0.0);
    CHECK(iv.upper > 0.0);
    CHECK(std::abs(logit_u(iv.lower, 0.5) + logit_u(iv.upper, 0.5)) <= 1e-12);
}

TEST_CASE("phi interval matches the Beta reference computation") {
    // u-draws are the Beta(6, 3) quantiles at (i - 0.5) / m; reference values
    // from tests/oracles/beta_interval_oracle.py.
    const double tau = 0.3;
    const auto b = phi_bounds(tau);
    const boost::math::beta_distribution<double> beta(6.0, 3.0);
    const int m = 20000;
    std::vector<double> draws;
    for (int i = 1; i <= m; ++i) {
        const double u = boost::math::quantile(beta, (i - 0.5) / m);
        draws.push_back(b.phi_min + (b.phi_max - b.phi_min) * u);
    }
    const double estimate = 0.5238095238095237;
    const auto iv = phi_interval(draws, estimate, tau, 0.95);
    CHECK(std::abs(iv.lower - 0.015945624082592036) <= 0.01);
    CHECK(std::abs(iv.upper - 0.8550415797237365) <= 0.01);
    CHECK(iv.winsorized == 0);
}

TEST_CASE("phi interval: winsorising and degenerate boundaries") {
    std::vector<double> draws{0.2, 0.4, 1.0, 1.3, 0.1};
    const auto iv = phi_interval(draws, 0.3, 0.5, 0.95);
    CHECK(iv.winsorized == 2);
    CHECK(iv.lower <= 0.3);
    CHECK(iv.upper >= 0.3);
    CHECK(iv.upper <= 1.0);

    const std::vector<double> top(20, 1.0);
    const auto deg = phi_interval(top, 1.0, 0.5, 0.95);
    CHECK(deg.degenerate);
    CHECK(deg.lower == 1.0);
    CHECK(deg.upper == 1.0);

    const std::vector<double> bottom(20, -1.0 / 9.0);
    const auto low = phi_interval(bottom, -1.0 / 9.0, 0.1, 0.95);
    CHECK(low.degenerate);
    CHECK(low.lower == doctest::Approx(-1.0 / 9.0));

    CHECK_THROWS_AS(phi_interval(std::vector<double>{}, 0.0, 0.5, 0.95), InvalidArgument);
    CHECK_THROWS_AS(phi_interval(draws, 0.0, 0.5, 1.0), InvalidArgument);
}

TEST_CASE("phi interval contains the estimate and widens with the level") {
    std::vector<double> draws;
    for (int i = 0; i < 200; ++i) draws.push_back(0.2 + 0.3 * std::sin(0.7 * i));
    for (double est : {-0.5, 0.0, 0.2, 0.6, 0.95}) {
        const auto narrow = phi_interval(draws, est, 0.5, 0.8);
        const auto wide = phi_interval(draws, est, 0.5, 0.99);
        CHECK(narrow.lower <= est);
        CHECK(est <= narrow.upper);
        CHECK(wide.lower <= narrow.lower);
        CHECK(wide.upper >= narrow.upper);
    }
}
