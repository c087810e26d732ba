#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "quantcorr/concordance.hpp"
#include "quantcorr/error.hpp"
#include "quantcorr/random.hpp"
#include "quantcorr/synthetic.hpp"

using namespace quantcorr;
namespace qt = quantcorr::testing;

namespace {

std::vector<double> as_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

std::vector<double> tau_grid() {
    std::vector<double> taus;
    for (int k = 1; k <= 19; ++k) taus.push_back(0.05 * k);
    return taus;
}

}  // namespace

TEST_CASE("rng streams are reproducible and distinct") {
    Rng a(5, 0), b(5, 0), c(5, 1);
    for (int i = 0; i < 10; ++i) {
        const double u = a.uniform();
        CHECK(u == b.uniform());
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
    Rng d(5, 0);
    CHECK(d.uniform() != c.uniform());
    Rng e(8);
    for (int i = 0; i < 1000; ++i) CHECK(e.index(7) < 7);
}

TEST_CASE("scenario validation") {
    ScenarioSpec s;
    CHECK_NOTHROW(s.validate());
    s.n = 10;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s.n = 100;
    s.rho = 1.0;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s.rho = 0.2;
    s.beta1 = {1.0, 2.0};
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s.beta1.clear();
    s.rho_by_group = GroupDependence{"g", 0.1, 0.2};
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
}

TEST_CASE("generate is deterministic in the seed") {
    ScenarioSpec s;
    s.n = 200;
    s.rho = 0.3;
    s.covariates = {{"x", CovariateGenerator::Kind::uniform, -1.0, 1.0, 0.5, false}};
    s.beta1 = {0.0, 1.0};
    const Dataset a = generate(s);
    const Dataset b = generate(s);
    for (std::size_t c = 0; c < a.cols(); ++c) CHECK(as_vector(a.column(c)) == as_vector(b.column(c)));
    s.seed = 2;
    const Dataset c = generate(s);
    CHECK(as_vector(a.column("y1")) != as_vector(c.column("y1")));
    CHECK(a.names() == std::vector<std::string>{"y1", "y2", "x"});
}

TEST_CASE("independent errors are uncorrelated") {
    ScenarioSpec s;
    s.n = 4000;
    s.rho = 0.0;
    s.seed = 3;
    const Dataset d = generate(s);
    const double r = qt::pearson(as_vector(d.column("y1")), as_vector(d.column("y2")));
    CHECK(std::abs(r) <= 3.0 / std::sqrt(4000.0));
}

TEST_CASE("strong correlation is reproduced") {
    ScenarioSpec s;
    s.n = 10000;
    s.rho = 0.9;
    s.seed = 4;
    const Dataset d = generate(s);
    const double r = qt::pearson(as_vector(d.column("y1")), as_vector(d.column("y2")));
    CHECK(std::abs(r - 0.9) <= 3.0 * (1.0 - 0.81) / std::sqrt(10000.0));
}

TEST_CASE("zero coefficients leave the raw errors") {
    ScenarioSpec s;
    s.n = 100;
    s.rho = 0.4;
    s.covariates = {{"x", CovariateGenerator::Kind::uniform, 0.0, 5.0, 0.5, false}};
    const Dataset none = generate(s);
    s.beta1 = {0.0, 0.0};
    s.beta2 = {0.0, 0.0};
    const Dataset zeros = generate(s);
    CHECK(as_vector(none.column("y1")) == as_vector(zeros.column("y1")));
    CHECK(as_vector(none.column("y2")) == as_vector(zeros.column("y2")));
    s.beta1 = {2.0, 0.0};
    const Dataset shifted = generate(s);
    for (std::size_t i = 0; i < 100; ++i) CHECK(shifted.column("y1")[i] == none.column("y1")[i] + 2.0);
}

TEST_CASE("balanced binary covariates and grouped dependence") {
    ScenarioSpec s;
    s.n = 4000;
    s.covariates = {{"g", CovariateGenerator::Kind::binary, 0.0, 1.0, 0.5, true}};
    s.rho_by_group = GroupDependence{"g", 0.2, 0.8};
    const Dataset d = generate(s);
    const auto g = d.column("g");
    CHECK(std::accumulate(g.begin(), g.end(), 0.0) == 2000.0);
    std::vector<double> a0, b0, a1, b1;
    for (std::size_t i = 0; i < d.rows(); ++i) {
        auto& a = g[i] == 1.0 ? a1 : a0;
        auto& b = g[i] == 1.0 ? b1 : b0;
        a.push_back(d.column("y1")[i]);
        b.push_back(d.column("y2")[i]);
    }
    CHECK(std::abs(qt::pearson(a0, b0) - 0.2) <= 3.0 * (1.0 - 0.04) / std::sqrt(2000.0));
    CHECK(std::abs(qt::pearson(a1, b1) - 0.8) <= 3.0 * (1.0 - 0.64) / std::sqrt(2000.0));

    const auto table = oracle_table(s);
    REQUIRE(table.size() == 6);
    CHECK(table[0].group == "0");
    CHECK(table[1].group == "1");
    CHECK(table[1].rho == 0.8);
    CHECK(table[3].phi == doctest::Approx(oracle_phi_gaussian(0.8, 0.5)));
}

TEST_CASE("exchanged responses keep the joint law") {
    ScenarioSpec s;
    s.n = 20000;
    s.rho = 0.5;
    s.exchange_probability = 0.5;
    s.beta1 = {1.0};
    s.beta2 = {-1.0};
    const Dataset d = generate(s);
    const auto y1 = d.column("y1");
    const double mean = std::accumulate(y1.begin(), y1.end(), 0.0) / 20000.0;
    CHECK(std::abs(mean) <= 0.05);
}

TEST_CASE("normal quantile and cdf") {
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    for (double p : {0.01, 0.3, 0.5, 0.9}) CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-13));
}

TEST_CASE("bivariate normal cdf agrees with the Plackett integral") {
    for (double rho : {-0.9, -0.4, 0.0, 0.3, 0.7, 0.95}) {
        for (double h : {-1.5, 0.0, 0.8}) {
            for (double k : {-0.7, 0.0, 1.9}) {
                CHECK(std::abs(bivariate_normal_cdf(h, k, rho) - qt::plackett_bvn_cdf(h, k, rho)) <= 1e-9);
            }
        }
    }
}

TEST_CASE("oracle phi closed forms") {
    for (double tau : {0.1, 0.5, 0.9}) CHECK(std::abs(oracle_phi_gaussian(0.0, tau)) <= 1e-12);
    CHECK(std::abs(oracle_phi_gaussian(0.5, 0.5) - 1.0 / 3.0) <= 1e-9);
    for (double rho : {-0.8, -0.3, 0.2, 0.6, 0.95}) {
        CHECK(std::abs(oracle_phi_gaussian(rho, 0.5) - qt::arcsine_phi_at_median(rho)) <= 1e-9);
    }
    for (double tau : {0.1, 0.3, 0.7}) CHECK(oracle_phi_gaussian(1.0 - 1e-9, tau) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("oracle phi is monotone, symmetric in tau, and bounded") {
    for (double tau : tau_grid()) {
        CAPTURE(tau);
        double prev = -2.0;
        const auto b = phi_bounds(tau);
        for (int i = -19; i <= 19; ++i) {
            const double rho = 0.05 * i;
            const double v = oracle_phi_gaussian(rho, tau);
            CHECK(v > prev);
            prev = v;
            CHECK(std::abs(v - oracle_phi_gaussian(rho, 1.0 - tau)) <= 1e-6);
            CHECK(v >= b.phi_min);
            CHECK(v <= b.phi_max);
        }
    }
}

TEST_CASE("oracle phi agrees with a large Monte Carlo sample") {
    // 1e7 draws; standard error of the cell frequency is below 2e-4.
    const double rho = 0.5;
    for (double tau : {0.1, 0.5}) {
        std::mt19937_64 gen(1234);
        std::normal_distribution<double> normal;
        const double z = normal_quantile(tau);
        const double s = std::sqrt(1.0 - rho * rho);
        long hits = 0;
        const long m = 10'000'000;
        for (long i = 0; i < m; ++i) {
            const double a = normal(gen);
            const double b = rho * a + s * normal(gen);
            hits += (a <= z && b <= z);
        }
        const double cell = static_cast<double>(hits) / static_cast<double>(m);
        const double mc = (cell - tau * tau) / (tau * (1.0 - tau));
        const double se = std::sqrt(cell * (1.0 - cell) / static_cast<double>(m)) / (tau * (1.0 - tau));
        CHECK(std::abs(mc - oracle_phi_gaussian(rho, tau)) <= 4.0 * se);
    }
}
