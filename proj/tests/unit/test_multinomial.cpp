#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "quantcorr/error.hpp"
#include "quantcorr/multinomial.hpp"

using namespace quantcorr;
namespace qt = quantcorr::testing;

namespace {

std::vector<Label> counts_to_labels(int c00, int c11, int c01, int c10) {
    std::vector<Label> z;
    z.insert(z.end(), c00, Label::C00);
    z.insert(z.end(), c11, Label::C11);
    z.insert(z.end(), c01, Label::C01);
    z.insert(z.end(), c10, Label::C10);
    return z;
}

DesignMatrix intercept_only(std::size_t n) {
    return DesignMatrix(Matrix::Ones(static_cast<Eigen::Index>(n), 1), {"(Intercept)"}, true);
}

// Labels drawn from a known multinomial logit with two covariates.
struct Problem {
    Matrix X;
    std::vector<Label> z;
};

Problem random_labels(std::mt19937_64& gen, int n, int q) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif;
    Problem p{Matrix(n, q), {}};
    Matrix gamma(q, 3);
    for (Eigen::Index j = 0; j < q; ++j)
        for (int c = 0; c < 3; ++c) gamma(j, c) = 0.6 * normal(gen);
    for (int i = 0; i < n; ++i) {
        p.X(i, 0) = 1.0;
        for (int j = 1; j < q; ++j) p.X(i, j) = normal(gen);
        const Eigen::RowVectorXd eta = p.X.row(i) * gamma;
        double w[4] = {1.0, std::exp(eta(0)), std::exp(eta(1)), std::exp(eta(2))};
        const double total = w[0] + w[1] + w[2] + w[3];
        double u = unif(gen) * total;
        int c = 0;
        while (c < 3 && u > w[c]) u -= w[c++];
        p.z.push_back(kAllLabels[static_cast<std::size_t>(c)]);
    }
    return p;
}

std::vector<std::string> names_for(int q) {
    std::vector<std::string> names{"(Intercept)"};
    for (int j = 1; j < q; ++j) names.push_back("x" + std::to_string(j));
    return names;
}

}  // namespace

TEST_CASE("uniform counts give zero intercepts") {
    const auto z = counts_to_labels(25, 25, 25, 25);
    const auto fit = fit_multinomial(intercept_only(z.size()), z, false, 0.5);
    CHECK(fit.converged);
    CHECK(fit.gamma.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(fit.categories == std::vector<std::string>{"11", "01", "10"});
}

TEST_CASE("intercept-only MLE equals log count ratios") {
    const auto z = counts_to_labels(40, 40, 10, 10);
    const auto fit = fit_multinomial(intercept_only(z.size()), z, false, 0.5);
    CHECK(fit.converged);
    CHECK(std::abs(fit.gamma(0, 0)) <= 1e-8);
    CHECK(std::abs(fit.gamma(0, 1) - (-1.3862943611198906)) <= 1e-8);
    CHECK(std::abs(fit.gamma(0, 2) - (-1.3862943611198906)) <= 1e-8);
    CHECK(fit.gradient_norm <= 1e-8);

    const auto cells = predict_cells(fit, Vector::Ones(1));
    CHECK(std::abs(cells.p00 - 0.4) <= 1e-10);
    CHECK(std::abs(cells.p11 - 0.4) <= 1e-10);
    CHECK(std::abs(cells.p01 - 0.1) <= 1e-10);
    CHECK(std::abs(cells.p10 - 0.1) <= 1e-10);
}

TEST_CASE("merged mode pools the discordant labels") {
    const auto z = counts_to_labels(40, 40, 10, 10);
    const auto fit = fit_multinomial(intercept_only(z.size()), z, true, 0.5);
    CHECK(fit.categories == std::vector<std::string>{"11", "01+10"});
    CHECK(fit.gamma.cols() == 2);
    CHECK(std::abs(fit.gamma(0, 0)) <= 1e-8);
    CHECK(std::abs(fit.gamma(0, 1) - (-0.6931471805599453)) <= 1e-8);
    const auto cells = predict_cells(fit, Vector::Ones(1));
    CHECK(cells.p01 == cells.p10);
    CHECK(std::abs(cells.p01 - 0.1) <= 1e-10);
    CHECK(std::abs(cells.p00 - 0.4) <= 1e-10);
}

TEST_CASE("saturated reproduction on unbalanced counts") {
    const auto z = counts_to_labels(57, 23, 11, 9);
    const auto fit = fit_multinomial(intercept_only(z.size()), z, false, 0.3);
    const auto cells = predict_cells(fit, Vector::Ones(1));
    const auto emp = empirical_cells(z, 0.3);
    for (Label l : kAllLabels) CHECK(std::abs(cells[l] - emp[l]) <= 1e-10);
}

TEST_CASE("gradient at zero is count minus n/4") {
    const auto z = counts_to_labels(12, 30, 7, 51);
    const Vector g = loglik_gradient(Matrix::Zero(1, 3), Matrix::Ones(100, 1), z, false);
    CHECK(g(0) == doctest::Approx(30 - 25.0));
    CHECK(g(1) == doctest::Approx(7 - 25.0));
    CHECK(g(2) == doctest::Approx(51 - 25.0));
}

TEST_CASE("analytic gradient matches central differences") {
    std::mt19937_64 gen(17);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = random_labels(gen, 50, 3);
        for (bool merged : {false, true}) {
            const Eigen::Index k = merged ? 2 : 3;
            Matrix gamma(3, k);
            for (Eigen::Index j = 0; j < 3; ++j)
                for (Eigen::Index c = 0; c < k; ++c) gamma(j, c) = normal(gen);
            Vector theta(3 * k);
            for (Eigen::Index c = 0; c < k; ++c) theta.segment(c * 3, 3) = gamma.col(c);
            auto f = [&](const Vector& t) {
                Matrix g(3, k);
                for (Eigen::Index c = 0; c < k; ++c) g.col(c) = t.segment(c * 3, 3);
                return multinomial_loglik(g, p.X, p.z, merged);
            };
            const Vector numeric = qt::central_difference(f, theta, 1e-6);
            const Vector analytic = loglik_gradient(gamma, p.X, p.z, merged);
            CHECK((numeric - analytic).norm() <= 1e-5 * std::max(1.0, analytic.norm()));
        }
    }
}

TEST_CASE("converged fits satisfy the first-order condition and ascend") {
    std::mt19937_64 gen(23);
    for (int trial = 0; trial < 10; ++trial) {
        const auto p = random_labels(gen, 400, 3);
        const auto fit = fit_multinomial(DesignMatrix(p.X, names_for(3), true), p.z, false, 0.5);
        REQUIRE(fit.converged);
        const Vector g = loglik_gradient(fit.gamma, p.X, p.z, false);
        // Tolerance is on the scaled parametrisation; raw-scale columns here are O(1).
        CHECK(g.norm() <= 1e-6);
        for (std::size_t i = 1; i < fit.loglik_trace.size(); ++i) {
            const double noise = 1e-12 * (1.0 + std::abs(fit.loglik_trace[i - 1]));
            CHECK(fit.loglik_trace[i] >= fit.loglik_trace[i - 1] - noise);
        }
        CHECK(fit.log_likelihood == doctest::Approx(multinomial_loglik(fit.gamma, p.X, p.z, false)));
        REQUIRE(fit.vcov.has_value());
        CHECK(fit.vcov->rows() == 9);
        CHECK((*fit.vcov - fit.vcov->transpose()).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(fit.vcov->diagonal().minCoeff() > 0.0);
    }
}

TEST_CASE("predicted cells sum to one") {
    std::mt19937_64 gen(29);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 1000; ++trial) {
        const bool merged = trial % 2 == 1;
        MultinomialFit fit;
        fit.merged = merged;
        fit.categories = category_names(merged);
        fit.gamma = Matrix(3, merged ? 2 : 3);
        for (Eigen::Index j = 0; j < fit.gamma.rows(); ++j)
            for (Eigen::Index c = 0; c < fit.gamma.cols(); ++c) fit.gamma(j, c) = 3.0 * normal(gen);
        Vector x(3);
        x << 1.0, 2.0 * normal(gen), 2.0 * normal(gen);
        const auto cells = predict_cells(fit, x);
        CHECK(std::abs(cells.sum() - 1.0) <= 1e-12);
    }
    MultinomialFit zero;
    zero.categories = category_names(false);
    zero.gamma = Matrix::Zero(2, 3);
    const auto cells = predict_cells(zero, Vector::Ones(2));
    for (Label l : kAllLabels) CHECK(cells[l] == doctest::Approx(0.25));
    CHECK_THROWS_AS(predict_cells(zero, Vector::Ones(3)), InvalidArgument);
}

TEST_CASE("merged and unmerged agree on balanced discordance") {
    // Two covariate patterns with exactly balanced 01/10 counts in each.
    std::vector<Label> z;
    Matrix X(0, 2);
    auto add = [&](double x, int c00, int c11, int c01, int c10) {
        const auto block = counts_to_labels(c00, c11, c01, c10);
        const Eigen::Index start = X.rows();
        X.conservativeResize(start + static_cast<Eigen::Index>(block.size()), 2);
        for (std::size_t i = 0; i < block.size(); ++i) {
            X(start + static_cast<Eigen::Index>(i), 0) = 1.0;
            X(start + static_cast<Eigen::Index>(i), 1) = x;
        }
        z.insert(z.end(), block.begin(), block.end());
    };
    add(0.0, 30, 20, 6, 6);
    add(1.0, 15, 35, 9, 9);
    const DesignMatrix D(X, {"(Intercept)", "g"}, true);
    const auto unmerged = fit_multinomial(D, z, false, 0.5);
    const auto merged = fit_multinomial(D, z, true, 0.5);
    for (double g : {0.0, 1.0}) {
        Vector x(2);
        x << 1.0, g;
        const auto a = predict_cells(unmerged, x);
        const auto b = predict_cells(merged, x);
        CHECK(std::abs((a.p01 + a.p10) - (b.p01 + b.p10)) <= 1e-8);
    }
}

TEST_CASE("empty category is an explicit error") {
    const auto z = counts_to_labels(30, 30, 10, 0);
    try {
        fit_multinomial(intercept_only(z.size()), z, false, 0.5);
        FAIL("expected EmptyCategory");
    } catch (const EmptyCategory& e) {
        CHECK(std::string(e.what()).find("merged") != std::string::npos);
    }
    CHECK_NOTHROW(fit_multinomial(intercept_only(z.size()), z, true, 0.5));
}

TEST_CASE("separation is reported as a warning") {
    // Labels are a step function of x: completely separated.
    std::vector<Label> z;
    Matrix X(80, 2);
    for (int i = 0; i < 80; ++i) {
        const double x = -1.0 + 2.0 * i / 79.0;
        X(i, 0) = 1.0;
        X(i, 1) = x;
        z.push_back(x < -0.5 ? Label::C00 : x < 0.0 ? Label::C01 : x < 0.5 ? Label::C10 : Label::C11);
    }
    const auto fit = fit_multinomial(DesignMatrix(X, {"(Intercept)", "x"}, true), z, false, 0.5);
    bool mentions = false;
    for (const auto& w : fit.warnings) mentions |= w.find("separation") != std::string::npos;
    CHECK(mentions);
}

TEST_CASE("shape errors") {
    const auto z = counts_to_labels(5, 5, 5, 5);
    CHECK_THROWS_AS(fit_multinomial(intercept_only(19), z, false, 0.5), InvalidArgument);
    CHECK_THROWS_AS(loglik_gradient(Matrix::Zero(2, 3), Matrix::Ones(20, 1), z, false), InvalidArgument);
    CHECK_THROWS_AS(fit_multinomial(intercept_only(0), std::vector<Label>{}, false, 0.5), InvalidArgument);
}
