#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "quantcorr/concordance.hpp"
#include "quantcorr/qr_core.hpp"

namespace quantcorr {

// Multinomial logit for the concordance label with "00" as the reference:
//   log P(Z = c | x) / P(Z = "00" | x) = x' gamma_c.
// Unmerged categories are ("11", "01", "10"); merged mode pools the two
// discordant labels into "01+10" for exchangeable responses.
struct MultinomialFit {
    bool merged = false;
    std::vector<std::string> categories;
    std::vector<std::string> names;  // design columns
    Matrix gamma;                    // q2 x k, one column per category
    double tau = 0.5;
    double log_likelihood = 0.0;
    bool converged = false;
    int iterations = 0;
    double gradient_norm = 0.0;
    std::vector<double> loglik_trace;  // one entry per accepted Newton step
    std::optional<Matrix> vcov;        // (k q2) x (k q2), category-major
    std::vector<std::string> warnings;

    std::size_t num_categories() const { return categories.size(); }
};

struct MultinomialOptions {
    double gradient_tolerance = 1e-8;
    int max_iterations = 100;
    int max_halvings = 40;
    double separation_limit = 30.0;
};

// Category index used by the likelihood: 0 is the reference "00".
int category_index(Label label, bool merged);
std::vector<std::string> category_names(bool merged);

double multinomial_loglik(const Matrix& gamma, const Matrix& X, std::span<const Label> z, bool merged);

// Analytic gradient of the log-likelihood, flattened category-major
// (entry c * q2 + j is d loglik / d gamma(j, c)).
Vector loglik_gradient(const Matrix& gamma, const Matrix& X, std::span<const Label> z, bool merged);

// Newton-Raphson with step halving.
MultinomialFit fit_multinomial(const DesignMatrix& X2, std::span<const Label> z, bool merged, double tau,
                               const MultinomialOptions& options = {});

// Softmax over (0, x' gamma_11, x' gamma_01, x' gamma_10). In merged mode the
// pooled discordant probability is split equally between p01 and p10.
CellProbabilities predict_cells(const MultinomialFit& fit, const Vector& x);

}  // namespace quantcorr
