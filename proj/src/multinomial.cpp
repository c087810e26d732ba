#include "quantcorr/multinomial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "quantcorr/error.hpp"

namespace quantcorr {

namespace {

struct Evaluation {
    double loglik = 0.0;
    Vector gradient;
    Matrix hessian;  // of the log-likelihood (negative semidefinite)
};

// probs(i, c) for c = 0..k (column 0 is the reference category).
Matrix softmax_rows(const Matrix& X, const Matrix& gamma) {
    const Matrix eta = X * gamma;
    const Eigen::Index k = gamma.cols();
    Matrix probs(X.rows(), k + 1);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double top = std::max(0.0, eta.row(i).maxCoeff());
        double denom = std::exp(-top);
        probs(i, 0) = denom;
        for (Eigen::Index c = 0; c < k; ++c) {
            probs(i, c + 1) = std::exp(eta(i, c) - top);
            denom += probs(i, c + 1);
        }
        probs.row(i) /= denom;
    }
    return probs;
}

Evaluation evaluate(const Matrix& gamma, const Matrix& X, const std::vector<int>& y, bool with_hessian) {
    const Eigen::Index n = X.rows();
    const Eigen::Index q = X.cols();
    const Eigen::Index k = gamma.cols();
    const Matrix eta = X * gamma;

    Evaluation ev;
    ev.gradient = Vector::Zero(k * q);
    Matrix resid(n, k);
    Matrix probs(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double top = std::max(0.0, eta.row(i).maxCoeff());
        double denom = std::exp(-top);
        for (Eigen::Index c = 0; c < k; ++c) denom += std::exp(eta(i, c) - top);
        const double log_denom = top + std::log(denom);
        const int yi = y[static_cast<std::size_t>(i)];
        ev.loglik += (yi == 0 ? 0.0 : eta(i, yi - 1)) - log_denom;
        for (Eigen::Index c = 0; c < k; ++c) {
            probs(i, c) = std::exp(eta(i, c) - log_denom);
            resid(i, c) = (yi == c + 1 ? 1.0 : 0.0) - probs(i, c);
        }
    }
    for (Eigen::Index c = 0; c < k; ++c) {
        ev.gradient.segment(c * q, q) = X.transpose() * resid.col(c);
    }
    if (with_hessian) {
        ev.hessian = Matrix::Zero(k * q, k * q);
        for (Eigen::Index c = 0; c < k; ++c) {
            for (Eigen::Index d = c; d < k; ++d) {
                Vector w(n);
                for (Eigen::Index i = 0; i < n; ++i) {
                    w(i) = probs(i, c) * ((c == d ? 1.0 : 0.0) - probs(i, d));
                }
                const Matrix block = -(X.transpose() * w.asDiagonal() * X);
                ev.hessian.block(c * q, d * q, q, q) = block;
                if (d != c) ev.hessian.block(d * q, c * q, q, q) = block.transpose();
            }
        }
    }
    return ev;
}

std::vector<int> encode(std::span<const Label> z, bool merged) {
    std::vector<int> y;
    y.reserve(z.size());
    for (Label l : z) y.push_back(category_index(l, merged));
    return y;
}

Matrix unflatten(const Vector& theta, Eigen::Index q, Eigen::Index k) {
    Matrix gamma(q, k);
    for (Eigen::Index c = 0; c < k; ++c) gamma.col(c) = theta.segment(c * q, q);
    return gamma;
}

}  // namespace

int category_index(Label label, bool merged) {
    switch (label) {
        case Label::C00: return 0;
        case Label::C11: return 1;
        case Label::C01: return 2;
        case Label::C10: return merged ? 2 : 3;
    }
    return 0;
}

std::vector<std::string> category_names(bool merged) {
    if (merged) return {"11", "01+10"};
    return {"11", "01", "10"};
}

double multinomial_loglik(const Matrix& gamma, const Matrix& X, std::span<const Label> z, bool merged) {
    return evaluate(gamma, X, encode(z, merged), false).loglik;
}

Vector loglik_gradient(const Matrix& gamma, const Matrix& X, std::span<const Label> z, bool merged) {
    if (static_cast<std::size_t>(X.rows()) != z.size()) {
        throw InvalidArgument("design rows and label count differ");
    }
    const Eigen::Index k = merged ? 2 : 3;
    if (gamma.rows() != X.cols() || gamma.cols() != k) {
        throw InvalidArgument("gamma must be q2 x " + std::to_string(k));
    }
    return evaluate(gamma, X, encode(z, merged), false).gradient;
}

MultinomialFit fit_multinomial(const DesignMatrix& X2, std::span<const Label> z, bool merged, double tau,
                               const MultinomialOptions& options) {
    if (z.empty()) throw InvalidArgument("no concordance labels to model");
    if (z.size() != X2.rows()) {
        throw InvalidArgument("step-2 design has " + std::to_string(X2.rows()) + " rows but " +
                              std::to_string(z.size()) + " labels were given");
    }
    require_full_rank(X2);

    MultinomialFit fit;
    fit.merged = merged;
    fit.categories = category_names(merged);
    fit.names = X2.names();
    fit.tau = tau;

    const std::vector<int> y = encode(z, merged);
    const Eigen::Index k = static_cast<Eigen::Index>(fit.categories.size());
    {
        std::vector<std::size_t> counts(static_cast<std::size_t>(k) + 1, 0);
        for (int c : y) ++counts[static_cast<std::size_t>(c)];
        for (std::size_t c = 0; c < counts.size(); ++c) {
            if (counts[c] == 0) {
                const std::string name = c == 0 ? "00" : fit.categories[c - 1];
                throw EmptyCategory("concordance category \"" + name +
                                    "\" has no observations; use merged mode or coarser step-2 covariates");
            }
        }
    }

    // Work on columns scaled to unit RMS; the MLE is equivariant, and the
    // gradient tolerance is then independent of covariate units.
    const Matrix& raw = X2.values();
    const Eigen::Index n = raw.rows();
    const Eigen::Index q = raw.cols();
    Vector scale(q);
    for (Eigen::Index j = 0; j < q; ++j) {
        const double rms = std::sqrt(raw.col(j).squaredNorm() / static_cast<double>(n));
        scale(j) = rms > 0.0 ? rms : 1.0;
    }
    const Matrix X = raw * scale.cwiseInverse().asDiagonal();

    Vector theta = Vector::Zero(k * q);
    Evaluation ev = evaluate(unflatten(theta, q, k), X, y, true);
    fit.loglik_trace.push_back(ev.loglik);
    int it = 0;
    while (ev.gradient.norm() > options.gradient_tolerance && it < options.max_iterations) {
        ++it;
        const Vector step = (-ev.hessian).ldlt().solve(ev.gradient);
        double length = 1.0;
        bool accepted = false;
        for (int h = 0; h <= options.max_halvings; ++h, length *= 0.5) {
            const Vector candidate = theta + length * step;
            Evaluation next = evaluate(unflatten(candidate, q, k), X, y, true);
            // Near the optimum the gain drops below rounding noise in the
            // summed log-likelihood; accept then if the gradient shrinks.
            const double noise = 1e-12 * (1.0 + std::abs(ev.loglik));
            const bool ascent = next.loglik >= ev.loglik ||
                                (next.loglik >= ev.loglik - noise && next.gradient.norm() < ev.gradient.norm());
            if (std::isfinite(next.loglik) && ascent) {
                theta = candidate;
                ev = std::move(next);
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        fit.loglik_trace.push_back(ev.loglik);
    }

    fit.iterations = it;
    fit.gradient_norm = ev.gradient.norm();
    fit.converged = fit.gradient_norm <= options.gradient_tolerance;
    fit.log_likelihood = ev.loglik;

    const Matrix gamma_scaled = unflatten(theta, q, k);
    fit.gamma = scale.cwiseInverse().asDiagonal() * gamma_scaled;

    Eigen::LDLT<Matrix> info(-ev.hessian);
    if (info.info() == Eigen::Success && info.isPositive() && info.vectorD().minCoeff() > 0.0) {
        Matrix cov = info.solve(Matrix::Identity(k * q, k * q));
        Vector unscale(k * q);
        for (Eigen::Index c = 0; c < k; ++c) unscale.segment(c * q, q) = scale.cwiseInverse();
        fit.vcov = unscale.asDiagonal() * cov * unscale.asDiagonal();
    }

    // Separation: coefficients on standardised covariates growing without bound.
    for (Eigen::Index j = 0; j < q; ++j) {
        const auto col = raw.col(j);
        const double mean = col.mean();
        const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(n));
        const double unit = sd > 0.0 ? sd : 1.0;
        for (Eigen::Index c = 0; c < k; ++c) {
            if (std::abs(fit.gamma(j, c)) * unit > options.separation_limit) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.3g", fit.gamma(j, c) * unit);
                fit.warnings.push_back("possible separation: standardised coefficient of '" + fit.names[static_cast<std::size_t>(j)] +
                                       "' for category \"" + fit.categories[static_cast<std::size_t>(c)] + "\" is " + buf);
            }
        }
    }
    if (!fit.converged) {
        fit.warnings.push_back("Newton iterations stopped with gradient norm " + std::to_string(fit.gradient_norm));
    }
    return fit;
}

CellProbabilities predict_cells(const MultinomialFit& fit, const Vector& x) {
    if (x.size() != fit.gamma.rows()) {
        throw InvalidArgument("covariate vector has " + std::to_string(x.size()) + " entries, model expects " +
                              std::to_string(fit.gamma.rows()));
    }
    const Matrix probs = softmax_rows(x.transpose(), fit.gamma);
    CellProbabilities cells;
    cells.tau = fit.tau;
    cells.p00 = probs(0, 0);
    cells.p11 = probs(0, 1);
    if (fit.merged) {
        cells.p01 = 0.5 * probs(0, 2);
        cells.p10 = cells.p01;
    } else {
        cells.p01 = probs(0, 2);
        cells.p10 = probs(0, 3);
    }
    return cells;
}

}  // namespace quantcorr
