#include "quantcorr/qr_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "quantcorr/error.hpp"

namespace quantcorr {

namespace {

void require_tau(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw InvalidArgument("tau must lie strictly inside (0, 1), got " + std::to_string(tau));
    }
}

double median_of(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
}

// Robust scale of y used to set the smoothing schedule.
double response_scale(const Vector& y) {
    std::vector<double> v(y.data(), y.data() + y.size());
    const double med = median_of(v);
    double s = 0.0;
    for (double yi : v) s += std::abs(yi - med);
    s /= static_cast<double>(v.size());
    if (s == 0.0) s = y.cwiseAbs().maxCoeff();
    return s > 0.0 ? s : 1.0;
}

// Pick q linearly independent rows, preferring small |residual|.
std::vector<std::size_t> initial_basis(const Matrix& X, const Vector& r) {
    const Eigen::Index n = X.rows();
    const Eigen::Index q = X.cols();
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(r(static_cast<Eigen::Index>(a))) < std::abs(r(static_cast<Eigen::Index>(b)));
    });

    std::vector<std::size_t> basis;
    Matrix ortho(q, q);
    Eigen::Index found = 0;
    for (std::size_t i : order) {
        Vector v = X.row(static_cast<Eigen::Index>(i)).transpose();
        const double norm = v.norm();
        if (norm == 0.0) continue;
        v /= norm;
        for (Eigen::Index j = 0; j < found; ++j) v -= ortho.col(j).dot(v) * ortho.col(j);
        const double rest = v.norm();
        if (rest > 1e-8) {
            ortho.col(found++) = v / rest;
            basis.push_back(i);
            if (found == q) break;
        }
    }
    if (found < q) {
        throw SingularDesign("design rows do not span the column space", {});
    }
    return basis;
}

// Smoothed check-function majorisation (IRLS). Returns the iteration count.
int irls_warm_start(const Matrix& X, const Vector& y, double tau, const QuantileOptions& options,
                    Vector& beta, bool& converged) {
    const double scale = response_scale(y);
    const double h_floor = 1e-7 * scale;
    double h = 0.1 * scale;

    beta = (X.transpose() * X).ldlt().solve(X.transpose() * y);
    Vector r = y - X * beta;
    double objective = pinball_objective(r, tau);
    const Vector linear = (2.0 * tau - 1.0) * X.transpose() * Vector::Ones(X.rows());

    converged = objective == 0.0;
    int it = 0;
    while (!converged && it < options.max_iterations) {
        ++it;
        const Vector w = r.cwiseAbs().cwiseMax(h).cwiseInverse();
        const Matrix A = X.transpose() * w.asDiagonal() * X;
        const Vector b = X.transpose() * w.cwiseProduct(y) + linear;
        const Vector next = A.ldlt().solve(b);
        const Vector r_next = y - X * next;
        const double obj_next = pinball_objective(r_next, tau);
        const double change = std::abs(objective - obj_next) / std::max(objective, std::numeric_limits<double>::min());
        if (obj_next <= objective) {
            beta = next;
            r = r_next;
        }
        const bool stalled = change < options.tolerance;
        objective = std::min(objective, obj_next);
        if (objective == 0.0 || (stalled && h <= h_floor)) {
            converged = true;
        } else if (change < 1e-4 || stalled) {
            h = std::max(0.1 * h, h_floor);
        }
    }
    return it;
}

struct Direction {
    Eigen::Index k = -1;
    int sign = 0;
    double slope = 0.0;
};

}  // namespace

DesignMatrix::DesignMatrix(Matrix values, std::vector<std::string> names, bool intercept)
    : values_(std::move(values)), names_(std::move(names)), intercept_(intercept) {
    if (names_.size() != cols()) {
        throw InvalidArgument("design has " + std::to_string(cols()) + " columns but " +
                              std::to_string(names_.size()) + " names");
    }
    std::set<std::string> seen;
    for (const auto& name : names_) {
        if (!seen.insert(name).second) throw InvalidArgument("duplicate design column '" + name + "'");
    }
    if (!values_.allFinite()) {
        throw InvalidArgument("design matrix contains non-finite entries");
    }
    if (intercept_) {
        if (cols() == 0 || !(values_.col(0).array() == 1.0).all()) {
            throw InvalidArgument("intercept flag set but column 0 is not identically 1");
        }
    }
}

void require_full_rank(const DesignMatrix& X) {
    const std::size_t n = X.rows();
    const std::size_t q = X.cols();
    if (q == 0) throw SingularDesign("design has no columns", {});
    if (n < q + 1) {
        throw SingularDesign("design has " + std::to_string(n) + " rows for " + std::to_string(q) +
                                 " columns; at least q + 1 rows are required",
                             {});
    }
    std::vector<std::string> bad;
    if (X.intercept()) {
        for (std::size_t j = 1; j < q; ++j) {
            const auto col = X.values().col(static_cast<Eigen::Index>(j));
            if ((col.array() == col(0)).all()) bad.push_back(X.names()[j]);
        }
    }
    if (bad.empty()) {
        Matrix scaled = X.values();
        for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
            const double norm = scaled.col(j).norm();
            if (norm > 0.0) scaled.col(j) /= norm;
        }
        Eigen::ColPivHouseholderQR<Matrix> qr(scaled);
        qr.setThreshold(1e-10);
        const Eigen::Index rank = qr.rank();
        for (Eigen::Index j = rank; j < scaled.cols(); ++j) {
            bad.push_back(X.names()[static_cast<std::size_t>(qr.colsPermutation().indices()(j))]);
        }
    }
    if (!bad.empty()) {
        std::string list;
        for (const auto& b : bad) list += (list.empty() ? "" : ", ") + b;
        throw SingularDesign("rank-deficient design; dependent or constant columns: " + list, bad);
    }
}

double pinball_loss(double u, double tau) {
    require_tau(tau);
    if (!std::isfinite(u)) throw InvalidArgument("pinball loss argument must be finite");
    return u > 0.0 ? tau * u : (tau - 1.0) * u;
}

double pinball_objective(const Vector& residuals, double tau) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < residuals.size(); ++i) {
        const double u = residuals(i);
        total += u > 0.0 ? tau * u : (tau - 1.0) * u;
    }
    return total;
}

QuantileFit fit_quantile_regression(const DesignMatrix& design, const Vector& y, double tau,
                                    const QuantileOptions& options) {
    require_tau(tau);
    if (static_cast<std::size_t>(y.size()) != design.rows()) {
        throw InvalidArgument("response has " + std::to_string(y.size()) + " entries, design has " +
                              std::to_string(design.rows()) + " rows");
    }
    if (!y.allFinite()) throw InvalidArgument("response contains non-finite values");
    require_full_rank(design);

    const Matrix& X = design.values();
    const Eigen::Index n = X.rows();
    const Eigen::Index q = X.cols();

    QuantileFit fit;
    fit.tau = tau;
    fit.names = design.names();

    Vector beta;
    bool irls_converged = false;
    fit.iterations = irls_warm_start(X, y, tau, options, beta, irls_converged);

    // Exact descent over basic solutions (simplex on the LP form). Each step
    // moves along one edge: basic observation k leaves, the first breakpoint
    // at which the directional derivative turns nonnegative enters.
    //
    // The descent runs on y plus a tiny deterministic jitter so that tied
    // rows (duplicates in bootstrap samples, exact fits) do not produce
    // degenerate vertices. An optimal basis for the jittered problem is
    // optimal for y itself; beta is recomputed from it on y below.
    const double jitter = 1e-9 * response_scale(y);
    Vector yw(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double frac = std::fmod(static_cast<double>(i + 1) * 0.6180339887498949, 1.0);
        yw(i) = y(i) + jitter * (frac - 0.5);
    }
    std::vector<std::size_t> basis = initial_basis(X, yw - X * beta);
    const int max_pivots = options.max_pivots > 0 ? options.max_pivots : static_cast<int>(50 * (n + q));
    int degenerate_run = 0;
    bool optimal = false;
    Vector r(n);
    std::vector<char> in_basis(static_cast<std::size_t>(n));

    for (int pivot = 0; pivot <= max_pivots; ++pivot) {
        Matrix B(q, q);
        Vector yb(q);
        for (Eigen::Index k = 0; k < q; ++k) {
            B.row(k) = X.row(static_cast<Eigen::Index>(basis[static_cast<std::size_t>(k)]));
            yb(k) = yw(static_cast<Eigen::Index>(basis[static_cast<std::size_t>(k)]));
        }
        Eigen::PartialPivLU<Matrix> lu(B);
        beta = lu.solve(yb);
        const Matrix Binv = lu.inverse();
        r = yw - X * beta;
        std::fill(in_basis.begin(), in_basis.end(), 0);
        for (std::size_t b : basis) {
            r(static_cast<Eigen::Index>(b)) = 0.0;
            in_basis[b] = 1;
        }
        const Matrix A = X * Binv;  // A(i, k) = x_i . (B^{-1} e_k)

        // Directional derivatives for the 2q edge directions.
        const bool bland = degenerate_run > 2 * q;
        Direction best;
        for (Eigen::Index k = 0; k < q; ++k) {
            double linear = 0.0;
            double zero_plus = 0.0;
            double zero_minus = 0.0;
            double magnitude = 1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (in_basis[static_cast<std::size_t>(i)]) continue;
                const double a = A(i, k);
                magnitude += std::abs(a);
                if (r(i) > 0.0) {
                    linear -= tau * a;
                } else if (r(i) < 0.0) {
                    linear -= (tau - 1.0) * a;
                } else {
                    zero_plus += tau * std::max(-a, 0.0) + (1.0 - tau) * std::max(a, 0.0);
                    zero_minus += tau * std::max(a, 0.0) + (1.0 - tau) * std::max(-a, 0.0);
                }
            }
            const double threshold = -1e-11 * magnitude;
            const double plus = linear + zero_plus + (1.0 - tau);
            const double minus = -linear + zero_minus + tau;
            for (int sign : {1, -1}) {
                const double slope = sign > 0 ? plus : minus;
                if (slope < threshold && (best.k < 0 || (!bland && slope < best.slope))) {
                    best = {k, sign, slope};
                }
            }
            if (bland && best.k >= 0) break;
        }
        if (best.k < 0) {
            optimal = true;
            fit.iterations += pivot;
            break;
        }

        // Line search: piecewise-linear convex in the step length; the slope
        // jumps by |a_i| at each residual sign change.
        // Rows whose pivot element is rounding noise would make B singular.
        const double pivot_floor = 1e-11 * A.col(best.k).cwiseAbs().maxCoeff();
        std::vector<std::pair<double, Eigen::Index>> breaks;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (in_basis[static_cast<std::size_t>(i)]) continue;
            const double a = best.sign * A(i, best.k);
            if (std::abs(a) <= pivot_floor || r(i) == 0.0) continue;
            const double t = r(i) / a;
            if (t > 0.0) breaks.emplace_back(t, i);
        }
        std::sort(breaks.begin(), breaks.end());
        double slope = best.slope;
        Eigen::Index entering = -1;
        double step = 0.0;
        for (const auto& [t, i] : breaks) {
            slope += std::abs(A(i, best.k));
            if (slope >= 0.0) {
                entering = i;
                step = t;
                break;
            }
        }
        if (entering < 0) {
            throw NonConvergence("quantile regression descent found an unbounded direction",
                                 std::vector<double>(beta.data(), beta.data() + beta.size()));
        }
        degenerate_run = step <= 1e-14 ? degenerate_run + 1 : 0;
        basis[static_cast<std::size_t>(best.k)] = static_cast<std::size_t>(entering);
    }

    if (!optimal) {
        throw NonConvergence("quantile regression did not reach an optimal basic solution within " +
                                 std::to_string(max_pivots) + " pivots",
                             std::vector<double>(beta.data(), beta.data() + beta.size()));
    }

    {
        Matrix B(q, q);
        Vector yb(q);
        for (Eigen::Index k = 0; k < q; ++k) {
            B.row(k) = X.row(static_cast<Eigen::Index>(basis[static_cast<std::size_t>(k)]));
            yb(k) = y(static_cast<Eigen::Index>(basis[static_cast<std::size_t>(k)]));
        }
        beta = B.partialPivLu().solve(yb);
        r = y - X * beta;
        for (std::size_t b : basis) r(static_cast<Eigen::Index>(b)) = 0.0;
    }

    // Residuals that differ from zero only by rounding are reported as zero.
    for (Eigen::Index i = 0; i < n; ++i) {
        if (in_basis[static_cast<std::size_t>(i)]) continue;
        const double magnitude = std::abs(y(i)) + X.row(i).cwiseAbs().dot(beta.cwiseAbs());
        if (std::abs(r(i)) <= 8.0 * std::numeric_limits<double>::epsilon() * magnitude) r(i) = 0.0;
    }

    fit.beta = beta;
    fit.residuals = r;
    fit.objective = pinball_objective(r, tau);
    fit.converged = true;
    fit.basis = basis;
    return fit;
}

std::vector<std::uint8_t> residual_signs(const Vector& residuals) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(residuals.size()));
    for (Eigen::Index i = 0; i < residuals.size(); ++i) {
        out[static_cast<std::size_t>(i)] = residuals(i) <= 0.0 ? 1 : 0;
    }
    return out;
}

std::vector<std::uint8_t> residual_signs(const QuantileFit& fit) { return residual_signs(fit.residuals); }

}  // namespace quantcorr
