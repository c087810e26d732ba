#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace quantcorr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// n x q numeric design. Construction enforces finite entries, unique column
// names and, when the intercept flag is set, an all-ones first column.
class DesignMatrix {
public:
    DesignMatrix() = default;
    DesignMatrix(Matrix values, std::vector<std::string> names, bool intercept);

    std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }
    const Matrix& values() const { return values_; }
    const std::vector<std::string>& names() const { return names_; }
    bool intercept() const { return intercept_; }

private:
    Matrix values_;
    std::vector<std::string> names_;
    bool intercept_ = false;
};

// Throws SingularDesign naming the dependent columns when X is not of full
// column rank, when n < q + 1, or when a non-intercept column is constant in a
// design that already carries an intercept.
void require_full_rank(const DesignMatrix& X);

struct QuantileFit {
    double tau = 0.5;
    Vector beta;
    Vector residuals;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<std::string> names;
    // Observations interpolated exactly by the fit (the optimal basis).
    std::vector<std::size_t> basis;

    Vector fitted(const Matrix& X) const { return X * beta; }
};

struct QuantileOptions {
    double tolerance = 1e-10;  // relative change of the exact objective
    int max_iterations = 500;  // smoothing (IRLS) iterations
    int max_pivots = 0;        // 0 -> 50 * (n + q)
};

// Check function rho_tau(u) = u * (tau - I(u <= 0)); nonnegative.
double pinball_loss(double u, double tau);

double pinball_objective(const Vector& residuals, double tau);

// Minimises sum_i rho_tau(y_i - x_i' beta). A smoothed IRLS pass supplies a
// warm start; an exact descent over basic solutions then lands on a vertex of
// the underlying linear program, so q residuals are exactly zero and the sign
// counts satisfy #{r < 0} <= n tau <= #{r <= 0}.
QuantileFit fit_quantile_regression(const DesignMatrix& X, const Vector& y, double tau,
                                    const QuantileOptions& options = {});

// 1 where the residual is <= 0 (observation at or below its fitted quantile).
std::vector<std::uint8_t> residual_signs(const Vector& residuals);
std::vector<std::uint8_t> residual_signs(const QuantileFit& fit);

}  // namespace quantcorr
