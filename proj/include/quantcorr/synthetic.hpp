#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quantcorr/dataset.hpp"

namespace quantcorr {

struct CovariateGenerator {
    enum class Kind { uniform, binary };

    std::string name;
    Kind kind = Kind::uniform;
    double low = 0.0;
    double high = 1.0;
    double p = 0.5;
    // Binary only: exactly round(n * p) ones, placed in the last rows.
    bool balanced = false;

    bool operator==(const CovariateGenerator&) const = default;
};

// Error correlation depending on a binary covariate.
struct GroupDependence {
    std::string covariate;
    double rho0 = 0.0;
    double rho1 = 0.0;

    bool operator==(const GroupDependence&) const = default;
};

// Bivariate response y_j = beta_j[0] + sum_k beta_j[k] x_k + e_j with
// (e_1, e_2) standard bivariate normal with correlation rho.
struct ScenarioSpec {
    std::size_t n = 1000;
    double rho = 0.0;
    std::optional<GroupDependence> rho_by_group;
    std::vector<CovariateGenerator> covariates;
    std::vector<double> beta1;  // empty -> all zero
    std::vector<double> beta2;
    std::array<std::string, 2> responses{"y1", "y2"};
    // Per-row probability of swapping the two responses.
    double exchange_probability = 0.0;
    std::uint64_t seed = 1;
    std::vector<double> taus{0.1, 0.5, 0.9};  // oracle values written alongside

    void validate() const;
    bool operator==(const ScenarioSpec&) const = default;
};

Dataset generate(const ScenarioSpec& scenario);

double normal_cdf(double x);
double normal_quantile(double p);

// P(X <= h, Y <= k) for a standard bivariate normal with correlation rho, by
// adaptive Gauss-Kronrod quadrature of phi(x) * Phi((k - rho x) / sqrt(1 - rho^2))
// over x <= h (the inner integral is the normal CDF).
double bivariate_normal_cdf(double h, double k, double rho);

// phi of the residual signs under Gaussian errors:
// (Phi2(z_tau, z_tau; rho) - tau^2) / (tau (1 - tau)).
double oracle_phi_gaussian(double rho, double tau);

struct OracleRow {
    std::string group;  // "all", or "0"/"1" for grouped dependence
    double rho = 0.0;
    double tau = 0.5;
    double phi = 0.0;
};

std::vector<OracleRow> oracle_table(const ScenarioSpec& scenario);

}  // namespace quantcorr
