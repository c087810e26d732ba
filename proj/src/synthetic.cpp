#include "quantcorr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "quantcorr/concordance.hpp"
#include "quantcorr/error.hpp"
#include "quantcorr/random.hpp"

namespace quantcorr {

namespace {

constexpr double kLowerLimit = -38.5;  // Phi(-38.5) underflows double

double check_rho(double rho) {
    if (!(std::abs(rho) < 1.0)) throw InvalidArgument("correlation must satisfy |rho| < 1, got " + std::to_string(rho));
    return rho;
}

double integrate(const auto& f, double a, double b) {
    if (!(b > a)) return 0.0;
    double error = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-12, &error);
}

}  // namespace

void ScenarioSpec::validate() const {
    if (n < 50) throw InvalidArgument("scenario needs n >= 50, got " + std::to_string(n));
    if (rho_by_group) {
        check_rho(rho_by_group->rho0);
        check_rho(rho_by_group->rho1);
        bool found = false;
        for (const auto& c : covariates) {
            if (c.name == rho_by_group->covariate) {
                found = true;
                if (c.kind != CovariateGenerator::Kind::binary) {
                    throw InvalidArgument("group covariate '" + c.name + "' must be binary");
                }
            }
        }
        if (!found) throw InvalidArgument("group covariate '" + rho_by_group->covariate + "' is not generated");
    } else {
        check_rho(rho);
    }
    for (const auto* beta : {&beta1, &beta2}) {
        if (!beta->empty() && beta->size() != covariates.size() + 1) {
            throw InvalidArgument("coefficient vectors need " + std::to_string(covariates.size() + 1) +
                                  " entries (intercept first)");
        }
    }
    for (const auto& c : covariates) {
        if (c.kind == CovariateGenerator::Kind::uniform && !(c.high > c.low)) {
            throw InvalidArgument("uniform covariate '" + c.name + "' needs high > low");
        }
        if (c.kind == CovariateGenerator::Kind::binary && !(c.p >= 0.0 && c.p <= 1.0)) {
            throw InvalidArgument("binary covariate '" + c.name + "' needs p in [0, 1]");
        }
    }
    if (!(exchange_probability >= 0.0 && exchange_probability <= 1.0)) {
        throw InvalidArgument("exchange probability must lie in [0, 1]");
    }
    if (responses[0].empty() || responses[0] == responses[1]) throw InvalidArgument("response names must be distinct");
    for (double t : taus) {
        if (!(t > 0.0 && t < 1.0)) throw InvalidArgument("oracle tau values must lie in (0, 1)");
    }
}

Dataset generate(const ScenarioSpec& s) {
    s.validate();
    Rng rng(s.seed);
    const std::size_t p = s.covariates.size();
    std::vector<std::vector<double>> x(p, std::vector<double>(s.n));
    std::vector<double> y1(s.n), y2(s.n);

    std::size_t group_column = p;
    for (std::size_t k = 0; k < p; ++k) {
        if (s.rho_by_group && s.covariates[k].name == s.rho_by_group->covariate) group_column = k;
    }

    for (std::size_t i = 0; i < s.n; ++i) {
        for (std::size_t k = 0; k < p; ++k) {
            const auto& c = s.covariates[k];
            const double u = rng.uniform();
            if (c.kind == CovariateGenerator::Kind::uniform) {
                x[k][i] = c.low + (c.high - c.low) * u;
            } else if (c.balanced) {
                const auto zeros = s.n - static_cast<std::size_t>(std::llround(static_cast<double>(s.n) * c.p));
                x[k][i] = i >= zeros ? 1.0 : 0.0;
            } else {
                x[k][i] = u < c.p ? 1.0 : 0.0;
            }
        }
        double rho = s.rho;
        if (group_column < p) rho = x[group_column][i] == 1.0 ? s.rho_by_group->rho1 : s.rho_by_group->rho0;
        const double z1 = rng.normal();
        const double z2 = rng.normal();
        const double e1 = z1;
        const double e2 = rho * z1 + std::sqrt(1.0 - rho * rho) * z2;

        double m1 = s.beta1.empty() ? 0.0 : s.beta1[0];
        double m2 = s.beta2.empty() ? 0.0 : s.beta2[0];
        for (std::size_t k = 0; k < p; ++k) {
            if (!s.beta1.empty()) m1 += s.beta1[k + 1] * x[k][i];
            if (!s.beta2.empty()) m2 += s.beta2[k + 1] * x[k][i];
        }
        y1[i] = m1 + e1;
        y2[i] = m2 + e2;
        if (rng.uniform() < s.exchange_probability) std::swap(y1[i], y2[i]);
    }

    Dataset data;
    data.source = "synthetic";
    data.add_column(s.responses[0], std::move(y1));
    data.add_column(s.responses[1], std::move(y2));
    for (std::size_t k = 0; k < p; ++k) data.add_column(s.covariates[k].name, std::move(x[k]));
    return data;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("normal quantile needs p in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double bivariate_normal_cdf(double h, double k, double rho) {
    check_rho(rho);
    if (h <= kLowerLimit || k <= kLowerLimit) return 0.0;
    const double s = std::sqrt(1.0 - rho * rho);
    const auto f = [&](double x) {
        return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi) * normal_cdf((k - rho * x) / s);
    };
    // The conditional CDF switches from 0 to 1 within a few s of x = k / rho.
    // Splitting around that band keeps each panel smooth when |rho| is close to 1.
    std::vector<double> cuts{kLowerLimit};
    if (rho != 0.0) {
        const double knee = k / rho;
        for (double c : {knee - 10.0 * s, knee, knee + 10.0 * s}) {
            if (c > cuts.back() && c < h) cuts.push_back(c);
        }
    }
    cuts.push_back(h);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += integrate(f, cuts[i], cuts[i + 1]);
    return total;
}

double oracle_phi_gaussian(double rho, double tau) {
    check_rho(rho);
    const double z = normal_quantile(tau);
    const double value = (bivariate_normal_cdf(z, z, rho) - tau * tau) / (tau * (1.0 - tau));
    // The joint probability obeys the Frechet bounds; this only removes
    // rounding when it is far below tau^2 (strong negative rho, extreme tau).
    return std::clamp(value, phi_bounds(tau).phi_min, 1.0);
}

std::vector<OracleRow> oracle_table(const ScenarioSpec& s) {
    std::vector<OracleRow> rows;
    for (double tau : s.taus) {
        if (s.rho_by_group) {
            rows.push_back({"0", s.rho_by_group->rho0, tau, oracle_phi_gaussian(s.rho_by_group->rho0, tau)});
            rows.push_back({"1", s.rho_by_group->rho1, tau, oracle_phi_gaussian(s.rho_by_group->rho1, tau)});
        } else {
            rows.push_back({"all", s.rho, tau, oracle_phi_gaussian(s.rho, tau)});
        }
    }
    return rows;
}

}  // namespace quantcorr
