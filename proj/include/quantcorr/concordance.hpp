#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quantcorr {

// Joint sign of the two quantile residuals. The first digit is omega^(1),
// the second omega^(2); 1 means the observation lies at or below its fitted
// quantile. Declaration order is the reporting order.
enum class Label : std::uint8_t { C00 = 0, C11 = 1, C01 = 2, C10 = 3 };

inline constexpr std::array<Label, 4> kAllLabels{Label::C00, Label::C11, Label::C01, Label::C10};

std::string_view to_string(Label label);
Label label_from_string(std::string_view text);

// Label with the roles of the two responses exchanged ("01" <-> "10").
Label swap_responses(Label label);

std::vector<Label> classify(std::span<const std::uint8_t> omega1, std::span<const std::uint8_t> omega2);

struct CellProbabilities {
    double p00 = 0.0;
    double p11 = 0.0;
    double p01 = 0.0;
    double p10 = 0.0;
    double tau = 0.5;

    double operator[](Label label) const;
    double sum() const { return p00 + p11 + p01 + p10; }
};

CellProbabilities empirical_cells(std::span<const Label> z, double tau);

// Cell probabilities of the three limiting joint distributions.
CellProbabilities independence_cells(double tau);
CellProbabilities max_dependence_cells(double tau);
CellProbabilities min_dependence_cells(double tau);

// (p11 p00 - p01 p10) / (tau (1 - tau)): the margins are fixed at tau and
// 1 - tau rather than estimated from the cells.
double phi(const CellProbabilities& cells);

struct PhiBounds {
    double phi_min = -1.0;
    double phi_indep = 0.0;
    double phi_max = 1.0;
};

PhiBounds phi_bounds(double tau);

}  // namespace quantcorr
