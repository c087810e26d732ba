#include "quantcorr/concordance.hpp"

#include <cmath>

#include "quantcorr/error.hpp"

namespace quantcorr {

namespace {

void require_tau(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw InvalidArgument("tau must lie strictly inside (0, 1), got " + std::to_string(tau));
    }
}

}  // namespace

std::string_view to_string(Label label) {
    switch (label) {
        case Label::C00: return "00";
        case Label::C11: return "11";
        case Label::C01: return "01";
        case Label::C10: return "10";
    }
    return "??";
}

Label label_from_string(std::string_view text) {
    for (Label l : kAllLabels) {
        if (to_string(l) == text) return l;
    }
    throw InvalidArgument("unknown concordance label '" + std::string(text) + "'");
}

Label swap_responses(Label label) {
    switch (label) {
        case Label::C01: return Label::C10;
        case Label::C10: return Label::C01;
        default: return label;
    }
}

std::vector<Label> classify(std::span<const std::uint8_t> omega1, std::span<const std::uint8_t> omega2) {
    if (omega1.size() != omega2.size()) {
        throw InvalidArgument("sign vectors differ in length (" + std::to_string(omega1.size()) + " vs " +
                              std::to_string(omega2.size()) + ")");
    }
    std::vector<Label> z;
    z.reserve(omega1.size());
    for (std::size_t i = 0; i < omega1.size(); ++i) {
        const bool a = omega1[i] != 0;
        const bool b = omega2[i] != 0;
        if (a == b) {
            z.push_back(a ? Label::C11 : Label::C00);
        } else {
            z.push_back(a ? Label::C10 : Label::C01);
        }
    }
    return z;
}

double CellProbabilities::operator[](Label label) const {
    switch (label) {
        case Label::C00: return p00;
        case Label::C11: return p11;
        case Label::C01: return p01;
        case Label::C10: return p10;
    }
    return 0.0;
}

CellProbabilities empirical_cells(std::span<const Label> z, double tau) {
    if (z.empty()) throw InvalidArgument("cannot tabulate an empty label vector");
    require_tau(tau);
    std::array<std::size_t, 4> counts{};
    for (Label l : z) ++counts[static_cast<std::size_t>(l)];
    const double n = static_cast<double>(z.size());
    return {counts[0] / n, counts[1] / n, counts[2] / n, counts[3] / n, tau};
}

CellProbabilities independence_cells(double tau) {
    require_tau(tau);
    return {(1.0 - tau) * (1.0 - tau), tau * tau, tau - tau * tau, tau - tau * tau, tau};
}

CellProbabilities max_dependence_cells(double tau) {
    require_tau(tau);
    return {1.0 - tau, tau, 0.0, 0.0, tau};
}

CellProbabilities min_dependence_cells(double tau) {
    require_tau(tau);
    if (tau <= 0.5) return {1.0 - 2.0 * tau, 0.0, tau, tau, tau};
    return {0.0, 2.0 * tau - 1.0, 1.0 - tau, 1.0 - tau, tau};
}

double phi(const CellProbabilities& c) {
    require_tau(c.tau);
    return (c.p11 * c.p00 - c.p01 * c.p10) / (c.tau * (1.0 - c.tau));
}

PhiBounds phi_bounds(double tau) {
    require_tau(tau);
    PhiBounds b;
    b.phi_min = tau <= 0.5 ? -tau / (1.0 - tau) : -(1.0 - tau) / tau;
    return b;
}

}  // namespace quantcorr
