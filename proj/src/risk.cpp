#include "chainrisk/risk.hpp"

#include <cmath>

#include "chainrisk/error.hpp"
#include "chainrisk/specfun.hpp"

namespace chainrisk {

DecumulativeGrid::DecumulativeGrid(const std::function<double(double)>& attack_prob,
                                   int intervals) {
    if (intervals < 1) throw DomainError("DecumulativeGrid: intervals must be >= 1");
    const double width = 0.5 / intervals;
    values_.resize(static_cast<std::size_t>(intervals));
    double full_cells = 0.0;
    for (int k = 0; k < intervals; ++k) {
        const double cell_lo = 0.5 + k * width;
        const double half_cell = attack_prob(cell_lo + 0.25 * width) * (0.5 * width);
        values_[static_cast<std::size_t>(k)] = 1.0 - (full_cells + half_cell);
        full_cells += attack_prob(cell_lo + 0.5 * width) * width;
    }
}

double DecumulativeGrid::transformed_moment(double gamma, int power) const {
    const double exponent = 1.0 / gamma;
    double sum = 0.0;
    for (double b : values_) {
        double term = exponent == 1.0 ? b : std::pow(b, exponent);
        if (power > 0) {
            const double lb = std::log(b);
            for (int i = 0; i < power; ++i) term *= lb;
        }
        sum += term;
    }
    return sum * cell_width();
}

RiskModel::RiskModel(double blocks_per_period, int tx_per_block, double compensation_rate,
                     double mining_reward, int intervals)
    : blocks_per_period_(blocks_per_period),
      tx_per_block_(tx_per_block),
      compensation_rate_(compensation_rate),
      mining_reward_(mining_reward) {
    if (!(blocks_per_period > 0.0) || !std::isfinite(blocks_per_period))
        throw DomainError("RiskModel: blocks_per_period must be finite and > 0");
    if (tx_per_block < 1) throw DomainError("RiskModel: tx_per_block must be >= 1");
    if (!(compensation_rate > 0.0) || !std::isfinite(compensation_rate))
        throw DomainError("RiskModel: compensation_rate must be finite and > 0");
    if (!(mining_reward > 0.0) || !std::isfinite(mining_reward))
        throw DomainError("RiskModel: mining_reward must be finite and > 0");
    const double k = blocks_per_period;
    grid_ = std::make_shared<const DecumulativeGrid>(
        [k](double h) { return attack_probability(k, h); }, intervals);
}

double RiskModel::loss_scale() const noexcept {
    return blocks_per_period_ * tx_per_block_ * compensation_rate_;
}

double RiskModel::reward_scale() const noexcept {
    return blocks_per_period_ * tx_per_block_ * mining_reward_;
}

double attack_probability(double blocks_per_period, double hbar) {
    if (!(hbar >= 0.0 && hbar <= 1.0))
        throw DomainError("attack_probability: hbar must lie in [0, 1]");
    if (hbar < 0.5) return 1.0;
    return reg_inc_beta(4.0 * (1.0 - hbar) * hbar, blocks_per_period * hbar, 0.5);
}

double attack_probability(const RiskModel& model, double hbar) {
    return attack_probability(model.blocks_per_period(), hbar);
}

double risk_cdf(const RiskModel& model, double hbar) {
    if (!(hbar >= 0.5 && hbar <= 1.0)) throw DomainError("risk_cdf: hbar must lie in [1/2, 1]");
    // Fixed cell width 1 / (2 * intervals) so that F is nondecreasing in hbar: whole cells
    // up to hbar plus the trailing partial cell at its own midpoint.
    const double k = model.blocks_per_period();
    const double width = 0.5 / model.intervals();
    const int whole = std::min(model.intervals(), static_cast<int>((hbar - 0.5) / width));
    const double edge = 0.5 + whole * width;
    double sum = 0.0;
    for (int c = 0; c < whole; ++c) sum += attack_probability(k, 0.5 + (c + 0.5) * width);
    sum *= width;
    if (hbar > edge) sum += attack_probability(k, 0.5 * (edge + hbar)) * (hbar - edge);
    return 0.5 + sum;
}

double expected_loss(const RiskModel& model) { return premium(model, 1.0); }

double premium(const RiskModel& model, double gamma) {
    if (!(gamma >= 1.0)) throw DomainError("premium: gamma must be >= 1");
    return model.loss_scale() * model.grid().transformed_moment(gamma, 0);
}

double premium_slope(const RiskModel& model, double gamma) {
    if (!(gamma >= 1.0)) throw DomainError("premium_slope: gamma must be >= 1");
    return -model.loss_scale() / (gamma * gamma) * model.grid().transformed_moment(gamma, 1);
}

double premium_curvature(const RiskModel& model, double gamma) {
    if (!(gamma >= 1.0)) throw DomainError("premium_curvature: gamma must be >= 1");
    const auto& grid = model.grid();
    const double g3 = gamma * gamma * gamma;
    return model.loss_scale() * (2.0 / g3 * grid.transformed_moment(gamma, 1) +
                                 1.0 / (g3 * gamma) * grid.transformed_moment(gamma, 2));
}

namespace {

void check_beta(double beta) {
    if (!(beta > 1.0)) throw DomainError("sigma_penalty: beta must be > 1");
}

}  // namespace

double sigma_penalty(double hbar, double gamma, double beta) {
    check_beta(beta);
    const double d = hbar - 0.5;
    return d * d * d * (gamma - 1.0) * std::pow(gamma, beta);
}

double sigma_dgamma(double hbar, double gamma, double beta) {
    check_beta(beta);
    const double d = hbar - 0.5;
    return d * d * d * ((beta + 1.0) * std::pow(gamma, beta) - beta * std::pow(gamma, beta - 1.0));
}

double sigma_dgamma2(double hbar, double gamma, double beta) {
    check_beta(beta);
    const double d = hbar - 0.5;
    return d * d * d *
           (beta * (beta + 1.0) * std::pow(gamma, beta - 1.0) -
            beta * (beta - 1.0) * std::pow(gamma, beta - 2.0));
}

double sigma_dgamma_dhbar(double hbar, double gamma, double beta) {
    check_beta(beta);
    const double d = hbar - 0.5;
    return 3.0 * d * d *
           ((beta + 1.0) * std::pow(gamma, beta) - beta * std::pow(gamma, beta - 1.0));
}

}  // namespace chainrisk
