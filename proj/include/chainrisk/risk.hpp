#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace chainrisk {

/// Decumulative risk values B(t_k) = 1 - int_{1/2}^{t_k} P on the midpoint grid
/// t_k = 1/2 + (k + 1/2) * d, d = 1 / (2 * intervals).
///
/// The inner integral is accumulated as a prefix sum over the same cells: full
/// cells 0..k-1 (one midpoint sample each) plus the half cell [t_k - d/2, t_k]
/// sampled at its own midpoint. Costs 2 * intervals evaluations of P.
class DecumulativeGrid {
public:
    DecumulativeGrid(const std::function<double(double)>& attack_prob, int intervals);

    int intervals() const noexcept { return static_cast<int>(values_.size()); }
    double cell_width() const noexcept { return 0.5 / intervals(); }
    std::span<const double> values() const noexcept { return values_; }

    /// int_{1/2}^{1} B(t)^{1/gamma} * ln(B(t))^power dt on the midpoint grid.
    /// power = 0 with gamma = 1 is the plain expected-loss integral.
    double transformed_moment(double gamma, int power) const;

private:
    std::vector<double> values_;
};

/// Block-race risk model: how many blocks are at stake over a period and what
/// each is worth to the provider and the insurer.
class RiskModel {
public:
    /// blocks_per_period = T / T0; tx_per_block = N_T; compensation_rate = q;
    /// mining_reward = r. Throws DomainError unless all are finite and > 0.
    RiskModel(double blocks_per_period, int tx_per_block, double compensation_rate,
              double mining_reward, int intervals = 100);

    double blocks_per_period() const noexcept { return blocks_per_period_; }
    int tx_per_block() const noexcept { return tx_per_block_; }
    double compensation_rate() const noexcept { return compensation_rate_; }
    double mining_reward() const noexcept { return mining_reward_; }
    int intervals() const noexcept { return grid_->intervals(); }

    /// (T/T0) * N_T * q, the total compensation exposure over one period.
    double loss_scale() const noexcept;
    /// (T/T0) * N_T * r, the mining reward for the whole period at hbar = 1.
    double reward_scale() const noexcept;

    const DecumulativeGrid& grid() const noexcept { return *grid_; }

private:
    double blocks_per_period_;
    int tx_per_block_;
    double compensation_rate_;
    double mining_reward_;
    std::shared_ptr<const DecumulativeGrid> grid_;
};

/// Probability that a double-spending attack succeeds within the period when
/// the honest side holds a share hbar of the hash power. 1 below one half,
/// I_{4(1-hbar)hbar}((T/T0) * hbar, 1/2) from one half on.
double attack_probability(double blocks_per_period, double hbar);
double attack_probability(const RiskModel& model, double hbar);

/// F(hbar) = 1/2 + int_{1/2}^{hbar} P, midpoint rule on the model's grid of [1/2, 1]
/// (the last, partial cell sampled at its own midpoint).
double risk_cdf(const RiskModel& model, double hbar);

double expected_loss(const RiskModel& model);

/// Proportional-hazard premium: loss_scale * int_{1/2}^1 B(t)^{1/gamma} dt.
double premium(const RiskModel& model, double gamma);

/// d premium / d gamma and d^2 premium / d gamma^2.
double premium_slope(const RiskModel& model, double gamma);
double premium_curvature(const RiskModel& model, double gamma);

/// Insurer reputation penalty (hbar - 1/2)^3 (gamma - 1) gamma^beta.
double sigma_penalty(double hbar, double gamma, double beta);
/// d sigma / d gamma, d^2 sigma / d gamma^2, d^2 sigma / d gamma d hbar.
double sigma_dgamma(double hbar, double gamma, double beta);
double sigma_dgamma2(double hbar, double gamma, double beta);
double sigma_dgamma_dhbar(double hbar, double gamma, double beta);

}  // namespace chainrisk
