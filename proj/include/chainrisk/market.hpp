#pragma once

#include <Eigen/Dense>

#include "chainrisk/demand.hpp"
#include "chainrisk/risk.hpp"

namespace chainrisk {

/// Scalar constants of the leader game.
struct MarketParams {
    RiskModel risk;
    double attacker_resource = 100.0;  // a
    double beta = 10.0;                // penalty exponent, > 1
    double price_cap = 1.0;            // regulator's price ceiling
    double gamma_cap = 2.0;            // regulator's premium-coefficient ceiling, > 1

    /// Throws DomainError on a violated invariant.
    void validate() const;

    /// T = 100, T0 = 10, N_T = 100, r = 10, q = 10, a = 100, beta = 10, p^u = 1, gamma^u = 2.
    static MarketParams defaults();
};

/// Numerical interior used for the open ends of the strategy domains.
inline constexpr double kPriceFloor = 1e-9;
inline constexpr double kHbarCeilingGap = 1e-6;
inline constexpr double kGammaFloorGap = 1e-9;

struct ProviderStrategy {
    Eigen::VectorXd p;
    double hbar = 0.5;
};

struct InsurerStrategy {
    double gamma = 1.5;
};

/// Throws DomainError unless 0 < p_i <= price_cap and 1/2 <= hbar < 1.
void validate_strategy(const MarketParams& params, const ProviderStrategy& s);
/// Throws DomainError unless 1 < gamma <= gamma_cap.
void validate_strategy(const MarketParams& params, const InsurerStrategy& s);

/// Projects onto [kPriceFloor, price_cap]^n x [1/2, 1 - kHbarCeilingGap].
ProviderStrategy clamp_to_domain(const MarketParams& params, ProviderStrategy s);
double clamp_gamma(const MarketParams& params, double gamma);

/// Infrastructure spend a * hbar / (1 - hbar) that buys the hash share hbar.
double investment_cost(double attacker_resource, double hbar);

/// Pi_P = p^T M [(1 + hbar) 1 - p] - a hbar / (1 - hbar) + hbar (T/T0) N_T r - premium(gamma),
/// with users at their interior demand M [(1 + hbar) 1 - p].
double provider_profit(const MarketParams& params, const DemandSystem& system,
                       const ProviderStrategy& sp, const InsurerStrategy& si);

/// Pi_I = premium(gamma) - P(hbar) hbar (T/T0) N_T q - sigma(hbar, gamma).
double insurer_profit(const MarketParams& params, const ProviderStrategy& sp,
                      const InsurerStrategy& si);

/// (d Pi_P / d p, d Pi_P / d hbar). The premium does not depend on the provider's
/// own variables, so gamma drops out.
Eigen::VectorXd provider_gradient(const MarketParams& params, const DemandSystem& system,
                                  const ProviderStrategy& sp);
double insurer_gradient(const MarketParams& params, const ProviderStrategy& sp,
                        const InsurerStrategy& si);
double insurer_curvature(const MarketParams& params, const ProviderStrategy& sp,
                         const InsurerStrategy& si);

/// Hessian of Pi_P in (p, hbar):
///   [ -(M + M^T)   M 1               ]
///   [ (M 1)^T      -2a / (1 - hbar)^3 ]
Eigen::MatrixXd provider_hessian(const MarketParams& params, const DemandSystem& system,
                                 const ProviderStrategy& sp);

struct ConditionCheck {
    bool holds = false;
    double lhs = 0.0;
    double rhs = 0.0;
};

/// a > (1/8) 1^T (I - alpha G)^{-1} 1: both leaders' payoffs are strictly concave
/// in their own variables, so an equilibrium exists.
ConditionCheck check_existence(const MarketParams& params, const DemandSystem& system);

/// a > 9 (beta + 1)^2 (gamma^u)^{beta + 1} / (128 beta): the leader equilibrium is unique.
ConditionCheck check_uniqueness(const MarketParams& params);

/// J = D + D^T where D stacks the second partials of (Pi_P over (p, hbar), Pi_I over gamma)
/// with respect to the joint variable (p, hbar, gamma).
Eigen::MatrixXd leader_jacobian(const MarketParams& params, const DemandSystem& system,
                                const ProviderStrategy& sp, const InsurerStrategy& si);

}  // namespace chainrisk
