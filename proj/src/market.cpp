#include "chainrisk/market.hpp"

#include <algorithm>
#include <cmath>

#include "chainrisk/error.hpp"

namespace chainrisk {

void MarketParams::validate() const {
    if (!(attacker_resource > 0.0) || !std::isfinite(attacker_resource))
        throw DomainError("MarketParams: attacker_resource must be finite and > 0");
    if (!(beta > 1.0)) throw DomainError("MarketParams: beta must be > 1");
    if (!(price_cap > 0.0)) throw DomainError("MarketParams: price_cap must be > 0");
    if (!(gamma_cap > 1.0)) throw DomainError("MarketParams: gamma_cap must be > 1");
}

MarketParams MarketParams::defaults() {
    return MarketParams{RiskModel(100.0 / 10.0, 100, 10.0, 10.0), 100.0, 10.0, 1.0, 2.0};
}

void validate_strategy(const MarketParams& params, const ProviderStrategy& s) {
    for (Eigen::Index i = 0; i < s.p.size(); ++i) {
        if (!(s.p(i) > 0.0 && s.p(i) <= params.price_cap))
            throw DomainError("ProviderStrategy: prices must lie in (0, price_cap]");
    }
    if (!(s.hbar >= 0.5 && s.hbar < 1.0))
        throw DomainError("ProviderStrategy: hbar must lie in [1/2, 1)");
}

void validate_strategy(const MarketParams& params, const InsurerStrategy& s) {
    if (!(s.gamma > 1.0 && s.gamma <= params.gamma_cap))
        throw DomainError("InsurerStrategy: gamma must lie in (1, gamma_cap]");
}

ProviderStrategy clamp_to_domain(const MarketParams& params, ProviderStrategy s) {
    s.p = s.p.cwiseMax(kPriceFloor).cwiseMin(params.price_cap);
    s.hbar = std::clamp(s.hbar, 0.5, 1.0 - kHbarCeilingGap);
    return s;
}

double clamp_gamma(const MarketParams& params, double gamma) {
    return std::clamp(gamma, 1.0 + kGammaFloorGap, params.gamma_cap);
}

double investment_cost(double attacker_resource, double hbar) {
    return attacker_resource * hbar / (1.0 - hbar);
}

namespace {

void check_size(const DemandSystem& system, const ProviderStrategy& sp) {
    if (static_cast<std::size_t>(sp.p.size()) != system.n_users())
        throw DomainError("provider strategy has the wrong number of prices");
}

}  // namespace

double provider_profit(const MarketParams& params, const DemandSystem& system,
                       const ProviderStrategy& sp, const InsurerStrategy& si) {
    check_size(system, sp);
    const Eigen::VectorXd demand =
        system.solve(Eigen::VectorXd::Constant(sp.p.size(), 1.0 + sp.hbar) - sp.p);
    return sp.p.dot(demand) - investment_cost(params.attacker_resource, sp.hbar) +
           sp.hbar * params.risk.reward_scale() - premium(params.risk, si.gamma);
}

double insurer_profit(const MarketParams& params, const ProviderStrategy& sp,
                      const InsurerStrategy& si) {
    const double claims =
        attack_probability(params.risk, sp.hbar) * sp.hbar * params.risk.loss_scale();
    return premium(params.risk, si.gamma) - claims - sigma_penalty(sp.hbar, si.gamma, params.beta);
}

Eigen::VectorXd provider_gradient(const MarketParams& params, const DemandSystem& system,
                                  const ProviderStrategy& sp) {
    check_size(system, sp);
    const Eigen::Index n = sp.p.size();
    Eigen::VectorXd grad(n + 1);
    // d/dp of p^T M c(p) with c = (1 + hbar) 1 - p is M c - M^T p.
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(n, 1.0 + sp.hbar) - sp.p;
    grad.head(n) = system.solve(c) - system.solve_transposed(sp.p);
    const double gap = 1.0 - sp.hbar;
    grad(n) = sp.p.dot(system.influence()) - params.attacker_resource / (gap * gap) +
              params.risk.reward_scale();
    return grad;
}

double insurer_gradient(const MarketParams& params, const ProviderStrategy& sp,
                        const InsurerStrategy& si) {
    return premium_slope(params.risk, si.gamma) - sigma_dgamma(sp.hbar, si.gamma, params.beta);
}

double insurer_curvature(const MarketParams& params, const ProviderStrategy& sp,
                         const InsurerStrategy& si) {
    return premium_curvature(params.risk, si.gamma) -
           sigma_dgamma2(sp.hbar, si.gamma, params.beta);
}

Eigen::MatrixXd provider_hessian(const MarketParams& params, const DemandSystem& system,
                                 const ProviderStrategy& sp) {
    check_size(system, sp);
    const Eigen::Index n = sp.p.size();
    const Eigen::MatrixXd m = system.inverse();
    Eigen::MatrixXd h(n + 1, n + 1);
    h.topLeftCorner(n, n) = -(m + m.transpose());
    h.topRightCorner(n, 1) = system.influence();
    h.bottomLeftCorner(1, n) = system.influence().transpose();
    const double gap = 1.0 - sp.hbar;
    h(n, n) = -2.0 * params.attacker_resource / (gap * gap * gap);
    return h;
}

ConditionCheck check_existence(const MarketParams& params, const DemandSystem& system) {
    ConditionCheck out;
    out.lhs = params.attacker_resource;
    out.rhs = system.influence().sum() / 8.0;
    out.holds = out.lhs > out.rhs;
    return out;
}

ConditionCheck check_uniqueness(const MarketParams& params) {
    ConditionCheck out;
    const double b = params.beta;
    out.lhs = params.attacker_resource;
    out.rhs = 9.0 * (b + 1.0) * (b + 1.0) * std::pow(params.gamma_cap, b + 1.0) / (128.0 * b);
    out.holds = out.lhs > out.rhs;
    return out;
}

Eigen::MatrixXd leader_jacobian(const MarketParams& params, const DemandSystem& system,
                                const ProviderStrategy& sp, const InsurerStrategy& si) {
    const Eigen::Index n = sp.p.size();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n + 2, n + 2);
    d.topLeftCorner(n + 1, n + 1) = provider_hessian(params, system, sp);
    // Provider rows have no gamma dependence; the insurer row has none in p.
    d(n + 1, n) = -sigma_dgamma_dhbar(sp.hbar, si.gamma, params.beta);
    d(n + 1, n + 1) = insurer_curvature(params, sp, si);
    return d + d.transpose();
}

}  // namespace chainrisk
