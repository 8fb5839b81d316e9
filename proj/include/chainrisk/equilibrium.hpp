#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chainrisk/demand.hpp"
#include "chainrisk/market.hpp"

namespace chainrisk {

struct SolveOptions {
    double br_tolerance = 1e-8;
    double outer_tolerance = 1e-6;
    int max_outer_rounds = 500;
    int max_inner_iters = 100000;
    int multistart_count = 0;
    /// Jacobi (both leaders respond to the previous round) instead of provider-then-insurer.
    bool simultaneous = false;

    void validate() const;
};

struct RoundSnapshot {
    int round = 0;
    ProviderStrategy provider;
    InsurerStrategy insurer;
    double delta = 0.0;  // joint infinity-norm change from the previous round
    double total_demand = 0.0;
};

struct ConditionReport {
    SpectralCheck spectral;
    ConditionCheck existence;
    ConditionCheck uniqueness;
};

struct EquilibriumReport {
    ProviderStrategy provider;
    InsurerStrategy insurer;
    DemandProfile demand;
    double profit_provider = 0.0;
    double profit_insurer = 0.0;
    int rounds = 0;
    std::vector<RoundSnapshot> trace;
    ConditionReport conditions;
    bool converged = false;
    bool demand_fallback = false;  // follower demand came from the LCP solver
    std::string message;
    /// Largest infinity-norm spread across multi-start solutions, when run.
    std::optional<double> multistart_spread;
};

/// Maximizer of the provider's profit over its box, warm-started at `start`.
/// Alternates the closed-form hbar update with an exact box-QP solve in the prices
/// (coordinate sweeps plus a Newton step on the free set). Both blocks are exact
/// maximizers, so this is block coordinate ascent on a concave objective.
/// Throws ConvergenceError when max_inner_iters is exhausted.
ProviderStrategy best_response_provider(const MarketParams& params, const DemandSystem& system,
                                        const InsurerStrategy& si, const ProviderStrategy& start,
                                        const SolveOptions& opts);

/// Maximizer of the insurer's profit over (1, gamma_cap] by golden-section search.
InsurerStrategy best_response_insurer(const MarketParams& params, const ProviderStrategy& sp,
                                      const SolveOptions& opts);

/// Closed-form demand, or the LCP solution when the closed form leaves [0, 1] by more than 1e-9.
DemandProfile follower_demand(const DemandSystem& system, double hbar, const Eigen::VectorXd& p,
                              bool* used_fallback = nullptr);

ConditionReport evaluate_conditions(const MarketParams& params, const DemandSystem& system);

/// Iterated best response between the provider and the insurer.
/// Non-convergence is reported through `converged`, never thrown.
EquilibriumReport solve_stackelberg(const MarketParams& params, const DemandSystem& system,
                                    const ProviderStrategy& start_p,
                                    const InsurerStrategy& start_i, const SolveOptions& opts);

/// Central starting point: every price at half the cap, hbar = 3/4, gamma mid-range.
std::pair<ProviderStrategy, InsurerStrategy> default_start(const MarketParams& params,
                                                           std::size_t n_users);

/// Uniform random feasible start.
std::pair<ProviderStrategy, InsurerStrategy> random_start(const MarketParams& params,
                                                          std::size_t n_users,
                                                          std::uint64_t seed);

/// Solves from the default start, then from opts.multistart_count random starts,
/// and records the largest disagreement in multistart_spread.
EquilibriumReport solve_with_multistart(const MarketParams& params, const DemandSystem& system,
                                        const SolveOptions& opts, std::uint64_t seed);

double strategy_distance(const ProviderStrategy& a, const InsurerStrategy& ai,
                         const ProviderStrategy& b, const InsurerStrategy& bi);

}  // namespace chainrisk
