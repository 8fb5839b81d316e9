#include "chainrisk/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "chainrisk/error.hpp"

namespace chainrisk {

void SolveOptions::validate() const {
    if (!(br_tolerance > 0.0) || !(outer_tolerance > 0.0))
        throw DomainError("SolveOptions: tolerances must be > 0");
    if (max_outer_rounds < 1 || max_inner_iters < 1)
        throw DomainError("SolveOptions: iteration caps must be >= 1");
    if (multistart_count < 0) throw DomainError("SolveOptions: multistart_count must be >= 0");
}

double strategy_distance(const ProviderStrategy& a, const InsurerStrategy& ai,
                         const ProviderStrategy& b, const InsurerStrategy& bi) {
    double d = std::max(std::abs(a.hbar - b.hbar), std::abs(ai.gamma - bi.gamma));
    if (a.p.size() > 0) d = std::max(d, (a.p - b.p).cwiseAbs().maxCoeff());
    return d;
}

namespace {

double projected_stationarity(const MarketParams& params, const DemandSystem& system,
                              const ProviderStrategy& s) {
    const Eigen::VectorXd grad = provider_gradient(params, system, s);
    const Eigen::Index n = s.p.size();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        worst = std::max(worst, std::abs(std::clamp(s.p(i) + grad(i), kPriceFloor, params.price_cap) - s.p(i)));
    const double h = std::clamp(s.hbar + grad(n), 0.5, 1.0 - kHbarCeilingGap);
    return std::max(worst, std::abs(h - s.hbar));
}

// argmax over hbar for fixed prices: p^T M 1 + reward = a / (1 - hbar)^2.
double best_hbar(const MarketParams& params, const DemandSystem& system, const Eigen::VectorXd& p) {
    const double slope = p.dot(system.influence()) + params.risk.reward_scale();
    const double h = 1.0 - std::sqrt(params.attacker_resource / slope);
    return std::clamp(h, 0.5, 1.0 - kHbarCeilingGap);
}

// max b^T p - 1/2 p^T Q p over [lo, hi]^n. Coordinate sweeps settle the active set,
// then a Newton solve on the free block finishes; returns sweeps used.
int box_qp(const Eigen::MatrixXd& q, const Eigen::VectorXd& b, double lo, double hi,
           Eigen::VectorXd& p, double tolerance, int max_sweeps) {
    const Eigen::Index n = p.size();
    auto kkt_violation = [&](const Eigen::VectorXd& x) {
        const Eigen::VectorXd g = b - q * x;
        double worst = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            worst = std::max(worst, std::abs(std::clamp(x(i) + g(i), lo, hi) - x(i)));
        return worst;
    };
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double g = b(i) - q.row(i).dot(p);
            p(i) = std::clamp(p(i) + g / q(i, i), lo, hi);
        }
        if (sweep % 5 != 0 && sweep != 1) continue;

        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < n; ++i)
            if (p(i) > lo && p(i) < hi) free.push_back(i);
        Eigen::VectorXd trial = p;
        if (!free.empty()) {
            const auto m = static_cast<Eigen::Index>(free.size());
            Eigen::MatrixXd sub(m, m);
            Eigen::VectorXd rhs(m);
            const Eigen::VectorXd qp = q * p;
            for (Eigen::Index r = 0; r < m; ++r) {
                double own = 0.0;
                for (Eigen::Index c = 0; c < m; ++c) {
                    sub(r, c) = q(free[r], free[c]);
                    own += q(free[r], free[c]) * p(free[c]);
                }
                rhs(r) = b(free[r]) - (qp(free[r]) - own);
            }
            const Eigen::VectorXd xs = sub.partialPivLu().solve(rhs);
            for (Eigen::Index r = 0; r < m; ++r) trial(free[r]) = xs(r);
        }
        if (trial.allFinite() && (trial.array() >= lo).all() && (trial.array() <= hi).all() &&
            kkt_violation(trial) < tolerance) {
            p = trial;
            return sweep;
        }
        if (kkt_violation(p) < tolerance) return sweep;
    }
    throw ConvergenceError("best_response_provider: price subproblem hit its sweep cap",
                           kkt_violation(p), max_sweeps);
}

}  // namespace

ProviderStrategy best_response_provider(const MarketParams& params, const DemandSystem& system,
                                        const InsurerStrategy& si, const ProviderStrategy& start,
                                        const SolveOptions& opts) {
    (void)si;  // the premium is sunk from the provider's point of view
    const auto n = static_cast<Eigen::Index>(system.n_users());
    if (start.p.size() != n) throw DomainError("best_response_provider: start has wrong size");

    // Revenue p^T M [(1 + hbar) 1 - p] is the quadratic b^T p - 1/2 p^T Q p
    // with Q = M + M^T and b = (1 + hbar) M 1.
    const Eigen::MatrixXd m = system.inverse();
    const Eigen::MatrixXd q = m + m.transpose();

    ProviderStrategy s = clamp_to_domain(params, start);
    int used = 0;
    double stationarity = projected_stationarity(params, system, s);
    while (stationarity >= opts.br_tolerance) {
        if (used >= opts.max_inner_iters)
            throw ConvergenceError("best_response_provider: inner iteration cap reached",
                                   stationarity, used);
        s.hbar = best_hbar(params, system, s.p);
        used += box_qp(q, (1.0 + s.hbar) * system.influence(), kPriceFloor, params.price_cap, s.p,
                       0.1 * opts.br_tolerance, opts.max_inner_iters - used);
        const double next = projected_stationarity(params, system, s);
        // Both blocks are exact; a stalled residual is the rounding floor.
        if (next >= stationarity && next < 1e3 * opts.br_tolerance) break;
        stationarity = next;
    }
    return s;
}

InsurerStrategy best_response_insurer(const MarketParams& params, const ProviderStrategy& sp,
                                      const SolveOptions& opts) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto value = [&](double g) { return insurer_profit(params, sp, InsurerStrategy{g}); };

    double lo = 1.0 + kGammaFloorGap;
    double hi = params.gamma_cap;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = value(x1);
    double f2 = value(x2);
    while (hi - lo > opts.br_tolerance) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = value(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = value(x1);
        }
    }
    double best = 0.5 * (lo + hi);
    double best_value = value(best);
    for (double edge : {1.0 + kGammaFloorGap, params.gamma_cap}) {
        const double v = value(edge);
        if (v > best_value) {
            best = edge;
            best_value = v;
        }
    }
    return InsurerStrategy{best};
}

DemandProfile follower_demand(const DemandSystem& system, double hbar, const Eigen::VectorXd& p,
                              bool* used_fallback) {
    DemandProfile demand = closed_form_demand(system, hbar, p);
    const bool fallback = demand.bound_violation() > 1e-9;
    if (fallback) demand = lcp_demand(system, hbar, p);
    if (used_fallback) *used_fallback = fallback;
    return demand;
}

ConditionReport evaluate_conditions(const MarketParams& params, const DemandSystem& system) {
    ConditionReport out;
    out.spectral.alpha_rho = system.alpha_rho();
    out.spectral.holds = system.alpha_rho() < 1.0;
    out.existence = check_existence(params, system);
    out.uniqueness = check_uniqueness(params);
    return out;
}

EquilibriumReport solve_stackelberg(const MarketParams& params, const DemandSystem& system,
                                    const ProviderStrategy& start_p,
                                    const InsurerStrategy& start_i, const SolveOptions& opts) {
    params.validate();
    opts.validate();
    EquilibriumReport report;
    report.conditions = evaluate_conditions(params, system);

    ProviderStrategy sp = clamp_to_domain(params, start_p);
    InsurerStrategy si{clamp_gamma(params, start_i.gamma)};
    try {
        for (int round = 1; round <= opts.max_outer_rounds; ++round) {
            ProviderStrategy next_p = best_response_provider(params, system, si, sp, opts);
            InsurerStrategy next_i =
                best_response_insurer(params, opts.simultaneous ? sp : next_p, opts);
            const double delta = strategy_distance(next_p, next_i, sp, si);
            sp = std::move(next_p);
            si = next_i;

            const DemandProfile demand = follower_demand(system, sp.hbar, sp.p);
            report.trace.push_back(RoundSnapshot{round, sp, si, delta, demand.total()});
            report.rounds = round;
            if (delta < opts.outer_tolerance) {
                report.converged = true;
                break;
            }
        }
        if (!report.converged) report.message = "outer round cap reached";
    } catch (const ConvergenceError& e) {
        report.converged = false;
        report.message = e.what();
    }

    report.provider = sp;
    report.insurer = si;
    report.demand = follower_demand(system, sp.hbar, sp.p, &report.demand_fallback);
    report.profit_provider = provider_profit(params, system, sp, si);
    report.profit_insurer = insurer_profit(params, sp, si);
    return report;
}

std::pair<ProviderStrategy, InsurerStrategy> default_start(const MarketParams& params,
                                                           std::size_t n_users) {
    ProviderStrategy sp{Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_users),
                                                  0.5 * params.price_cap),
                        0.75};
    return {sp, InsurerStrategy{0.5 * (1.0 + params.gamma_cap)}};
}

std::pair<ProviderStrategy, InsurerStrategy> random_start(const MarketParams& params,
                                                          std::size_t n_users,
                                                          std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    ProviderStrategy sp;
    sp.p.resize(static_cast<Eigen::Index>(n_users));
    for (Eigen::Index i = 0; i < sp.p.size(); ++i)
        sp.p(i) = kPriceFloor + unit() * (params.price_cap - kPriceFloor);
    sp.hbar = 0.5 + unit() * (0.5 - kHbarCeilingGap);
    InsurerStrategy si{1.0 + kGammaFloorGap + unit() * (params.gamma_cap - 1.0 - kGammaFloorGap)};
    return {sp, si};
}

EquilibriumReport solve_with_multistart(const MarketParams& params, const DemandSystem& system,
                                        const SolveOptions& opts, std::uint64_t seed) {
    const auto [p0, i0] = default_start(params, system.n_users());
    EquilibriumReport report = solve_stackelberg(params, system, p0, i0, opts);
    if (opts.multistart_count == 0) return report;

    double spread = 0.0;
    for (int k = 0; k < opts.multistart_count; ++k) {
        const auto [ps, is] = random_start(params, system.n_users(), seed + static_cast<std::uint64_t>(k));
        const EquilibriumReport other = solve_stackelberg(params, system, ps, is, opts);
        if (!other.converged) report.converged = false;
        spread = std::max(spread, strategy_distance(report.provider, report.insurer,
                                                    other.provider, other.insurer));
    }
    report.multistart_spread = spread;
    return report;
}

}  // namespace chainrisk
