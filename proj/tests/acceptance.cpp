// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "chainrisk/demand.hpp"
#include "chainrisk/equilibrium.hpp"
#include "chainrisk/harness.hpp"
#include "chainrisk/market.hpp"
#include "chainrisk/risk.hpp"
#include "chainrisk/specfun.hpp"
#include "test_support.hpp"

using namespace chainrisk;
namespace ct = chainrisk::testing;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Tracks the worst value seen against a bound and the first failure message.
struct Tally {
    bool pass = true;
    std::ostringstream note;
    void require(bool ok, const std::string& what) {
        if (!ok && pass) note << "first failure: " << what << "; ";
        pass = pass && ok;
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

Outcome special_functions() {
    Tally t;
    ct::Rng rng(101);
    double worst_poly = 0.0;
    for (int k = 0; k < 20; ++k) {
        const int a = rng.integer(1, 12);
        const int b = rng.integer(1, 12);
        const double w = rng.uniform();
        worst_poly = std::max(worst_poly, std::abs(reg_inc_beta(w, a, b) - ct::inc_beta_integer(w, a, b)));
    }
    double worst_sym = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double w = rng.uniform();
        const double u = rng.uniform(0.05, 50.0);
        const double v = rng.uniform(0.05, 50.0);
        worst_sym = std::max(worst_sym, std::abs(reg_inc_beta(w, u, v) + reg_inc_beta(1.0 - w, v, u) - 1.0));
    }
    t.require(worst_poly <= 1e-10, "polynomial oracle");
    t.require(worst_sym <= 1e-10, "symmetry");
    return {t.pass, t.note.str() + "max poly err " + fmt(worst_poly) + ", max symmetry err " + fmt(worst_sym)};
}

Outcome attack_probability_shape() {
    Tally t;
    for (double tt : {5.0, 10.0, 20.0}) {
        t.require(attack_probability(tt, 0.3) == 1.0, "P(0.3) = 1");
        t.require(attack_probability(tt, 0.5) == 1.0, "P(0.5) = 1");
        t.require(attack_probability(tt, 1.0) == 0.0, "P(1) = 0");
        double prev = attack_probability(tt, 0.0);
        for (int i = 1; i < 200; ++i) {
            const double cur = attack_probability(tt, i / 199.0);
            t.require(cur <= prev, "nonincreasing at T/T0 = " + fmt(tt));
            prev = cur;
        }
    }
    return {t.pass, t.note.str() + "boundaries exact, 3 x 200-point grids monotone"};
}

Outcome premium_consistency() {
    Tally t;
    const auto m = MarketParams::defaults();
    const double loss = expected_loss(m.risk);
    t.require(std::abs(premium(m.risk, 1.0) - loss) <= 1e-12 * loss, "premium(1) = expected loss");
    const double cap = m.risk.loss_scale() / 2.0;
    for (int i = 0; i < 50; ++i) {
        const double g = 1.0 + i / 49.0;
        const double lam = premium(m.risk, g);
        t.require(loss <= lam && lam <= cap, "bounds at gamma = " + fmt(g));
    }
    double worst = 0.0;
    for (double g : {1.0, 1.25, 1.5, 1.75, 2.0}) {
        const double oracle = ct::premium_oracle(m.risk.blocks_per_period(), m.risk.loss_scale(), g);
        worst = std::max(worst, std::abs(premium(m.risk, g) - oracle) / oracle);
    }
    t.require(worst <= 1e-3, "midpoint vs adaptive oracle");
    return {t.pass, t.note.str() + "E_loss " + fmt(loss) + ", max rel dev from oracle " + fmt(worst)};
}

Outcome follower_subgame() {
    Tally t;
    ct::Rng rng(404);
    double worst_lcp = 0.0;
    double worst_closed = 0.0;
    int interior = 0;
    for (int k = 0; k < 200; ++k) {
        const int n = rng.integer(1, 8);
        const auto graph = ct::random_graph(rng, n, rng.uniform(0.05, 0.95));
        const DemandSystem sys(graph);
        const double hbar = rng.uniform(0.5, 1.0);
        VectorXd p(n);
        // Half the instances priced to stay interior.
        const bool aim_interior = k % 2 == 0;
        for (int i = 0; i < n; ++i) p[i] = aim_interior ? rng.uniform(1.0 + hbar - 0.3, 1.0 + hbar - 0.01)
                                                        : rng.uniform(0.0, 2.0);
        DemandProfile brute;
        try {
            brute = brute_force_lcp(graph, hbar, p);
        } catch (const std::exception& e) {
            t.require(false, e.what());
            continue;
        }
        const auto pgs = lcp_demand(sys, hbar, p);
        worst_lcp = std::max(worst_lcp, (brute.x - pgs.x).lpNorm<Eigen::Infinity>());
        const auto closed = closed_form_demand(sys, hbar, p);
        if (closed.all_interior()) {
            ++interior;
            worst_closed = std::max(worst_closed, (closed.x - pgs.x).lpNorm<Eigen::Infinity>());
        }
    }
    t.require(worst_lcp <= 1e-9, "lcp vs enumeration");
    t.require(worst_closed <= 1e-10, "closed form vs lcp");
    t.require(interior > 0, "some interior instances");
    return {t.pass, t.note.str() + "max |lcp - enum| " + fmt(worst_lcp) + ", max |closed - lcp| " +
                        fmt(worst_closed) + " over " + std::to_string(interior) + " interior"};
}

ProviderStrategy random_interior(ct::Rng& rng, int n, const MarketParams& m) {
    ProviderStrategy s;
    s.p = VectorXd(n);
    for (int i = 0; i < n; ++i) s.p[i] = rng.uniform(0.05, 0.95) * m.price_cap;
    s.hbar = rng.uniform(0.52, 0.98);
    return s;
}

Outcome derivative_fidelity() {
    Tally t;
    const auto m = MarketParams::defaults();
    ct::Rng rng(505);
    const double h = 1e-6;
    double worst_grad = 0.0;
    double worst_hess = 0.0;
    for (int k = 0; k < 50; ++k) {
        const int n = k % 2 == 0 ? 3 : 10;
        const auto graph = ct::random_graph(rng, n, rng.uniform(0.05, 0.9));
        const DemandSystem sys(graph);
        const auto s = random_interior(rng, n, m);
        const InsurerStrategy si{rng.uniform(1.05, 1.95)};
        const VectorXd grad = provider_gradient(m, sys, s);
        const MatrixXd hess = provider_hessian(m, sys, s);
        for (int j = 0; j <= n; ++j) {
            auto shifted = [&](double d) {
                ProviderStrategy u = s;
                if (j < n) u.p[j] += d;
                else u.hbar += d;
                return u;
            };
            const double fd = (provider_profit(m, sys, shifted(h), si) - provider_profit(m, sys, shifted(-h), si)) / (2 * h);
            worst_grad = std::max(worst_grad, rel(grad[j], fd));
            const VectorXd col = (provider_gradient(m, sys, shifted(h)) - provider_gradient(m, sys, shifted(-h))) / (2 * h);
            for (int i = 0; i <= n; ++i) worst_hess = std::max(worst_hess, rel(hess(i, j), col[i]));
        }
        const auto pi = [&](double g) { return insurer_profit(m, s, InsurerStrategy{g}); };
        const auto di = [&](double g) { return insurer_gradient(m, s, InsurerStrategy{g}); };
        worst_grad = std::max(worst_grad, rel(insurer_gradient(m, s, si), ct::central_difference(pi, si.gamma, h)));
        worst_hess = std::max(worst_hess, rel(insurer_curvature(m, s, si), ct::central_difference(di, si.gamma, h)));
    }
    t.require(worst_grad <= 1e-6, "gradients");
    t.require(worst_hess <= 1e-4, "second derivatives");
    return {t.pass, t.note.str() + "max rel err gradient " + fmt(worst_grad) + ", second derivative " + fmt(worst_hess)};
}

// The concavity argument needs M + M^T positive definite, which holds for symmetric G
// but not in general; the pass/fail run uses symmetric draws, and the asymmetric
// counterexample rate is reported alongside.
Outcome definiteness() {
    Tally t;
    ct::Rng rng(606);
    double worst_eig = -1e300;
    int cholesky_fail = 0;
    for (int block = 0; block < 2; ++block) {
        for (int k = 0; k < 50; ++k) {
            const int n = rng.integer(2, 10);
            const auto graph = ct::random_symmetric_graph(rng, n, rng.uniform(0.05, 0.8));
            const DemandSystem sys(graph);
            auto m = MarketParams::defaults();
            // First block: existence condition with margin; second: a = 2000.
            m.attacker_resource = block == 0 ? 1.5 * check_existence(m, sys).rhs : 2000.0;
            if (block == 0) t.require(check_existence(m, sys).holds, "existence condition");
            else t.require(check_uniqueness(m).holds, "uniqueness condition");
            const auto s = random_interior(rng, n, m);
            Eigen::LLT<MatrixXd> llt(-provider_hessian(m, sys, s));
            if (llt.info() != Eigen::Success) ++cholesky_fail;
            if (block == 1) {
                const InsurerStrategy si{rng.uniform(1.01, 2.0)};
                Eigen::SelfAdjointEigenSolver<MatrixXd> es(leader_jacobian(m, sys, s, si));
                worst_eig = std::max(worst_eig, es.eigenvalues().maxCoeff());
            }
        }
    }
    t.require(cholesky_fail == 0, "Cholesky of -H_P");
    t.require(worst_eig < 0.0, "J negative definite");

    int asymmetric_indefinite = 0;
    for (int k = 0; k < 50; ++k) {
        const int n = rng.integer(2, 10);
        const DemandSystem sys(ct::random_graph(rng, n, rng.uniform(0.05, 0.8)));
        const MatrixXd minv = sys.inverse();
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(minv + minv.transpose());
        if (es.eigenvalues().minCoeff() <= 0.0) ++asymmetric_indefinite;
    }
    return {t.pass, t.note.str() + "symmetric G: " + std::to_string(cholesky_fail) +
                        " Cholesky failures, max eig(J) " + fmt(worst_eig) + "; asymmetric G: " +
                        std::to_string(asymmetric_indefinite) + "/50 with M + M^T indefinite"};
}

Outcome convergence_uniqueness() {
    Tally t;
    auto m = MarketParams::defaults();
    m.attacker_resource = 2000.0;
    ct::Rng rng(707);
    const auto graph = ct::random_graph(rng, 10, 0.5);
    const DemandSystem sys(graph);
    t.require(check_uniqueness(m).holds, "uniqueness condition");
    std::vector<EquilibriumReport> reports;
    for (std::uint64_t k = 0; k < 5; ++k) {
        const auto [ps, is] = random_start(m, 10, 9000 + k);
        reports.push_back(solve_stackelberg(m, sys, ps, is, SolveOptions{}));
        const auto& r = reports.back();
        t.require(r.converged && r.trace.back().delta < 1e-6, "start " + std::to_string(k) + " converged");
    }
    double spread = 0.0;
    for (const auto& r : reports)
        spread = std::max(spread, strategy_distance(r.provider, r.insurer, reports[0].provider, reports[0].insurer));
    t.require(spread <= 1e-4, "agreement");
    int rounds = 0;
    for (const auto& r : reports) rounds = std::max(rounds, r.rounds);
    return {t.pass, t.note.str() + "5/5 starts, max rounds " + std::to_string(rounds) + ", spread " + fmt(spread)};
}

// Shared by criteria 8 and 9: paper-default market, seeded G.
ExperimentConfig users_sweep() {
    ExperimentConfig c;
    c.n_users = {50, 60, 70, 80, 90, 100, 110, 120};
    c.alpha = {6.5e-4, 7e-4, 7.5e-4};
    return c;
}

ExperimentConfig attacker_sweep() {
    ExperimentConfig c;
    c.attacker_resource = {50, 100, 150};
    c.tx_per_block = {100, 200, 300};
    return c;
}

Outcome trend_reproduction() {
    Tally t;
    const auto users = run_sweep(users_sweep());
    const auto attack = run_sweep(attacker_sweep());
    for (const auto& r : users) t.require(r.converged, "users sweep point converged");
    for (const auto& r : attack) t.require(r.converged, "attacker sweep point converged");

    std::map<std::pair<int, double>, SweepRow> by_na;
    for (const auto& r : users) by_na[{r.n, r.alpha}] = r;
    const auto cfg = users_sweep();
    const double eps = 1e-9;
    int checks = 0;
    for (double a : cfg.alpha)
        for (std::size_t i = 1; i < cfg.n_users.size(); ++i, ++checks)
            t.require(by_na[{cfg.n_users[i], a}].profit_provider >= by_na[{cfg.n_users[i - 1], a}].profit_provider - eps,
                      "(a) profit nondecreasing in n");
    for (int n : cfg.n_users)
        for (std::size_t j = 1; j < cfg.alpha.size(); ++j, checks += 3) {
            const auto& lo = by_na[{n, cfg.alpha[j - 1]}];
            const auto& hi = by_na[{n, cfg.alpha[j]}];
            t.require(hi.profit_provider > lo.profit_provider, "(a) profit increasing in alpha");
            t.require(hi.total_demand >= lo.total_demand - eps, "(b) demand nondecreasing in alpha");
            t.require(hi.gamma_star <= lo.gamma_star + eps, "(b) gamma* nonincreasing in alpha");
        }

    std::map<std::pair<int, double>, SweepRow> by_ta;
    for (const auto& r : attack) by_ta[{r.tx_per_block, r.attacker_resource}] = r;
    const auto acfg = attacker_sweep();
    for (int tx : acfg.tx_per_block)
        for (std::size_t j = 1; j < acfg.attacker_resource.size(); ++j, checks += 2) {
            const auto& lo = by_ta[{tx, acfg.attacker_resource[j - 1]}];
            const auto& hi = by_ta[{tx, acfg.attacker_resource[j]}];
            t.require(hi.profit_provider <= lo.profit_provider + eps, "(c) profit nonincreasing in a");
            t.require(hi.investment >= lo.investment - eps, "(c) investment nondecreasing in a");
        }
    return {t.pass, t.note.str() + std::to_string(users.size() + attack.size()) + " sweep points, " +
                        std::to_string(checks) + " slope checks"};
}

Outcome investment_anchor() {
    Tally t;
    auto cfg = attacker_sweep();
    cfg.attacker_resource = {50, 100};
    cfg.tx_per_block = {300};
    const auto rows = run_sweep(cfg);
    const double h50 = rows.at(0).hbar_star;
    const double h100 = rows.at(1).hbar_star;
    t.require(rows[0].converged && rows[1].converged, "converged");
    t.require(h50 > h100, "hbar*(a=50) > hbar*(a=100)");
    t.require(h50 > 0.9 && h50 < 0.97, "hbar*(a=50) in (0.9, 0.97)");
    t.require(h100 > 0.9 && h100 < 0.97, "hbar*(a=100) in (0.9, 0.97)");
    return {t.pass, t.note.str() + "hbar*(a=50) " + fmt(h50) + ", hbar*(a=100) " + fmt(h100) +
                        " at N_T = 300 (reference ratios 18/19, 12/13)"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"special-function correctness", special_functions},
        {"attack-probability boundary and shape", attack_probability_shape},
        {"premium consistency", premium_consistency},
        {"follower-subgame correctness", follower_subgame},
        {"derivative fidelity", derivative_fidelity},
        {"definiteness conditions", definiteness},
        {"convergence and uniqueness", convergence_uniqueness},
        {"qualitative trend reproduction", trend_reproduction},
        {"investment-ratio ordering anchor", investment_anchor},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i].second();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] %zu %s (%.2f s) %s\n", out.pass ? "PASS" : "FAIL", i + 1,
                    criteria[i].first.c_str(), secs, out.detail.c_str());
        std::fflush(stdout);
        failures += out.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
