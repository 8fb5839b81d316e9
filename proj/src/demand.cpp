#include "chainrisk/demand.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "chainrisk/error.hpp"

namespace chainrisk {

namespace {

constexpr double kClassifyTol = 1e-12;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void check_prices(const ExternalityGraph& graph, const Eigen::VectorXd& p) {
    if (static_cast<std::size_t>(p.size()) != graph.n_users())
        throw DomainError("demand: price vector length does not match the number of users");
}

}  // namespace

ExternalityGraph::ExternalityGraph(Eigen::MatrixXd g, double alpha)
    : g_(std::move(g)), alpha_(alpha) {
    if (g_.rows() != g_.cols() || g_.rows() == 0)
        throw DomainError("ExternalityGraph: G must be a nonempty square matrix");
    if (!(alpha_ > 0.0) || !std::isfinite(alpha_))
        throw DomainError("ExternalityGraph: alpha must be finite and > 0");
    for (Eigen::Index i = 0; i < g_.rows(); ++i) {
        if (g_(i, i) != 0.0) throw DomainError("ExternalityGraph: diagonal of G must be zero");
        for (Eigen::Index j = 0; j < g_.cols(); ++j) {
            if (!(g_(i, j) >= 0.0) || !std::isfinite(g_(i, j)))
                throw DomainError("ExternalityGraph: entries of G must be finite and >= 0");
        }
    }
}

double spectral_radius(const Eigen::MatrixXd& g, double tolerance, long max_iterations,
                       long* iterations_used) {
    const Eigen::Index n = g.rows();
    const double max_row_sum = g.rowwise().sum().maxCoeff();
    if (iterations_used) *iterations_used = 0;
    if (max_row_sum == 0.0) return 0.0;

    // rho = 0 exactly when G is nilpotent (e.g. an acyclic influence graph); for
    // nonnegative G that shows up as G^k 1 = 0 for some k <= n, with no cancellation.
    {
        Eigen::VectorXd z = Eigen::VectorXd::Ones(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            z = g * z;
            const double top = z.maxCoeff();
            if (top == 0.0) return 0.0;
            z /= top;
        }
    }

    // The shift makes the Perron root strictly dominant even for periodic G.
    const double shift = 0.1 * max_row_sum;
    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    double previous = std::numeric_limits<double>::quiet_NaN();
    double previous_change = std::numeric_limits<double>::quiet_NaN();
    for (long it = 1; it <= max_iterations; ++it) {
        const Eigen::VectorXd y = g * x;

        // Collatz-Wielandt bracket: min ratio <= rho <= max ratio for x > 0.
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (x(i) <= 1e-300) continue;
            const double ratio = y(i) / x(i);
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        if (iterations_used) *iterations_used = it;
        if (hi - lo <= tolerance * hi) return 0.5 * (lo + hi);

        Eigen::VectorXd next = y + shift * x;
        const double norm = next.norm();
        next /= norm;
        const double estimate = norm - shift;

        // Reducible G can leave the bracket open; fall back to the geometric
        // error estimate of the eigenvalue sequence.
        const double change = std::abs(estimate - previous);
        if (std::isfinite(previous_change) && previous_change > 0.0) {
            const double rate = change / previous_change;
            if (rate < 1.0 && change <= tolerance * estimate * (1.0 - rate)) return estimate;
        }
        previous_change = change;
        previous = estimate;
        x = std::move(next);
    }
    throw ConvergenceError("spectral_radius: power iteration did not converge", previous_change,
                           max_iterations);
}

SpectralCheck check_assumption1(const ExternalityGraph& graph) {
    SpectralCheck out;
    const double rho = spectral_radius(graph.g(), 1e-10, 100000, &out.iterations);
    out.alpha_rho = graph.alpha() * rho;
    out.holds = out.alpha_rho < 1.0;
    return out;
}

double DemandProfile::bound_violation() const {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        worst = std::max({worst, -x(i), x(i) - 1.0});
    return worst;
}

bool DemandProfile::all_interior() const {
    return bound_violation() == 0.0 &&
           std::all_of(partition.begin(), partition.end(),
                       [](DemandClass c) { return c == DemandClass::S; });
}

DemandSystem::DemandSystem(ExternalityGraph graph) : graph_(std::move(graph)) {
    const SpectralCheck check = check_assumption1(graph_);
    alpha_rho_ = check.alpha_rho;
    if (!check.holds) {
        std::ostringstream msg;
        msg << "alpha * rho(G) = " << check.alpha_rho << " >= 1; the demand system is not well posed";
        throw PreconditionError(msg.str());
    }
    const auto n = static_cast<Eigen::Index>(graph_.n_users());
    a_ = Eigen::MatrixXd::Identity(n, n) - graph_.alpha() * graph_.g();
    lu_.compute(a_);
    if (!(std::abs(lu_.determinant()) > 0.0))
        throw NumericalError("DemandSystem: I - alpha G is singular");
    m_ones_ = solve(Eigen::VectorXd::Ones(n));
    mt_ones_ = solve_transposed(Eigen::VectorXd::Ones(n));
}

Eigen::VectorXd DemandSystem::solve(const Eigen::VectorXd& b) const { return lu_.solve(b); }

Eigen::VectorXd DemandSystem::solve_transposed(const Eigen::VectorXd& b) const {
    return lu_.transpose().solve(b);
}

Eigen::MatrixXd DemandSystem::inverse() const { return lu_.inverse(); }

double user_utility(const ExternalityGraph& graph, std::size_t i, double theta_i, double hbar,
                    double p_i, const Eigen::VectorXd& x) {
    if (i >= graph.n_users()) throw std::out_of_range("user_utility: user index out of range");
    if (static_cast<std::size_t>(x.size()) != graph.n_users())
        throw DomainError("user_utility: demand vector length does not match the number of users");
    const auto row = static_cast<Eigen::Index>(i);
    return hbar + theta_i - p_i + graph.alpha() * graph.g().row(row).dot(x);
}

DemandProfile make_profile(const ExternalityGraph& graph, double hbar, const Eigen::VectorXd& p,
                           Eigen::VectorXd x) {
    DemandProfile out;
    const Eigen::VectorXd spill = graph.alpha() * (graph.g() * x);
    out.thresholds = p - Eigen::VectorXd::Constant(p.size(), hbar) - spill;
    out.residual = Eigen::VectorXd::Constant(p.size(), 1.0 + hbar) - p - x + spill;
    out.partition.resize(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        auto& cls = out.partition[static_cast<std::size_t>(i)];
        if (x(i) <= 0.0 && out.residual(i) < -kClassifyTol)
            cls = DemandClass::S0;
        else if (x(i) >= 1.0 && out.residual(i) > kClassifyTol)
            cls = DemandClass::S1;
        else
            cls = DemandClass::S;
    }
    out.x = std::move(x);
    return out;
}

DemandProfile closed_form_demand(const DemandSystem& system, double hbar,
                                 const Eigen::VectorXd& p) {
    check_prices(system.graph(), p);
    const Eigen::VectorXd rhs = Eigen::VectorXd::Constant(p.size(), 1.0 + hbar) - p;
    Eigen::VectorXd x = system.solve(rhs);
    if (!x.allFinite()) throw NumericalError("closed_form_demand: non-finite solution");
    return make_profile(system.graph(), hbar, p, std::move(x));
}

DemandProfile closed_form_demand(const ExternalityGraph& graph, double hbar,
                                 const Eigen::VectorXd& p) {
    return closed_form_demand(DemandSystem(graph), hbar, p);
}

namespace {

double fixed_point_residual(const ExternalityGraph& graph, const Eigen::VectorXd& b,
                            const Eigen::VectorXd& x) {
    const Eigen::VectorXd target = b + graph.alpha() * (graph.g() * x);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        worst = std::max(worst, std::abs(x(i) - clamp01(target(i))));
    return worst;
}

// Exact solve on the active set read off x: the free block satisfies
// (I - alpha G)_SS x_S = b_S + alpha G_{S,S1} 1.
Eigen::VectorXd polish(const ExternalityGraph& graph, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& x) {
    std::vector<Eigen::Index> free;
    Eigen::VectorXd fixed = Eigen::VectorXd::Zero(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x(i) <= 0.0)
            fixed(i) = 0.0;
        else if (x(i) >= 1.0)
            fixed(i) = 1.0;
        else
            free.push_back(i);
    }
    if (free.empty()) return fixed;
    const auto m = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd sub(m, m);
    Eigen::VectorXd rhs(m);
    const Eigen::VectorXd spill_fixed = graph.alpha() * (graph.g() * fixed);
    for (Eigen::Index r = 0; r < m; ++r) {
        rhs(r) = b(free[r]) + spill_fixed(free[r]);
        for (Eigen::Index c = 0; c < m; ++c)
            sub(r, c) = (r == c ? 1.0 : 0.0) - graph.alpha() * graph.g()(free[r], free[c]);
    }
    const Eigen::VectorXd xs = sub.partialPivLu().solve(rhs);
    Eigen::VectorXd out = fixed;
    for (Eigen::Index r = 0; r < m; ++r) out(free[r]) = xs(r);
    return out;
}

}  // namespace

DemandProfile lcp_demand(const DemandSystem& system, double hbar, const Eigen::VectorXd& p,
                         const LcpOptions& options) {
    const auto& graph = system.graph();
    check_prices(graph, p);
    const Eigen::Index n = p.size();
    const Eigen::VectorXd b = Eigen::VectorXd::Constant(n, 1.0 + hbar) - p;
    const Eigen::MatrixXd& g = graph.g();
    const double alpha = graph.alpha();

    Eigen::VectorXd x = b.unaryExpr(&clamp01);
    double residual = fixed_point_residual(graph, b, x);
    long sweeps = 0;
    while (residual >= options.tolerance) {
        if (++sweeps > options.max_sweeps)
            throw ConvergenceError("lcp_demand: projected Gauss-Seidel hit its sweep cap", residual,
                                   options.max_sweeps);
        for (Eigen::Index i = 0; i < n; ++i) x(i) = clamp01(b(i) + alpha * g.row(i).dot(x));
        residual = fixed_point_residual(graph, b, x);
    }

    Eigen::VectorXd polished = polish(graph, b, x);
    if (polished.allFinite()) {
        const Eigen::VectorXd clamped = polished.unaryExpr(&clamp01);
        if (fixed_point_residual(graph, b, clamped) <= residual) x = clamped;
    }
    return make_profile(graph, hbar, p, std::move(x));
}

DemandProfile lcp_demand(const ExternalityGraph& graph, double hbar, const Eigen::VectorXd& p,
                         const LcpOptions& options) {
    return lcp_demand(DemandSystem(graph), hbar, p, options);
}

DemandProfile brute_force_lcp(const ExternalityGraph& graph, double hbar,
                              const Eigen::VectorXd& p) {
    check_prices(graph, p);
    const auto n = static_cast<Eigen::Index>(graph.n_users());
    if (n > 12) throw DomainError("brute_force_lcp: at most 12 users");
    if (!check_assumption1(graph).holds)
        throw PreconditionError("brute_force_lcp: alpha * rho(G) >= 1");

    const Eigen::VectorXd b = Eigen::VectorXd::Constant(n, 1.0 + hbar) - p;
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - graph.alpha() * graph.g();

    long total = 1;
    for (Eigen::Index i = 0; i < n; ++i) total *= 3;

    std::vector<int> label(static_cast<std::size_t>(n), 0);  // 0 -> S0, 1 -> S1, 2 -> S
    int found = 0;
    Eigen::VectorXd solution;
    for (long code = 0; code < total; ++code) {
        long c = code;
        std::vector<Eigen::Index> free;
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            label[static_cast<std::size_t>(i)] = static_cast<int>(c % 3);
            c /= 3;
            if (label[static_cast<std::size_t>(i)] == 1) x(i) = 1.0;
            if (label[static_cast<std::size_t>(i)] == 2) free.push_back(i);
        }
        if (!free.empty()) {
            const auto m = static_cast<Eigen::Index>(free.size());
            Eigen::MatrixXd sub(m, m);
            Eigen::VectorXd rhs(m);
            const Eigen::VectorXd known = a * x;
            for (Eigen::Index r = 0; r < m; ++r) {
                rhs(r) = b(free[r]) - known(free[r]);
                for (Eigen::Index k = 0; k < m; ++k) sub(r, k) = a(free[r], free[k]);
            }
            const Eigen::VectorXd xs = sub.partialPivLu().solve(rhs);
            for (Eigen::Index r = 0; r < m; ++r) x(free[r]) = xs(r);
        }
        const Eigen::VectorXd residual = b - a * x;
        bool consistent = true;
        for (Eigen::Index i = 0; i < n && consistent; ++i) {
            switch (label[static_cast<std::size_t>(i)]) {
                case 0: consistent = residual(i) < -kClassifyTol; break;
                case 1: consistent = residual(i) > kClassifyTol; break;
                default: consistent = x(i) >= -kClassifyTol && x(i) <= 1.0 + kClassifyTol; break;
            }
        }
        if (consistent) {
            ++found;
            solution = x;
        }
    }
    if (found != 1) {
        std::ostringstream msg;
        msg << "brute_force_lcp: " << found << " consistent partitions (expected exactly one)";
        throw InvariantViolation(msg.str());
    }
    return make_profile(graph, hbar, p, solution.unaryExpr(&clamp01));
}

}  // namespace chainrisk
