#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace chainrisk {

/// Social-externality structure among users: g(i, j) is the influence of user
/// j's purchase on user i's utility, scaled network-wide by alpha.
class ExternalityGraph {
public:
    /// Throws DomainError unless g is square, nonnegative, finite, zero on the
    /// diagonal, and alpha > 0.
    ExternalityGraph(Eigen::MatrixXd g, double alpha);

    std::size_t n_users() const noexcept { return static_cast<std::size_t>(g_.rows()); }
    const Eigen::MatrixXd& g() const noexcept { return g_; }
    double alpha() const noexcept { return alpha_; }

    ExternalityGraph with_alpha(double alpha) const { return ExternalityGraph(g_, alpha); }

private:
    Eigen::MatrixXd g_;
    double alpha_;
};

struct SpectralCheck {
    bool holds = false;
    double alpha_rho = 0.0;
    long iterations = 0;
};

/// Perron root of a nonnegative square matrix by shifted power iteration,
/// stopped on the Collatz-Wielandt bracket (relative width <= tolerance).
/// Throws ConvergenceError after max_iterations.
double spectral_radius(const Eigen::MatrixXd& g, double tolerance = 1e-10,
                       long max_iterations = 100000, long* iterations_used = nullptr);

/// alpha * rho(G) < 1, the condition under which the demand system has a unique solution.
SpectralCheck check_assumption1(const ExternalityGraph& graph);

enum class DemandClass { S0, S1, S };

struct DemandProfile {
    Eigen::VectorXd x;           // purchase probabilities
    Eigen::VectorXd thresholds;  // valuation cut-offs p_i - hbar - alpha (Gx)_i
    Eigen::VectorXd residual;    // (1 + hbar) 1 - p - (I - alpha G) x
    std::vector<DemandClass> partition;

    /// Largest distance of any x_i outside [0, 1]; zero for a feasible profile.
    double bound_violation() const;
    bool all_interior() const;
    double total() const { return x.sum(); }
};

/// I - alpha G with its LU factorization, built once and shared by every demand
/// evaluation at fixed (G, alpha). Construction runs the spectral check and
/// throws PreconditionError when alpha * rho(G) >= 1.
class DemandSystem {
public:
    explicit DemandSystem(ExternalityGraph graph);

    const ExternalityGraph& graph() const noexcept { return graph_; }
    std::size_t n_users() const noexcept { return graph_.n_users(); }
    double alpha_rho() const noexcept { return alpha_rho_; }
    const Eigen::MatrixXd& system_matrix() const noexcept { return a_; }

    /// M b and M^T b with M = (I - alpha G)^{-1}.
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    Eigen::VectorXd solve_transposed(const Eigen::VectorXd& b) const;
    /// M 1 and M^T 1, cached.
    const Eigen::VectorXd& influence() const noexcept { return m_ones_; }
    const Eigen::VectorXd& influence_transposed() const noexcept { return mt_ones_; }
    /// Dense M; only for Hessian assembly.
    Eigen::MatrixXd inverse() const;

private:
    ExternalityGraph graph_;
    double alpha_rho_ = 0.0;
    Eigen::MatrixXd a_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    Eigen::VectorXd m_ones_;
    Eigen::VectorXd mt_ones_;
};

/// Utility of user i with valuation theta_i given everyone's purchase probabilities x.
double user_utility(const ExternalityGraph& graph, std::size_t i, double theta_i, double hbar,
                    double p_i, const Eigen::VectorXd& x);

/// Unclamped interior solution x = (I - alpha G)^{-1} [(1 + hbar) 1 - p].
/// Out-of-range components are kept and reported through bound_violation().
DemandProfile closed_form_demand(const DemandSystem& system, double hbar,
                                 const Eigen::VectorXd& p);
DemandProfile closed_form_demand(const ExternalityGraph& graph, double hbar,
                                 const Eigen::VectorXd& p);

struct LcpOptions {
    double tolerance = 1e-10;
    long max_sweeps = 1000000;
};

/// Bounded LCP solution of the demand system by projected Gauss-Seidel, then
/// polished by an exact solve on the detected active set.
DemandProfile lcp_demand(const DemandSystem& system, double hbar, const Eigen::VectorXd& p,
                         const LcpOptions& options = {});
DemandProfile lcp_demand(const ExternalityGraph& graph, double hbar, const Eigen::VectorXd& p,
                         const LcpOptions& options = {});

/// Enumerates all 3^n partitions into S0/S1/S and returns the single consistent one.
/// Throws InvariantViolation if zero or several partitions are consistent. n <= 12.
DemandProfile brute_force_lcp(const ExternalityGraph& graph, double hbar,
                              const Eigen::VectorXd& p);

/// Fills thresholds, residual and partition for a given x.
DemandProfile make_profile(const ExternalityGraph& graph, double hbar, const Eigen::VectorXd& p,
                           Eigen::VectorXd x);

}  // namespace chainrisk
