#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "chainrisk/demand.hpp"
#include "chainrisk/equilibrium.hpp"
#include "chainrisk/market.hpp"

namespace chainrisk {

/// Experiment description. Scalars that may be swept are stored as lists; a
/// scalar in the JSON file becomes a one-element list.
struct ExperimentConfig {
    double period = 100.0;        // T
    double block_interval = 10.0; // T0
    double mining_reward = 10.0;  // r
    double compensation_rate = 10.0;  // q
    double beta = 10.0;
    double price_cap = 1.0;
    double gamma_cap = 2.0;
    int intervals = 100;

    std::vector<int> n_users{100};
    std::vector<double> alpha{7e-4};
    std::vector<double> attacker_resource{100.0};
    std::vector<int> tx_per_block{100};

    double g_low = 0.0;
    double g_high = 10.0;
    std::uint64_t seed = 20190101;
    int replicates = 1;
    SolveOptions solve;
    std::string output_path = "sweep.csv";

    /// Throws ConfigError on a violated invariant.
    void validate() const;

    MarketParams market(double attacker_resource, int tx_per_block) const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);
std::string to_json(const ExperimentConfig& config);

/// 64-bit seed for the externality draw of a given instance. Depends only on
/// (seed, n, replicate), so every alpha / a / N_T point at the same n shares G.
std::uint64_t instance_seed(std::uint64_t seed, int n_users, int replicate);

/// Raw externality draw for (n, replicate) without the spectral gate.
Eigen::MatrixXd sample_externality(const ExperimentConfig& config, int n_users, int replicate = 0);

/// Off-diagonal g_ij ~ U[g_low, g_high], zero diagonal. Throws ConfigError naming
/// alpha * rho(G) when the spectral condition fails for this alpha.
ExternalityGraph generate_instance(const ExperimentConfig& config, int n_users, double alpha,
                                   int replicate = 0);

struct SweepRow {
    int n = 0;
    double alpha = 0.0;
    double attacker_resource = 0.0;
    int tx_per_block = 0;
    double mean_price = 0.0;
    double total_demand = 0.0;
    double hbar_star = 0.0;
    double gamma_star = 0.0;
    double investment = 0.0;
    double attack_prob = 0.0;
    double premium = 0.0;
    double profit_provider = 0.0;
    double profit_insurer = 0.0;
    bool converged = false;
    int rounds = 0;
};

/// CSV header, in SweepRow field order.
const std::vector<std::string>& sweep_columns();

/// One row from a solved report.
SweepRow make_row(const ExperimentConfig& config, int n, double alpha, double a, int tx,
                  const MarketParams& params, const EquilibriumReport& report);

struct SweepPoint {
    int n;
    double alpha;
    double attacker_resource;
    int tx_per_block;
};

/// Cartesian product in (n, alpha, a, N_T) order, last coordinate fastest.
std::vector<SweepPoint> sweep_points(const ExperimentConfig& config);

/// Solves a single sweep point (averaging over replicates). Errors are recorded
/// in the returned row (converged = false, NaN values), never thrown.
SweepRow solve_point(const ExperimentConfig& config, const SweepPoint& point,
                     std::string* error = nullptr);

/// Runs every sweep point, optionally on several threads. `on_row` is called
/// in sweep order as soon as each prefix of rows is complete.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config, int threads = 1,
                                const std::function<void(const SweepRow&)>& on_row = {});

void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const SweepRow& row);

/// UTF-8 CSV: header plus one line per row, reals at 12 significant digits.
void emit_csv(const std::vector<SweepRow>& rows, const std::string& path);

}  // namespace chainrisk
