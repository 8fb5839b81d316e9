#include "chainrisk/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "chainrisk/error.hpp"

namespace chainrisk {

using nlohmann::json;

void ExperimentConfig::validate() const {
    if (!(period > 0.0) || !(block_interval > 0.0))
        throw ConfigError("config: T and T0 must be > 0");
    if (n_users.empty() || alpha.empty() || attacker_resource.empty() || tx_per_block.empty())
        throw ConfigError("config: sweep lists must be nonempty");
    for (int n : n_users)
        if (n < 1) throw ConfigError("config: n_users entries must be >= 1");
    for (double a : alpha)
        if (!(a > 0.0)) throw ConfigError("config: alpha entries must be > 0");
    for (double a : attacker_resource)
        if (!(a > 0.0)) throw ConfigError("config: attacker_resource entries must be > 0");
    for (int t : tx_per_block)
        if (t < 1) throw ConfigError("config: tx_per_block entries must be >= 1");
    if (!(g_low >= 0.0) || !(g_low <= g_high))
        throw ConfigError("config: need 0 <= g_low <= g_high");
    if (replicates < 1) throw ConfigError("config: replicates must be >= 1");
    if (intervals < 1) throw ConfigError("config: intervals must be >= 1");
    try {
        solve.validate();
        market(attacker_resource.front(), tx_per_block.front()).validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

MarketParams ExperimentConfig::market(double a, int tx) const {
    try {
        return MarketParams{RiskModel(period / block_interval, tx, compensation_rate,
                                      mining_reward, intervals),
                            a, beta, price_cap, gamma_cap};
    } catch (const DomainError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

namespace {

template <typename T>
std::vector<T> scalar_or_list(const json& node, const char* key) {
    if (node.is_array()) {
        if (node.empty()) throw ConfigError(std::string("config: '") + key + "' list is empty");
        return node.get<std::vector<T>>();
    }
    return {node.get<T>()};
}

template <typename T>
json list_or_scalar(const std::vector<T>& values) {
    if (values.size() == 1) return values.front();
    return values;
}

void reject_unknown(const json& object, const std::set<std::string>& known, const char* where) {
    for (const auto& item : object.items()) {
        if (!known.count(item.key()))
            throw ConfigError(std::string("config: unknown key '") + item.key() + "' in " + where);
    }
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    ExperimentConfig cfg;
    try {
        const json root = json::parse(json_text);
        if (!root.is_object()) throw ConfigError("config: top level must be an object");
        reject_unknown(root,
                       {"market", "n_users", "alpha", "attacker_resource", "tx_per_block", "g_low",
                        "g_high", "seed", "replicates", "solve", "output_path"},
                       "top level");
        if (root.contains("market")) {
            const json& m = root.at("market");
            reject_unknown(m, {"T", "T0", "r", "q", "beta", "price_cap", "gamma_cap", "intervals"},
                           "market");
            cfg.period = m.value("T", cfg.period);
            cfg.block_interval = m.value("T0", cfg.block_interval);
            cfg.mining_reward = m.value("r", cfg.mining_reward);
            cfg.compensation_rate = m.value("q", cfg.compensation_rate);
            cfg.beta = m.value("beta", cfg.beta);
            cfg.price_cap = m.value("price_cap", cfg.price_cap);
            cfg.gamma_cap = m.value("gamma_cap", cfg.gamma_cap);
            cfg.intervals = m.value("intervals", cfg.intervals);
        }
        if (root.contains("n_users")) cfg.n_users = scalar_or_list<int>(root["n_users"], "n_users");
        if (root.contains("alpha")) cfg.alpha = scalar_or_list<double>(root["alpha"], "alpha");
        if (root.contains("attacker_resource"))
            cfg.attacker_resource =
                scalar_or_list<double>(root["attacker_resource"], "attacker_resource");
        if (root.contains("tx_per_block"))
            cfg.tx_per_block = scalar_or_list<int>(root["tx_per_block"], "tx_per_block");
        cfg.g_low = root.value("g_low", cfg.g_low);
        cfg.g_high = root.value("g_high", cfg.g_high);
        cfg.seed = root.value("seed", cfg.seed);
        cfg.replicates = root.value("replicates", cfg.replicates);
        cfg.output_path = root.value("output_path", cfg.output_path);
        if (root.contains("solve")) {
            const json& s = root.at("solve");
            reject_unknown(s,
                           {"br_tolerance", "outer_tolerance", "max_outer_rounds", "max_inner_iters",
                            "multistart_count", "simultaneous"},
                           "solve");
            cfg.solve.br_tolerance = s.value("br_tolerance", cfg.solve.br_tolerance);
            cfg.solve.outer_tolerance = s.value("outer_tolerance", cfg.solve.outer_tolerance);
            cfg.solve.max_outer_rounds = s.value("max_outer_rounds", cfg.solve.max_outer_rounds);
            cfg.solve.max_inner_iters = s.value("max_inner_iters", cfg.solve.max_inner_iters);
            cfg.solve.multistart_count = s.value("multistart_count", cfg.solve.multistart_count);
            cfg.solve.simultaneous = s.value("simultaneous", cfg.solve.simultaneous);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string to_json(const ExperimentConfig& c) {
    json root;
    root["market"] = {{"T", c.period},          {"T0", c.block_interval}, {"r", c.mining_reward},
                      {"q", c.compensation_rate}, {"beta", c.beta},         {"price_cap", c.price_cap},
                      {"gamma_cap", c.gamma_cap}, {"intervals", c.intervals}};
    root["n_users"] = list_or_scalar(c.n_users);
    root["alpha"] = list_or_scalar(c.alpha);
    root["attacker_resource"] = list_or_scalar(c.attacker_resource);
    root["tx_per_block"] = list_or_scalar(c.tx_per_block);
    root["g_low"] = c.g_low;
    root["g_high"] = c.g_high;
    root["seed"] = c.seed;
    root["replicates"] = c.replicates;
    root["solve"] = {{"br_tolerance", c.solve.br_tolerance},
                     {"outer_tolerance", c.solve.outer_tolerance},
                     {"max_outer_rounds", c.solve.max_outer_rounds},
                     {"max_inner_iters", c.solve.max_inner_iters},
                     {"multistart_count", c.solve.multistart_count},
                     {"simultaneous", c.solve.simultaneous}};
    root["output_path"] = c.output_path;
    return root.dump(2);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t instance_seed(std::uint64_t seed, int n_users, int replicate) {
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ static_cast<std::uint64_t>(n_users));
    return splitmix64(s ^ (static_cast<std::uint64_t>(replicate) << 32));
}

Eigen::MatrixXd sample_externality(const ExperimentConfig& config, int n_users, int replicate) {
    if (n_users < 1) throw ConfigError("generate_instance: n must be >= 1");
    std::mt19937_64 rng(instance_seed(config.seed, n_users, replicate));
    const double width = config.g_high - config.g_low;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n_users, n_users);
    // Row-major fill with a fixed 53-bit mapping keeps draws identical across standard libraries.
    for (int i = 0; i < n_users; ++i) {
        for (int j = 0; j < n_users; ++j) {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            if (i != j) g(i, j) = config.g_low + width * u;
        }
    }
    return g;
}

ExternalityGraph generate_instance(const ExperimentConfig& config, int n_users, double alpha,
                                   int replicate) {
    ExternalityGraph graph(sample_externality(config, n_users, replicate), alpha);
    const SpectralCheck check = check_assumption1(graph);
    if (!check.holds) {
        std::ostringstream msg;
        msg << "instance n=" << n_users << ", alpha=" << alpha
            << " violates the spectral condition: alpha * rho(G) = " << check.alpha_rho << " >= 1";
        throw ConfigError(msg.str());
    }
    return graph;
}

const std::vector<std::string>& sweep_columns() {
    static const std::vector<std::string> columns = {
        "n",          "alpha",      "attacker_resource", "tx_per_block",    "mean_price",
        "total_demand", "hbar_star", "gamma_star",       "investment",      "attack_prob",
        "premium",    "profit_provider", "profit_insurer", "converged",     "rounds"};
    return columns;
}

SweepRow make_row(const ExperimentConfig& config, int n, double alpha, double a, int tx,
                  const MarketParams& params, const EquilibriumReport& report) {
    (void)config;
    SweepRow row;
    row.n = n;
    row.alpha = alpha;
    row.attacker_resource = a;
    row.tx_per_block = tx;
    row.mean_price = report.provider.p.mean();
    row.total_demand = report.demand.total();
    row.hbar_star = report.provider.hbar;
    row.gamma_star = report.insurer.gamma;
    row.investment = investment_cost(a, report.provider.hbar);
    row.attack_prob = attack_probability(params.risk, report.provider.hbar);
    row.premium = premium(params.risk, report.insurer.gamma);
    row.profit_provider = report.profit_provider;
    row.profit_insurer = report.profit_insurer;
    row.converged = report.converged;
    row.rounds = report.rounds;
    return row;
}

std::vector<SweepPoint> sweep_points(const ExperimentConfig& config) {
    std::vector<SweepPoint> points;
    for (int n : config.n_users)
        for (double alpha : config.alpha)
            for (double a : config.attacker_resource)
                for (int tx : config.tx_per_block) points.push_back(SweepPoint{n, alpha, a, tx});
    return points;
}

SweepRow solve_point(const ExperimentConfig& config, const SweepPoint& point, std::string* error) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    SweepRow failed{point.n, point.alpha, point.attacker_resource, point.tx_per_block,
                    nan, nan, nan, nan, nan, nan, nan, nan, nan, false, 0};
    try {
        const MarketParams params = config.market(point.attacker_resource, point.tx_per_block);
        std::vector<SweepRow> reps;
        for (int r = 0; r < config.replicates; ++r) {
            const DemandSystem system(generate_instance(config, point.n, point.alpha, r));
            const auto [p0, i0] = default_start(params, system.n_users());
            const EquilibriumReport report = solve_stackelberg(params, system, p0, i0, config.solve);
            reps.push_back(make_row(config, point.n, point.alpha, point.attacker_resource,
                                    point.tx_per_block, params, report));
            if (error && !report.converged) *error = report.message;
        }
        if (reps.size() == 1) return reps.front();

        SweepRow avg = reps.front();
        const double k = static_cast<double>(reps.size());
        auto mean = [&](double SweepRow::*field) {
            double s = 0.0;
            for (const auto& r : reps) s += r.*field;
            avg.*field = s / k;
        };
        for (auto field : {&SweepRow::mean_price, &SweepRow::total_demand, &SweepRow::hbar_star,
                           &SweepRow::gamma_star, &SweepRow::investment, &SweepRow::attack_prob,
                           &SweepRow::premium, &SweepRow::profit_provider,
                           &SweepRow::profit_insurer})
            mean(field);
        avg.converged = std::all_of(reps.begin(), reps.end(), [](const SweepRow& r) { return r.converged; });
        avg.rounds = std::max_element(reps.begin(), reps.end(), [](const SweepRow& a, const SweepRow& b) {
                         return a.rounds < b.rounds;
                     })->rounds;
        return avg;
    } catch (const std::exception& e) {
        if (error) *error = e.what();
        return failed;
    }
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, int threads,
                                const std::function<void(const SweepRow&)>& on_row) {
    config.validate();
    const std::vector<SweepPoint> points = sweep_points(config);
    std::vector<SweepRow> rows(points.size());
    std::vector<char> done(points.size(), 0);
    std::size_t next_task = 0;
    std::size_t next_emit = 0;
    std::mutex mu;

    auto worker = [&] {
        for (;;) {
            std::size_t index;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (next_task >= points.size()) return;
                index = next_task++;
            }
            std::string error;
            SweepRow row = solve_point(config, points[index], &error);
            if (!error.empty())
                std::fprintf(stderr, "sweep point %zu (n=%d, alpha=%g, a=%g, N_T=%d): %s\n", index,
                             row.n, row.alpha, row.attacker_resource, row.tx_per_block,
                             error.c_str());
            std::lock_guard<std::mutex> lock(mu);
            rows[index] = row;
            done[index] = 1;
            while (next_emit < points.size() && done[next_emit]) {
                if (on_row) on_row(rows[next_emit]);
                ++next_emit;
            }
        }
    };

    const int count = std::max(1, std::min<int>(threads, static_cast<int>(points.size())));
    if (count == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < count; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return rows;
}

namespace {

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

void write_csv_header(std::ostream& out) {
    const auto& cols = sweep_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
}

void write_csv_row(std::ostream& out, const SweepRow& r) {
    out << r.n << ',' << format_real(r.alpha) << ',' << format_real(r.attacker_resource) << ','
        << r.tx_per_block << ',' << format_real(r.mean_price) << ','
        << format_real(r.total_demand) << ',' << format_real(r.hbar_star) << ','
        << format_real(r.gamma_star) << ',' << format_real(r.investment) << ','
        << format_real(r.attack_prob) << ',' << format_real(r.premium) << ','
        << format_real(r.profit_provider) << ',' << format_real(r.profit_insurer) << ','
        << (r.converged ? "true" : "false") << ',' << r.rounds << '\n';
}

void emit_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("emit_csv: cannot open '" + path + "' for writing");
    write_csv_header(out);
    for (const auto& row : rows) write_csv_row(out, row);
    out.flush();
    if (!out) throw IoError("emit_csv: write to '" + path + "' failed");
}

}  // namespace chainrisk
