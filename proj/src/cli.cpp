#include "chainrisk/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "chainrisk/error.hpp"
#include "chainrisk/harness.hpp"

namespace chainrisk {

namespace {

const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

struct CliState {
    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
    int replicates = 0;
    bool verbose = false;
};

ExperimentConfig resolve_config(const CliState& st) {
    ExperimentConfig cfg = st.config_path.empty() ? ExperimentConfig{} : load_config(st.config_path);
    if (st.seed_set) cfg.seed = st.seed;
    if (st.replicates > 0) cfg.replicates = st.replicates;
    if (!st.out_path.empty()) cfg.output_path = st.out_path;
    cfg.validate();
    return cfg;
}

void print_conditions(std::ostream& out, const ConditionReport& c) {
    out << std::setprecision(6);
    out << "  spectral condition   alpha*rho(G) = " << c.spectral.alpha_rho << " < 1  "
        << verdict(c.spectral.holds) << '\n';
    out << "  existence condition  a = " << c.existence.lhs << " > " << c.existence.rhs << "  "
        << verdict(c.existence.holds) << '\n';
    out << "  uniqueness condition a = " << c.uniqueness.lhs << " > " << c.uniqueness.rhs << "  "
        << verdict(c.uniqueness.holds) << '\n';
}

int cmd_solve(const CliState& st, std::ostream& out, std::ostream& err) {
    const ExperimentConfig cfg = resolve_config(st);
    const SweepPoint pt{cfg.n_users.front(), cfg.alpha.front(), cfg.attacker_resource.front(),
                        cfg.tx_per_block.front()};
    const MarketParams params = cfg.market(pt.attacker_resource, pt.tx_per_block);
    const DemandSystem system(generate_instance(cfg, pt.n, pt.alpha));
    const EquilibriumReport report = solve_with_multistart(params, system, cfg.solve, cfg.seed);

    out << "instance n=" << pt.n << " alpha=" << pt.alpha << " a=" << pt.attacker_resource
        << " N_T=" << pt.tx_per_block << " seed=" << cfg.seed << '\n';
    print_conditions(out, report.conditions);
    if (!report.conditions.uniqueness.holds)
        err << "warning: uniqueness condition fails; the equilibrium found may not be unique\n";
    out << std::setprecision(10);
    out << "equilibrium converged=" << (report.converged ? "yes" : "no")
        << " rounds=" << report.rounds;
    if (!report.message.empty()) out << " (" << report.message << ")";
    out << '\n';
    out << "  hbar*          " << report.provider.hbar << '\n';
    out << "  investment h*  " << investment_cost(params.attacker_resource, report.provider.hbar)
        << '\n';
    out << "  gamma*         " << report.insurer.gamma << '\n';
    out << "  mean price     " << report.provider.p.mean() << '\n';
    out << "  total demand   " << report.demand.total()
        << (report.demand_fallback ? "  (bounded demand system)" : "") << '\n';
    out << "  attack prob    " << attack_probability(params.risk, report.provider.hbar) << '\n';
    out << "  premium        " << premium(params.risk, report.insurer.gamma) << '\n';
    out << "  profit P       " << report.profit_provider << '\n';
    out << "  profit I       " << report.profit_insurer << '\n';
    if (report.multistart_spread)
        out << "  multistart     " << cfg.solve.multistart_count
            << " extra starts, max spread " << *report.multistart_spread << '\n';
    if (st.verbose) {
        for (const auto& snap : report.trace)
            out << "  round " << snap.round << " delta=" << snap.delta << " hbar=" << snap.provider.hbar
                << " gamma=" << snap.insurer.gamma << " demand=" << snap.total_demand << '\n';
    }
    return report.converged ? kExitOk : kExitNotConverged;
}

int cmd_sweep(const CliState& st, std::ostream& out, std::ostream& err) {
    const ExperimentConfig cfg = resolve_config(st);
    std::ofstream file(cfg.output_path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("sweep: cannot open '" + cfg.output_path + "' for writing");
    write_csv_header(file);
    file.flush();
    std::size_t written = 0;
    const auto rows = run_sweep(cfg, st.threads, [&](const SweepRow& row) {
        write_csv_row(file, row);
        file.flush();
        ++written;
        if (st.verbose) err << "row " << written << " done\n";
    });
    if (!file) throw IoError("sweep: write to '" + cfg.output_path + "' failed");
    std::size_t failed = 0;
    for (const auto& r : rows) failed += r.converged ? 0 : 1;
    out << "wrote " << rows.size() << " rows to " << cfg.output_path;
    if (failed) out << " (" << failed << " not converged)";
    out << '\n';
    return failed ? kExitNotConverged : kExitOk;
}

int cmd_check(const CliState& st, std::ostream& out) {
    const ExperimentConfig cfg = resolve_config(st);
    for (int n : cfg.n_users) {
        const Eigen::MatrixXd g = sample_externality(cfg, n);
        for (double alpha : cfg.alpha) {
            const ExternalityGraph graph(g, alpha);
            const SpectralCheck spectral = check_assumption1(graph);
            for (double a : cfg.attacker_resource) {
                for (int tx : cfg.tx_per_block) {
                    const MarketParams params = cfg.market(a, tx);
                    out << "n=" << n << " alpha=" << alpha << " a=" << a << " N_T=" << tx << '\n';
                    ConditionReport c;
                    c.spectral = spectral;
                    c.uniqueness = check_uniqueness(params);
                    if (spectral.holds) {
                        c.existence = check_existence(params, DemandSystem(graph));
                        print_conditions(out, c);
                    } else {
                        out << std::setprecision(6) << "  spectral condition   alpha*rho(G) = "
                            << spectral.alpha_rho << " < 1  FAIL\n"
                            << "  existence condition  not evaluated\n"
                            << "  uniqueness condition a = " << c.uniqueness.lhs << " > "
                            << c.uniqueness.rhs << "  " << verdict(c.uniqueness.holds) << '\n';
                    }
                }
            }
        }
    }
    return kExitOk;
}

}  // namespace

bool run_oracle_suite(std::uint64_t seed, std::ostream& out, bool verbose) {
    std::mt19937_64 rng(seed);
    auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    auto random_graph = [&](int n, double target_alpha_rho) {
        Eigen::MatrixXd g(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) g(i, j) = i == j ? 0.0 : unit();
        const double rho = spectral_radius(g);
        const double alpha = rho > 0.0 ? target_alpha_rho / rho : 0.1;
        return ExternalityGraph(g, alpha);
    };
    bool all_ok = true;

    // Bounded LCP: projected Gauss-Seidel against partition enumeration.
    {
        double worst = 0.0;
        int instances = 0;
        bool ok = true;
        for (int k = 0; k < 60; ++k) {
            const int n = 1 + static_cast<int>(rng() % 6);
            const ExternalityGraph graph = random_graph(n, 0.05 + 0.85 * unit());
            Eigen::VectorXd p(n);
            for (int i = 0; i < n; ++i) p(i) = 2.0 * unit();
            const double hbar = 0.5 + 0.5 * unit();
            try {
                const DemandProfile brute = brute_force_lcp(graph, hbar, p);
                const DemandProfile pgs = lcp_demand(graph, hbar, p);
                worst = std::max(worst, (brute.x - pgs.x).cwiseAbs().maxCoeff());
            } catch (const std::exception& e) {
                ok = false;
                if (verbose) out << "  lcp instance " << k << ": " << e.what() << '\n';
            }
            ++instances;
        }
        ok = ok && worst <= 1e-9;
        all_ok = all_ok && ok;
        out << verdict(ok) << "  bounded LCP vs enumeration (" << instances
            << " instances, max diff " << std::scientific << std::setprecision(2) << worst
            << std::defaultfloat << ")\n";
    }

    // Gradients and Hessian against central differences.
    {
        const MarketParams params = MarketParams::defaults();
        double worst_grad = 0.0;
        double worst_hess = 0.0;
        const double h = 1e-6;
        for (int k = 0; k < 20; ++k) {
            const int n = k % 2 ? 3 : 10;
            const DemandSystem system(random_graph(n, 0.2 + 0.6 * unit()));
            ProviderStrategy sp{Eigen::VectorXd(n), 0.55 + 0.4 * unit()};
            for (int i = 0; i < n; ++i) sp.p(i) = 0.1 + 0.8 * unit();
            const InsurerStrategy si{1.05 + 0.9 * unit()};
            const Eigen::VectorXd grad = provider_gradient(params, system, sp);
            const Eigen::MatrixXd hess = provider_hessian(params, system, sp);
            for (int j = 0; j <= n; ++j) {
                ProviderStrategy up = sp;
                ProviderStrategy dn = sp;
                if (j < n) {
                    up.p(j) += h;
                    dn.p(j) -= h;
                } else {
                    up.hbar += h;
                    dn.hbar -= h;
                }
                const double fd = (provider_profit(params, system, up, si) -
                                   provider_profit(params, system, dn, si)) / (2 * h);
                worst_grad = std::max(worst_grad, std::abs(fd - grad(j)) / std::max(1.0, std::abs(grad(j))));
                const Eigen::VectorXd col = (provider_gradient(params, system, up) -
                                             provider_gradient(params, system, dn)) / (2 * h);
                worst_hess = std::max(worst_hess, ((col - hess.col(j)).cwiseAbs().array() /
                                                   hess.col(j).cwiseAbs().array().max(1.0)).maxCoeff());
            }
            const double fdi = (insurer_profit(params, sp, {si.gamma + h}) -
                                insurer_profit(params, sp, {si.gamma - h})) / (2 * h);
            const double gi = insurer_gradient(params, sp, si);
            worst_grad = std::max(worst_grad, std::abs(fdi - gi) / std::max(1.0, std::abs(gi)));
        }
        const bool ok_grad = worst_grad <= 1e-6;
        const bool ok_hess = worst_hess <= 1e-4;
        all_ok = all_ok && ok_grad && ok_hess;
        out << verdict(ok_grad) << "  analytic gradients vs central differences (max rel err "
            << std::scientific << std::setprecision(2) << worst_grad << ")\n";
        out << verdict(ok_hess) << "  analytic Hessian vs differenced gradients (max rel err "
            << worst_hess << std::defaultfloat << ")\n";
    }
    return all_ok;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stackelberg equilibrium of a blockchain service market with cyber-insurance", "chainrisk"};
    app.require_subcommand(1);
    CliState st;
    auto add_common = [&st](CLI::App* cmd) {
        cmd->add_option("--config", st.config_path, "JSON experiment configuration");
        cmd->add_option("--seed", st.seed, "Seed for the externality draws")->each([&st](const std::string&) {
            st.seed_set = true;
        });
        cmd->add_option("--replicates", st.replicates, "Externality draws averaged per sweep point")
            ->check(CLI::PositiveNumber);
        cmd->add_flag("--verbose", st.verbose, "Print per-round / per-row progress");
    };
    auto* solve = app.add_subcommand("solve", "Solve one instance and print the equilibrium");
    auto* sweep = app.add_subcommand("sweep", "Run the configured sweep and write CSV");
    auto* check = app.add_subcommand("check", "Print existence / uniqueness diagnostics");
    auto* oracle = app.add_subcommand("oracle", "Run brute-force and finite-difference verification");
    for (auto* cmd : {solve, sweep, check, oracle}) add_common(cmd);
    sweep->add_option("--out", st.out_path, "CSV output path (overrides output_path)");
    sweep->add_option("--threads", st.threads, "Worker threads")->check(CLI::PositiveNumber);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitConfig;
    }

    try {
        if (*solve) return cmd_solve(st, out, err);
        if (*sweep) return cmd_sweep(st, out, err);
        if (*check) return cmd_check(st, out);
        if (*oracle) {
            const std::uint64_t seed = st.seed_set ? st.seed : 12345;
            return run_oracle_suite(seed, out, st.verbose) ? kExitOk : kExitNotConverged;
        }
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const PreconditionError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ConvergenceError& e) {
        err << "solver did not converge: " << e.what() << '\n';
        return kExitNotConverged;
    }
    return kExitConfig;
}

int cli_main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return cli_main(args, std::cout, std::cerr);
}

}  // namespace chainrisk
