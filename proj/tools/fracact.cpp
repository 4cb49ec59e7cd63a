// fracact — fractional-order activation toolkit.
//
// Subcommands:
//   plot       emit curve CSVs for the fractional activations
//   gradcheck  finite-difference verification of every analytic gradient
//   train      train an MLP per a config file, writing metrics + checkpoint
//   sweep      train across a list of term counts N and report scaling
//
// Exit codes: 0 success, 1 check failure, 2 usage error, 3 NaN abort.

#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <tuple>

#include <CLI11.hpp>

#include "fracact/cli.hpp"

namespace {

struct RawFlags {
    std::string orders;
    std::string range;
    std::string n_list;
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fractional-order activation functions: plots, gradient "
                 "checks, training, and N-sweeps"};
    app.require_subcommand(1);

    RawFlags raw;
    fracact::PlotOptions plot;
    CLI::App* plot_cmd = app.add_subcommand("plot", "emit curve data as CSV");
    plot_cmd->add_option("function", plot.function,
                         "fsig | fgelu | fmish | falu")
        ->required();
    plot_cmd->add_option("--orders", raw.orders,
                         "comma list of fractional orders (default 0,0.5,1,1.5,2)");
    plot_cmd->add_option("--terms", plot.terms, "GL term count N (default 16)");
    double plot_step = 0.0;
    CLI::Option* step_opt =
        plot_cmd->add_option("--step", plot_step,
                             "step h override (default 1/max(1, N-1))");
    plot_cmd->add_option("--range", raw.range, "x range LO:HI (default -5:5)");
    plot_cmd->add_option("--samples", plot.samples,
                         "grid point count (default 201)");
    plot_cmd->add_option("--out", plot.out,
                         "output CSV path (default <function>_plot.csv)");

    fracact::GradcheckOptions gradcheck;
    CLI::App* grad_cmd =
        app.add_subcommand("gradcheck", "finite-difference gradient suites");
    grad_cmd->add_option("--seed", gradcheck.seed, "RNG seed (default 1)");
    grad_cmd->add_option("--cases", gradcheck.cases,
                         "random cases per suite (default 200)");

    fracact::TrainOptions train;
    std::optional<std::uint64_t> train_seed;
    CLI::App* train_cmd = app.add_subcommand("train", "train an MLP per config");
    train_cmd->add_option("--config", train.config_path, "run config file")
        ->required();
    train_cmd->add_option("--seed", train_seed, "seed override");
    train_cmd->add_option("--out", train.out_dir,
                          "output directory (default .)");

    fracact::SweepOptions sweep;
    std::optional<std::uint64_t> sweep_seed;
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "train across a list of term counts N");
    sweep_cmd->add_option("--config", sweep.config_path, "run config file")
        ->required();
    sweep_cmd->add_option("--n-list", raw.n_list,
                          "comma list of N values (default 1,2,4,8,16)");
    sweep_cmd->add_option("--seed", sweep_seed, "seed override");
    sweep_cmd->add_option("--out", sweep.out_dir,
                          "output directory (default .)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e); // prints the message or help text
        return code == 0 ? fracact::kExitOk : fracact::kExitUsage;
    }

    try {
        if (plot_cmd->parsed()) {
            if (!raw.orders.empty()) plot.orders = fracact::parse_orders_list(raw.orders);
            if (!raw.range.empty())
                std::tie(plot.lo, plot.hi) = fracact::parse_range(raw.range);
            if (step_opt->count() > 0) plot.step = plot_step;
            return fracact::cmd_plot(plot);
        }
        if (grad_cmd->parsed()) return fracact::cmd_gradcheck(gradcheck);
        if (train_cmd->parsed()) {
            train.seed = train_seed;
            return fracact::cmd_train(train);
        }
        if (sweep_cmd->parsed()) {
            if (!raw.n_list.empty()) sweep.n_list = fracact::parse_n_list(raw.n_list);
            sweep.seed = sweep_seed;
            return fracact::cmd_sweep(sweep);
        }
    } catch (const fracact::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return fracact::kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return fracact::kExitCheckFailure;
    }
    return fracact::kExitUsage;
}
