#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fracact/activations.hpp"
#include "fracact/bench.hpp"
#include "fracact/checkpoint.hpp"
#include "fracact/config.hpp"
#include "fracact/errors.hpp"
#include "fracact/gradcheck.hpp"
#include "fracact/io.hpp"
#include "fracact/nn.hpp"

namespace fracact {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNanAbort = 3;

// ---------------------------------------------------------------------------
// Flag-value parsers (comma lists and LO:HI ranges)
// ---------------------------------------------------------------------------

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) {
            parts.push_back(text.substr(pos));
            break;
        }
        parts.push_back(text.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return parts;
}

inline std::vector<double> parse_orders_list(const std::string& text) {
    std::vector<double> orders;
    for (const std::string& part : split_list(text))
        orders.push_back(parse_double(part, "--orders"));
    if (orders.empty()) throw ParseError("--orders: list is empty");
    return orders;
}

inline std::vector<int> parse_n_list(const std::string& text) {
    std::vector<int> ns;
    for (const std::string& part : split_list(text)) {
        const double v = parse_double(part, "--n-list");
        const int n = static_cast<int>(v);
        if (static_cast<double>(n) != v || n < 1)
            throw ParseError("--n-list: '" + part + "' is not a positive integer");
        ns.push_back(n);
    }
    if (ns.empty()) throw ParseError("--n-list: list is empty");
    return ns;
}

inline std::pair<double, double> parse_range(const std::string& text) {
    const std::size_t colon = text.find(':');
    if (colon == std::string::npos)
        throw ParseError("--range: expected LO:HI, got '" + text + "'");
    const double lo = parse_double(text.substr(0, colon), "--range lo");
    const double hi = parse_double(text.substr(colon + 1), "--range hi");
    if (!(lo < hi))
        throw ParseError("--range: lo must be below hi, got '" + text + "'");
    return {lo, hi};
}

// ---------------------------------------------------------------------------
// plot
// ---------------------------------------------------------------------------

struct PlotOptions {
    std::string function = "fsig"; // fsig | fgelu | fmish | falu
    std::vector<double> orders = {0.0, 0.5, 1.0, 1.5, 2.0};
    int terms = 16;
    std::optional<double> step;
    double lo = -5.0;
    double hi = 5.0;
    int samples = 201;
    std::string out; // default: <function>_plot.csv
};

/// Emits curve data for plotting: column x, then one column per order.
inline int cmd_plot(const PlotOptions& opts, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    std::optional<BaseKind> base;
    if (opts.function == "fsig") base = BaseKind::sigmoid;
    else if (opts.function == "fgelu") base = BaseKind::gelu_tanh;
    else if (opts.function == "fmish") base = BaseKind::mish;
    else if (opts.function != "falu") {
        err << "plot: unknown function '" << opts.function
            << "' (expected fsig, fgelu, fmish, or falu)\n";
        return kExitUsage;
    }
    if (!(opts.lo < opts.hi)) {
        err << "plot: bad range [" << format_double(opts.lo) << ", "
            << format_double(opts.hi) << "]\n";
        return kExitUsage;
    }
    if (opts.samples < 2) {
        err << "plot: need at least 2 samples\n";
        return kExitUsage;
    }
    if (opts.terms < 1) {
        err << "plot: terms must be >= 1\n";
        return kExitUsage;
    }
    for (double a : opts.orders)
        if (a < kOrderMin || a > kOrderMax) {
            err << "plot: order " << format_double(a) << " outside [0, 2]\n";
            return kExitUsage;
        }

    const double h = opts.step ? *opts.step : step_for_terms(opts.terms);
    if (!(h > 0.0)) {
        err << "plot: step must be positive\n";
        return kExitUsage;
    }

    std::string csv = "x";
    for (double a : opts.orders) csv += ",a=" + format_double(a);
    csv += '\n';
    std::vector<GlCoefficients> coeffs;
    if (base)
        for (double a : opts.orders)
            coeffs.push_back(gl_coefficients(a, opts.terms, h));
    const ScalarFn fn = base ? make_scalar_fn(*base) : ScalarFn{};
    for (int i = 0; i < opts.samples; ++i) {
        const double x = opts.lo + (opts.hi - opts.lo) * i /
                                       static_cast<double>(opts.samples - 1);
        csv += format_double(x);
        for (std::size_t k = 0; k < opts.orders.size(); ++k) {
            const double y = base ? frac_apply(fn, coeffs[k], x)
                                  : falu_forward(x, opts.orders[k], 1.0);
            csv += ',' + format_double(y);
        }
        csv += '\n';
    }

    const std::string path =
        opts.out.empty() ? opts.function + "_plot.csv" : opts.out;
    write_text_file_atomic(path, csv);
    out << "wrote " << path << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

struct GradcheckOptions {
    std::uint64_t seed = 1;
    int cases = 200;
};

/// Runs every finite-difference suite and prints one summary line each.
inline int cmd_gradcheck(const GradcheckOptions& opts,
                         std::ostream& out = std::cout,
                         std::ostream& err = std::cerr) {
    if (opts.cases < 1) {
        err << "gradcheck: cases must be >= 1\n";
        return kExitUsage;
    }
    bool all_ok = true;
    for (const SuiteResult& suite : run_gradcheck(opts.seed, opts.cases)) {
        out << suite.summary() << "\n";
        all_ok = all_ok && suite.passed();
    }
    return all_ok ? kExitOk : kExitCheckFailure;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

inline std::string metrics_csv(const RunMetrics& metrics) {
    std::string csv = "epoch,train_loss,test_loss,test_acc\n";
    for (std::size_t e = 0; e < metrics.train_loss.size(); ++e)
        csv += csv_row({std::to_string(e), format_double(metrics.train_loss[e]),
                        format_double(metrics.test_loss[e]),
                        format_double(metrics.test_acc[e])});
    return csv;
}

inline std::string histogram_csv(const FdoHistogram& hist) {
    std::string csv = "bin_lo,bin_hi,count\n";
    const double width = (hist.hi - hist.lo) / static_cast<double>(hist.counts.size());
    for (std::size_t b = 0; b < hist.counts.size(); ++b)
        csv += csv_row({format_double(hist.lo + width * static_cast<double>(b)),
                        format_double(hist.lo + width * static_cast<double>(b + 1)),
                        std::to_string(hist.counts[b])});
    return csv;
}

namespace detail {

inline void write_failure_report(const std::filesystem::path& out_dir,
                                 const std::string& config_path,
                                 std::uint64_t seed, const std::string& message) {
    std::string report;
    report += "status=nan_abort\n";
    report += "config=" + config_path + "\n";
    report += "seed=" + std::to_string(seed) + "\n";
    report += "message=" + message + "\n";
    write_text_file_atomic(out_dir / "failure_report.txt", report);
}

} // namespace detail

/// Trains per the config and writes metrics.csv, the FDO histogram
/// snapshots, and a checkpoint. A NaN abort writes failure_report.txt
/// and exits 3 instead.
inline int cmd_train(const TrainOptions& opts, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
    RunSpec rs;
    try {
        rs = parse_run_spec(opts.config_path);
    } catch (const ParseError& e) {
        err << "train: config error in " << opts.config_path << ": " << e.what()
            << "\n";
        return kExitUsage;
    }
    if (opts.seed) rs.train.seed = *opts.seed;

    DataSplit data;
    try {
        data = load_data(rs);
    } catch (const std::exception& e) {
        err << "train: cannot load dataset: " << e.what() << "\n";
        return kExitUsage;
    }
    const std::size_t classes = static_cast<std::size_t>(
        std::max(data.train.num_classes(), data.test.num_classes()));
    MlpModel model = build_model(rs, data.train.dims(), classes);

    const std::filesystem::path out_dir(opts.out_dir);
    RunMetrics metrics;
    try {
        metrics = train_model(model, data.train, data.test, rs.train);
    } catch (const NanAbortError& e) {
        detail::write_failure_report(out_dir, opts.config_path, rs.train.seed,
                                     e.what());
        err << "train: NaN abort: " << e.what() << " (report: "
            << (out_dir / "failure_report.txt").string() << ")\n";
        return kExitNanAbort;
    }

    write_text_file_atomic(out_dir / "metrics.csv", metrics_csv(metrics));
    write_text_file_atomic(out_dir / "fdo_hist_start.csv",
                           histogram_csv(metrics.hist_start));
    write_text_file_atomic(out_dir / "fdo_hist_end.csv",
                           histogram_csv(metrics.hist_end));
    save_checkpoint(out_dir / "checkpoint.json", model);
    out << "best_test_acc=" << format_double(metrics.best_test_acc) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepOptions {
    std::string config_path;
    std::vector<int> n_list = {1, 2, 4, 8, 16};
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

/// Runs the N-sweep and writes sweep.csv; nan_abort rows are recorded,
/// not fatal.
inline int cmd_sweep(const SweepOptions& opts, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
    RunSpec rs;
    try {
        rs = parse_run_spec(opts.config_path);
    } catch (const ParseError& e) {
        err << "sweep: config error in " << opts.config_path << ": " << e.what()
            << "\n";
        return kExitUsage;
    }
    if (opts.seed) rs.train.seed = *opts.seed;

    DataSplit data;
    try {
        data = load_data(rs);
    } catch (const std::exception& e) {
        err << "sweep: cannot load dataset: " << e.what() << "\n";
        return kExitUsage;
    }

    SweepReport report;
    try {
        report = sweep_terms(rs, opts.n_list, data);
    } catch (const DomainError& e) {
        err << "sweep: " << e.what() << "\n";
        return kExitUsage;
    }

    const std::filesystem::path out_dir(opts.out_dir);
    write_text_file_atomic(out_dir / "sweep.csv", sweep_report_csv(report));
    if (report.best_terms > 0)
        out << "best_terms=" << report.best_terms
            << " best_acc=" << format_double(report.best_acc) << "\n";
    else
        out << "no successful runs\n";
    return kExitOk;
}

} // namespace fracact
