#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fracact/activations.hpp"
#include "fracact/config.hpp"
#include "fracact/errors.hpp"
#include "fracact/io.hpp"
#include "fracact/nn.hpp"
#include "fracact/rng.hpp"

namespace fracact {

// ---------------------------------------------------------------------------
// Micro-timing and plane counting
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kBenchSeed = 0xbe9c;

/// Median wall-time in seconds of one activation forward+backward on a
/// fixed seeded batch. The first (warm-up) iteration is discarded.
inline double time_forward_backward(const ActivationSpec& spec,
                                    std::size_t input_size, int repeats) {
    if (repeats < 3)
        throw DomainError("time_forward_backward: repeats must be >= 3");
    validate_spec(spec);
    Rng rng(kBenchSeed);
    Tensor batch = Tensor::matrix(input_size, 1);
    for (double& v : batch.data()) v = rng.uniform(-3.0, 3.0);
    Tensor upstream = Tensor::matrix(input_size, 1);
    for (double& v : upstream.data()) v = 1.0;

    using clock = std::chrono::steady_clock;
    double sink = 0.0;
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(repeats));
    for (int r = 0; r < repeats + 1; ++r) {
        const auto t0 = clock::now();
        auto [out, cache] = frac_act_forward(spec, batch);
        ActivationGrads grads = frac_act_backward(spec, cache, upstream);
        const auto t1 = clock::now();
        sink += out[0] + grads.d_input[0];
        if (r > 0) // warm-up excluded
            samples.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    // Keep the computed values observable so the timed work cannot be
    // optimized away.
    volatile double guard = sink;
    (void)guard;

    std::nth_element(samples.begin(), samples.begin() + samples.size() / 2,
                     samples.end());
    if (samples.size() % 2 == 1) return samples[samples.size() / 2];
    const double upper = samples[samples.size() / 2];
    const double lower = *std::max_element(samples.begin(),
                                           samples.begin() + samples.size() / 2);
    return 0.5 * (lower + upper);
}

/// Exact cached-plane total of the most recent forward pass.
inline std::size_t count_cached_planes(const MlpModel& model) {
    if (!model.last_forward_planes)
        throw DomainError("count_cached_planes: model has not run a forward pass");
    return *model.last_forward_planes;
}

/// The same count predicted from the layer specs alone: N planes per
/// GL-fractional layer, one per other activation layer. Used for rows
/// whose training run never completed a forward.
inline std::size_t predict_cached_planes(const MlpModel& model) {
    std::size_t planes = 0;
    for (const DenseLayer& layer : model.layers) {
        if (!layer.activation) continue;
        planes += layer.activation->fractional
                      ? static_cast<std::size_t>(layer.activation->terms)
                      : 1;
    }
    return planes;
}

// ---------------------------------------------------------------------------
// Linear fits
// ---------------------------------------------------------------------------

/// Least-squares line with the largest absolute deviation as residual.
/// Integer-exact affine data reports a residual of exactly zero.
struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;
};

inline LinearFit fit_linear(const std::vector<double>& xs,
                            const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.empty())
        throw ShapeError("fit_linear: need matching nonempty inputs");
    const double n = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    LinearFit fit;
    fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = std::abs(ys[i] - (fit.intercept + fit.slope * xs[i]));
        fit.residual = std::max(fit.residual, r);
    }
    return fit;
}

/// Fit for integer-valued counts over integer N: when the points are
/// exactly affine the slope/intercept come from integer differences and
/// the residual is literally 0.0, not a rounding artifact.
inline LinearFit fit_counts(const std::vector<int>& ns,
                            const std::vector<std::size_t>& counts) {
    if (ns.size() != counts.size() || ns.empty())
        throw ShapeError("fit_counts: need matching nonempty inputs");
    if (ns.size() >= 2) {
        const long long dn = ns[1] - ns[0];
        const long long dc = static_cast<long long>(counts[1]) -
                             static_cast<long long>(counts[0]);
        if (dn != 0 && dc % dn == 0) {
            const long long slope = dc / dn;
            const long long intercept = static_cast<long long>(counts[0]) -
                                        slope * ns[0];
            bool exact = true;
            for (std::size_t i = 0; i < ns.size(); ++i)
                exact = exact && static_cast<long long>(counts[i]) ==
                                     intercept + slope * ns[i];
            if (exact)
                return {static_cast<double>(slope), static_cast<double>(intercept),
                        0.0};
        }
    }
    std::vector<double> xs(ns.begin(), ns.end());
    std::vector<double> ys;
    ys.reserve(counts.size());
    for (std::size_t c : counts) ys.push_back(static_cast<double>(c));
    return fit_linear(xs, ys);
}

// ---------------------------------------------------------------------------
// N-sweep
// ---------------------------------------------------------------------------

enum class SweepStatus { ok, nan_abort };

inline const char* to_string(SweepStatus s) {
    return s == SweepStatus::ok ? "ok" : "nan_abort";
}

/// One row of the sweep: metrics for a single N with everything else
/// held fixed. Failed (NaN-aborted) runs keep NaN in the measured
/// columns; the CSV writer renders those as empty fields.
struct SweepRow {
    int terms = 1;
    double step = 1.0;
    double best_acc = std::numeric_limits<double>::quiet_NaN();
    double epoch_seconds = std::numeric_limits<double>::quiet_NaN();
    std::size_t cached_planes = 0;
    double rel_time = std::numeric_limits<double>::quiet_NaN();
    double rel_mem = std::numeric_limits<double>::quiet_NaN();
    SweepStatus status = SweepStatus::ok;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    LinearFit time_fit; // over ok rows
    LinearFit mem_fit;  // over all rows; exact zero residual expected
    int best_terms = 0; // highest-accuracy N among ok rows
    double best_acc = std::numeric_limits<double>::quiet_NaN();
};

/// Trains one seeded model per N with identical settings except (N, h);
/// per-N NaN aborts become nan_abort rows and the sweep continues.
inline SweepReport sweep_terms(const RunSpec& base,
                               const std::vector<int>& n_list,
                               const DataSplit& data) {
    if (n_list.empty())
        throw DomainError("sweep_terms: N list must be nonempty");
    for (std::size_t i = 0; i + 1 < n_list.size(); ++i)
        if (n_list[i] >= n_list[i + 1])
            throw DomainError("sweep_terms: N list must be strictly ascending");

    SweepReport report;
    for (int terms : n_list) {
        RunSpec rs = base;
        rs.model.terms = terms;
        rs.model.step.reset(); // follow the h = 1/max(1, N-1) rule

        SweepRow row;
        row.terms = terms;
        row.step = step_for_terms(terms);

        MlpModel model = build_model(rs, data.train.dims(),
                                     static_cast<std::size_t>(
                                         std::max(data.train.num_classes(),
                                                  data.test.num_classes())));
        row.cached_planes = predict_cached_planes(model);
        try {
            RunMetrics metrics = train_model(model, data.train, data.test, rs.train);
            row.best_acc = metrics.best_test_acc;
            double total = 0.0;
            for (double s : metrics.epoch_seconds) total += s;
            row.epoch_seconds = metrics.epoch_seconds.empty()
                                    ? 0.0
                                    : total / static_cast<double>(
                                                  metrics.epoch_seconds.size());
            row.cached_planes = metrics.cached_planes_per_step;
            row.status = SweepStatus::ok;
        } catch (const NanAbortError&) {
            row.status = SweepStatus::nan_abort;
        }
        report.rows.push_back(row);
    }

    const SweepRow& baseline = report.rows.front();
    for (SweepRow& row : report.rows) {
        if (baseline.cached_planes > 0)
            row.rel_mem = static_cast<double>(row.cached_planes) /
                          static_cast<double>(baseline.cached_planes);
        if (row.status == SweepStatus::ok &&
            baseline.status == SweepStatus::ok && baseline.epoch_seconds > 0.0)
            row.rel_time = row.epoch_seconds / baseline.epoch_seconds;
    }

    std::vector<double> time_xs, time_ys;
    std::vector<int> mem_ns;
    std::vector<std::size_t> mem_counts;
    for (const SweepRow& row : report.rows) {
        mem_ns.push_back(row.terms);
        mem_counts.push_back(row.cached_planes);
        if (row.status == SweepStatus::ok) {
            time_xs.push_back(static_cast<double>(row.terms));
            time_ys.push_back(row.epoch_seconds);
            if (!(row.best_acc <= report.best_acc)) { // NaN-safe max
                report.best_acc = row.best_acc;
                report.best_terms = row.terms;
            }
        }
    }
    report.mem_fit = fit_counts(mem_ns, mem_counts);
    if (!time_xs.empty()) report.time_fit = fit_linear(time_xs, time_ys);
    return report;
}

/// CSV serialization; NaN columns of failed rows are left empty rather
/// than carrying fabricated numbers.
inline std::string sweep_report_csv(const SweepReport& report) {
    std::string csv = "N,h,best_acc,epoch_seconds,cached_planes,rel_time,rel_mem,status\n";
    const auto field = [](double v) {
        return std::isnan(v) ? std::string() : format_double(v);
    };
    for (const SweepRow& row : report.rows) {
        csv += csv_row({std::to_string(row.terms), format_double(row.step),
                        field(row.best_acc), field(row.epoch_seconds),
                        std::to_string(row.cached_planes), field(row.rel_time),
                        field(row.rel_mem), to_string(row.status)});
    }
    return csv;
}

} // namespace fracact
