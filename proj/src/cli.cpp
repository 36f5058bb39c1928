#include "lyam/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "lyam/config.hpp"
#include "lyam/errors.hpp"
#include "lyam/harness.hpp"
#include "lyam/report.hpp"

#ifndef LYAM_VERSION
#define LYAM_VERSION "unknown"
#endif
#ifndef LYAM_BUILD_TYPE
#define LYAM_BUILD_TYPE "unknown"
#endif

namespace lyam::cli {

namespace fs = std::filesystem;
using report::format_number;

std::string build_id() {
    std::string compiler;
#if defined(__clang__)
    compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
    compiler = "gcc " __VERSION__;
#else
    compiler = "unknown compiler";
#endif
    return std::string("lyam ") + LYAM_VERSION + " (" + compiler + ", " + LYAM_BUILD_TYPE + ")";
}

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config;
    std::string out_dir;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    bool force = false;
    std::vector<std::string> optimizers;
    std::optional<double> tolerance;
    std::optional<std::size_t> corrupt_index;
};

/// Result files of one invocation, written only once every run has finished.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

    void add(std::string name, std::string content) {
        entries_.push_back({std::move(name), [content = std::move(content)](const fs::path& p) {
                                std::ofstream f(p, std::ios::binary);
                                f << content;
                                if (!f) throw std::runtime_error("cannot write " + p.string());
                            }});
    }
    void add(std::string name, std::function<void(const fs::path&)> writer) {
        entries_.push_back({std::move(name), std::move(writer)});
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& e : entries_) out.push_back(e.name);
        return out;
    }

    void commit() const {
        fs::create_directories(dir_);
        for (const auto& e : entries_) e.write(dir_ / e.name);
    }

private:
    struct Entry {
        std::string name;
        std::function<void(const fs::path&)> write;
    };
    fs::path dir_;
    std::vector<Entry> entries_;
};

void refuse_overwrite(const fs::path& dir, const std::vector<std::string>& names, bool force) {
    if (force) return;
    for (const auto& name : names) {
        if (fs::exists(dir / name)) {
            throw UsageError("refusing to overwrite " + (dir / name).string() +
                             " (pass --force to replace existing results)");
        }
    }
}

fs::path output_dir(const Options& opt) {
    if (!opt.out_dir.empty()) return opt.out_dir;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return "results";
}

ExperimentConfig load(const Options& opt) {
    if (opt.config.empty()) throw UsageError("--config is required");
    if (!fs::is_regular_file(opt.config)) {
        throw UsageError("cannot read config file '" + opt.config + "'");
    }
    ExperimentConfig cfg = load_config(opt.config, opt.overrides);
    if (opt.seed) cfg.run.seeds = {*opt.seed};
    return cfg;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
    std::string out;
    for (auto s : seeds) {
        if (!out.empty()) out += ',';
        out += std::to_string(s);
    }
    return out;
}

std::string manifest(const std::string& subcommand, const Options& opt, const std::string& canonical,
                     const std::vector<std::uint64_t>& seeds, const std::vector<std::string>& files) {
    std::ostringstream m;
    m << "subcommand: " << subcommand << '\n';
    m << "config: " << (opt.config.empty() ? "(defaults)" : opt.config) << '\n';
    m << "config_hash: fnv1a64:" << hex64(fnv1a64(canonical)) << '\n';
    m << "seeds: " << join_seeds(seeds) << '\n';
    m << "build: " << build_id() << '\n';
    m << "files:";
    for (const auto& f : files) m << ' ' << f;
    m << "\n\n[effective config]\n" << canonical;
    return m.str();
}

void finish(OutputSet& outputs, const fs::path& dir, const std::string& subcommand,
            const Options& opt, const std::string& canonical,
            const std::vector<std::uint64_t>& seeds) {
    auto files = outputs.names();
    files.push_back("manifest.txt");
    refuse_overwrite(dir, files, opt.force);
    outputs.add("manifest.txt", manifest(subcommand, opt, canonical, seeds, files));
    outputs.commit();
}

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }
std::string opt_number(const std::optional<std::size_t>& v) {
    return v ? std::to_string(*v) : "";
}
std::string stat_number(double v) { return std::isnan(v) ? "" : format_number(v); }

std::string trajectory_summary(const RunConfig& rc, const Trajectory& traj) {
    const auto& s = traj.summary;
    std::ostringstream o;
    o << "optimizer: " << to_string(rc.optimizer) << '\n';
    o << "seed: " << s.seed << '\n';
    o << "steps: " << traj.steps.size() << " of " << rc.max_steps << '\n';
    o << "initial_loss: " << format_number(s.initial_loss) << '\n';
    o << "final_loss: " << format_number(s.final_loss) << '\n';
    o << "best_loss: " << format_number(s.best_loss) << '\n';
    o << "steps_to_threshold: " << (s.steps_to_threshold ? std::to_string(*s.steps_to_threshold)
                                                          : std::string("not reached"))
      << '\n';
    if (s.smoothness) o << "smoothness: " << format_number(*s.smoothness) << '\n';
    if (s.train_accuracy) o << "train_accuracy: " << format_number(*s.train_accuracy) << '\n';
    if (s.val_accuracy) o << "val_accuracy: " << format_number(*s.val_accuracy) << '\n';
    if (s.val_loss) o << "val_loss: " << format_number(*s.val_loss) << '\n';
    o << "diverged: " << (s.diverged ? "yes (" + s.divergence_reason + ")" : std::string("no"))
      << '\n';
    return o.str();
}

// --- trace -----------------------------------------------------------------

int cmd_trace(const Options& opt, std::ostream& out) {
    const ExperimentConfig cfg = load(opt);
    const fs::path dir = output_dir(opt);
    const std::uint64_t seed = cfg.run.seeds.front();
    const Trajectory traj = run_trial(cfg.run, seed);

    OutputSet outputs(dir);
    {
        std::ostringstream csv;
        report::write_trajectory_csv(csv, traj);
        outputs.add("trajectory.csv", csv.str());
    }

    std::vector<double> steps, loss, mean_eta, min_eta, max_eta, val_steps, val_loss;
    for (const auto& r : traj.steps) {
        steps.push_back(static_cast<double>(r.step));
        loss.push_back(r.loss);
        mean_eta.push_back(r.mean_eta);
        min_eta.push_back(r.min_eta);
        max_eta.push_back(r.max_eta);
        if (!std::isnan(r.val_loss)) {
            val_steps.push_back(static_cast<double>(r.step));
            val_loss.push_back(r.val_loss);
        }
    }
    std::vector<report::Series> loss_series = {{"train loss", steps, loss}};
    if (cfg.run.is_network()) loss_series.push_back({"validation loss", val_steps, val_loss});
    report::PlotOptions loss_opts;
    loss_opts.title = std::string(to_string(cfg.run.optimizer)) + " loss";
    loss_opts.y_label = "loss";
    loss_opts.log_y = cfg.log_scale_loss;
    outputs.add("loss.svg", report::svg_line_plot(loss_series, loss_opts));

    const std::vector<report::Series> eta_series = {
        {"mean eta", steps, mean_eta}, {"min eta", steps, min_eta}, {"max eta", steps, max_eta}};
    report::PlotOptions eta_opts;
    eta_opts.title = std::string(to_string(cfg.run.optimizer)) + " per-parameter rate";
    eta_opts.y_label = "eta";
    outputs.add("eta.svg", report::svg_line_plot(eta_series, eta_opts));

    if (const auto* task = std::get_if<NetworkTask>(&cfg.run.task)) {
        std::ostringstream csv;
        report::write_validation_csv(csv, traj);
        outputs.add("validation.csv", csv.str());
        const nn::Mlp model(network_spec(*task, seed), traj.final_params);
        outputs.add("model.ckpt", [model](const fs::path& p) { nn::save_checkpoint(model, p); });
    }

    const std::string summary = trajectory_summary(cfg.run, traj);
    outputs.add("summary.txt", summary);
    finish(outputs, dir, "trace", opt, cfg.canonical, {seed});
    out << summary << "wrote " << dir.string() << '\n';
    return kExitOk;
}

// --- bench -----------------------------------------------------------------

int cmd_bench(const Options& opt, std::ostream& out) {
    const ExperimentConfig cfg = load(opt);
    std::vector<OptimizerKind> kinds;
    if (opt.optimizers.empty()) {
        kinds = cfg.bench_optimizers;
    } else {
        for (const auto& name : opt.optimizers) kinds.push_back(parse_optimizer_kind(name));
    }
    const fs::path dir = output_dir(opt);

    std::ostringstream csv;
    report::CsvWriter table(csv);
    table.row({"row", "optimizer", "seed", "runs", "diverged", "final_loss", "final_loss_sd",
               "best_loss", "steps_to_threshold", "train_accuracy", "val_accuracy",
               "val_accuracy_sd", "val_loss", "bound_satisfied"});
    std::vector<report::Series> curves;
    out << "optimizer  runs  diverged  final_loss(mean)  val_accuracy(mean)\n";

    for (OptimizerKind kind : kinds) {
        RunConfig rc = cfg.run;
        rc.optimizer = kind;
        const std::string name(to_string(kind));
        const auto trajs = run(rc);
        for (const auto& t : trajs) {
            const auto& s = t.summary;
            const auto agg = aggregate(std::span(&t, 1));
            table.row({"seed", name, std::to_string(s.seed), "1", s.diverged ? "1" : "0",
                       format_number(s.final_loss), "", format_number(s.best_loss),
                       opt_number(s.steps_to_threshold), opt_number(s.train_accuracy),
                       opt_number(s.val_accuracy), "", opt_number(s.val_loss),
                       stat_number(agg.fraction_bound_satisfied)});
        }
        const auto agg = aggregate(trajs);
        table.row({"aggregate", name, "", std::to_string(agg.trajectories),
                   std::to_string(agg.diverged), stat_number(agg.final_loss.mean),
                   stat_number(agg.final_loss.sd), stat_number(agg.best_loss.mean),
                   stat_number(agg.steps_to_threshold.mean), stat_number(agg.train_accuracy.mean),
                   stat_number(agg.val_accuracy.mean), stat_number(agg.val_accuracy.sd),
                   stat_number(agg.val_loss.mean), stat_number(agg.fraction_bound_satisfied)});
        out << name << "  " << agg.trajectories << "  " << agg.diverged << "  "
            << stat_number(agg.final_loss.mean) << "  " << stat_number(agg.val_accuracy.mean)
            << '\n';

        report::Series curve{name, {}, {}};
        std::vector<double> sum;
        std::vector<std::size_t> count;
        for (const auto& t : trajs) {
            for (std::size_t i = 0; i < t.steps.size(); ++i) {
                if (sum.size() <= i) sum.resize(i + 1, 0.0), count.resize(i + 1, 0);
                sum[i] += t.steps[i].loss;
                ++count[i];
            }
        }
        for (std::size_t i = 0; i < sum.size(); ++i) {
            curve.x.push_back(static_cast<double>(i + 1));
            curve.y.push_back(sum[i] / static_cast<double>(count[i]));
        }
        curves.push_back(std::move(curve));
    }

    OutputSet outputs(dir);
    outputs.add("comparison.csv", csv.str());
    report::PlotOptions plot;
    plot.title = "mean training loss over seeds";
    plot.y_label = "loss";
    plot.log_y = cfg.log_scale_loss;
    outputs.add("comparison.svg", report::svg_line_plot(curves, plot));
    finish(outputs, dir, "bench", opt, cfg.canonical, cfg.run.seeds);
    out << "wrote " << dir.string() << '\n';
    return kExitOk;
}

// --- ablate ----------------------------------------------------------------

int cmd_ablate(const Options& opt, std::ostream& out, std::ostream& err) {
    const ExperimentConfig cfg = load(opt);
    const fs::path dir = output_dir(opt);
    const auto rows = ablation_grid(cfg.run, cfg.grid);

    std::ostringstream csv;
    report::CsvWriter table(csv);
    table.row({"setup", "beta1", "beta2", "eta0", "benign_acc", "poisoned_acc", "benign_acc_sd",
               "poisoned_acc_sd", "benign_final_loss", "poisoned_final_loss", "benign_diverged",
               "poisoned_diverged", "error"});
    bool failed = false;
    out << "setup  beta1  beta2  eta0  benign  poisoned\n";
    for (const auto& r : rows) {
        const bool ok = r.error.empty();
        failed = failed || !ok;
        auto cell = [&](double v) { return ok ? stat_number(v) : std::string(); };
        table.row({r.label, format_number(r.beta1), format_number(r.beta2), format_number(r.eta0),
                   cell(r.benign.val_accuracy.mean), cell(r.poisoned.val_accuracy.mean),
                   cell(r.benign.val_accuracy.sd), cell(r.poisoned.val_accuracy.sd),
                   cell(r.benign.final_loss.mean), cell(r.poisoned.final_loss.mean),
                   ok ? std::to_string(r.benign.diverged) : "",
                   ok ? std::to_string(r.poisoned.diverged) : "", r.error});
        const bool net = cfg.run.is_network();
        out << r.label << "  " << format_number(r.beta1) << "  " << format_number(r.beta2) << "  "
            << format_number(r.eta0) << "  "
            << cell(net ? r.benign.val_accuracy.mean : r.benign.final_loss.mean) << "  "
            << cell(net ? r.poisoned.val_accuracy.mean : r.poisoned.final_loss.mean)
            << (ok ? "" : "  error: " + r.error) << '\n';
    }

    OutputSet outputs(dir);
    outputs.add("ablation.csv", csv.str());
    finish(outputs, dir, "ablate", opt, cfg.canonical, cfg.run.seeds);
    out << "wrote " << dir.string() << '\n';
    if (failed) {
        err << "some grid cells failed; see the error column of ablation.csv\n";
        return kExitCheckFailed;
    }
    return kExitOk;
}

// --- gradcheck -------------------------------------------------------------

std::string describe_param(const nn::MlpSpec& spec, std::size_t index) {
    std::size_t offset = 0;
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
        const std::size_t in = spec.layer_sizes[l];
        const std::size_t outn = spec.layer_sizes[l + 1];
        if (index < offset + in * outn) {
            const std::size_t k = index - offset;
            return "layer " + std::to_string(l) + " weight[" + std::to_string(k / in) + "][" +
                   std::to_string(k % in) + "]";
        }
        offset += in * outn;
        if (index < offset + outn) {
            return "layer " + std::to_string(l) + " bias[" + std::to_string(index - offset) + "]";
        }
        offset += outn;
    }
    return "out of range";
}

int cmd_gradcheck(const Options& opt, std::ostream& out) {
    NetworkTask task;
    std::vector<std::uint64_t> seeds = {0};
    std::string canonical;
    if (!opt.config.empty()) {
        const ExperimentConfig cfg = load(opt);
        const auto* t = std::get_if<NetworkTask>(&cfg.run.task);
        if (!t) throw UsageError("gradcheck needs an mlp task (task.kind = mlp)");
        task = *t;
        seeds = cfg.run.seeds;
        canonical = cfg.canonical;
    } else {
        if (!opt.overrides.empty()) throw UsageError("--set needs --config for gradcheck");
        if (opt.seed) seeds = {*opt.seed};
        canonical = "task.kind=mlp\n";
    }
    const double tol = opt.tolerance.value_or(1e-4);
    if (!(tol > 0.0)) throw UsageError("--tolerance must be positive");
    const fs::path dir = output_dir(opt);

    std::ostringstream rep;
    bool all_passed = true;
    for (std::uint64_t seed : seeds) {
        const nn::MlpSpec spec = network_spec(task, seed);
        const nn::Mlp model(spec);
        const auto data = nn::generate_dataset(task.dataset, task.n_train, task.data_noise, seed, 0);
        Vector analytic;
        if (opt.corrupt_index) {
            if (*opt.corrupt_index >= spec.param_count()) {
                throw UsageError("--corrupt-gradient index " + std::to_string(*opt.corrupt_index) +
                                 " exceeds the parameter count " +
                                 std::to_string(spec.param_count()));
            }
            analytic = nn::loss_and_grad(model, data).grad;
            double& g = analytic[*opt.corrupt_index];
            g += 10.0 * (std::abs(g) + 1e-3);
        }
        const auto res = nn::gradient_check(model, data.features, data.labels, 1e-5, tol, 1e-7,
                                            analytic);
        all_passed = all_passed && res.passed;
        rep << (res.passed ? "PASS" : "FAIL") << " seed=" << seed
            << " activation=" << nn::to_string(spec.activation)
            << " params=" << spec.param_count()
            << " max_rel_error=" << format_number(res.max_rel_error)
            << " tolerance=" << format_number(tol) << " worst_index=" << res.worst_index << " ("
            << describe_param(spec, res.worst_index) << ")"
            << " analytic=" << format_number(res.analytic)
            << " numeric=" << format_number(res.numeric) << '\n';
    }
    rep << (all_passed ? "gradcheck passed\n" : "gradcheck FAILED\n");

    OutputSet outputs(dir);
    outputs.add("gradcheck.txt", rep.str());
    finish(outputs, dir, "gradcheck", opt, canonical, seeds);
    out << rep.str();
    return all_passed ? kExitOk : kExitCheckFailed;
}

// --- driftcheck ------------------------------------------------------------

int cmd_driftcheck(const Options& opt, std::ostream& out) {
    ExperimentConfig cfg = load(opt);
    cfg.run.record_drift = true;
    const fs::path dir = output_dir(opt);

    bool enforced = false;
    if (const auto* task = std::get_if<AnalyticTask>(&cfg.run.task)) {
        enforced = make_problem(task->problem, task->dim).quadratic;
    }
    const auto trajs = run(cfg.run);

    std::ostringstream csv;
    report::CsvWriter table(csv);
    table.row({"seed", "steps", "checked_steps", "violations", "max_excess", "lr_bound_fraction",
               "smoothness"});
    std::size_t violations = 0;
    std::size_t checked = 0;
    for (const auto& t : trajs) {
        std::size_t v = 0, c = 0, lr_ok = 0;
        double max_excess = -INFINITY;
        for (const auto& r : t.steps) {
            if (std::isnan(r.drift_bound)) continue;
            ++c;
            if (!r.bound_ok) ++v;
            if (r.lr_bound_ok) ++lr_ok;
            max_excess = std::max(max_excess, r.delta_v - r.drift_bound);
        }
        violations += v;
        checked += c;
        table.row({std::to_string(t.summary.seed), std::to_string(t.steps.size()),
                   std::to_string(c), std::to_string(v), c ? format_number(max_excess) : "",
                   c ? format_number(static_cast<double>(lr_ok) / static_cast<double>(c)) : "",
                   opt_number(t.summary.smoothness)});
    }
    const bool failed = enforced && violations > cfg.violation_allowance;

    std::ostringstream rep;
    rep << "mode: " << (enforced ? "enforced (quadratic task)" : "report-only") << '\n';
    rep << "optimizer: " << to_string(cfg.run.optimizer) << '\n';
    rep << "checked_steps: " << checked << '\n';
    rep << "violations: " << violations << '\n';
    rep << "allowance: " << cfg.violation_allowance << '\n';
    rep << "tolerance: " << format_number(cfg.run.drift_tolerance) << '\n';
    rep << "result: " << (failed ? "FAIL" : enforced ? "PASS" : "REPORTED") << '\n';

    OutputSet outputs(dir);
    outputs.add("driftcheck.csv", csv.str());
    outputs.add("driftcheck.txt", rep.str());
    finish(outputs, dir, "driftcheck", opt, cfg.canonical, cfg.run.seeds);
    out << rep.str();
    return failed ? kExitCheckFailed : kExitOk;
}

void add_common(CLI::App* sub, Options& opt, bool config_required) {
    auto* c = sub->add_option("-c,--config", opt.config, "INI experiment config");
    if (config_required) c->required();
    sub->add_option("-o,--out", opt.out_dir,
                    std::string("output directory (default: $") + kOutputDirEnv +
                        " or ./results)");
    sub->add_option("-s,--set", opt.overrides, "override a config value, section.key=value")
        ->allow_extra_args(false);
    sub->add_option("--seed", opt.seed, "run this single seed instead of run.seeds");
    sub->add_flag("-f,--force", opt.force, "replace existing result files");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options opt;
    CLI::App app{"LyAm optimizer benchmark harness", "lyam"};
    app.set_version_flag("--version", build_id());
    app.require_subcommand(1);

    auto* trace = app.add_subcommand("trace", "one trajectory with CSV telemetry and SVG plots");
    auto* bench = app.add_subcommand("bench", "compare optimizers on one task");
    auto* ablate = app.add_subcommand("ablate", "beta1 x beta2 x eta0 grid, benign and poisoned");
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of MLP gradients");
    auto* driftcheck = app.add_subcommand("driftcheck", "count Lyapunov drift bound violations");
    add_common(trace, opt, true);
    add_common(bench, opt, true);
    add_common(ablate, opt, true);
    add_common(gradcheck, opt, false);
    add_common(driftcheck, opt, true);
    bench->add_option("--optimizer", opt.optimizers, "restrict to these optimizers (repeatable)");
    gradcheck->add_option("--tolerance", opt.tolerance, "maximum relative error (default 1e-4)");
    gradcheck->add_option("--corrupt-gradient", opt.corrupt_index, "test hook: corrupt one entry")
        ->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*trace) return cmd_trace(opt, out);
        if (*bench) return cmd_bench(opt, out);
        if (*ablate) return cmd_ablate(opt, out, err);
        if (*gradcheck) return cmd_gradcheck(opt, out);
        if (*driftcheck) return cmd_driftcheck(opt, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitCheckFailed;
    }
    return kExitUsage;
}

}  // namespace lyam::cli
