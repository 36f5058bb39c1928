#include "lyam/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "lyam/errors.hpp"
#include "lyam/stability.hpp"
#include "parallel.hpp"

namespace lyam {

void RunConfig::validate() const {
    hyper.validate();
    noise.validate();
    if (max_steps < 1) throw InvalidArgument("max_steps must be at least 1");
    if (seeds.empty()) throw InvalidArgument("at least one seed is required");
    auto sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw InvalidArgument("seeds must be distinct");
    }
    if (!(lr_margin > 0.0 && lr_margin <= 1.0)) throw InvalidArgument("lr_margin must lie in (0, 1]");
    if (!(divergence_threshold > 0.0)) throw InvalidArgument("divergence_threshold must be positive");
    if (lipschitz_samples < 2) throw InvalidArgument("lipschitz_samples must be at least 2");
    // Negative values demand a strict margin below the bound.
    if (!std::isfinite(drift_tolerance)) throw InvalidArgument("drift_tolerance must be finite");
    if (const auto* a = std::get_if<AnalyticTask>(&task)) {
        if (!a->initial.empty() && a->initial.size() != a->dim) {
            throw InvalidArgument("initial point has the wrong dimension");
        }
        if (!(a->init_high > a->init_low)) throw InvalidArgument("init_high must exceed init_low");
    } else {
        const auto& n = std::get<NetworkTask>(task);
        if (!(n.poison_fraction >= 0.0 && n.poison_fraction <= 1.0)) {
            throw InvalidArgument("poison_fraction must lie in [0, 1]");
        }
        if (n.eval_every < 1) throw InvalidArgument("eval_every must be at least 1");
        if (n.n_train < 10 || n.n_val < 10) throw InvalidArgument("datasets need at least 10 samples");
    }
}

nn::MlpSpec network_spec(const NetworkTask& task, std::uint64_t seed) {
    nn::MlpSpec spec;
    spec.layer_sizes.push_back(nn::kFeatureDim);
    for (std::size_t h : task.hidden) spec.layer_sizes.push_back(h);
    spec.layer_sizes.push_back(nn::num_classes(task.dataset));
    spec.activation = task.activation;
    spec.init_seed = seed;
    spec.init_scale = task.init_scale;
    return spec;
}

namespace {

struct NetworkData {
    nn::MlpSpec spec;
    nn::Dataset train;
    nn::Dataset val;
};

struct TrialSetup {
    Problem problem;
    Vector theta0;
    Box region;
    std::optional<NetworkData> network;
};

TrialSetup build_trial(const RunConfig& config, std::uint64_t seed) {
    TrialSetup setup;
    if (const auto* task = std::get_if<AnalyticTask>(&config.task)) {
        setup.problem = make_problem(task->problem, task->dim);
        if (task->initial.empty()) {
            Philox rng = make_stream(seed, StreamPurpose::Init);
            setup.theta0.resize(task->dim);
            for (double& x : setup.theta0) x = rng.uniform(task->init_low, task->init_high);
        } else {
            setup.theta0 = task->initial;
        }
        setup.region = Box::cube(task->dim, task->init_low, task->init_high);
        for (std::size_t i = 0; i < task->dim; ++i) {
            setup.region.lower[i] = std::min(setup.region.lower[i], setup.theta0[i]);
            setup.region.upper[i] = std::max(setup.region.upper[i], setup.theta0[i]);
        }
        return setup;
    }

    const auto& task = std::get<NetworkTask>(config.task);
    NetworkData net;
    net.train = nn::generate_dataset(task.dataset, task.n_train, task.data_noise, seed, 0);
    net.val = nn::generate_dataset(task.dataset, task.n_val, task.data_noise, seed, 1);
    if (task.poison_fraction > 0.0) {
        net.train = nn::poison(net.train, task.poison_fraction, task.poison_mode, seed);
    }
    net.spec = network_spec(task, seed);

    setup.theta0 = nn::Mlp(net.spec).params();
    setup.problem = nn::as_problem(net.spec, net.train);
    setup.region.lower = setup.theta0;
    setup.region.upper = setup.theta0;
    for (std::size_t i = 0; i < setup.theta0.size(); ++i) {
        setup.region.lower[i] -= 0.5;
        setup.region.upper[i] += 0.5;
    }
    setup.network = std::move(net);
    return setup;
}

std::optional<double> resolve_smoothness(const RunConfig& config, const TrialSetup& setup,
                                         std::uint64_t seed) {
    if (!config.record_drift) return std::nullopt;
    switch (config.lipschitz) {
        case LipschitzSource::Analytic:
            if (!setup.problem.smoothness) {
                throw InvalidArgument("problem '" + setup.problem.name +
                                      "' has no analytic smoothness constant");
            }
            return setup.problem.smoothness;
        case LipschitzSource::Auto:
            if (setup.problem.smoothness) return setup.problem.smoothness;
            [[fallthrough]];
        case LipschitzSource::Estimated: {
            const double l = estimate_lipschitz(setup.problem, config.lipschitz_samples,
                                                setup.region, seed);
            if (!(l > 0.0)) return std::nullopt;
            return l;
        }
    }
    return std::nullopt;
}

double loss_threshold(const RunConfig& config, const Problem& problem) {
    if (config.target_loss) return *config.target_loss;
    if (problem.optimum) {
        const double f = problem.optimum->value;
        return f + std::max(0.05 * std::abs(f), 1e-4);
    }
    return -std::numeric_limits<double>::infinity();
}

double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

}  // namespace

Trajectory run_trial(const RunConfig& config, std::uint64_t seed) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();

    TrialSetup setup = build_trial(config, seed);
    const Problem& problem = setup.problem;
    const std::optional<double> smoothness = resolve_smoothness(config, setup, seed);
    const double threshold = loss_threshold(config, problem);
    const auto* net_task = std::get_if<NetworkTask>(&config.task);
    const bool minibatch = net_task && net_task->batch_size > 0 &&
                           net_task->batch_size < setup.network->train.size();

    Philox noise_rng = make_stream(seed, StreamPurpose::GradientNoise);
    Philox batch_rng = make_stream(seed, StreamPurpose::Minibatch);
    std::vector<std::size_t> batch_order;
    if (minibatch) {
        batch_order.resize(setup.network->train.size());
        std::iota(batch_order.begin(), batch_order.end(), std::size_t{0});
    }

    Trajectory traj;
    traj.summary.seed = seed;
    traj.summary.smoothness = smoothness;
    traj.steps.reserve(config.max_steps);

    Vector theta = setup.theta0;
    auto [cur_loss, cur_grad] = problem.evaluate(theta);
    traj.summary.initial_loss = cur_loss;
    traj.summary.best_loss = cur_loss;
    traj.summary.final_loss = cur_loss;
    if (!std::isfinite(cur_loss)) {
        traj.summary.diverged = true;
        traj.summary.divergence_reason = "non-finite initial loss";
    }

    MomentState state = init_state(theta.size());
    for (std::size_t t = 1; t <= config.max_steps && !traj.summary.diverged; ++t) {
        Vector g;
        if (minibatch) {
            const std::size_t n = batch_order.size();
            const std::size_t b = net_task->batch_size;
            for (std::size_t i = 0; i < b; ++i) {
                std::swap(batch_order[i], batch_order[i + batch_rng.uniform_index(n - i)]);
            }
            const auto batch = setup.network->train.subset(std::span(batch_order).first(b));
            const nn::Mlp model(setup.network->spec, theta);
            g = nn::loss_and_grad(model, batch).grad;
        } else {
            g = cur_grad;
        }
        perturb(g, config.noise, noise_rng);

        StepOutput out;
        try {
            out = optimizer_step(config.optimizer, theta, state, g, config.hyper);
        } catch (const NonFiniteValue& e) {
            traj.summary.diverged = true;
            traj.summary.divergence_reason = e.what();
            break;
        }
        auto [new_loss, new_grad] = problem.evaluate(out.new_params);

        StepRecord rec;
        rec.step = t;
        rec.loss = new_loss;
        rec.grad_norm = norm(cur_grad);
        const auto [lo, hi] = std::minmax_element(out.eta.begin(), out.eta.end());
        rec.min_eta = *lo;
        rec.max_eta = *hi;
        rec.mean_eta = std::accumulate(out.eta.begin(), out.eta.end(), 0.0) /
                       static_cast<double>(out.eta.size());
        rec.delta_v = new_loss - cur_loss;
        if (smoothness) {
            DriftReport partial;
            if (out.decay_factor == 1.0) {
                partial = drift_bound(cur_grad, out.m_hat, out.eta, *smoothness);
            } else {
                Vector displacement(theta.size());
                for (std::size_t i = 0; i < theta.size(); ++i) {
                    displacement[i] = out.new_params[i] - theta[i];
                }
                partial = drift_bound_for_displacement(cur_grad, displacement, *smoothness);
            }
            const auto report = complete_report(partial, rec.delta_v, config.drift_tolerance);
            rec.drift_bound = report.bound;
            rec.bound_ok = report.bound_satisfied;
            rec.lr_bound_ok =
                lr_bound_holds(config.hyper.eta0, out.new_state.v, *smoothness, config.lr_margin);
        }
        if (setup.network && (t % net_task->eval_every == 0 || t == config.max_steps)) {
            const nn::Mlp model(setup.network->spec, out.new_params);
            const auto eval = nn::evaluate(model, setup.network->val);
            rec.val_loss = eval.mean_loss;
            rec.val_accuracy = eval.accuracy;
            if (!traj.summary.steps_to_threshold && eval.accuracy >= config.target_accuracy) {
                traj.summary.steps_to_threshold = t;
            }
        } else if (!setup.network && !traj.summary.steps_to_threshold && new_loss <= threshold) {
            traj.summary.steps_to_threshold = t;
        }
        traj.steps.push_back(rec);

        theta = std::move(out.new_params);
        state = std::move(out.new_state);
        cur_loss = new_loss;
        cur_grad = std::move(new_grad);
        traj.summary.final_loss = cur_loss;

        if (!std::isfinite(cur_loss) || cur_loss > config.divergence_threshold) {
            traj.summary.diverged = true;
            traj.summary.divergence_reason =
                std::isfinite(cur_loss) ? "loss exceeded divergence threshold" : "non-finite loss";
        } else {
            traj.summary.best_loss = std::min(traj.summary.best_loss, cur_loss);
        }
    }

    if (setup.network) {
        const nn::Mlp model(setup.network->spec, theta);
        traj.summary.train_accuracy = nn::evaluate(model, setup.network->train).accuracy;
        const auto val = nn::evaluate(model, setup.network->val);
        traj.summary.val_accuracy = val.accuracy;
        traj.summary.val_loss = val.mean_loss;
    }
    traj.final_params = std::move(theta);
    traj.summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return traj;
}

std::vector<Trajectory> run(const RunConfig& config) {
    config.validate();
    std::vector<Trajectory> out(config.seeds.size());
    detail::parallel_for(config.seeds.size(), config.threads,
                         [&](std::size_t i) { out[i] = run_trial(config, config.seeds[i]); });
    return out;
}

MetricStats describe(std::span<const double> values) {
    MetricStats s;
    s.count = values.size();
    if (values.empty()) return s;
    const double n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    s.min = *lo;
    s.max = *hi;
    if (values.size() == 1) {
        s.sd = 0.0;
    } else {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / (n - 1.0));
    }
    return s;
}

AggregateSummary aggregate(std::span<const Trajectory> trajectories) {
    if (trajectories.empty()) throw InvalidArgument("cannot aggregate zero trajectories");
    AggregateSummary agg;
    agg.trajectories = trajectories.size();
    std::vector<double> final_loss, best_loss, steps, train_acc, val_acc, val_loss;
    std::size_t nonpositive = 0, satisfied = 0;
    for (const auto& traj : trajectories) {
        const auto& s = traj.summary;
        if (s.diverged) ++agg.diverged;
        final_loss.push_back(s.final_loss);
        best_loss.push_back(s.best_loss);
        if (s.steps_to_threshold) steps.push_back(static_cast<double>(*s.steps_to_threshold));
        if (s.train_accuracy) train_acc.push_back(*s.train_accuracy);
        if (s.val_accuracy) val_acc.push_back(*s.val_accuracy);
        if (s.val_loss) val_loss.push_back(*s.val_loss);
        for (const auto& rec : traj.steps) {
            ++agg.total_steps;
            if (rec.delta_v <= 0.0) ++nonpositive;
            if (!std::isnan(rec.drift_bound)) {
                ++agg.bound_steps;
                if (rec.bound_ok) ++satisfied;
            }
        }
    }
    agg.final_loss = describe(final_loss);
    agg.best_loss = describe(best_loss);
    agg.steps_to_threshold = describe(steps);
    agg.train_accuracy = describe(train_acc);
    agg.val_accuracy = describe(val_acc);
    agg.val_loss = describe(val_loss);
    if (agg.total_steps > 0) {
        agg.fraction_nonpositive_drift =
            static_cast<double>(nonpositive) / static_cast<double>(agg.total_steps);
    }
    if (agg.bound_steps > 0) {
        agg.fraction_bound_satisfied =
            static_cast<double>(satisfied) / static_cast<double>(agg.bound_steps);
    }
    return agg;
}

void AblationGrid::validate() const {
    if (beta1.empty() || beta2.empty() || eta0.empty()) {
        throw InvalidArgument("ablation grid axes must be non-empty");
    }
    for (double b : beta1) {
        if (!(b >= 0.0 && b < 1.0)) throw InvalidArgument("grid beta1 values must lie in [0, 1)");
    }
    for (double b : beta2) {
        if (!(b >= 0.0 && b < 1.0)) throw InvalidArgument("grid beta2 values must lie in [0, 1)");
    }
    for (double e : eta0) {
        if (!(e > 0.0)) throw InvalidArgument("grid eta0 values must be positive");
    }
}

std::string setup_label(double beta1, double beta2, double eta0) {
    const AblationGrid reference;
    auto index_of = [](const std::vector<double>& axis, double value) -> std::ptrdiff_t {
        for (std::size_t i = 0; i < axis.size(); ++i) {
            if (std::abs(axis[i] - value) <= 1e-12 * std::max(1.0, std::abs(value))) {
                return static_cast<std::ptrdiff_t>(i);
            }
        }
        return -1;
    };
    const auto i1 = index_of(reference.beta1, beta1);
    const auto i2 = index_of(reference.beta2, beta2);
    const auto ie = index_of(reference.eta0, eta0);
    if (i1 < 0 || i2 < 0 || ie < 0) return "custom";
    const auto idx = ie * 9 + i1 * 3 + i2;
    return std::string("Setup ") + static_cast<char>('A' + idx);
}

RunConfig benign_condition(const RunConfig& base) {
    RunConfig cfg = base;
    cfg.noise = NoiseModel{};
    if (auto* net = std::get_if<NetworkTask>(&cfg.task)) net->poison_fraction = 0.0;
    return cfg;
}

RunConfig poisoned_condition(const RunConfig& base) {
    RunConfig cfg = base;
    if (auto* net = std::get_if<NetworkTask>(&cfg.task)) {
        if (net->poison_fraction == 0.0) {
            net->poison_fraction = 0.1;
            net->poison_mode = nn::PoisonMode::FeatureReplace;
        }
    } else if (cfg.noise.kind == NoiseKind::None || cfg.noise.sigma == 0.0) {
        cfg.noise = NoiseModel{NoiseKind::Gaussian, 1.0, 3.0};
    }
    return cfg;
}

std::vector<AblationRow> ablation_grid(const RunConfig& base, const AblationGrid& grid) {
    grid.validate();
    base.validate();

    struct Cell {
        double beta1, beta2, eta0;
    };
    std::vector<Cell> cells;
    for (double e : grid.eta0) {
        for (double b1 : grid.beta1) {
            for (double b2 : grid.beta2) cells.push_back({b1, b2, e});
        }
    }

    const RunConfig benign = benign_condition(base);
    const RunConfig poisoned = poisoned_condition(base);
    const std::size_t n_seeds = base.seeds.size();
    const std::size_t jobs = cells.size() * 2 * n_seeds;

    std::vector<Trajectory> results(jobs);
    std::vector<std::string> errors(jobs);
    detail::parallel_for(jobs, base.threads, [&](std::size_t job) {
        const std::size_t cell = job / (2 * n_seeds);
        const std::size_t cond = (job / n_seeds) % 2;
        const std::size_t s = job % n_seeds;
        RunConfig cfg = cond == 0 ? benign : poisoned;
        cfg.hyper.beta1 = cells[cell].beta1;
        cfg.hyper.beta2 = cells[cell].beta2;
        cfg.hyper.eta0 = cells[cell].eta0;
        try {
            results[job] = run_trial(cfg, base.seeds[s]);
        } catch (const std::exception& e) {
            errors[job] = e.what();
        }
    });

    std::vector<AblationRow> rows;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        AblationRow row;
        row.beta1 = cells[c].beta1;
        row.beta2 = cells[c].beta2;
        row.eta0 = cells[c].eta0;
        row.label = setup_label(row.beta1, row.beta2, row.eta0);
        for (std::size_t cond = 0; cond < 2; ++cond) {
            const std::size_t first = (c * 2 + cond) * n_seeds;
            std::vector<Trajectory> trajs;
            for (std::size_t s = 0; s < n_seeds; ++s) {
                if (!errors[first + s].empty()) {
                    if (row.error.empty()) row.error = errors[first + s];
                } else {
                    trajs.push_back(std::move(results[first + s]));
                }
            }
            if (row.error.empty() && !trajs.empty()) {
                (cond == 0 ? row.benign : row.poisoned) = aggregate(trajs);
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace lyam
