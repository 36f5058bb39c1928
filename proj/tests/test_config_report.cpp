#include <doctest.h>

#include <clocale>
#include <sstream>

#include "lyam/config.hpp"
#include "lyam/errors.hpp"
#include "lyam/report.hpp"

using namespace lyam;

TEST_CASE("config defaults and sections") {
    const auto cfg = parse_config("");
    CHECK(cfg.run.optimizer == OptimizerKind::LyAm);
    CHECK(std::holds_alternative<AnalyticTask>(cfg.run.task));
    CHECK(cfg.bench_optimizers.size() == 6);
    CHECK(cfg.grid.size() == 18);

    const auto full = parse_config(R"(
[task]
kind = quadratic
eigenvalues = 0.5, 1, 4
rotation_seed = 2
[optimizer]
kind = adamw
eta0 = 0.01
beta1 = 0.8
weight_decay = 0
[noise]
kind = student_t
sigma = 0.3
[grid]
beta1 = 0.9
beta2 = 0.99
eta0 = 0.003
[run]
max_steps = 42
seeds = 4, 5
record_drift = false
violation_allowance = 3
[bench]
optimizers = adam, lyam
)");
    const auto& task = std::get<AnalyticTask>(full.run.task);
    CHECK(task.dim == 3);
    CHECK(std::holds_alternative<problem::Quadratic>(task.problem));
    CHECK(full.run.optimizer == OptimizerKind::AdamW);
    CHECK(full.run.hyper.eta0 == 0.01);
    CHECK(full.run.hyper.beta1 == 0.8);
    CHECK(full.run.hyper.weight_decay == 0.0);
    CHECK(full.run.noise.kind == NoiseKind::StudentT);
    CHECK(full.run.noise.sigma == 0.3);
    CHECK(full.grid.size() == 1);
    CHECK(full.run.max_steps == 42);
    CHECK(full.run.seeds == std::vector<std::uint64_t>{4, 5});
    CHECK_FALSE(full.run.record_drift);
    CHECK(full.violation_allowance == 3);
    CHECK(full.bench_optimizers == std::vector<OptimizerKind>{OptimizerKind::Adam, OptimizerKind::LyAm});
}

TEST_CASE("config mlp task") {
    const auto cfg = parse_config("[task]\nkind = mlp\ndataset = spirals\nhidden = 8, 8\n"
                                  "activation = relu\npoison_fraction = 0.2\npoison_mode = label_flip\n");
    const auto& net = std::get<NetworkTask>(cfg.run.task);
    CHECK(std::holds_alternative<nn::TwoSpirals>(net.dataset));
    CHECK(net.hidden == std::vector<std::size_t>{8, 8});
    CHECK(net.activation == nn::Activation::ReLU);
    CHECK(net.poison_fraction == 0.2);
    CHECK(net.poison_mode == nn::PoisonMode::LabelFlip);
}

TEST_CASE("config overrides and canonical form") {
    const std::string text = "[optimizer]\neta0 = 0.01\n";
    const auto a = parse_config(text, {"optimizer.eta0=0.5", "run.max_steps = 7"});
    CHECK(a.run.hyper.eta0 == 0.5);
    CHECK(a.run.max_steps == 7);
    const auto b = parse_config("[run]\nmax_steps=7\n[optimizer]\neta0=0.5\n");
    CHECK(a.canonical == b.canonical);
    CHECK(fnv1a64(a.canonical) == fnv1a64(b.canonical));
    CHECK(a.canonical != parse_config(text).canonical);
    CHECK_THROWS_AS(parse_config(text, {"eta0=1"}), ConfigError);
    CHECK_THROWS_AS(parse_config(text, {"optimizer.eta0"}), ConfigError);
    CHECK_THROWS_AS(parse_config(text, {"nosuch.key=1"}), ConfigError);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_config("[optimizer]\nkind = rmsprop\n"), ConfigError);
    try {
        parse_config("[optimizer]\nkind = rmsprop\n");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("AdaBelief") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("[optimizer]\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[mystery]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[optimizer]\neta0 = fast\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[optimizer]\neta0 = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[optimizer]\nbeta1 = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[grid]\nbeta1 = 0.1, nope\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[grid]\neta0 =\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[run]\nmax_steps = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[run]\nseeds = 1, 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[task]\nkind = banana\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[task]\nkind = quadratic\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[task\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/lyam.ini"), ConfigError);
}

TEST_CASE("number formatting is locale independent and round-trips") {
    using report::format_number;
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(-3.0) == "-3");
    CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
    const double x = 0.1 + 0.2;
    CHECK(std::stod(format_number(x)) == x);
    if (std::setlocale(LC_NUMERIC, "de_DE.UTF-8")) {
        CHECK(format_number(1.25) == "1.25");
        std::setlocale(LC_NUMERIC, "C");
    }
}

TEST_CASE("csv writer") {
    CHECK(report::CsvWriter::escape("plain") == "plain");
    CHECK(report::CsvWriter::escape("a,b") == "\"a,b\"");
    CHECK(report::CsvWriter::escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    std::ostringstream out;
    report::CsvWriter w(out);
    w.row({"x", "y"});
    w.row({"1", "two, three"});
    CHECK(out.str() == "x,y\n1,\"two, three\"\n");

    Trajectory t;
    StepRecord r;
    r.step = 1;
    r.loss = 0.25;
    r.drift_bound = -0.5;
    r.bound_ok = false;
    t.steps.push_back(r);
    StepRecord r2;
    r2.step = 2;
    t.steps.push_back(r2);
    std::ostringstream csv;
    report::write_trajectory_csv(csv, t);
    std::istringstream lines(csv.str());
    std::string header, first, second, extra;
    std::getline(lines, header);
    std::getline(lines, first);
    std::getline(lines, second);
    CHECK(header == "step,loss,grad_norm,mean_eta,min_eta,max_eta,delta_v,drift_bound,bound_ok");
    CHECK(first == "1,0.25,0,0,0,0,0,-0.5,0");
    CHECK(second == "2,0,0,0,0,0,0,,");
    CHECK_FALSE(std::getline(lines, extra));
}

TEST_CASE("svg plots are self-contained") {
    const std::vector<report::Series> series = {{"a & b", {1, 2, 3}, {1.0, 0.1, 0.01}},
                                                {"b", {1, 2, 3}, {0.5, -1.0, 0.2}}};
    report::PlotOptions opt;
    opt.title = "loss <log>";
    opt.log_y = true;
    const auto svg = report::svg_line_plot(series, opt);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("href") == std::string::npos);
    CHECK(svg.find("a &amp; b") != std::string::npos);
    CHECK(svg.find("loss &lt;log&gt;") != std::string::npos);
    // two polylines; the negative point is dropped on the log axis
    std::size_t count = 0;
    for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) {
        ++count;
    }
    CHECK(count == 2);
    const auto second = svg.find("points=\"", svg.rfind("<polyline"));
    const auto end = svg.find('"', second + 8);
    const std::string pts = svg.substr(second + 8, end - second - 8);
    CHECK(std::count(pts.begin(), pts.end(), ',') == 2);

    const std::vector<report::Series> empty;
    CHECK(report::svg_line_plot(empty, report::PlotOptions{}).find("</svg>") != std::string::npos);
}
