#include <pybind11/pybind11.h>
#include <pybind11/eigen.h>
#include <pybind11/stl.h>

#include <sstream>

#include "lyam/cli.hpp"
#include "lyam/config.hpp"
#include "lyam/errors.hpp"
#include "lyam/harness.hpp"
#include "lyam/optim.hpp"
#include "lyam/stability.hpp"

namespace py = pybind11;
using namespace lyam;

namespace {

py::dict step_record_dict(const StepRecord& r) {
    py::dict d;
    d["step"] = r.step;
    d["loss"] = r.loss;
    d["grad_norm"] = r.grad_norm;
    d["mean_eta"] = r.mean_eta;
    d["min_eta"] = r.min_eta;
    d["max_eta"] = r.max_eta;
    d["delta_v"] = r.delta_v;
    d["drift_bound"] = r.drift_bound;
    d["bound_ok"] = r.bound_ok;
    d["lr_bound_ok"] = r.lr_bound_ok;
    d["val_loss"] = r.val_loss;
    d["val_accuracy"] = r.val_accuracy;
    return d;
}

py::dict trajectory_dict(const Trajectory& t) {
    py::dict summary;
    const auto& s = t.summary;
    summary["seed"] = s.seed;
    summary["initial_loss"] = s.initial_loss;
    summary["final_loss"] = s.final_loss;
    summary["best_loss"] = s.best_loss;
    summary["steps_to_threshold"] = s.steps_to_threshold;
    summary["train_accuracy"] = s.train_accuracy;
    summary["val_accuracy"] = s.val_accuracy;
    summary["val_loss"] = s.val_loss;
    summary["smoothness"] = s.smoothness;
    summary["diverged"] = s.diverged;
    summary["divergence_reason"] = s.divergence_reason;
    py::list steps;
    for (const auto& r : t.steps) steps.append(step_record_dict(r));
    py::dict d;
    d["summary"] = summary;
    d["steps"] = steps;
    d["final_params"] = t.final_params;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Adaptive-rate optimizers with drift-bound telemetry.";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::enum_<OptimizerKind>(m, "OptimizerKind")
        .value("LyAm", OptimizerKind::LyAm)
        .value("SGD", OptimizerKind::SGD)
        .value("AdaGrad", OptimizerKind::AdaGrad)
        .value("Adam", OptimizerKind::Adam)
        .value("AdamW", OptimizerKind::AdamW)
        .value("AdaBelief", OptimizerKind::AdaBelief)
        .value("Adan", OptimizerKind::Adan);
    m.def("parse_optimizer_kind", [](const std::string& s) { return parse_optimizer_kind(s); });
    m.def("optimizer_names", [] {
        std::vector<std::string> names;
        for (auto k : all_optimizer_kinds()) names.emplace_back(to_string(k));
        return names;
    });

    py::class_<HyperParams>(m, "HyperParams")
        .def(py::init([](double eta0, double beta1, double beta2, double weight_decay, double epsilon,
                         double beta3) {
                 HyperParams h{eta0, beta1, beta2, weight_decay, epsilon, beta3};
                 h.validate();
                 return h;
             }),
             py::arg("eta0") = 0.003, py::arg("beta1") = 0.9, py::arg("beta2") = 0.99,
             py::arg("weight_decay") = 0.01, py::arg("epsilon") = 1e-8, py::arg("beta3") = 0.92)
        .def_readwrite("eta0", &HyperParams::eta0)
        .def_readwrite("beta1", &HyperParams::beta1)
        .def_readwrite("beta2", &HyperParams::beta2)
        .def_readwrite("weight_decay", &HyperParams::weight_decay)
        .def_readwrite("epsilon", &HyperParams::epsilon)
        .def_readwrite("beta3", &HyperParams::beta3);

    py::class_<MomentState>(m, "MomentState")
        .def_readonly("m", &MomentState::m)
        .def_readonly("v", &MomentState::v)
        .def_readonly("t", &MomentState::t)
        .def_property_readonly("dim", &MomentState::dim);
    m.def("init_state", &init_state, py::arg("dim"));

    py::class_<StepOutput>(m, "StepOutput")
        .def_readonly("new_params", &StepOutput::new_params)
        .def_readonly("new_state", &StepOutput::new_state)
        .def_readonly("eta", &StepOutput::eta)
        .def_readonly("m_hat", &StepOutput::m_hat)
        .def_readonly("v_hat", &StepOutput::v_hat)
        .def_readonly("decay_factor", &StepOutput::decay_factor);

    m.def(
        "lyam_step",
        [](const Vector& params, const MomentState& state, const Vector& grad, const HyperParams& h) {
            return lyam_step(params, state, grad, h);
        },
        py::arg("params"), py::arg("state"), py::arg("grad"), py::arg("hyper"));
    m.def(
        "optimizer_step",
        [](OptimizerKind kind, const Vector& params, const MomentState& state, const Vector& grad,
           const HyperParams& h) { return optimizer_step(kind, params, state, grad, h); },
        py::arg("kind"), py::arg("params"), py::arg("state"), py::arg("grad"), py::arg("hyper"));

    py::class_<Optimizer>(m, "Optimizer")
        .def(py::init<OptimizerKind, HyperParams, Vector>(), py::arg("kind"), py::arg("hyper"),
             py::arg("params"))
        .def(
            "step", [](Optimizer& o, const Vector& grad) { return o.step(grad); }, py::arg("grad"))
        .def_property_readonly("params", &Optimizer::params)
        .def_property_readonly("state", &Optimizer::state)
        .def_property_readonly("step_count", &Optimizer::step_count);

    py::class_<DriftReport>(m, "DriftReport")
        .def_readonly("delta_v", &DriftReport::delta_v)
        .def_readonly("descent_term", &DriftReport::descent_term)
        .def_readonly("quad_term", &DriftReport::quad_term)
        .def_readonly("bound", &DriftReport::bound)
        .def_readonly("bound_satisfied", &DriftReport::bound_satisfied);
    m.def(
        "drift_bound",
        [](const Vector& grad, const Vector& m_hat, const Vector& eta, double smoothness) {
            return drift_bound(grad, m_hat, eta, smoothness);
        },
        py::arg("grad"), py::arg("m_hat"), py::arg("eta"), py::arg("smoothness"));
    m.def(
        "check_lr_bound",
        [](double eta0, const Vector& v, double smoothness, double margin) {
            return check_lr_bound(eta0, v, smoothness, margin);
        },
        py::arg("eta0"), py::arg("v"), py::arg("smoothness"), py::arg("margin") = kDefaultLrMargin);
    m.def(
        "classify_critical_point",
        [](const Matrix& hessian, double tol) {
            const auto c = classify_critical_point(hessian, tol);
            return py::make_tuple(std::string(to_string(c.classification)), c.eigenvalues);
        },
        py::arg("hessian"), py::arg("tol") = 0.0,
        "Returns (classification, ascending eigenvalues).");

    m.def(
        "run_config",
        [](const std::string& text, const std::vector<std::string>& overrides) {
            const auto cfg = parse_config(text, overrides);
            std::vector<Trajectory> trajs;
            {
                py::gil_scoped_release release;
                trajs = run(cfg.run);
            }
            py::list out;
            for (const auto& t : trajs) out.append(trajectory_dict(t));
            return out;
        },
        py::arg("text"), py::arg("overrides") = std::vector<std::string>{},
        "Runs every seed of an INI experiment config; one dict per seed.");

    m.def(
        "cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "lyam");
            std::vector<const char*> argv;
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs a CLI subcommand in-process; returns (exit_code, stdout, stderr).");

    m.attr("__version__") = LYAM_VERSION;
}
