#include "lyam/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lyam/errors.hpp"

namespace lyam {

namespace pt = boost::property_tree;

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

double parse_double(std::string_view text, const std::string& key) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw ConfigError(key + ": expected a number, got '" + std::string(text) + "'");
    }
    return value;
}

std::uint64_t parse_uint(std::string_view text, const std::string& key) {
    text = trim(text);
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw ConfigError(key + ": expected a nonnegative integer, got '" + std::string(text) + "'");
    }
    return value;
}

bool parse_bool(std::string_view text, const std::string& key) {
    const std::string v = lower(trim(text));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": expected a boolean, got '" + std::string(text) + "'");
}

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        const auto pos = text.find(sep, start);
        parts.push_back(trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

// Reads typed values and remembers which keys were touched so leftovers can
// be reported as unknown.
class Reader {
public:
    explicit Reader(const std::map<std::string, std::string>& values) : values_(values) {}

    const std::string* find(const std::string& key) {
        seen_.insert(key);
        const auto it = values_.find(key);
        return it == values_.end() ? nullptr : &it->second;
    }

    double number(const std::string& key, double fallback) {
        const auto* v = find(key);
        return v ? parse_double(*v, key) : fallback;
    }
    std::uint64_t integer(const std::string& key, std::uint64_t fallback) {
        const auto* v = find(key);
        return v ? parse_uint(*v, key) : fallback;
    }
    bool boolean(const std::string& key, bool fallback) {
        const auto* v = find(key);
        return v ? parse_bool(*v, key) : fallback;
    }
    std::string text(const std::string& key, const std::string& fallback) {
        const auto* v = find(key);
        return v ? lower(trim(*v)) : fallback;
    }
    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        try {
            return parse_number_list(*v);
        } catch (const ConfigError& e) {
            throw ConfigError(key + ": " + e.what());
        }
    }
    std::vector<std::size_t> sizes(const std::string& key, std::vector<std::size_t> fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        std::vector<std::size_t> out;
        for (auto part : split(*v, ',')) {
            if (part.empty()) continue;
            out.push_back(static_cast<std::size_t>(parse_uint(part, key)));
        }
        return out;
    }

    void reject_unknown() const {
        for (const auto& [key, value] : values_) {
            if (!seen_.count(key)) throw ConfigError("unknown config key '" + key + "'");
        }
    }

private:
    const std::map<std::string, std::string>& values_;
    std::set<std::string> seen_;
};

const std::set<std::string> kSections = {"task", "optimizer", "noise", "grid", "run", "bench"};

std::map<std::string, std::string> flatten(std::string_view text) {
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.message() + " (line " +
                          std::to_string(e.line()) + ")");
    }
    std::map<std::string, std::string> flat;
    for (const auto& [section, body] : tree) {
        const std::string sec = lower(section);
        if (!kSections.count(sec)) {
            if (body.empty()) {
                throw ConfigError("config key '" + section + "' must belong to a section");
            }
            throw ConfigError("unknown config section [" + section + "]");
        }
        for (const auto& [key, node] : body) {
            flat[sec + "." + lower(key)] = std::string(trim(node.data()));
        }
    }
    return flat;
}

void apply_override(std::map<std::string, std::string>& flat, std::string_view item) {
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("override '" + std::string(item) + "' must look like section.key=value");
    }
    const std::string key = lower(trim(item.substr(0, eq)));
    const auto dot = key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == key.size()) {
        throw ConfigError("override key '" + key + "' must look like section.key");
    }
    if (!kSections.count(key.substr(0, dot))) {
        throw ConfigError("unknown config section in override '" + key + "'");
    }
    flat[key] = std::string(trim(item.substr(eq + 1)));
}

ProblemSpec read_problem(Reader& r, const std::string& kind, std::size_t& dim) {
    if (kind == "sphere" || kind == "scaled_sphere") {
        return problem::ScaledSphere{r.number("task.scale", 1.0)};
    }
    if (kind == "rosenbrock") return problem::Rosenbrock{};
    if (kind == "rastrigin") return problem::Rastrigin{};
    if (kind == "saddle" || kind == "saddle_xy") {
        dim = 2;
        return problem::SaddleXY{};
    }
    if (kind == "quadratic") {
        problem::Quadratic q;
        if (const auto* m = r.find("task.matrix")) {
            const auto rows = split(*m, ';');
            const auto n = static_cast<Eigen::Index>(rows.size());
            q.a.resize(n, n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto entries = parse_number_list(rows[static_cast<std::size_t>(i)]);
                if (static_cast<Eigen::Index>(entries.size()) != n) {
                    throw ConfigError("task.matrix must be square (rows separated by ';')");
                }
                for (Eigen::Index j = 0; j < n; ++j) q.a(i, j) = entries[static_cast<std::size_t>(j)];
            }
        } else {
            const auto eig = r.numbers("task.eigenvalues", {});
            if (eig.empty()) {
                throw ConfigError("quadratic tasks need task.eigenvalues or task.matrix");
            }
            Philox rng(r.integer("task.rotation_seed", 0), 0);
            q.a = random_symmetric(eig, rng);
        }
        dim = static_cast<std::size_t>(q.a.rows());
        q.b = r.numbers("task.b", {});
        return q;
    }
    throw ConfigError("unknown task kind '" + kind +
                      "'; valid kinds: sphere, quadratic, rosenbrock, rastrigin, saddle, mlp");
}

ExperimentConfig build(const std::map<std::string, std::string>& flat) {
    ExperimentConfig cfg;
    Reader r(flat);
    RunConfig& run = cfg.run;

    const std::string kind = r.text("task.kind", "sphere");
    if (kind == "mlp") {
        NetworkTask net;
        const std::string ds = r.text("task.dataset", "blobs");
        if (ds == "blobs" || ds == "gaussian_blobs") {
            nn::GaussianBlobs blobs;
            blobs.classes = static_cast<std::size_t>(r.integer("task.classes", 2));
            blobs.radius = r.number("task.radius", 2.0);
            net.dataset = blobs;
        } else if (ds == "spirals" || ds == "two_spirals") {
            net.dataset = nn::TwoSpirals{};
        } else {
            throw ConfigError("unknown dataset '" + ds + "'; valid: blobs, spirals");
        }
        net.hidden = r.sizes("task.hidden", net.hidden);
        net.activation = nn::parse_activation(r.text("task.activation", "tanh"));
        net.init_scale = r.number("task.init_scale", net.init_scale);
        net.n_train = static_cast<std::size_t>(r.integer("task.n_train", net.n_train));
        net.n_val = static_cast<std::size_t>(r.integer("task.n_val", net.n_val));
        net.data_noise = r.number("task.data_noise", net.data_noise);
        net.batch_size = static_cast<std::size_t>(r.integer("task.batch_size", net.batch_size));
        net.eval_every = static_cast<std::size_t>(r.integer("task.eval_every", net.eval_every));
        net.poison_fraction = r.number("task.poison_fraction", net.poison_fraction);
        net.poison_mode = nn::parse_poison_mode(r.text("task.poison_mode", "feature_replace"));
        run.task = net;
    } else {
        AnalyticTask task;
        task.dim = static_cast<std::size_t>(r.integer("task.dim", 2));
        task.problem = read_problem(r, kind, task.dim);
        task.initial = r.numbers("task.initial", {});
        task.init_low = r.number("task.init_low", task.init_low);
        task.init_high = r.number("task.init_high", task.init_high);
        run.task = task;
    }

    run.optimizer = parse_optimizer_kind(r.text("optimizer.kind", "lyam"));
    run.hyper.eta0 = r.number("optimizer.eta0", run.hyper.eta0);
    run.hyper.beta1 = r.number("optimizer.beta1", run.hyper.beta1);
    run.hyper.beta2 = r.number("optimizer.beta2", run.hyper.beta2);
    run.hyper.beta3 = r.number("optimizer.beta3", run.hyper.beta3);
    run.hyper.weight_decay = r.number("optimizer.weight_decay", run.hyper.weight_decay);
    run.hyper.epsilon = r.number("optimizer.epsilon", run.hyper.epsilon);

    run.noise.kind = parse_noise_kind(r.text("noise.kind", "none"));
    run.noise.sigma = r.number("noise.sigma", run.noise.kind == NoiseKind::None ? 0.0 : 1.0);
    run.noise.dof = r.number("noise.dof", 3.0);

    cfg.grid.beta1 = r.numbers("grid.beta1", cfg.grid.beta1);
    cfg.grid.beta2 = r.numbers("grid.beta2", cfg.grid.beta2);
    cfg.grid.eta0 = r.numbers("grid.eta0", cfg.grid.eta0);

    run.max_steps = static_cast<std::size_t>(r.integer("run.max_steps", run.max_steps));
    {
        std::vector<std::uint64_t> seeds;
        if (const auto* v = r.find("run.seeds")) {
            for (auto part : split(*v, ',')) {
                if (!part.empty()) seeds.push_back(parse_uint(part, "run.seeds"));
            }
            run.seeds = seeds;
        }
    }
    run.record_drift = r.boolean("run.record_drift", run.record_drift);
    {
        const std::string src = r.text("run.lipschitz", "auto");
        if (src == "auto") run.lipschitz = LipschitzSource::Auto;
        else if (src == "analytic") run.lipschitz = LipschitzSource::Analytic;
        else if (src == "estimated") run.lipschitz = LipschitzSource::Estimated;
        else throw ConfigError("run.lipschitz must be auto, analytic or estimated");
    }
    run.lipschitz_samples =
        static_cast<std::size_t>(r.integer("run.lipschitz_samples", run.lipschitz_samples));
    run.drift_tolerance = r.number("run.drift_tolerance", run.drift_tolerance);
    run.lr_margin = r.number("run.lr_margin", run.lr_margin);
    run.divergence_threshold = r.number("run.divergence_threshold", run.divergence_threshold);
    if (const auto* v = r.find("run.target_loss")) run.target_loss = parse_double(*v, "run.target_loss");
    run.target_accuracy = r.number("run.target_accuracy", run.target_accuracy);
    run.threads = static_cast<std::size_t>(r.integer("run.threads", run.threads));
    cfg.violation_allowance =
        static_cast<std::size_t>(r.integer("run.violation_allowance", cfg.violation_allowance));
    cfg.log_scale_loss = r.boolean("run.log_scale", cfg.log_scale_loss);

    {
        const std::string list = r.text("bench.optimizers", "all");
        if (list == "all") {
            cfg.bench_optimizers = benchmark_optimizer_kinds();
        } else {
            for (auto part : split(list, ',')) {
                if (!part.empty()) cfg.bench_optimizers.push_back(parse_optimizer_kind(part));
            }
        }
    }

    r.reject_unknown();
    try {
        run.validate();
        cfg.grid.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }

    for (const auto& [key, value] : flat) cfg.canonical += key + "=" + value + "\n";
    return cfg;
}

}  // namespace

std::vector<double> parse_number_list(std::string_view text) {
    std::vector<double> out;
    for (auto part : split(text, ',')) {
        if (part.empty()) continue;
        out.push_back(parse_double(part, "list"));
    }
    return out;
}

ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides) {
    auto flat = flatten(text);
    for (const auto& o : overrides) apply_override(flat, o);
    try {
        return build(flat);
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), overrides);
}

}  // namespace lyam
