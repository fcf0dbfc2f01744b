#include "epib/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace epib {

namespace {

std::string where(long line) { return line > 0 ? "line " + std::to_string(line) : "command-line override"; }

[[noreturn]] void fail(long line, const std::string& key, const std::string& msg) {
    throw ConfigError(where(line) + ": '" + key + "' " + msg, line);
}

double as_double(const YAML::Node& n, long line, const std::string& key) {
    if (!n.IsScalar()) fail(line, key, "must be a number");
    try {
        const double v = n.as<double>();
        if (!std::isfinite(v)) fail(line, key, "must be finite");
        return v;
    } catch (const YAML::Exception&) {
        fail(line, key, "must be a number, got '" + n.Scalar() + "'");
    }
}

long as_int(const YAML::Node& n, long line, const std::string& key) {
    const double v = as_double(n, line, key);
    if (v != std::floor(v)) fail(line, key, "must be an integer");
    return static_cast<long>(v);
}

std::string as_string(const YAML::Node& n, long line, const std::string& key) {
    if (!n.IsScalar()) fail(line, key, "must be a string");
    return n.Scalar();
}

bool as_bool(const YAML::Node& n, long line, const std::string& key) {
    if (!n.IsScalar()) fail(line, key, "must be true or false");
    try {
        return n.as<bool>();
    } catch (const YAML::Exception&) {
        fail(line, key, "must be true or false");
    }
}

std::vector<double> as_list(const YAML::Node& n, long line, const std::string& key) {
    if (!n.IsSequence()) fail(line, key, "must be a list like [a, b]");
    std::vector<double> out;
    for (const auto& e : n) out.push_back(as_double(e, line, key));
    return out;
}

void in_range(bool ok, long line, const std::string& key, const std::string& range) {
    if (!ok) fail(line, key, "must be " + range);
}

using Handler = std::function<void(ExperimentConfig&, const YAML::Node&, long)>;

struct Pending {
    std::vector<double> beta, c;
    long beta_line = 0, c_line = 0;
};

std::map<std::string, Handler> handlers(Pending& pend) {
    std::map<std::string, Handler> h;
    auto num = [&h](const std::string& key, std::function<void(ExperimentConfig&, double, long)> set) {
        h[key] = [key, set](ExperimentConfig& c, const YAML::Node& n, long line) { set(c, as_double(n, line, key), line); };
    };
    auto whole = [&h](const std::string& key, std::function<void(ExperimentConfig&, long, long)> set) {
        h[key] = [key, set](ExperimentConfig& c, const YAML::Node& n, long line) { set(c, as_int(n, line, key), line); };
    };
    auto text = [&h](const std::string& key, std::function<void(ExperimentConfig&, std::string, long)> set) {
        h[key] = [key, set](ExperimentConfig& c, const YAML::Node& n, long line) { set(c, as_string(n, line, key), line); };
    };

    h["beta"] = [&pend](ExperimentConfig&, const YAML::Node& n, long line) {
        pend.beta = as_list(n, line, "beta");
        pend.beta_line = line;
        for (double b : pend.beta) in_range(b >= 0.0, line, "beta", "nonnegative");
    };
    h["c"] = [&pend](ExperimentConfig&, const YAML::Node& n, long line) {
        pend.c = as_list(n, line, "c");
        pend.c_line = line;
    };
    num("c_n", [](auto& c, double v, long l) { in_range(v < 0.0, l, "c_n", "< 0"); c.params.c_n = v; });
    num("gamma", [](auto& c, double v, long l) { in_range(v > 0.0 && v <= 1.0, l, "gamma", "in (0,1]"); c.params.gamma = v; });
    num("k_bar", [](auto& c, double v, long l) { in_range(v >= 1.0, l, "k_bar", ">= 1"); c.params.k_bar = v; });
    num("d_bar", [](auto& c, double v, long l) { in_range(v >= 1.0, l, "d_bar", ">= 1"); c.params.d_bar = v; });
    num("alpha", [](auto& c, double v, long l) { in_range(v > 0.0 && v <= 1.0, l, "alpha", "in (0,1]"); c.params.alpha = v; });
    num("sigma", [](auto& c, double v, long l) { in_range(v > 0.0 && v <= 1.0, l, "sigma", "in (0,1]"); c.params.sigma = v; });
    num("lambda", [](auto& c, double v, long l) { in_range(v >= 0.0, l, "lambda", ">= 0"); c.params.lambda = v; });
    num("m", [](auto& c, double v, long l) { in_range(v > 0.0 && v <= 1.0, l, "m", "in (0,1]"); c.params.m = v; });
    num("omega", [](auto& c, double v, long l) { in_range(v > 0.0 && v <= 1.0, l, "omega", "in (0,1]"); c.params.omega = v; });
    num("u_max", [](auto& c, double v, long l) { in_range(v > 0.0, l, "u_max", "> 0"); c.params.u_max = v; });

    text("mode", [](auto& c, std::string v, long l) {
        std::transform(v.begin(), v.end(), v.begin(), ::tolower);
        if (v == "eut") c.mode = Mode::EUT;
        else if (v == "pt") c.mode = Mode::PT;
        else fail(l, "mode", "must be 'eut' or 'pt'");
    });
    h["seed"] = [](ExperimentConfig& c, const YAML::Node& n, long l) {
        try {
            c.seed = n.as<std::uint64_t>();
        } catch (const YAML::Exception&) {
            fail(l, "seed", "must be an unsigned 64-bit integer");
        }
    };

    num("dt", [](auto& c, double v, long l) { in_range(v > 0.0, l, "dt", "> 0"); c.dt = v; });
    num("horizon", [](auto& c, double v, long l) { in_range(v > 0.0, l, "horizon", "> 0"); c.horizon = v; });
    whole("stride", [](auto& c, long v, long l) { in_range(v >= 1, l, "stride", ">= 1"); c.stride = static_cast<int>(v); });
    num("i0", [](auto& c, double v, long l) { in_range(v >= 0.0 && v <= 1.0, l, "i0", "in [0,1]"); c.i0 = v; });
    h["x0"] = [](ExperimentConfig& c, const YAML::Node& n, long l) { c.x0 = as_list(n, l, "x0"); };
    h["stop_at_steady"] = [](ExperimentConfig& c, const YAML::Node& n, long l) { c.stop_at_steady = as_bool(n, l, "stop_at_steady"); };
    whole("starts", [](auto& c, long v, long l) { in_range(v >= 0, l, "starts", ">= 0"); c.starts = static_cast<int>(v); });

    whole("n", [](auto& c, long v, long l) { in_range(v >= 3, l, "n", ">= 3"); c.n = static_cast<int>(v); });
    whole("contact_degree", [](auto& c, long v, long l) { in_range(v >= 2 && v % 2 == 0, l, "contact_degree", "even and >= 2"); c.contact_degree = static_cast<int>(v); });
    whole("info_degree", [](auto& c, long v, long l) { in_range(v >= 2 && v % 2 == 0, l, "info_degree", "even and >= 2"); c.info_degree = static_cast<int>(v); });
    whole("agent_horizon", [](auto& c, long v, long l) { in_range(v >= 1, l, "agent_horizon", ">= 1"); c.agent_horizon = static_cast<int>(v); });
    whole("runs", [](auto& c, long v, long l) { in_range(v >= 1, l, "runs", ">= 1"); c.runs = static_cast<int>(v); });
    whole("sample_every", [](auto& c, long v, long l) { in_range(v >= 1, l, "sample_every", ">= 1"); c.sample_every = static_cast<int>(v); });
    whole("threads", [](auto& c, long v, long l) { in_range(v >= 0, l, "threads", ">= 0"); c.threads = static_cast<int>(v); });
    text("edge_list", [](auto& c, std::string v, long) { c.edge_list = v; });
    text("topology", [](auto& c, std::string v, long l) {
        if (v != "ring" && v != "random_regular") fail(l, "topology", "must be 'ring' or 'random_regular'");
        c.topology = v;
    });

    text("sweep_axis", [](auto& c, std::string v, long l) {
        if (v != "beta1" && v != "alpha") fail(l, "sweep_axis", "must be 'beta1' or 'alpha'");
        c.sweep_axis = v;
    });
    num("sweep_min", [](auto& c, double v, long) { c.sweep_min = v; });
    num("sweep_max", [](auto& c, double v, long) { c.sweep_max = v; });
    whole("sweep_steps", [](auto& c, long v, long l) { in_range(v >= 1, l, "sweep_steps", ">= 1"); c.sweep_steps = static_cast<int>(v); });
    h["sweep_grid"] = [](ExperimentConfig& c, const YAML::Node& n, long l) { c.sweep_grid = as_list(n, l, "sweep_grid"); };

    num("alpha_low", [](auto& c, double v, long l) { in_range(v > 0.0 && v <= 1.0, l, "alpha_low", "in (0,1]"); c.alpha_low = v; });
    num("alpha_high", [](auto& c, double v, long l) { in_range(v > 0.0 && v <= 1.0, l, "alpha_high", "in (0,1]"); c.alpha_high = v; });

    num("target_i", [](auto& c, double v, long l) { in_range(v >= 0.0 && v <= 1.0, l, "target_i", "in [0,1]"); c.target.i_max = v; });
    num("target_x", [](auto& c, double v, long l) { in_range(v >= 0.0 && v <= 1.0, l, "target_x", "in [0,1]"); c.target.x_min = v; });
    num("mu", [](auto& c, double v, long l) { in_range(v > 0.0, l, "mu", "> 0"); c.optimizer.penalty_weight = v; });
    num("barrier_t", [](auto& c, double v, long l) { in_range(v > 0.0, l, "barrier_t", "> 0"); c.optimizer.barrier_scale = v; });
    num("momentum", [](auto& c, double v, long l) { in_range(v >= 0.0 && v < 1.0, l, "momentum", "in [0,1)"); c.optimizer.momentum = v; });
    num("learning_rate", [](auto& c, double v, long l) { in_range(v > 0.0, l, "learning_rate", "> 0"); c.optimizer.learning_rate = v; });
    whole("max_iters", [](auto& c, long v, long l) { in_range(v >= 1, l, "max_iters", ">= 1"); c.optimizer.max_iters = static_cast<int>(v); });
    // stages: [[mu, learning_rate, momentum, iters], ...]
    h["stages"] = [](ExperimentConfig& c, const YAML::Node& n, long l) {
        if (!n.IsSequence()) fail(l, "stages", "must be a list of [mu, learning_rate, momentum, iters]");
        c.optimizer.stages.clear();
        for (const auto& row : n) {
            const std::vector<double> v = as_list(row, l, "stages");
            if (v.size() != 4) fail(l, "stages", "each stage needs 4 entries");
            in_range(v[0] > 0.0 && v[1] > 0.0 && v[2] >= 0.0 && v[2] < 1.0 && v[3] >= 1.0 && v[3] == std::floor(v[3]),
                     l, "stages", "mu > 0, learning_rate > 0, momentum in [0,1), integer iters >= 1");
            c.optimizer.stages.push_back({v[0], v[1], v[2], static_cast<int>(v[3])});
        }
    };
    text("cost", [](auto& c, std::string v, long l) {
        if (v != "squared" && v != "none") fail(l, "cost", "must be 'squared' or 'none'");
        c.cost = v;
    });

    text("responses", [](auto& c, std::string v, long) { c.responses = v; });
    text("choices", [](auto& c, std::string v, long) { c.choices = v; });
    text("series", [](auto& c, std::string v, long) { c.series = v; });
    whole("bins", [](auto& c, long v, long l) { in_range(v >= 2, l, "bins", ">= 2"); c.bins = static_cast<int>(v); });
    return h;
}

std::string resolve(const std::string& base, const std::string& path) {
    if (path.empty()) return path;
    const std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    return (std::filesystem::path(base) / p).string();
}

} // namespace

void ExperimentConfig::require_model() const {
    if (!missing.empty()) {
        std::string keys;
        for (const auto& k : missing) keys += (keys.empty() ? "" : ", ") + k;
        throw ConfigError("line " + std::to_string(end_line) + " (end of file): missing required key(s): " + keys,
                          end_line);
    }
}

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides,
                              const std::string& base_dir) {
    ExperimentConfig cfg;
    cfg.end_line = 1 + static_cast<long>(std::count(text.begin(), text.end(), '\n'));
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg, e.mark.line + 1);
    }
    if (!root.IsNull() && !root.IsMap()) throw ConfigError("line 1: configuration must be a key: value mapping", 1);

    Pending pend;
    const auto table = handlers(pend);
    std::map<std::string, long> seen;
    auto apply = [&](const std::string& key, const YAML::Node& value, long line) {
        const auto it = table.find(key);
        if (it == table.end()) fail(line, key, "is not a recognized key");
        it->second(cfg, value, line);
        seen[key] = line;
    };
    if (root.IsMap()) {
        for (const auto& kv : root) {
            const long line = kv.first.Mark().line + 1;
            const std::string key = kv.first.as<std::string>();
            if (seen.count(key)) fail(line, key, "is duplicated (first at line " + std::to_string(seen[key]) + ")");
            apply(key, kv.second, line);
        }
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("command-line override '" + o + "' must be key=value", 0);
        YAML::Node value;
        try {
            value = YAML::Load(o.substr(eq + 1));
        } catch (const YAML::Exception& e) {
            throw ConfigError("command-line override '" + o + "': " + e.what(), 0);
        }
        apply(o.substr(0, eq), value, 0);
    }

    for (const char* k : {"beta", "c", "c_n", "gamma"})
        if (!seen.count(k)) cfg.missing.push_back(k);
    if (!pend.beta.empty() || !pend.c.empty()) {
        if (pend.beta.size() != pend.c.size())
            fail(std::max(pend.beta_line, pend.c_line), "c", "must have one entry per beta (" +
                                                             std::to_string(pend.beta.size()) + " betas, " +
                                                             std::to_string(pend.c.size()) + " payoffs)");
        cfg.params.behaviors.clear();
        for (std::size_t j = 0; j < pend.beta.size(); ++j) cfg.params.behaviors.push_back({pend.beta[j], pend.c[j]});
    }
    cfg.has_model = cfg.missing.empty();
    if (cfg.has_model) {
        try {
            cfg.params.validate();
        } catch (const PreconditionError& e) {
            throw ConfigError("line " + std::to_string(pend.beta_line) + ": invalid model parameters: " + e.what(),
                              pend.beta_line);
        }
        if (!cfg.params.u_max) cfg.params.u_max = default_u_max(cfg.params);
    }
    if (cfg.alpha_low > cfg.alpha_high) {
        const long l = seen.count("alpha_low") ? seen["alpha_low"] : 0;
        fail(l, "alpha_low", "must not exceed alpha_high");
    }
    if (!cfg.x0.empty() && cfg.has_model && cfg.x0.size() != cfg.params.size())
        fail(seen["x0"], "x0", "must have one entry per behavior");
    cfg.responses = resolve(base_dir, cfg.responses);
    cfg.choices = resolve(base_dir, cfg.choices);
    cfg.series = resolve(base_dir, cfg.series);
    return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file '" + path + "'", 0);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto dir = std::filesystem::path(path).parent_path();
    return parse_config(ss.str(), overrides, dir.empty() ? "." : dir.string());
}

} // namespace epib
