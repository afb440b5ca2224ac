#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "decoding.hpp"
#include "errors.hpp"
#include "exact.hpp"
#include "exponents.hpp"
#include "montecarlo.hpp"
#include "noise.hpp"
#include "pointprocess.hpp"
#include "trials.hpp"

namespace palmexp {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

struct NoiseConfig {
    std::string kind = "wgn";
    double sigma = 1.0;
    double a = 0.0;
    double sigma_eps = 1.0;
    int max_dim = 256;
};

struct CodebookConfig {
    std::string kind = "poisson";
    // Matern exclusion slack: the exclusion radius is (alpha - epsilon) in noise units.
    double epsilon = 0.01;
    // Grid log-intensity per dimension.
    double R = 0.0;
};

struct DecoderConfig {
    std::string kind = "mle";
    double delta = 0.2;
    std::optional<NoiseConfig> design;
};

struct SweepConfig {
    // "n", "alpha" or "P".
    std::string axis;
    std::vector<double> values;
};

struct McConfig {
    std::uint64_t trials = 10000;
    std::uint64_t seed = 1;
    std::string mode = "reduced";
    std::uint64_t batch_size = 1024;
    unsigned threads = 1;
};

struct ShannonConfig {
    double p_or_a = 10.0;
    std::string rate_form = "entropy-power";
};

struct OutputConfig {
    std::string path;
    std::string format = "csv";
};

struct ExperimentConfig {
    std::string command;
    NoiseConfig noise;
    CodebookConfig codebook;
    DecoderConfig decoder;
    SweepConfig sweep;
    std::optional<int> n;
    std::optional<double> alpha;
    McConfig mc;
    ShannonConfig shannon;
    OutputConfig output;
};

inline const std::vector<std::string>& experiment_commands() {
    static const std::vector<std::string> names{"exponent", "pe-exact", "pe-mc", "capacity", "shannon-map"};
    return names;
}

// CSV columns of each command. Changing them requires a schema version bump.
inline const std::vector<std::string>& output_columns(const std::string& command) {
    static const std::vector<std::string> exponent{"alpha", "exponent", "minimizer", "branch", "method", "model"};
    static const std::vector<std::string> pe_exact{"n", "alpha", "log_pe", "minus_log_pe_over_n", "method"};
    static const std::vector<std::string> pe_mc{"n",      "alpha",  "mean",   "se",         "ci_lo",
                                                "ci_hi",  "trials", "edge_events", "mode"};
    static const std::vector<std::string> capacity{"P", "lower", "upper", "gap", "model"};
    static const std::vector<std::string> shannon{"rate", "exponent_lower_bound", "alpha", "P_or_A"};
    if (command == "exponent") return exponent;
    if (command == "pe-exact") return pe_exact;
    if (command == "pe-mc") return pe_mc;
    if (command == "capacity") return capacity;
    if (command == "shannon-map") return shannon;
    throw ConfigurationError("unknown command '" + command + "'");
}

inline NoiseModel make_noise(const NoiseConfig& c) {
    if (c.kind == "wgn") return WhiteGaussian(c.sigma);
    if (c.kind == "symexp") return WhiteSymExp(c.sigma);
    if (c.kind == "uniform") return WhiteUniform(c.sigma);
    if (c.kind == "cgn-flat") return ColoredGaussian::flat(c.sigma, c.max_dim);
    if (c.kind == "cgn-ar1") return ColoredGaussian::ar1(c.a, c.sigma_eps, c.max_dim);
    if (c.kind == "markov-ar1") return MarkovGaussianAR1(c.a, c.sigma_eps);
    throw ConfigurationError("unknown noise kind '" + c.kind + "'");
}

namespace detail {

inline std::string pointer_join(const std::string& base, const std::string& key) {
    std::string escaped;
    for (char ch : key) {
        if (ch == '~') escaped += "~0";
        else if (ch == '/') escaped += "~1";
        else escaped += ch;
    }
    return base + "/" + escaped;
}

inline std::string pointer_join(const std::string& base, std::size_t index) { return base + "/" + std::to_string(index); }

// Collects every problem in a configuration, each tagged with a JSON pointer.
class ConfigReader {
  public:
    std::vector<std::string> errors;

    void fail(const std::string& ptr, const std::string& msg) { errors.push_back((ptr.empty() ? "/" : ptr) + ": " + msg); }

    void check(bool ok, const std::string& ptr, const std::string& msg) {
        if (!ok) fail(ptr, msg);
    }

    bool object(const Json& j, const std::string& ptr) {
        if (j.is_object()) return true;
        fail(ptr, "expected an object");
        return false;
    }

    void allow_keys(const Json& j, const std::string& ptr, std::initializer_list<const char*> keys) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            bool known = false;
            for (const char* k : keys) known = known || it.key() == k;
            if (!known) fail(pointer_join(ptr, it.key()), "unknown key");
        }
    }

    bool number(const Json& obj, const std::string& ptr, const char* key, double& out) {
        if (!obj.contains(key)) return false;
        const Json& v = obj[key];
        if (!v.is_number()) {
            fail(pointer_join(ptr, key), "expected a number");
            return false;
        }
        out = v.get<double>();
        return true;
    }

    bool integer(const Json& obj, const std::string& ptr, const char* key, std::int64_t& out) {
        if (!obj.contains(key)) return false;
        const Json& v = obj[key];
        if (!v.is_number_integer()) {
            fail(pointer_join(ptr, key), "expected an integer");
            return false;
        }
        out = v.get<std::int64_t>();
        return true;
    }

    bool text(const Json& obj, const std::string& ptr, const char* key, std::string& out) {
        if (!obj.contains(key)) return false;
        const Json& v = obj[key];
        if (!v.is_string()) {
            fail(pointer_join(ptr, key), "expected a string");
            return false;
        }
        out = v.get<std::string>();
        return true;
    }

    void choice(const std::string& value, const std::string& ptr, std::initializer_list<const char*> allowed) {
        std::string list;
        for (const char* a : allowed) {
            if (value == a) return;
            list += list.empty() ? a : std::string(", ") + a;
        }
        fail(ptr, "'" + value + "' is not one of " + list);
    }
};

inline NoiseConfig read_noise(ConfigReader& r, const Json& j, const std::string& ptr) {
    NoiseConfig c;
    if (!r.object(j, ptr)) return c;
    r.allow_keys(j, ptr, {"kind", "sigma", "a", "sigma_eps", "max_dim"});
    if (!r.text(j, ptr, "kind", c.kind)) r.fail(pointer_join(ptr, "kind"), "required");
    r.choice(c.kind, pointer_join(ptr, "kind"), {"wgn", "symexp", "uniform", "cgn-flat", "cgn-ar1", "markov-ar1"});
    r.number(j, ptr, "sigma", c.sigma);
    r.number(j, ptr, "a", c.a);
    r.number(j, ptr, "sigma_eps", c.sigma_eps);
    std::int64_t max_dim = c.max_dim;
    if (r.integer(j, ptr, "max_dim", max_dim)) {
        r.check(max_dim >= 1 && max_dim <= 4096, pointer_join(ptr, "max_dim"), "must be in [1, 4096]");
        c.max_dim = static_cast<int>(std::clamp<std::int64_t>(max_dim, 1, 4096));
    }
    const bool ar1 = c.kind == "cgn-ar1" || c.kind == "markov-ar1";
    if (ar1) {
        r.check(j.contains("a"), pointer_join(ptr, "a"), "required for " + c.kind);
        r.check(std::abs(c.a) < 1.0, pointer_join(ptr, "a"), "must satisfy |a| < 1");
        r.check(c.sigma_eps > 0.0 && std::isfinite(c.sigma_eps), pointer_join(ptr, "sigma_eps"), "must be positive");
    } else {
        r.check(c.sigma > 0.0 && std::isfinite(c.sigma), pointer_join(ptr, "sigma"), "must be positive");
    }
    return c;
}

inline std::optional<NoiseModel> build_noise(ConfigReader& r, const NoiseConfig& c, const std::string& ptr) {
    try {
        return make_noise(c);
    } catch (const std::exception& e) {
        r.fail(ptr, e.what());
        return std::nullopt;
    }
}

inline void read_sweep(ConfigReader& r, const Json& j, const std::string& ptr, SweepConfig& out) {
    if (!r.object(j, ptr)) return;
    r.allow_keys(j, ptr, {"n_list", "alpha_list", "alpha_grid", "P_list"});
    int axes = 0;
    for (const char* k : {"n_list", "alpha_list", "alpha_grid", "P_list"}) axes += j.contains(k) ? 1 : 0;
    if (axes != 1) {
        r.fail(ptr, "exactly one of n_list, alpha_list, alpha_grid, P_list is required");
        return;
    }
    auto list = [&](const char* key, const char* axis, bool integers) {
        const std::string p = pointer_join(ptr, key);
        const Json& v = j[key];
        out.axis = axis;
        if (!v.is_array() || v.empty()) {
            r.fail(p, "expected a nonempty array");
            return;
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (integers ? !v[i].is_number_integer() : !v[i].is_number()) {
                r.fail(pointer_join(p, i), integers ? "expected an integer" : "expected a number");
                continue;
            }
            out.values.push_back(v[i].get<double>());
        }
    };
    if (j.contains("n_list")) list("n_list", "n", true);
    if (j.contains("alpha_list")) list("alpha_list", "alpha", false);
    if (j.contains("P_list")) list("P_list", "P", false);
    if (j.contains("alpha_grid")) {
        const std::string p = pointer_join(ptr, "alpha_grid");
        const Json& g = j["alpha_grid"];
        out.axis = "alpha";
        if (!r.object(g, p)) return;
        r.allow_keys(g, p, {"from", "to", "points"});
        double from = 0.0, to = 0.0;
        std::int64_t points = 0;
        const bool ok = r.number(g, p, "from", from) & r.number(g, p, "to", to) & r.integer(g, p, "points", points);
        if (!ok) {
            r.fail(p, "from, to and points are required");
            return;
        }
        r.check(points >= 1 && points <= 1000000, pointer_join(p, "points"), "must be in [1, 1e6]");
        r.check(to >= from, pointer_join(p, "to"), "must be >= from");
        if (points < 1 || points > 1000000 || to < from) return;
        for (std::int64_t i = 0; i < points; ++i)
            out.values.push_back(points == 1 ? from : from + (to - from) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
}

inline std::string sweep_pointer(const SweepConfig& s) {
    if (s.axis == "n") return "/sweep/n_list";
    if (s.axis == "P") return "/sweep/P_list";
    return "/sweep/alpha_list";
}

} // namespace detail

inline Json to_json(const NoiseConfig& c) {
    Json j{{"kind", c.kind}};
    if (c.kind == "cgn-ar1" || c.kind == "markov-ar1") {
        j["a"] = c.a;
        j["sigma_eps"] = c.sigma_eps;
    } else {
        j["sigma"] = c.sigma;
    }
    if (c.kind.rfind("cgn", 0) == 0) j["max_dim"] = c.max_dim;
    return j;
}

// Resolved configuration with every default filled in.
inline Json to_json(const ExperimentConfig& c) {
    Json j;
    j["command"] = c.command;
    j["noise"] = to_json(c.noise);
    j["codebook"] = {{"kind", c.codebook.kind}, {"epsilon", c.codebook.epsilon}, {"R", c.codebook.R}};
    Json dec{{"kind", c.decoder.kind}, {"delta", c.decoder.delta}};
    if (c.decoder.design) dec["design"] = to_json(*c.decoder.design);
    j["decoder"] = dec;
    j["sweep"] = {{"axis", c.sweep.axis}, {"values", c.sweep.values}};
    j["n"] = c.n ? Json(*c.n) : Json(nullptr);
    j["alpha"] = c.alpha ? Json(*c.alpha) : Json(nullptr);
    j["mc"] = {{"trials", c.mc.trials}, {"seed", c.mc.seed},           {"mode", c.mc.mode},
               {"batch_size", c.mc.batch_size}, {"threads", c.mc.threads}};
    j["shannon"] = {{"P_or_A", c.shannon.p_or_a}, {"rate_form", c.shannon.rate_form}};
    j["output"] = {{"path", c.output.path}, {"format", c.output.format}};
    return j;
}

struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> out;
};

// Parses and fully validates a configuration. All problems are reported at
// once in a ConfigurationError, one JSON pointer per line.
inline ExperimentConfig parse_config(const Json& j, const std::string& command, const ConfigOverrides& overrides = {}) {
    detail::ConfigReader r;
    ExperimentConfig c;
    c.command = command;
    bool known_command = false;
    for (const auto& name : experiment_commands()) known_command = known_command || name == command;
    if (!known_command) throw ConfigurationError("unknown command '" + command + "'");
    if (!r.object(j, "")) throw ConfigurationError(r.errors.front());
    r.allow_keys(j, "", {"command", "noise", "codebook", "decoder", "sweep", "n", "alpha", "mc", "shannon", "output"});

    std::string declared;
    if (r.text(j, "", "command", declared)) r.check(declared == command, "/command", "does not match the subcommand '" + command + "'");

    if (j.contains("noise")) c.noise = detail::read_noise(r, j["noise"], "/noise");
    else r.fail("/noise", "required");

    if (j.contains("codebook") && r.object(j["codebook"], "/codebook")) {
        const Json& cb = j["codebook"];
        r.allow_keys(cb, "/codebook", {"kind", "epsilon", "R"});
        r.text(cb, "/codebook", "kind", c.codebook.kind);
        r.number(cb, "/codebook", "epsilon", c.codebook.epsilon);
        r.number(cb, "/codebook", "R", c.codebook.R);
    }
    if (j.contains("decoder") && r.object(j["decoder"], "/decoder")) {
        const Json& d = j["decoder"];
        r.allow_keys(d, "/decoder", {"kind", "delta", "design"});
        r.text(d, "/decoder", "kind", c.decoder.kind);
        r.number(d, "/decoder", "delta", c.decoder.delta);
        if (d.contains("design")) c.decoder.design = detail::read_noise(r, d["design"], "/decoder/design");
    }
    if (j.contains("sweep")) detail::read_sweep(r, j["sweep"], "/sweep", c.sweep);
    else r.fail("/sweep", "required");

    std::int64_t n = 0;
    if (r.integer(j, "", "n", n)) {
        r.check(n >= 1 && n <= 1000000, "/n", "must be in [1, 1e6]");
        c.n = static_cast<int>(std::clamp<std::int64_t>(n, 1, 1000000));
    }
    double alpha = 0.0;
    if (r.number(j, "", "alpha", alpha)) c.alpha = alpha;

    if (j.contains("mc") && r.object(j["mc"], "/mc")) {
        const Json& mc = j["mc"];
        r.allow_keys(mc, "/mc", {"trials", "seed", "mode", "batch_size", "threads"});
        std::int64_t v = 0;
        if (r.integer(mc, "/mc", "trials", v)) {
            r.check(v >= 1, "/mc/trials", "must be >= 1");
            c.mc.trials = static_cast<std::uint64_t>(std::max<std::int64_t>(v, 1));
        }
        if (mc.contains("seed")) {
            const Json& seed = mc["seed"];
            if (seed.is_number_unsigned() || (seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
                c.mc.seed = seed.get<std::uint64_t>();
            else r.fail("/mc/seed", "expected a nonnegative integer");
        }
        r.text(mc, "/mc", "mode", c.mc.mode);
        if (r.integer(mc, "/mc", "batch_size", v)) {
            r.check(v >= 1, "/mc/batch_size", "must be >= 1");
            c.mc.batch_size = static_cast<std::uint64_t>(std::max<std::int64_t>(v, 1));
        }
        if (r.integer(mc, "/mc", "threads", v)) {
            r.check(v >= 0 && v <= 1024, "/mc/threads", "must be in [0, 1024]");
            c.mc.threads = static_cast<unsigned>(std::clamp<std::int64_t>(v, 0, 1024));
        }
    }
    if (j.contains("shannon") && r.object(j["shannon"], "/shannon")) {
        const Json& s = j["shannon"];
        r.allow_keys(s, "/shannon", {"P_or_A", "rate_form"});
        r.number(s, "/shannon", "P_or_A", c.shannon.p_or_a);
        r.text(s, "/shannon", "rate_form", c.shannon.rate_form);
    }
    if (j.contains("output") && r.object(j["output"], "/output")) {
        const Json& o = j["output"];
        r.allow_keys(o, "/output", {"path", "format"});
        r.text(o, "/output", "path", c.output.path);
        r.text(o, "/output", "format", c.output.format);
    }

    if (overrides.seed) c.mc.seed = *overrides.seed;
    if (overrides.threads) c.mc.threads = *overrides.threads;
    if (overrides.out) c.output.path = *overrides.out;

    // Semantic checks against the modules' constraints.
    r.choice(c.output.format, "/output/format", {"csv", "json"});
    if (c.output.path.empty()) r.fail("/output/path", "required (or pass --out)");

    const auto noise = detail::build_noise(r, c.noise, "/noise");
    std::optional<NoiseModel> design;
    if (c.decoder.design) design = detail::build_noise(r, *c.decoder.design, "/decoder/design");
    const std::string sweep_ptr = detail::sweep_pointer(c.sweep);
    const bool white = noise && is_white(*noise);
    const bool gaussian_quadrature = c.noise.kind == "wgn" || c.noise.kind == "cgn-flat" || c.noise.kind == "cgn-ar1";

    auto each_value = [&](const std::function<void(double, const std::string&)>& f) {
        for (std::size_t i = 0; i < c.sweep.values.size(); ++i) f(c.sweep.values[i], detail::pointer_join(sweep_ptr, i));
    };
    auto require_axis = [&](std::initializer_list<const char*> axes) {
        if (c.sweep.axis.empty()) return;
        bool ok = false;
        std::string list;
        for (const char* a : axes) {
            ok = ok || c.sweep.axis == a;
            list += list.empty() ? a : std::string(" or ") + a;
        }
        r.check(ok, "/sweep", "command " + command + " sweeps " + list);
    };
    // The (n, alpha) pairs visited by a sweep over n or alpha.
    auto require_fixed = [&]() {
        if (c.sweep.axis == "n") r.check(c.alpha.has_value() || c.codebook.kind == "grid", "/alpha", "required when sweeping n");
        if (c.sweep.axis == "alpha") r.check(c.n.has_value(), "/n", "required when sweeping alpha");
    };
    auto rows = [&]() {
        std::vector<std::pair<int, double>> out;
        for (double v : c.sweep.values) {
            if (c.sweep.axis == "n") out.emplace_back(static_cast<int>(v), c.alpha.value_or(1.0));
            else out.emplace_back(c.n.value_or(1), v);
        }
        return out;
    };
    auto check_n_values = [&]() {
        if (c.sweep.axis == "n")
            each_value([&](double v, const std::string& p) { r.check(v >= 1.0 && v <= 1e6, p, "n must be in [1, 1e6]"); });
        if (c.noise.kind.rfind("cgn", 0) == 0)
            for (auto [rn, ra] : rows()) {
                (void)ra;
                r.check(rn <= c.noise.max_dim, c.sweep.axis == "n" ? sweep_ptr : "/n",
                        "n=" + std::to_string(rn) + " exceeds /noise/max_dim");
            }
    };

    if (command == "exponent") {
        require_axis({"alpha"});
        r.choice(c.codebook.kind, "/codebook/kind", {"poisson", "matern", "poltyrev"});
        each_value([&](double v, const std::string& p) { r.check(v >= 1.0 && std::isfinite(v), p, "alpha must be >= 1"); });
        r.check(c.noise.kind != "markov-ar1", "/noise/kind", "markov-ar1 has no exponent support");
        if (c.codebook.kind == "matern")
            r.check(c.noise.kind == "wgn" || c.noise.kind == "symexp", "/noise/kind", "Matern exponent needs wgn or symexp");
        if (c.codebook.kind == "poltyrev") r.check(c.noise.kind == "wgn", "/noise/kind", "Poltyrev exponent needs wgn");
    } else if (command == "pe-exact") {
        require_axis({"n", "alpha"});
        require_fixed();
        check_n_values();
        r.choice(c.codebook.kind, "/codebook/kind", {"poisson", "matern", "grid"});
        r.choice(c.decoder.kind, "/decoder/kind", {"mle", "typicality", "mismatched"});
        if (c.codebook.kind == "grid") {
            r.check(c.noise.kind == "wgn", "/noise/kind", "grid codebook needs wgn");
            r.check(c.sweep.axis == "n", "/sweep", "grid codebook sweeps n_list");
            r.check(c.decoder.kind == "mle", "/decoder/kind", "grid codebook uses the mle decoder");
        } else {
            each_value([&](double v, const std::string& p) {
                if (c.sweep.axis == "alpha") r.check(v > 0.0 && std::isfinite(v), p, "alpha must be positive");
            });
            if (c.alpha) r.check(*c.alpha > 0.0 && std::isfinite(*c.alpha), "/alpha", "must be positive");
        }
        if (c.codebook.kind == "matern") {
            r.check(c.decoder.kind == "mle", "/decoder/kind", "Matern bound uses the mle decoder");
            r.check(c.noise.kind == "wgn" || c.noise.kind == "symexp", "/noise/kind", "Matern bound needs wgn or symexp");
            r.check(c.codebook.epsilon > 0.0, "/codebook/epsilon", "must be positive");
            for (auto [rn, ra] : rows()) {
                (void)rn;
                r.check(ra - c.codebook.epsilon > 1.0, c.sweep.axis == "alpha" ? sweep_ptr : "/alpha",
                        "Matern bound needs alpha - epsilon > 1");
            }
        }
        if (c.codebook.kind == "poisson") {
            if (c.decoder.kind == "mle")
                r.check(gaussian_quadrature, "/noise/kind", "Poisson MLE quadrature needs wgn, cgn-flat or cgn-ar1");
            if (c.decoder.kind == "typicality") {
                r.check(white, "/noise/kind", "typicality bound needs white noise");
                r.check(c.decoder.delta > 0.0, "/decoder/delta", "must be positive");
            }
            if (c.decoder.kind == "mismatched") {
                r.check(c.decoder.design.has_value(), "/decoder/design", "required for the mismatched decoder");
                if (design) r.check(has_level_volume(*design), "/decoder/design/kind", "needs closed-form level volumes");
            }
        }
    } else if (command == "pe-mc") {
        require_axis({"n", "alpha"});
        require_fixed();
        check_n_values();
        r.choice(c.codebook.kind, "/codebook/kind", {"poisson", "matern", "grid"});
        r.choice(c.decoder.kind, "/decoder/kind", {"mle", "typicality", "mismatched"});
        r.choice(c.mc.mode, "/mc/mode", {"explicit", "reduced", "mass-transport"});
        if (c.decoder.kind == "typicality") {
            r.check(c.decoder.delta > 0.0, "/decoder/delta", "must be positive");
            r.check(c.noise.kind != "markov-ar1", "/noise/kind", "typicality decoding does not support markov-ar1");
        }
        if (c.decoder.kind == "mismatched")
            r.check(c.decoder.design.has_value(), "/decoder/design", "required for the mismatched decoder");
        if (c.mc.mode == "reduced") {
            r.check(c.codebook.kind == "poisson", "/mc/mode", "reduced mode needs the poisson codebook");
            r.check(c.decoder.kind == "mle", "/mc/mode", "reduced mode needs the mle decoder");
            if (noise) r.check(has_level_volume(*noise), "/mc/mode", "reduced mode needs closed-form level volumes");
        }
        if (c.mc.mode == "mass-transport") r.check(c.decoder.kind == "mle", "/mc/mode", "mass transport uses the mle decoder");
        if (c.codebook.kind == "matern") r.check(c.codebook.epsilon >= 0.0, "/codebook/epsilon", "must be nonnegative");
        if (noise && r.errors.empty()) {
            // Window sizes and Matern acceptance are checked before any simulation.
            const double sd = std::sqrt(noise_variance(*noise));
            const double h = entropy_rate(*noise);
            for (auto [rn, ra] : rows()) {
                const std::string p = c.sweep.axis == "n" ? sweep_ptr : "/alpha";
                if (c.codebook.kind != "grid" && !(ra > 0.0)) {
                    r.fail(c.sweep.axis == "alpha" ? sweep_ptr : "/alpha", "alpha must be positive");
                    continue;
                }
                const double log_lambda = c.codebook.kind == "grid" ? rn * c.codebook.R : -rn * (h + std::log(ra));
                const double r_excl = c.codebook.kind == "matern" ? (ra - c.codebook.epsilon) * sd * std::sqrt(rn * 1.0) : 0.0;
                if (c.codebook.kind == "matern" && !(r_excl > 0.0)) {
                    r.fail("/codebook/epsilon", "alpha - epsilon must be positive");
                    continue;
                }
                const WindowSpec w(rn, default_window_radius(rn, sd, r_excl, c.codebook.kind == "grid" ? std::optional<double>(c.codebook.R) : std::nullopt));
                if (c.mc.mode != "reduced" && !(expected_window_count(w, log_lambda) <= kMaxExpectedPoints))
                    r.fail(p, "n=" + std::to_string(rn) + " puts more than 1e8 expected points in the window");
                if (c.codebook.kind == "matern") {
                    const PalmScenario s(PalmKind::Matern1Palm, rn, log_lambda, r_excl, w);
                    if (matern_palm_log_acceptance(s) < std::log(kMinMaternAcceptance))
                        r.fail(p, "n=" + std::to_string(rn) + ": Matern Palm acceptance is below 1e-6");
                }
            }
        }
    } else if (command == "capacity") {
        require_axis({"P"});
        each_value([&](double v, const std::string& p) { r.check(v > 0.0 && std::isfinite(v), p, "P must be positive"); });
    } else if (command == "shannon-map") {
        require_axis({"alpha"});
        each_value([&](double v, const std::string& p) { r.check(v >= 1.0 && std::isfinite(v), p, "alpha must be >= 1"); });
        r.choice(c.codebook.kind, "/codebook/kind", {"poisson", "matern"});
        r.choice(c.shannon.rate_form, "/shannon/rate_form", {"entropy-power", "awgn-snr"});
        r.check(c.shannon.p_or_a > 0.0 && std::isfinite(c.shannon.p_or_a), "/shannon/P_or_A", "must be positive");
        r.check(c.noise.kind != "markov-ar1", "/noise/kind", "markov-ar1 has no exponent support");
        if (c.shannon.rate_form == "awgn-snr") r.check(c.noise.kind == "wgn", "/noise/kind", "awgn-snr rate form needs wgn");
        if (c.codebook.kind == "matern")
            r.check(c.noise.kind == "wgn" || c.noise.kind == "symexp", "/noise/kind", "Matern exponent needs wgn or symexp");
    }

    if (!r.errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : r.errors) msg += "\n  " + e;
        throw ConfigurationError(msg);
    }
    return c;
}

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    std::vector<double> row_seconds;
    std::size_t dropped = 0;
};

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_cell(const Cell& c) {
    if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    const auto& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

inline void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
        os << "\n";
    }
}

inline Json table_json(const Table& t) {
    Json rows = Json::array();
    for (const auto& row : t.rows) {
        Json obj = Json::object();
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) obj[t.columns[i]] = std::isfinite(v) ? Json(v) : Json(format_double(v));
                    else obj[t.columns[i]] = v;
                },
                row[i]);
        }
        rows.push_back(obj);
    }
    return rows;
}

namespace detail {

inline DecoderSpec make_decoder(const ExperimentConfig& c) {
    if (c.decoder.kind == "typicality") return TypicalityDecoder{c.decoder.delta};
    if (c.decoder.kind == "mismatched") return MismatchedDecoder{make_noise(*c.decoder.design)};
    return MleDecoder{};
}

inline RunOptions run_options(const McConfig& mc) {
    RunOptions o;
    o.trials = mc.trials;
    o.seed = mc.seed;
    o.threads = mc.threads;
    o.batch_size = mc.batch_size;
    return o;
}

inline std::string row_label(const ExperimentConfig& c, double value) {
    std::ostringstream os;
    os.precision(10);
    os << c.sweep.axis << "=" << value;
    if (c.sweep.axis == "n" && c.alpha) os << ", alpha=" << *c.alpha;
    if (c.sweep.axis == "alpha" && c.n) os << ", n=" << *c.n;
    return os.str();
}

inline std::vector<Cell> exponent_row(const ExperimentConfig& c, const NoiseModel& m, double alpha) {
    const ExponentResult r = c.codebook.kind == "poltyrev"
                                 ? poltyrev_exponent(alpha)
                                 : codebook_exponent(m, alpha, c.codebook.kind == "matern" ? CodebookKind::Matern : CodebookKind::Poisson);
    return {alpha, r.exponent, r.minimizer, r.branch, std::string(method_name(r.method)), model_name(m)};
}

inline std::vector<Cell> pe_exact_row(const ExperimentConfig& c, const NoiseModel& m, int n, double alpha) {
    double log_pe = 0.0;
    std::string method;
    if (c.codebook.kind == "grid") {
        const double sigma = std::get<WhiteGaussian>(m).sigma;
        log_pe = log1m_exp(grid_log_ps(n, c.codebook.R, sigma));
        alpha = std::exp(-c.codebook.R - entropy_rate(m));
        method = "grid_exact";
    } else if (c.codebook.kind == "matern") {
        log_pe = matern_mle_log_pe_bound(m, n, alpha, c.codebook.epsilon);
        method = "matern_bound";
    } else if (c.decoder.kind == "typicality") {
        log_pe = typicality_log_pe_bound(m, n, poisson_log_intensity(m, n, alpha) / n, c.decoder.delta);
        method = "typicality_bound";
    } else if (c.decoder.kind == "mismatched") {
        const Estimate e = mismatched_pe_bound(make_noise(*c.decoder.design), m, n, alpha, run_options(c.mc));
        log_pe = e.mean > 0.0 ? std::log(e.mean) : kNegInf;
        method = "mismatched_bound";
    } else {
        log_pe = poisson_mle_log_pe(m, n, alpha).log_pe;
        method = "poisson_mle";
    }
    return {std::int64_t{n}, alpha, log_pe, -log_pe / n, method};
}

inline std::vector<Cell> pe_mc_row(const ExperimentConfig& c, const NoiseModel& m, int n, double alpha) {
    const double sd = std::sqrt(noise_variance(m));
    const bool grid = c.codebook.kind == "grid";
    const double log_lambda = grid ? n * c.codebook.R : poisson_log_intensity(m, n, alpha);
    if (grid) alpha = std::exp(-c.codebook.R - entropy_rate(m));
    const double r_excl = c.codebook.kind == "matern" ? (alpha - c.codebook.epsilon) * sd * std::sqrt(static_cast<double>(n)) : 0.0;
    const WindowSpec w(n, default_window_radius(n, sd, r_excl, grid ? std::optional<double>(c.codebook.R) : std::nullopt));
    const PalmKind kind = grid ? PalmKind::GridPalm : c.codebook.kind == "matern" ? PalmKind::Matern1Palm : PalmKind::PoissonSlivnyak;
    const PalmScenario s(kind, n, log_lambda, r_excl, w);
    const RunOptions o = run_options(c.mc);
    const Estimate e = c.mc.mode == "mass-transport"
                           ? estimate_pe_mass_transport(s, m, o)
                           : estimate_pe(s, make_decoder(c), m, c.mc.mode == "reduced" ? McMode::Reduced : McMode::Explicit, o);
    return {std::int64_t{n},
            alpha,
            e.mean,
            e.std_error,
            e.ci_lo,
            e.ci_hi,
            static_cast<std::int64_t>(e.trials),
            static_cast<std::int64_t>(e.edge_events),
            c.mc.mode};
}

} // namespace detail

// Computes every row of the experiment. A failing row aborts the sweep with
// the row identified in the error message.
inline Table run_experiment(const ExperimentConfig& c) {
    Table t;
    t.columns = output_columns(c.command);
    const NoiseModel m = make_noise(c.noise);
    using Clock = std::chrono::steady_clock;

    if (c.command == "shannon-map") {
        struct Timed {
            CurveRow row;
            double seconds;
        };
        std::vector<Timed> rows;
        const CodebookKind kind = c.codebook.kind == "matern" ? CodebookKind::Matern : CodebookKind::Poisson;
        const RateForm form = c.shannon.rate_form == "awgn-snr" ? RateForm::AwgnSnr : RateForm::EntropyPower;
        for (std::size_t i = 0; i < c.sweep.values.size(); ++i) {
            const double a = c.sweep.values[i];
            const auto start = Clock::now();
            try {
                const auto curve = shannon_exponent_curve(m, c.shannon.p_or_a, std::span<const double>(&a, 1), kind, form);
                const double secs = std::chrono::duration<double>(Clock::now() - start).count();
                t.dropped += curve.dropped;
                for (const auto& r : curve.rows) rows.push_back({r, secs});
            } catch (const std::exception& e) {
                throw NumericalError("row " + std::to_string(i) + " (" + detail::row_label(c, a) + "): " + e.what());
            }
        }
        std::stable_sort(rows.begin(), rows.end(), [](const Timed& x, const Timed& y) { return x.row.x < y.row.x; });
        for (const auto& r : rows) {
            t.rows.push_back({r.row.x, r.row.exponent, r.row.alpha, c.shannon.p_or_a});
            t.row_seconds.push_back(r.seconds);
        }
        return t;
    }

    for (std::size_t i = 0; i < c.sweep.values.size(); ++i) {
        const double v = c.sweep.values[i];
        const auto start = Clock::now();
        try {
            if (c.command == "exponent") {
                t.rows.push_back(detail::exponent_row(c, m, v));
            } else if (c.command == "capacity") {
                const auto b = shannon_capacity_bounds(m, v);
                t.rows.push_back({v, b.lower, b.upper, b.upper - b.lower, model_name(m)});
            } else {
                const int n = c.sweep.axis == "n" ? static_cast<int>(v) : *c.n;
                const double alpha = c.sweep.axis == "alpha" ? v : c.alpha.value_or(kNaN);
                t.rows.push_back(c.command == "pe-exact" ? detail::pe_exact_row(c, m, n, alpha) : detail::pe_mc_row(c, m, n, alpha));
            }
        } catch (const std::exception& e) {
            throw NumericalError("row " + std::to_string(i) + " (" + detail::row_label(c, v) + "): " + e.what());
        }
        t.row_seconds.push_back(std::chrono::duration<double>(Clock::now() - start).count());
    }
    return t;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline Json sidecar_json(const ExperimentConfig& c, const Table& t) {
    double total = 0.0;
    for (double s : t.row_seconds) total += s;
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["version"] = kVersion;
    j["command"] = c.command;
    j["columns"] = t.columns;
    j["config"] = to_json(c);
    j["rows"] = t.rows.size();
    j["dropped_rows"] = t.dropped;
    j["row_wall_clock_seconds"] = t.row_seconds;
    j["total_wall_clock_seconds"] = total;
    j["timestamp"] = utc_timestamp();
    return j;
}

namespace detail {

// Writes through a temporary file so a failed run leaves no partial output.
inline void write_atomically(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw ConfigurationError("cannot open " + tmp.string() + " for writing");
        body(os);
        os.flush();
        if (!os) {
            os.close();
            std::filesystem::remove(tmp);
            throw ConfigurationError("failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

} // namespace detail

inline void write_table(std::ostream& os, const ExperimentConfig& c, const Table& t) {
    if (c.output.format == "json") os << table_json(t).dump(2) << "\n";
    else write_csv(os, t);
}

// Writes the table and its `<path>.meta.json` sidecar. A path of "-" writes the
// table to `stdout_stream` and skips the sidecar.
inline void write_outputs(const ExperimentConfig& c, const Table& t, std::ostream& stdout_stream) {
    if (c.output.path == "-") {
        write_table(stdout_stream, c, t);
        return;
    }
    const std::filesystem::path out(c.output.path);
    std::filesystem::path meta = out;
    meta += ".meta.json";
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    detail::write_atomically(out, [&](std::ostream& os) { write_table(os, c, t); });
    detail::write_atomically(meta, [&](std::ostream& os) { os << sidecar_json(c, t).dump(2) << "\n"; });
}

inline Json load_json_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigurationError("cannot read config file " + path);
    try {
        return Json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigurationError("config file " + path + " is not valid JSON: " + e.what());
    }
}

} // namespace palmexp
