#include "tamesde/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tamesde/expr.hpp"

namespace tamesde {

namespace {

[[noreturn]] void key_error(const std::string& key, const std::string& what) {
    throw std::invalid_argument("config key '" + key + "': " + what);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

double parse_double(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || errno == ERANGE)
        key_error(key, "expected a number, got '" + value + "'");
    return v;
}

long long parse_int(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(begin, &end, 10);
    if (end == begin || *end != '\0' || errno == ERANGE)
        key_error(key, "expected an integer, got '" + value + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    errno = 0;
    if (!value.empty() && value[0] == '-')
        key_error(key, "expected a nonnegative integer, got '" + value + "'");
    const unsigned long long v = std::strtoull(begin, &end, 0);
    if (end == begin || *end != '\0' || errno == ERANGE)
        key_error(key, "expected a nonnegative integer, got '" + value + "'");
    return v;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        std::size_t comma = value.find(',', start);
        if (comma == std::string::npos) comma = value.size();
        const std::string item{trim(value.substr(start, comma - start))};
        if (item.empty()) key_error(key, "empty list entry");
        const long long v = parse_int(key, item);
        if (v < -1000 || v > 1000) key_error(key, "entry out of range: " + item);
        out.push_back(static_cast<int>(v));
        start = comma + 1;
        if (comma == value.size()) break;
    }
    if (out.empty()) key_error(key, "expected a comma-separated list");
    return out;
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "problem") {
        cfg.problem = value;
    } else if (key == "problem.drift") {
        cfg.drift_expr = value;
    } else if (key == "problem.diffusion") {
        cfg.diffusion_expr = value;
    } else if (key == "problem.jump") {
        cfg.jump_expr = value;
    } else if (key == "problem.compensator") {
        cfg.compensator_expr = value;
    } else if (key == "problem.x0") {
        cfg.x0 = parse_double(key, value);
        cfg.has_x0 = true;
    } else if (key == "problem.chi") {
        cfg.chi = parse_double(key, value);
        cfg.has_chi = true;
    } else if (key == "horizon.t0") {
        cfg.t0 = parse_double(key, value);
        cfg.has_t0 = true;
    } else if (key == "horizon.t1") {
        cfg.t1 = parse_double(key, value);
        cfg.has_t1 = true;
    } else if (key == "jump.intensity") {
        cfg.jump_intensity = parse_double(key, value);
        cfg.has_intensity = true;
    } else if (key == "jump.mark.law") {
        cfg.mark_law = value;
    } else if (key == "jump.mark.a") {
        cfg.mark_a = parse_double(key, value);
        cfg.has_mark_a = true;
    } else if (key == "jump.mark.b") {
        cfg.mark_b = parse_double(key, value);
        cfg.has_mark_b = true;
    } else if (key == "taming.mode") {
        if (value == "generic_2chi")
            cfg.taming.mode = TamingMode::Generic2Chi;
        else if (value == "deterministic_chi")
            cfg.taming.mode = TamingMode::DeterministicChi;
        else if (value == "sdde")
            cfg.taming.mode = TamingMode::Sdde;
        else if (value == "untamed")
            cfg.taming.mode = TamingMode::Untamed;
        else
            key_error(key,
                      "unknown mode '" + value +
                          "' (generic_2chi | deterministic_chi | sdde | untamed)");
    } else if (key == "taming.chi") {
        cfg.taming.chi = parse_double(key, value);
    } else if (key == "taming.chi1") {
        cfg.taming.chi1 = parse_double(key, value);
    } else if (key == "taming.chi2") {
        cfg.taming.chi2 = parse_double(key, value);
    } else if (key == "run.h_exponents") {
        cfg.h_exponents = parse_int_list(key, value);
    } else if (key == "run.ref_exponent") {
        cfg.ref_exponent = static_cast<int>(parse_int(key, value));
    } else if (key == "run.n_paths") {
        cfg.n_paths = parse_int(key, value);
    } else if (key == "run.master_seed") {
        cfg.master_seed = parse_u64(key, value);
    } else if (key == "run.p") {
        cfg.p = parse_double(key, value);
    } else if (key == "run.n_exponents") {
        cfg.n_exponents = parse_int_list(key, value);
    } else if (key == "run.threads") {
        cfg.threads = static_cast<int>(parse_int(key, value));
    } else if (key == "output.path") {
        cfg.output_path = value;
    } else if (key == "audit.p0") {
        cfg.audit_p0 = parse_double(key, value);
    } else if (key == "audit.L") {
        cfg.audit_L = parse_double(key, value);
    } else if (key == "audit.M") {
        cfg.audit_M = parse_double(key, value);
    } else if (key == "audit.N") {
        cfg.audit_N = parse_double(key, value);
    } else if (key == "audit.radius") {
        cfg.audit_radius = parse_double(key, value);
    } else if (key == "audit.n") {
        cfg.audit_n = parse_int(key, value);
    } else if (key == "audit.samples") {
        cfg.audit_samples = parse_int(key, value);
    } else if (key == "audit.pairs") {
        cfg.audit_pairs = parse_int(key, value);
    } else if (key == "audit.mc_samples") {
        cfg.audit_mc_samples = parse_int(key, value);
    } else if (key == "audit.tolerance") {
        cfg.audit_tolerance = parse_double(key, value);
    } else if (key == "audit.p1") {
        cfg.audit_p1 = parse_double(key, value);
    } else if (key == "audit.C7") {
        cfg.audit_C7 = parse_double(key, value);
    } else if (key == "audit.p8") {
        cfg.audit_p8 = parse_double(key, value);
    } else if (key == "audit.C8") {
        cfg.audit_C8 = parse_double(key, value);
    } else if (key == "audit.C9") {
        cfg.audit_C9 = parse_double(key, value);
    } else {
        throw std::invalid_argument("unknown config key '" + key + "'");
    }
}

}  // namespace

RunConfig parse_config_text(std::string_view text) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        ++line_no;
        std::string_view line = text.substr(start, nl - start);
        const bool last = nl == text.size();
        start = nl + 1;

        const std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (!line.empty()) {
            const std::size_t eq = line.find('=');
            if (eq == std::string_view::npos)
                throw std::invalid_argument(
                    "config line " + std::to_string(line_no) +
                    ": expected 'key = value'");
            const std::string key{trim(line.substr(0, eq))};
            const std::string value{trim(line.substr(eq + 1))};
            if (key.empty())
                throw std::invalid_argument("config line " +
                                            std::to_string(line_no) +
                                            ": empty key");
            if (value.empty())
                throw std::invalid_argument("config line " +
                                            std::to_string(line_no) +
                                            ": empty value for key '" + key + "'");
            if (!seen.insert(key).second)
                throw std::invalid_argument("config line " +
                                            std::to_string(line_no) +
                                            ": duplicate key '" + key + "'");
            apply_key(cfg, key, value);
        }
        if (last) break;
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

RunConfig preset_config(std::string_view name) {
    if (name == "table1-desk")
        return parse_config_text(
            "problem = cubic-jump\n"
            "taming.mode = deterministic_chi\n"
            "taming.chi = 2\n"
            "run.h_exponents = 6,7,8,9,10,11,12\n"
            "run.ref_exponent = 15\n"
            "run.n_paths = 10000\n"
            "run.master_seed = 42\n"
            "run.p = 2\n");
    if (name == "table1-full")
        return parse_config_text(
            "problem = cubic-jump\n"
            "taming.mode = deterministic_chi\n"
            "taming.chi = 2\n"
            "run.h_exponents = 6,7,8,9,10,11,12,13,14,15,16,17,18,19,20\n"
            "run.ref_exponent = 21\n"
            "run.n_paths = 60000\n"
            "run.master_seed = 42\n"
            "run.p = 2\n");
    throw std::invalid_argument("unknown preset '" + std::string(name) +
                                "' (available: table1-desk, table1-full)");
}

std::vector<std::string> preset_names() { return {"table1-desk", "table1-full"}; }

void RunConfig::validate() const {
    const bool inline_problem = problem == "inline";
    if (!inline_problem) {
        bool known = false;
        for (const std::string& name : builtin_problem_names())
            if (name == problem) known = true;
        if (!known)
            throw std::invalid_argument(
                "config key 'problem': unknown problem '" + problem +
                "' (builtins: cubic-jump, or 'inline')");
        if (!drift_expr.empty() || !diffusion_expr.empty() || !jump_expr.empty() ||
            !compensator_expr.empty())
            key_error("problem.drift",
                      "inline coefficient keys conflict with builtin problem '" +
                          problem + "'");
        if (has_intensity || has_mark_a || has_mark_b)
            key_error("jump.intensity",
                      "jump model keys are fixed by builtin problem '" + problem +
                          "'");
    } else {
        if (drift_expr.empty())
            key_error("problem.drift", "missing (required for inline problems)");
        if (diffusion_expr.empty())
            key_error("problem.diffusion",
                      "missing (required for inline problems)");
        if (jump_expr.empty())
            key_error("problem.jump", "missing (required for inline problems)");
        if (!has_intensity)
            key_error("jump.intensity", "missing (required for inline problems)");
        if (!(jump_intensity > 0.0))
            key_error("jump.intensity", "must be > 0");
        if (mark_law != "uniform")
            key_error("jump.mark.law",
                      "unknown mark law '" + mark_law + "' (supported: uniform)");
        if (!has_mark_a) key_error("jump.mark.a", "missing (uniform law bound)");
        if (!has_mark_b) key_error("jump.mark.b", "missing (uniform law bound)");
        if (!(mark_a < mark_b)) key_error("jump.mark.a", "requires a < b");
    }
    if (has_t0 || has_t1) {
        if (!(t0 >= 0.0 && t0 < t1))
            key_error("horizon.t0", "requires 0 <= t0 < t1");
    }
    if (taming.chi < 0.0) key_error("taming.chi", "must be >= 0");
    if (taming.chi1 < 0.0) key_error("taming.chi1", "must be >= 0");
    if (taming.chi2 < 0.0) key_error("taming.chi2", "must be >= 0");
    if (taming.mode == TamingMode::Sdde)
        key_error("taming.mode",
                  "'sdde' needs delay structure; the CLI runs non-delay "
                  "problems (use the library API for delay equations)");
    if (has_chi && chi < 0.0) key_error("problem.chi", "must be >= 0");

    if (h_exponents.empty()) key_error("run.h_exponents", "must be nonempty");
    for (int e : h_exponents) {
        if (e < 0) key_error("run.h_exponents", "entries must be >= 0");
        if (e > ref_exponent)
            key_error("run.h_exponents",
                      "entries must not exceed run.ref_exponent (dyadic "
                      "refinement of one fine path)");
    }
    if (ref_exponent < 0 || ref_exponent > 40)
        key_error("run.ref_exponent", "must lie in [0, 40]");
    if (n_paths < 1) key_error("run.n_paths", "must be >= 1");
    if (!(p >= 1.0)) key_error("run.p", "must be >= 1");
    if (n_exponents.empty()) key_error("run.n_exponents", "must be nonempty");
    for (int e : n_exponents)
        if (e < 0 || e > 40) key_error("run.n_exponents", "entries must lie in [0, 40]");
    if (threads < 1 || threads > 64) key_error("run.threads", "must lie in [1, 64]");

    if (!(audit_p0 >= 2.0)) key_error("audit.p0", "must be >= 2");
    if (!(audit_L > 0.0)) key_error("audit.L", "must be > 0");
    if (!(audit_radius > 0.0)) key_error("audit.radius", "must be > 0");
    if (audit_n < 1) key_error("audit.n", "must be >= 1");
    if (audit_samples < 1) key_error("audit.samples", "must be >= 1");
    if (audit_pairs < 1) key_error("audit.pairs", "must be >= 1");
    if (audit_mc_samples < 1000) key_error("audit.mc_samples", "must be >= 1000");
    if (!(audit_tolerance > 0.0)) key_error("audit.tolerance", "must be > 0");
    if (!(audit_p1 >= 1.0)) key_error("audit.p1", "must be >= 1");
    if (!(audit_p8 >= 1.0)) key_error("audit.p8", "must be >= 1");
    if (!(audit_C7 > 0.0)) key_error("audit.C7", "must be > 0");
    if (!(audit_C8 > 0.0)) key_error("audit.C8", "must be > 0");
    if (!(audit_C9 > 0.0)) key_error("audit.C9", "must be > 0");
}

SdeProblem build_problem(const RunConfig& cfg) {
    cfg.validate();
    SdeProblem prob;
    if (cfg.problem != "inline") {
        prob = builtin_problem(cfg.problem);
    } else {
        auto compile = [](const char* key, const std::string& src) {
            try {
                return std::make_shared<Expr>(Expr::parse(src));
            } catch (const std::exception& e) {
                key_error(key, e.what());
            }
        };
        const auto drift = compile("problem.drift", cfg.drift_expr);
        const auto diffusion = compile("problem.diffusion", cfg.diffusion_expr);
        const auto jump = compile("problem.jump", cfg.jump_expr);
        prob.d = 1;
        prob.m = 1;
        prob.drift = [drift](double t, std::span<const double> x,
                             std::span<double> out) {
            out[0] = drift->eval(t, x[0], 0.0);
        };
        prob.diffusion = [diffusion](double t, std::span<const double> x,
                                     std::span<double> out) {
            out[0] = diffusion->eval(t, x[0], 0.0);
        };
        prob.jump_coeff = [jump](double t, std::span<const double> x,
                                 std::span<const double> z, std::span<double> out) {
            out[0] = jump->eval(t, x[0], z[0]);
        };
        if (!cfg.compensator_expr.empty()) {
            const auto comp = compile("problem.compensator", cfg.compensator_expr);
            prob.compensator = [comp](double t, std::span<const double> x,
                                      std::span<double> out) {
                out[0] = comp->eval(t, x[0], 0.0);
            };
        }
        prob.jump_model =
            make_uniform_marks(cfg.jump_intensity, cfg.mark_a, cfg.mark_b);
        prob.initial_value = {cfg.x0};
        prob.chi = cfg.has_chi ? cfg.chi : cfg.taming.chi;
    }
    if (cfg.has_x0) prob.initial_value.assign(static_cast<std::size_t>(prob.d), cfg.x0);
    if (cfg.has_t0) prob.horizon.t0 = cfg.t0;
    if (cfg.has_t1) prob.horizon.t1 = cfg.t1;
    if (cfg.has_chi) prob.chi = cfg.chi;
    prob.validate();
    return prob;
}

namespace {

const char* mode_name(TamingMode mode) {
    switch (mode) {
        case TamingMode::Generic2Chi: return "generic_2chi";
        case TamingMode::DeterministicChi: return "deterministic_chi";
        case TamingMode::Sdde: return "sdde";
        case TamingMode::Untamed: return "untamed";
    }
    return "?";
}

void emit(std::ostringstream& out, const char* key, const std::string& value) {
    out << key << '=' << value << '\n';
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

}  // namespace

std::string canonical_text(const RunConfig& cfg) {
    std::ostringstream out;
    emit(out, "problem", cfg.problem);
    if (cfg.problem == "inline") {
        emit(out, "problem.drift", cfg.drift_expr);
        emit(out, "problem.diffusion", cfg.diffusion_expr);
        emit(out, "problem.jump", cfg.jump_expr);
        if (!cfg.compensator_expr.empty())
            emit(out, "problem.compensator", cfg.compensator_expr);
        emit(out, "jump.intensity", fmt(cfg.jump_intensity));
        emit(out, "jump.mark.law", cfg.mark_law);
        emit(out, "jump.mark.a", fmt(cfg.mark_a));
        emit(out, "jump.mark.b", fmt(cfg.mark_b));
    }
    if (cfg.has_x0) emit(out, "problem.x0", fmt(cfg.x0));
    if (cfg.has_chi) emit(out, "problem.chi", fmt(cfg.chi));
    if (cfg.has_t0) emit(out, "horizon.t0", fmt(cfg.t0));
    if (cfg.has_t1) emit(out, "horizon.t1", fmt(cfg.t1));
    emit(out, "taming.mode", mode_name(cfg.taming.mode));
    emit(out, "taming.chi", fmt(cfg.taming.chi));
    emit(out, "taming.chi1", fmt(cfg.taming.chi1));
    emit(out, "taming.chi2", fmt(cfg.taming.chi2));
    emit(out, "run.h_exponents", fmt_list(cfg.h_exponents));
    emit(out, "run.ref_exponent", std::to_string(cfg.ref_exponent));
    emit(out, "run.n_paths", std::to_string(cfg.n_paths));
    emit(out, "run.master_seed", std::to_string(cfg.master_seed));
    emit(out, "run.p", fmt(cfg.p));
    emit(out, "run.n_exponents", fmt_list(cfg.n_exponents));
    emit(out, "audit.p0", fmt(cfg.audit_p0));
    emit(out, "audit.L", fmt(cfg.audit_L));
    emit(out, "audit.M", fmt(cfg.audit_M));
    emit(out, "audit.N", fmt(cfg.audit_N));
    emit(out, "audit.radius", fmt(cfg.audit_radius));
    emit(out, "audit.n", std::to_string(cfg.audit_n));
    emit(out, "audit.samples", std::to_string(cfg.audit_samples));
    emit(out, "audit.pairs", std::to_string(cfg.audit_pairs));
    emit(out, "audit.mc_samples", std::to_string(cfg.audit_mc_samples));
    emit(out, "audit.tolerance", fmt(cfg.audit_tolerance));
    emit(out, "audit.p1", fmt(cfg.audit_p1));
    emit(out, "audit.C7", fmt(cfg.audit_C7));
    emit(out, "audit.p8", fmt(cfg.audit_p8));
    emit(out, "audit.C8", fmt(cfg.audit_C8));
    emit(out, "audit.C9", fmt(cfg.audit_C9));
    return out.str();
}

std::string config_hash(const RunConfig& cfg) {
    const std::string text = canonical_text(cfg);
    const std::uint64_t h = fnv1a64(text);
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace tamesde
