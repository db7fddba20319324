#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tamesde/model.hpp"
#include "tamesde/taming.hpp"

namespace tamesde {

// Parsed run configuration. The on-disk format is flat dotted-key text:
// one "key = value" per line, '#' starts a comment, blank lines are ignored,
// duplicate keys are an error. Unknown keys are rejected so typos cannot
// silently fall back to defaults.
struct RunConfig {
    // Problem selection: a builtin registry name, or "inline" with scalar
    // coefficient expressions over (t, x, z).
    std::string problem = "cubic-jump";
    std::string drift_expr;
    std::string diffusion_expr;
    std::string jump_expr;
    std::string compensator_expr;  // empty = identically zero

    bool has_x0 = false;
    double x0 = 1.0;
    bool has_t0 = false, has_t1 = false;
    double t0 = 0.0, t1 = 1.0;
    bool has_chi = false;
    double chi = 0.0;  // problem.chi: drift growth exponent (A-9)

    // jump.* (inline problems only; builtins carry their own jump model)
    bool has_intensity = false;
    double jump_intensity = 0.0;
    std::string mark_law = "uniform";
    bool has_mark_a = false, has_mark_b = false;
    double mark_a = 0.0, mark_b = 0.0;

    TamingConfig taming;

    std::vector<int> h_exponents{6, 7, 8, 9, 10, 11, 12};
    int ref_exponent = 15;
    long long n_paths = 10000;
    std::uint64_t master_seed = 42;
    double p = 2.0;
    std::vector<int> n_exponents{6, 7, 8, 9, 10, 11, 12};  // moments probe
    int threads = 1;
    std::string output_path;  // empty = stdout

    // Audit knobs; defaults are the constants under which the builtin problem
    // is known to satisfy the assumptions.
    double audit_p0 = 3.0;
    double audit_L = 2.0;
    double audit_M = 1.0;
    double audit_N = 1.0;
    double audit_radius = 100.0;
    long long audit_n = 1024;  // taming parameter for the B-* audits
    long long audit_samples = 2048;
    long long audit_pairs = 2048;
    long long audit_mc_samples = 20000;
    double audit_tolerance = 4.0;
    double audit_p1 = 2.5;   // A-7
    double audit_C7 = 2.0;   // A-7 constant
    double audit_p8 = 2.0;   // A-8 moment order
    double audit_C8 = 1.0 / 24.0;
    double audit_C9 = 4.0;   // A-9 constant

    void validate() const;  // throws std::invalid_argument naming the key path
};

// Parse dotted-key text. Errors carry line numbers and key paths.
RunConfig parse_config_text(std::string_view text);
RunConfig parse_config_file(const std::string& path);

// Builtin presets: "table1-desk" (reference 2^-15, h in {2^-6..2^-12},
// 10,000 paths) and "table1-full" (reference 2^-21, h in {2^-6..2^-20},
// 60,000 paths; hours of CPU time).
RunConfig preset_config(std::string_view name);
std::vector<std::string> preset_names();

// Materialize the problem the config describes (builtin copy with overrides
// applied, or inline expressions compiled).
SdeProblem build_problem(const RunConfig& config);

// Canonical key=value serialization of everything that affects results;
// run.threads and output.path are deliberately excluded so the hash is stable
// across thread counts and output destinations.
std::string canonical_text(const RunConfig& config);
// FNV-1a of canonical_text, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace tamesde
