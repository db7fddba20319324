#include <cctype>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "tamesde/config.hpp"
#include "tamesde/expr.hpp"
#include "tamesde/model.hpp"

using namespace tamesde;
using doctest::Contains;

namespace {

double ev(const char* src, double t = 0.0, double x = 0.0, double z = 0.0) {
    return Expr::parse(src).eval(t, x, z);
}

}  // namespace

TEST_CASE("expressions follow the usual arithmetic precedence") {
    CHECK(ev("2+3*4") == 14.0);
    CHECK(ev("(2+3)*4") == 20.0);
    CHECK(ev("7/2") == 3.5);
    CHECK(ev("10-4-3") == 3.0);  // left-associative subtraction
    CHECK(ev("2*t + x/4 - z", 3.0, 8.0, 1.0) == 7.0);
    CHECK(ev("  1.5e2 ") == 150.0);
    CHECK(ev("x", 0.0, -2.5, 0.0) == -2.5);
}

TEST_CASE("power binds tighter than unary minus and associates right") {
    CHECK(ev("-x^2", 0.0, 3.0, 0.0) == -9.0);
    CHECK(ev("(-x)^2", 0.0, 3.0, 0.0) == 9.0);
    CHECK(ev("2^3^2") == 512.0);
    CHECK(ev("-2^-2") == -0.25);
    CHECK(ev("x - x^3", 0.0, 2.0, 0.0) == -6.0);
}

TEST_CASE("expression functions evaluate through the standard library") {
    CHECK(ev("abs(-x)", 0.0, 3.0, 0.0) == 3.0);
    CHECK(ev("sqrt(x)", 0.0, 9.0, 0.0) == 3.0);
    CHECK(ev("exp(0)") == 1.0);
    CHECK(ev("log(1)") == 0.0);
    CHECK(ev("sin(0)") == 0.0);
    CHECK(ev("cos(0)") == 1.0);
    CHECK(ev("tanh(0)") == 0.0);
    CHECK(ev("pow(x, 3)", 0.0, 2.0, 0.0) == 8.0);
    CHECK(ev("min(t, x)", 2.0, 5.0, 0.0) == 2.0);
    CHECK(ev("max(t, x)", 2.0, 5.0, 0.0) == 5.0);
    CHECK(ev(" pow( x , 2 ) + 1 ", 0.0, 3.0, 0.0) == 10.0);
    CHECK(ev("x*z", 0.0, 2.0, 0.1) == 0.2);
}

TEST_CASE("expression parse errors carry one-based character positions") {
    CHECK_THROWS_WITH_AS(Expr::parse(""),
                         "expression error at position 1: expected a value",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(Expr::parse("2+"),
                         "expression error at position 3: expected a value",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(Expr::parse("(2+3"),
                         "expression error at position 5: expected ')'",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        Expr::parse("2$3"),
        "expression error at position 2: unexpected trailing input",
        std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        Expr::parse("y+1"),
        "expression error at position 1: unknown variable 'y' (expected t, x or z)",
        std::invalid_argument);
    CHECK_THROWS_WITH_AS(Expr::parse("foo(2)"),
                         Contains("unknown function 'foo'"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(Expr::parse("min(2)"),
                         Contains("function 'min' needs two arguments"),
                         std::invalid_argument);
    CHECK(Expr::parse("x + 1").source() == "x + 1");
}

TEST_CASE("config text parses keys, comments and blank lines") {
    const RunConfig cfg = parse_config_text(
        "# benchmark setup\n"
        "problem = cubic-jump\n"
        "\n"
        "run.n_paths = 500   # trailing comment\n"
        "run.h_exponents = 3, 4 ,5\n"
        "taming.mode = generic_2chi\n"
        "taming.chi = 2\n"
        "run.master_seed = 99\n");
    CHECK(cfg.problem == "cubic-jump");
    CHECK(cfg.n_paths == 500);
    CHECK(cfg.h_exponents == std::vector<int>{3, 4, 5});
    CHECK(cfg.taming.mode == TamingMode::Generic2Chi);
    CHECK(cfg.taming.chi == 2.0);
    CHECK(cfg.master_seed == 99);
    // Untouched keys keep their defaults.
    CHECK(cfg.ref_exponent == 15);
    CHECK(cfg.p == 2.0);
    cfg.validate();
}

TEST_CASE("config parser rejects malformed lines") {
    CHECK_THROWS_WITH_AS(parse_config_text("problem cubic-jump\n"),
                         "config line 1: expected 'key = value'",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("problem =\n"),
                         "config line 1: empty value for key 'problem'",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("= 5\n"),
                         "config line 1: empty key", std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        parse_config_text("problem = inline\nproblem = cubic-jump\n"),
        "config line 2: duplicate key 'problem'", std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("problme = inline\n"),
                         "unknown config key 'problme'", std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("run.n_paths = many\n"),
                         "config key 'run.n_paths': expected an integer, got 'many'",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("taming.chi = soft\n"),
                         Contains("expected a number"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("run.master_seed = -3\n"),
                         Contains("nonnegative"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("taming.mode = soft\n"),
                         Contains("unknown mode 'soft'"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("run.h_exponents = 3,,5\n"),
                         Contains("empty list entry"), std::invalid_argument);
}

TEST_CASE("config validation names the offending key path") {
    auto withf = [](const char* extra) {
        RunConfig cfg = parse_config_text(extra);
        cfg.validate();
    };
    CHECK_THROWS_WITH_AS(withf("problem = weird\n"),
                         Contains("unknown problem 'weird'"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(withf("problem.drift = x\n"),
                         Contains("config key 'problem.drift': inline "
                                  "coefficient keys conflict"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(withf("jump.intensity = 2\n"),
                         Contains("jump model keys are fixed by builtin"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        withf("problem = inline\nproblem.diffusion = x\nproblem.jump = z\n"
              "jump.intensity = 1\njump.mark.a = 0\njump.mark.b = 1\n"),
        "config key 'problem.drift': missing (required for inline problems)",
        std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        withf("problem = inline\nproblem.drift = x\nproblem.diffusion = x\n"
              "problem.jump = z\njump.mark.a = 0\njump.mark.b = 1\n"),
        "config key 'jump.intensity': missing (required for inline problems)",
        std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        withf("problem = inline\nproblem.drift = x\nproblem.diffusion = x\n"
              "problem.jump = z\njump.intensity = 1\njump.mark.a = 1\n"
              "jump.mark.b = 1\n"),
        Contains("requires a < b"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(withf("taming.mode = sdde\n"),
                         Contains("'sdde' needs delay structure"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(withf("horizon.t0 = 2\nhorizon.t1 = 1\n"),
                         Contains("config key 'horizon.t0'"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(withf("run.threads = 65\n"),
                         Contains("config key 'run.threads'"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(withf("run.h_exponents = 6,20\n"),
                         Contains("run.h_exponents"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(withf("run.p = 0.5\n"), Contains("run.p"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(withf("audit.mc_samples = 10\n"),
                         Contains("audit.mc_samples"), std::invalid_argument);
}

TEST_CASE("presets pin the benchmark setups") {
    const RunConfig desk = preset_config("table1-desk");
    CHECK(desk.problem == "cubic-jump");
    CHECK(desk.taming.mode == TamingMode::DeterministicChi);
    CHECK(desk.taming.chi == 2.0);
    CHECK(desk.h_exponents == std::vector<int>{6, 7, 8, 9, 10, 11, 12});
    CHECK(desk.ref_exponent == 15);
    CHECK(desk.n_paths == 10000);
    CHECK(desk.master_seed == 42);
    CHECK(desk.p == 2.0);
    desk.validate();

    const RunConfig full = preset_config("table1-full");
    CHECK(full.h_exponents ==
          std::vector<int>{6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20});
    CHECK(full.ref_exponent == 21);
    CHECK(full.n_paths == 60000);
    full.validate();

    CHECK(preset_names() ==
          std::vector<std::string>{"table1-desk", "table1-full"});
    CHECK_THROWS_WITH_AS(preset_config("nope"),
                         "unknown preset 'nope' (available: table1-desk, "
                         "table1-full)",
                         std::invalid_argument);
}

TEST_CASE("config hash is stable and ignores execution-only keys") {
    const RunConfig base = preset_config("table1-desk");
    const std::string hash = config_hash(base);
    REQUIRE(hash.size() == 16);
    for (char c : hash)
        CHECK(std::isxdigit(static_cast<unsigned char>(c)));
    CHECK(config_hash(base) == hash);  // pure function of the config

    RunConfig exec = base;
    exec.threads = 7;
    exec.output_path = "/tmp/out.csv";
    CHECK(config_hash(exec) == hash);
    CHECK(canonical_text(exec).find("threads") == std::string::npos);
    CHECK(canonical_text(exec).find("output") == std::string::npos);

    RunConfig seeded = base;
    seeded.master_seed = 43;
    CHECK(config_hash(seeded) != hash);
    RunConfig paths = base;
    paths.n_paths = 9999;
    CHECK(config_hash(paths) != hash);
}

TEST_CASE("build_problem compiles inline coefficients") {
    const RunConfig cfg = parse_config_text(
        "problem = inline\n"
        "problem.drift = x - x^3\n"
        "problem.diffusion = x^2\n"
        "problem.jump = x*z\n"
        "jump.intensity = 2\n"
        "jump.mark.a = -0.25\n"
        "jump.mark.b = 0.25\n"
        "taming.mode = generic_2chi\n"
        "taming.chi = 2\n");
    const SdeProblem prob = build_problem(cfg);
    CHECK(prob.d == 1);
    CHECK(prob.m == 1);
    const double x[1] = {2.0};
    double out[1];
    prob.drift(0.0, x, out);
    CHECK(out[0] == -6.0);
    prob.diffusion(0.0, x, out);
    CHECK(out[0] == 4.0);
    const double z[1] = {0.1};
    prob.jump_coeff(0.0, x, z, out);
    CHECK(out[0] == 0.2);
    prob.eval_compensator(0.0, x, out);  // none declared: identically zero
    CHECK(out[0] == 0.0);
    CHECK(prob.jump_model.intensity == 2.0);
    CHECK(prob.initial_value == Vec{1.0});
    CHECK(prob.chi == 2.0);  // falls back to taming.chi
}

TEST_CASE("build_problem applies overrides and declared compensators") {
    const RunConfig cfg = parse_config_text(
        "problem = cubic-jump\n"
        "problem.x0 = 2.5\n"
        "horizon.t1 = 2\n"
        "problem.chi = 3\n");
    const SdeProblem prob = build_problem(cfg);
    CHECK(prob.initial_value == Vec{2.5});
    CHECK(prob.horizon.t0 == 0.0);
    CHECK(prob.horizon.t1 == 2.0);
    CHECK(prob.chi == 3.0);

    const RunConfig comp_cfg = parse_config_text(
        "problem = inline\n"
        "problem.drift = 0\n"
        "problem.diffusion = 0\n"
        "problem.jump = z\n"
        "problem.compensator = 0.5*x\n"
        "jump.intensity = 1\n"
        "jump.mark.a = 0\n"
        "jump.mark.b = 1\n");
    const SdeProblem declared = build_problem(comp_cfg);
    const double x[1] = {2.0};
    double out[1];
    declared.eval_compensator(0.0, x, out);
    CHECK(out[0] == 1.0);

    CHECK_THROWS_WITH_AS(
        build_problem(parse_config_text(
            "problem = inline\n"
            "problem.drift = x +\n"
            "problem.diffusion = 0\n"
            "problem.jump = z\n"
            "jump.intensity = 1\n"
            "jump.mark.a = 0\n"
            "jump.mark.b = 1\n")),
        Contains("config key 'problem.drift': expression error at position"),
        std::invalid_argument);
}
