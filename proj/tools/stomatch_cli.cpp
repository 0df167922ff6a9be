#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stomatch.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Args {
    std::string instance;
    std::string plan = "wasteful";
    double beta = 2.0;
    double beta_drop = 0.299;
    std::string model = "poisson";
    long long trials = 10000;
    std::uint64_t seed = 1;
    std::string out = "stomatch-run";
    double grid_step = 1e-4;
    double tol = 1e-9;

    std::string family;
    int size = 1;
    int size2 = 0;
    bool random = false;
    int types = 5;
    int offline = 5;
    double density = 0.5;
    double rate_lo = 0.5, rate_hi = 2.0;
    double weight_lo = 1.0, weight_hi = 10.0;
    std::string mode = "unweighted";

    bool with_opt = false;
    bool st_match_prob = false;
    bool st_monotonicity = false;
    bool st_model_comparison = false;
    bool st_empirical_lp = false;
};

std::string take(char* p) {
    std::string s = p ? p : "";
    stomatch_string_free(p);
    return s;
}

int fail_with(const std::string& ctx) {
    std::fprintf(stderr, "error: %s: %s\n", ctx.c_str(), stomatch_last_error());
    return 1;
}

int write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        std::fprintf(stderr, "error: cannot write %s\n", path.string().c_str());
        return 1;
    }
    return 0;
}

int prepare_out(const Args& a, const std::string& subcommand, fs::path& dir) {
    dir = a.out;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        std::fprintf(stderr, "error: cannot create %s: %s\n", dir.string().c_str(),
                     ec.message().c_str());
        return 1;
    }
    json cfg;
    cfg["subcommand"] = subcommand;
    cfg["instance"] = a.instance;
    cfg["plan"] = a.plan;
    cfg["beta"] = a.beta;
    cfg["beta_drop"] = a.beta_drop;
    cfg["model"] = a.model;
    cfg["trials"] = a.trials;
    cfg["seed"] = a.seed;
    cfg["grid_step"] = a.grid_step;
    cfg["tol"] = a.tol;
    if (subcommand == "gen") {
        cfg["random"] = a.random;
        if (a.random) {
            cfg["types"] = a.types;
            cfg["offline"] = a.offline;
            cfg["density"] = a.density;
            cfg["rate_range"] = {a.rate_lo, a.rate_hi};
            cfg["weight_range"] = {a.weight_lo, a.weight_hi};
            cfg["mode"] = a.mode;
        } else {
            cfg["family"] = a.family;
            cfg["size"] = a.size;
            cfg["size2"] = a.size2;
        }
    }
    if (subcommand == "simulate") {
        cfg["opt"] = a.with_opt;
        cfg["match_prob"] = a.st_match_prob;
        cfg["monotonicity"] = a.st_monotonicity;
        cfg["model_comparison"] = a.st_model_comparison;
        cfg["empirical_lp"] = a.st_empirical_lp;
    }
    return write_file(dir / "config.json", cfg.dump(2) + "\n");
}

struct InstanceHandle {
    stomatch_instance* p = nullptr;
    ~InstanceHandle() { stomatch_instance_free(p); }
};
struct SolutionHandle {
    stomatch_solution* p = nullptr;
    ~SolutionHandle() { stomatch_solution_free(p); }
};
struct PlanHandle {
    stomatch_plan* p = nullptr;
    ~PlanHandle() { stomatch_plan_free(p); }
};

int load_instance(const Args& a, InstanceHandle& inst) {
    if (a.instance.empty()) {
        std::fprintf(stderr, "error: --instance is required\n");
        return 1;
    }
    if (stomatch_instance_load(a.instance.c_str(), &inst.p) != STOMATCH_OK)
        return fail_with("loading " + a.instance);
    return 0;
}

int build_plan(const Args& a, const InstanceHandle& inst, const SolutionHandle& sol,
               PlanHandle& plan) {
    if (stomatch_plan_build(inst.p, sol.p, a.plan.c_str(), a.beta, a.beta_drop, &plan.p) !=
        STOMATCH_OK)
        return fail_with("building " + a.plan + " plan");
    return 0;
}

int cmd_gen(const Args& a) {
    fs::path dir;
    if (int rc = prepare_out(a, "gen", dir)) return rc;
    InstanceHandle inst;
    if (a.random) {
        if (stomatch_instance_gen_random(a.types, a.offline, a.density, a.rate_lo, a.rate_hi,
                                         a.weight_lo, a.weight_hi, a.mode.c_str(), a.seed,
                                         &inst.p) != STOMATCH_OK)
            return fail_with("generating random instance");
    } else {
        if (a.family.empty()) {
            std::fprintf(stderr, "error: gen needs --family or --random\n");
            return 1;
        }
        if (stomatch_instance_gen_structured(a.family.c_str(), a.size,
                                             a.size2 > 0 ? a.size2 : a.size,
                                             &inst.p) != STOMATCH_OK)
            return fail_with("generating " + a.family + " instance");
    }
    char* text = nullptr;
    if (stomatch_instance_to_json(inst.p, &text) != STOMATCH_OK)
        return fail_with("serializing instance");
    if (int rc = write_file(dir / "instance.json", take(text))) return rc;
    std::printf("wrote %s\n", (dir / "instance.json").string().c_str());
    return 0;
}

int cmd_lp(const Args& a) {
    fs::path dir;
    if (int rc = prepare_out(a, "lp", dir)) return rc;
    InstanceHandle inst;
    if (int rc = load_instance(a, inst)) return rc;

    SolutionHandle nat, jl;
    if (stomatch_solve_natural(inst.p, a.tol, &nat.p) != STOMATCH_OK)
        return fail_with("solving the prefix-constrained relaxation");
    if (stomatch_solve_jaillet_lu(inst.p, &jl.p) != STOMATCH_OK)
        return fail_with("solving the comparison relaxation");

    char* text = nullptr;
    if (stomatch_solution_to_json(inst.p, nat.p, &text) != STOMATCH_OK)
        return fail_with("serializing solution");
    if (int rc = write_file(dir / "nat_solution.json", take(text))) return rc;
    if (stomatch_solution_to_json(inst.p, jl.p, &text) != STOMATCH_OK)
        return fail_with("serializing solution");
    if (int rc = write_file(dir / "jl_solution.json", take(text))) return rc;

    double nat_obj = 0.0, jl_obj = 0.0, max_viol = 0.0;
    stomatch_solution_objective(nat.p, &nat_obj);
    stomatch_solution_objective(jl.p, &jl_obj);
    char* worst = nullptr;
    if (stomatch_check_feasible_natural(inst.p, nat.p, &max_viol, &worst) != STOMATCH_OK)
        return fail_with("checking feasibility");
    const bool feas_ok = max_viol <= 1e-8;
    const bool nat_le_jl = nat_obj <= jl_obj + 1e-7;

    json rep;
    rep["nat_objective"] = nat_obj;
    rep["jl_objective"] = jl_obj;
    rep["gap"] = jl_obj - nat_obj;
    rep["nat_le_jl"] = nat_le_jl;
    rep["feasibility"] = {{"max_violation", max_viol},
                          {"worst_constraint", take(worst)},
                          {"ok", feas_ok}};
    rep["ok"] = nat_le_jl && feas_ok;
    if (int rc = write_file(dir / "lp_report.json", rep.dump(2) + "\n")) return rc;
    std::printf("nat %.10g jl %.10g %s\n", nat_obj, jl_obj,
                rep["ok"].get<bool>() ? "ok" : "FAILED");
    return rep["ok"].get<bool>() ? 0 : 1;
}

int cmd_rates(const Args& a) {
    fs::path dir;
    if (int rc = prepare_out(a, "rates", dir)) return rc;
    InstanceHandle inst;
    if (int rc = load_instance(a, inst)) return rc;
    SolutionHandle sol;
    if (stomatch_solve_natural(inst.p, a.tol, &sol.p) != STOMATCH_OK)
        return fail_with("solving the prefix-constrained relaxation");
    PlanHandle plan;
    if (int rc = build_plan(a, inst, sol, plan)) return rc;

    char* text = nullptr;
    if (stomatch_plan_to_json(inst.p, plan.p, &text) != STOMATCH_OK)
        return fail_with("serializing plan");
    if (int rc = write_file(dir / "plan.json", take(text))) return rc;

    int ok = 0;
    if (stomatch_plan_verify(inst.p, sol.p, plan.p, &ok, &text) != STOMATCH_OK)
        return fail_with("verifying plan properties");
    if (int rc = write_file(dir / "plan_report.json", take(text))) return rc;
    std::printf("plan %s: properties %s\n", a.plan.c_str(), ok ? "ok" : "FAILED");
    return ok ? 0 : 1;
}

int cmd_simulate(const Args& a) {
    fs::path dir;
    if (int rc = prepare_out(a, "simulate", dir)) return rc;
    InstanceHandle inst;
    if (int rc = load_instance(a, inst)) return rc;
    SolutionHandle sol;
    if (stomatch_solve_natural(inst.p, a.tol, &sol.p) != STOMATCH_OK)
        return fail_with("solving the prefix-constrained relaxation");
    PlanHandle plan;
    if (int rc = build_plan(a, inst, sol, plan)) return rc;

    char* rep = nullptr;
    char* csv = nullptr;
    if (stomatch_monte_carlo(inst.p, plan.p, a.model.c_str(), a.trials, a.seed,
                             a.with_opt ? 1 : 0, &rep, &csv) != STOMATCH_OK)
        return fail_with("running trials");
    if (int rc = write_file(dir / "mc_report.json", take(rep))) return rc;
    if (int rc = write_file(dir / "gain_curve.csv", take(csv))) return rc;

    bool all_ok = true;
    if (a.st_match_prob) {
        int ok = 0;
        if (stomatch_match_prob(inst.p, sol.p, plan.p, a.model.c_str(), a.trials, a.seed, &ok,
                                &rep, &csv) != STOMATCH_OK)
            return fail_with("per-vertex bound study");
        if (int rc = write_file(dir / "match_prob.json", take(rep))) return rc;
        if (int rc = write_file(dir / "match_prob.csv", take(csv))) return rc;
        all_ok = all_ok && ok;
    }
    if (a.st_monotonicity) {
        int ok = 0;
        if (stomatch_monotonicity(inst.p, plan.p, a.trials, a.seed, &ok, &rep) != STOMATCH_OK)
            return fail_with("per-position study");
        if (int rc = write_file(dir / "monotonicity.json", take(rep))) return rc;
        all_ok = all_ok && ok;
    }
    if (a.st_model_comparison) {
        int ok = 0;
        if (stomatch_model_comparison(inst.p, plan.p, a.trials, a.seed, &ok, &rep) != STOMATCH_OK)
            return fail_with("arrival-model comparison");
        if (int rc = write_file(dir / "model_comparison.json", take(rep))) return rc;
        all_ok = all_ok && ok;
    }
    if (a.st_empirical_lp) {
        int ok = 0;
        if (stomatch_empirical_lp(inst.p, a.model.c_str(), a.trials, a.seed, &ok, &rep) !=
            STOMATCH_OK)
            return fail_with("empirical feasibility study");
        if (int rc = write_file(dir / "empirical_lp.json", take(rep))) return rc;
        all_ok = all_ok && ok;
    }
    std::printf("simulate: %s\n", all_ok ? "ok" : "FAILED");
    return all_ok ? 0 : 1;
}

int cmd_verify(const Args& a) {
    fs::path dir;
    if (int rc = prepare_out(a, "verify", dir)) return rc;
    std::vector<std::pair<std::string, bool>> checks;
    char* rep = nullptr;
    char* csv = nullptr;

    int fn_ok = 0;
    if (stomatch_verify_functions(1e-3, &fn_ok, &rep) != STOMATCH_OK)
        return fail_with("function property grid");
    if (int rc = write_file(dir / "function_properties.json", take(rep))) return rc;
    checks.emplace_back("function_properties", fn_ok != 0);

    for (const char* name : {"t15", "t19", "t22"}) {
        int passed = 0;
        if (stomatch_certificate(name, a.grid_step, 1e-10, a.beta_drop, &passed, &rep, &csv) !=
            STOMATCH_OK)
            return fail_with(std::string("certificate ") + name);
        if (int rc = write_file(dir / (std::string(name) + "_summary.json"), take(rep))) return rc;
        if (int rc = write_file(dir / (std::string(name) + ".csv"), take(csv))) return rc;
        checks.emplace_back(std::string("certificate_") + name, passed != 0);
    }

    // spot values of the arrival-count tail
    struct Spot {
        double lam, expected, tol, scale;
    };
    const Spot spots[] = {
        {1.0, 0.36787944117144233, 1e-12, 1.0},
        {2.0, 0.2706705664732254, 1e-12, 1.0},
        {4.0, 0.1953668, 1e-7, 1.0},
        {1e4, 0.3989, 1e-3, 100.0},   // tail * sqrt(lambda) approaches 1/sqrt(2 pi)
    };
    json jt;
    bool tails_ok = true;
    for (const Spot& s : spots) {
        double v = 0.0;
        if (stomatch_poisson_tail(s.lam, &v) != STOMATCH_OK) return fail_with("tail evaluation");
        const bool ok = std::abs(v * s.scale - s.expected) <= s.tol;
        tails_ok = tails_ok && ok;
        char key[32];
        std::snprintf(key, sizeof(key), "%.10g", s.lam);
        jt[key] = {{"value", v}, {"scaled", v * s.scale}, {"expected", s.expected}, {"ok", ok}};
    }
    if (int rc = write_file(dir / "poisson_tail.json", jt.dump(2) + "\n")) return rc;
    checks.emplace_back("poisson_tail", tails_ok);

    int jensen_ok = 0;
    if (stomatch_jensen_battery(1000, a.seed, &jensen_ok, &rep) != STOMATCH_OK)
        return fail_with("converse-Jensen battery");
    if (int rc = write_file(dir / "jensen.json", take(rep))) return rc;
    checks.emplace_back("jensen_battery", jensen_ok != 0);

    json doc;
    bool all_ok = true;
    std::string first_failure;
    for (const auto& [name, ok] : checks) {
        doc["checks"][name] = ok;
        if (!ok && first_failure.empty()) first_failure = name;
        all_ok = all_ok && ok;
    }
    doc["ok"] = all_ok;
    doc["first_failure"] = first_failure;
    if (int rc = write_file(dir / "verify_report.json", doc.dump(2) + "\n")) return rc;
    for (const auto& [name, ok] : checks)
        std::printf("%-24s %s\n", name.c_str(), ok ? "ok" : "FAILED");
    if (!all_ok) std::fprintf(stderr, "verify: first failing check: %s\n", first_failure.c_str());
    return all_ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    Args a;
    CLI::App app{"online stochastic matching workbench"};
    app.require_subcommand(1);

    CLI::App* gen = app.add_subcommand("gen", "generate an instance file");
    gen->add_option("--family", a.family, "complete_uniform | star | two_cycle");
    gen->add_option("--size", a.size, "primary size parameter");
    gen->add_option("--size2", a.size2, "secondary size parameter (defaults to --size)");
    gen->add_flag("--random", a.random, "draw a random instance instead of a family");
    gen->add_option("--types", a.types, "random: number of online types");
    gen->add_option("--offline", a.offline, "random: number of offline vertices");
    gen->add_option("--density", a.density, "random: edge probability");
    gen->add_option("--rate-lo", a.rate_lo, "random: arrival-rate lower bound");
    gen->add_option("--rate-hi", a.rate_hi, "random: arrival-rate upper bound");
    gen->add_option("--weight-lo", a.weight_lo, "random: weight lower bound");
    gen->add_option("--weight-hi", a.weight_hi, "random: weight upper bound");
    gen->add_option("--mode", a.mode, "unweighted | vertex_weighted | general");
    gen->add_option("--seed", a.seed, "random generator seed");
    gen->add_option("--out", a.out, "output directory");

    CLI::App* lp = app.add_subcommand("lp", "solve both relaxations and compare");
    lp->add_option("--instance", a.instance, "instance file")->required();
    lp->add_option("--tol", a.tol, "row-generation tolerance");
    lp->add_option("--out", a.out, "output directory");

    CLI::App* rates = app.add_subcommand("rates", "build and check a sampling plan");
    rates->add_option("--instance", a.instance, "instance file")->required();
    rates->add_option("--plan", a.plan, "wasteful | beta | limit | amortized");
    rates->add_option("--beta", a.beta, "beta parameter for --plan beta");
    rates->add_option("--beta-drop", a.beta_drop, "drop rate for --plan amortized");
    rates->add_option("--tol", a.tol, "row-generation tolerance");
    rates->add_option("--out", a.out, "output directory");

    CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo studies of a plan");
    sim->add_option("--instance", a.instance, "instance file")->required();
    sim->add_option("--plan", a.plan, "wasteful | beta | limit | amortized");
    sim->add_option("--beta", a.beta, "beta parameter for --plan beta");
    sim->add_option("--beta-drop", a.beta_drop, "drop rate for --plan amortized");
    sim->add_option("--model", a.model, "poisson | fixed");
    sim->add_option("--trials", a.trials, "number of trials");
    sim->add_option("--seed", a.seed, "master seed");
    sim->add_option("--tol", a.tol, "row-generation tolerance");
    sim->add_option("--out", a.out, "output directory");
    sim->add_flag("--opt", a.with_opt, "also compute the realized optimum per trial");
    sim->add_flag("--match-prob", a.st_match_prob, "per-vertex bound study");
    sim->add_flag("--monotonicity", a.st_monotonicity, "per-position gain study (fixed model)");
    sim->add_flag("--model-comparison", a.st_model_comparison, "fixed vs poisson study");
    sim->add_flag("--empirical-lp", a.st_empirical_lp, "empirical feasibility study");

    CLI::App* verify = app.add_subcommand("verify", "instance-free analytic checks");
    verify->add_option("--grid-step", a.grid_step, "certificate grid step");
    verify->add_option("--beta-drop", a.beta_drop, "drop rate fed to the t22 certificate");
    verify->add_option("--seed", a.seed, "battery seed");
    verify->add_option("--out", a.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (*gen) return cmd_gen(a);
    if (*lp) return cmd_lp(a);
    if (*rates) return cmd_rates(a);
    if (*sim) return cmd_simulate(a);
    if (*verify) return cmd_verify(a);
    return 1;
}
