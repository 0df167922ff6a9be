#include "stomatch.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <new>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "stomatch/analysis.hpp"
#include "stomatch/error.hpp"
#include "stomatch/instance.hpp"
#include "stomatch/lp.hpp"
#include "stomatch/rng.hpp"
#include "stomatch/sampling.hpp"
#include "stomatch/simulator.hpp"

struct stomatch_instance {
    stomatch::Instance v;
};
struct stomatch_solution {
    stomatch::FractionalSolution v;
};
struct stomatch_plan {
    stomatch::SamplingPlan v;
};

namespace {

thread_local std::string g_last_error;

stomatch_status fail_status(stomatch_status s, const char* msg) {
    g_last_error = msg;
    return s;
}

template <class F>
stomatch_status guarded(F&& f) {
    try {
        f();
        return STOMATCH_OK;
    } catch (const stomatch::Error& e) {
        g_last_error = e.what();
        return static_cast<stomatch_status>(static_cast<int>(e.code()));
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return STOMATCH_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return STOMATCH_ERR_INTERNAL;
    }
}

char* dup_string(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

void put(char** out, const std::string& s) {
    if (out) *out = dup_string(s);
}

// Feasible random columns for the converse-Jensen battery: raw x_i = u_i
// * lambda_i scaled so the worst sorted-prefix ratio stays below 1.
struct JensenCase {
    std::vector<double> lambda, x;
};

JensenCase random_feasible_column(stomatch::Rng& rng) {
    JensenCase c;
    const int n = 1 + static_cast<int>(rng.next_below(8));
    c.lambda.resize(n);
    c.x.resize(n);
    for (int i = 0; i < n; ++i) {
        c.lambda[i] = 0.1 + 1.9 * rng.next_double();
        c.x[i] = c.lambda[i] * rng.next_double();
    }
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return c.x[a] / c.lambda[a] > c.x[b] / c.lambda[b];
    });
    double px = 0.0, pl = 0.0, rho = 0.0;
    for (int i : idx) {
        px += c.x[i];
        pl += c.lambda[i];
        rho = std::max(rho, px / -std::expm1(-pl));
    }
    if (rho > 0.0) {
        const double v = (0.05 + 0.90 * rng.next_double()) / rho;
        for (double& xi : c.x) xi *= v;
    }
    return c;
}

} // namespace

extern "C" {

const char* stomatch_version(void) { return "0.1.0"; }

const char* stomatch_last_error(void) { return g_last_error.c_str(); }

void stomatch_string_free(char* s) { std::free(s); }

/* ---- instances ---- */

stomatch_status stomatch_instance_from_json(const char* text, stomatch_instance** out) {
    if (!text || !out) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] { *out = new stomatch_instance{stomatch::Instance::from_json(text)}; });
}

stomatch_status stomatch_instance_to_json(const stomatch_instance* inst, char** out) {
    if (!inst || !out) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] { put(out, inst->v.to_json()); });
}

stomatch_status stomatch_instance_load(const char* path, stomatch_instance** out) {
    if (!path || !out) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] { *out = new stomatch_instance{stomatch::load_instance(path)}; });
}

stomatch_status stomatch_instance_save(const stomatch_instance* inst, const char* path) {
    if (!inst || !path) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] { stomatch::save_instance(inst->v, path); });
}

stomatch_status stomatch_instance_gen_random(int n_types, int n_offline, double density,
                                             double rate_lo, double rate_hi, double weight_lo,
                                             double weight_hi, const char* mode, uint64_t seed,
                                             stomatch_instance** out) {
    if (!mode || !out) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] {
        *out = new stomatch_instance{stomatch::gen_random_instance(
            n_types, n_offline, density, {rate_lo, rate_hi}, {weight_lo, weight_hi},
            stomatch::mode_from_string(mode), seed)};
    });
}

stomatch_status stomatch_instance_gen_structured(const char* family, int a, int b,
                                                 stomatch_instance** out) {
    if (!family || !out) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded(
        [&] { *out = new stomatch_instance{stomatch::gen_structured_instance(family, a, b)}; });
}

stomatch_status stomatch_instance_counts(const stomatch_instance* inst, int* n_types,
                                         int* n_offline) {
    if (!inst) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    if (n_types) *n_types = static_cast<int>(inst->v.types().size());
    if (n_offline) *n_offline = static_cast<int>(inst->v.offline().size());
    return STOMATCH_OK;
}

stomatch_status stomatch_instance_total_rate(const stomatch_instance* inst, double* out) {
    if (!inst || !out) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    *out = inst->v.total_rate();
    return STOMATCH_OK;
}

void stomatch_instance_free(stomatch_instance* inst) { delete inst; }

/* ---- fractional relaxations ---- */

stomatch_status stomatch_solve_natural(const stomatch_instance* inst, double tol,
                                       stomatch_solution** out) {
    if (!inst || !out) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] { *out = new stomatch_solution{stomatch::solve_natural(inst->v, tol)}; });
}

stomatch_status stomatch_solve_jaillet_lu(const stomatch_instance* inst, stomatch_solution** out) {
    if (!inst || !out) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] { *out = new stomatch_solution{stomatch::solve_jaillet_lu(inst->v)}; });
}

stomatch_status stomatch_solution_objective(const stomatch_solution* sol, double* out) {
    if (!sol || !out) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    *out = sol->v.objective;
    return STOMATCH_OK;
}

stomatch_status stomatch_solution_to_json(const stomatch_instance* inst,
                                          const stomatch_solution* sol, char** out) {
    if (!inst || !sol || !out) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] { put(out, sol->v.to_json(inst->v)); });
}

stomatch_status stomatch_check_feasible_natural(const stomatch_instance* inst,
                                                const stomatch_solution* sol,
                                                double* max_violation, char** worst_constraint) {
    if (!inst || !sol) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] {
        const stomatch::FeasibilityReport rep =
            stomatch::check_feasible_natural(inst->v, sol->v.x);
        if (max_violation) *max_violation = rep.max_violation;
        put(worst_constraint, rep.worst_constraint);
    });
}

void stomatch_solution_free(stomatch_solution* sol) { delete sol; }

/* ---- sampling plans ---- */

stomatch_status stomatch_plan_build(const stomatch_instance* inst, const stomatch_solution* sol,
                                    const char* kind, double beta, double beta_drop,
                                    stomatch_plan** out) {
    if (!inst || !sol || !kind || !out) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] {
        stomatch::SamplingPlan plan;
        switch (stomatch::plan_kind_from_string(kind)) {
            case stomatch::PlanKind::wasteful:
                plan = stomatch::build_wasteful(inst->v, sol->v);
                break;
            case stomatch::PlanKind::beta:
                plan = stomatch::build_beta(inst->v, sol->v, beta);
                break;
            case stomatch::PlanKind::limit:
                plan = stomatch::build_limit(inst->v, sol->v);
                break;
            case stomatch::PlanKind::amortized:
                plan = stomatch::build_amortized(inst->v, sol->v, beta_drop);
                break;
        }
        *out = new stomatch_plan{std::move(plan)};
    });
}

stomatch_status stomatch_plan_to_json(const stomatch_instance* inst, const stomatch_plan* plan,
                                      char** out) {
    if (!inst || !plan || !out) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] { put(out, plan->v.to_json(inst->v)); });
}

stomatch_status stomatch_plan_verify(const stomatch_instance* inst, const stomatch_solution* sol,
                                     const stomatch_plan* plan, int* ok, char** report_json) {
    if (!inst || !sol || !plan) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] {
        const stomatch::PlanPropertyReport rep =
            stomatch::verify_plan_properties(inst->v, sol->v, plan->v);
        if (ok) *ok = rep.ok() ? 1 : 0;
        put(report_json, rep.to_json());
    });
}

void stomatch_plan_free(stomatch_plan* plan) { delete plan; }

/* ---- Monte Carlo studies ---- */

stomatch_status stomatch_monte_carlo(const stomatch_instance* inst, const stomatch_plan* plan,
                                     const char* model, long long trials, uint64_t seed,
                                     int want_opt, char** report_json, char** gain_csv) {
    if (!inst || !plan || !model) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] {
        const stomatch::MCReport rep =
            stomatch::monte_carlo(inst->v, plan->v, stomatch::arrival_model_from_string(model),
                                  trials, seed, want_opt != 0);
        put(report_json, rep.to_json(inst->v));
        put(gain_csv, rep.gain_curve_csv());
    });
}

stomatch_status stomatch_match_prob(const stomatch_instance* inst, const stomatch_solution* sol,
                                    const stomatch_plan* plan, const char* model, long long trials,
                                    uint64_t seed, int* ok, char** report_json, char** csv) {
    if (!inst || !sol || !plan || !model)
        return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] {
        const stomatch::MatchProbReport rep =
            stomatch::match_prob_report(inst->v, sol->v, plan->v,
                                        stomatch::arrival_model_from_string(model), trials, seed);
        if (ok) *ok = rep.ok() ? 1 : 0;
        put(report_json, rep.to_json(inst->v));
        put(csv, rep.csv(inst->v));
    });
}

stomatch_status stomatch_monotonicity(const stomatch_instance* inst, const stomatch_plan* plan,
                                      long long trials, uint64_t seed, int* ok,
                                      char** report_json) {
    if (!inst || !plan) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] {
        const stomatch::MonotonicityReport rep =
            stomatch::monotonicity_report(inst->v, plan->v, trials, seed);
        if (ok) *ok = rep.ok() ? 1 : 0;
        put(report_json, rep.to_json());
    });
}

stomatch_status stomatch_model_comparison(const stomatch_instance* inst,
                                          const stomatch_plan* plan, long long trials,
                                          uint64_t seed, int* ok, char** report_json) {
    if (!inst || !plan) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] {
        const stomatch::ModelComparison rep =
            stomatch::model_comparison(inst->v, plan->v, trials, seed);
        if (ok) *ok = rep.ok() ? 1 : 0;
        put(report_json, rep.to_json());
    });
}

stomatch_status stomatch_empirical_lp(const stomatch_instance* inst, const char* model,
                                      long long trials, uint64_t seed, int* ok,
                                      char** report_json) {
    if (!inst || !model) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] {
        const stomatch::LpFeasibilityReport rep = stomatch::empirical_lp_feasibility(
            inst->v, stomatch::arrival_model_from_string(model), trials, seed);
        if (ok) *ok = rep.ok() ? 1 : 0;
        put(report_json, rep.to_json());
    });
}

/* ---- scalar analysis functions ---- */

stomatch_status stomatch_phi(double x, double y, double* out) {
    if (!out) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] { *out = stomatch::phi(x, y); });
}

stomatch_status stomatch_unmatched_after_first(double x, double y, double* out) {
    if (!out) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] { *out = stomatch::unmatched_after_first(x, y); });
}

stomatch_status stomatch_kappa(double beta, double x, double* out) {
    if (!out) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] { *out = stomatch::kappa(beta, x); });
}

stomatch_status stomatch_delta(double x, double beta_drop, double* out) {
    if (!out) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] { *out = stomatch::delta(x, beta_drop); });
}

stomatch_status stomatch_poisson_tail(double lam, double* out) {
    if (!out) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] { *out = stomatch::poisson_tail(lam); });
}

/* ---- verification ---- */

stomatch_status stomatch_verify_functions(double grid_step, int* ok, char** report_json) {
    return guarded([&] {
        const stomatch::FunctionPropertyReport rep = stomatch::verify_function_properties(grid_step);
        if (ok) *ok = rep.ok() ? 1 : 0;
        put(report_json, rep.to_json());
    });
}

stomatch_status stomatch_certificate(const char* theorem, double grid_step, double quad_tol,
                                     double beta_drop, int* passed, char** summary_json,
                                     char** csv) {
    if (!theorem) return fail_status(STOMATCH_ERR_VALIDATE, "null argument");
    return guarded([&] {
        const std::string name = theorem;
        stomatch::RatioCertificate cert;
        if (name == "t15")
            cert = stomatch::certificate_t15(grid_step);
        else if (name == "t19")
            cert = stomatch::certificate_t19(quad_tol, grid_step);
        else if (name == "t22")
            cert = stomatch::certificate_t22(beta_drop, grid_step);
        else
            stomatch::fail(stomatch::ErrorCode::validate,
                           "unknown certificate \"" + name + "\"");
        if (passed) *passed = cert.passed ? 1 : 0;
        put(summary_json, cert.summary_json());
        put(csv, cert.csv());
    });
}

stomatch_status stomatch_jensen_battery(long long cases, uint64_t seed, int* ok,
                                        char** report_json) {
    if (cases < 1) return fail_status(STOMATCH_ERR_VALIDATE, "cases must be positive");
    return guarded([&] {
        const double betas[] = {1.0, 1.5, 2.0, 3.0};
        double worst_upper = -1e300;   // lhs - rhs, must stay <= 0
        double worst_lower = -1e300;   // Lambda f(mean) - lhs, must stay <= 0
        std::vector<std::string> violations;
        for (long long c = 0; c < cases; ++c) {
            stomatch::Rng rng(stomatch::derive_seed(seed, 11, static_cast<std::uint64_t>(c)));
            const JensenCase jc = random_feasible_column(rng);
            const double lam =
                std::accumulate(jc.lambda.begin(), jc.lambda.end(), 0.0);
            const double xj = std::accumulate(jc.x.begin(), jc.x.end(), 0.0);
            for (double b : betas) {
                const stomatch::StepFunction f = stomatch::StepFunction::hinge(b);
                const auto [lhs, rhs] = stomatch::jensen_converse_check(f, jc.lambda, jc.x);
                worst_upper = std::max(worst_upper, lhs - rhs);
                if (lhs > rhs + 1e-9 && violations.size() < 20)
                    violations.push_back("case " + std::to_string(c) + " hinge(" +
                                         std::to_string(b) + "): sum " + std::to_string(lhs) +
                                         " exceeds integral " + std::to_string(rhs));
                const double convex_floor = lam * f(xj / lam);
                worst_lower = std::max(worst_lower, convex_floor - lhs);
                if (convex_floor > lhs + 1e-9 && violations.size() < 20)
                    violations.push_back("case " + std::to_string(c) + " hinge(" +
                                         std::to_string(b) + "): convexity floor " +
                                         std::to_string(convex_floor) + " exceeds sum " +
                                         std::to_string(lhs));
            }
        }
        nlohmann::json doc;
        doc["cases"] = cases;
        doc["functions"] = {"hinge(1)", "hinge(1.5)", "hinge(2)", "hinge(3)"};
        doc["worst_upper_gap"] = worst_upper;
        doc["worst_lower_gap"] = worst_lower;
        doc["violations"] = violations;
        doc["ok"] = violations.empty();
        if (ok) *ok = violations.empty() ? 1 : 0;
        put(report_json, doc.dump(2) + "\n");
    });
}

} /* extern "C" */
