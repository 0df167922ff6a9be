#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>

#include "stomatch.h"

namespace {

// Takes ownership of a C string returned by the library.
std::string take(char* s) {
    REQUIRE(s != nullptr);
    std::string out(s);
    stomatch_string_free(s);
    return out;
}

struct InstanceGuard {
    stomatch_instance* p = nullptr;
    ~InstanceGuard() { stomatch_instance_free(p); }
};
struct SolutionGuard {
    stomatch_solution* p = nullptr;
    ~SolutionGuard() { stomatch_solution_free(p); }
};
struct PlanGuard {
    stomatch_plan* p = nullptr;
    ~PlanGuard() { stomatch_plan_free(p); }
};

} // namespace

TEST_CASE("version and error plumbing") {
    const char* v = stomatch_version();
    REQUIRE(v != nullptr);
    CHECK(std::strlen(v) > 0);

    stomatch_instance* inst = nullptr;
    CHECK(stomatch_instance_from_json("not json", &inst) == STOMATCH_ERR_PARSE);
    CHECK(inst == nullptr);
    CHECK(std::strlen(stomatch_last_error()) > 0);

    CHECK(stomatch_instance_from_json(nullptr, &inst) == STOMATCH_ERR_VALIDATE);
    CHECK(stomatch_instance_to_json(nullptr, nullptr) == STOMATCH_ERR_VALIDATE);
    stomatch_string_free(nullptr);   // must be a no-op
}

TEST_CASE("structured generation, solving and round trips") {
    InstanceGuard inst;
    REQUIRE(stomatch_instance_gen_structured("star", 1, 0, &inst.p) == STOMATCH_OK);

    int n_types = 0, n_offline = 0;
    REQUIRE(stomatch_instance_counts(inst.p, &n_types, &n_offline) == STOMATCH_OK);
    CHECK(n_types == 1);
    CHECK(n_offline == 1);
    double rate = 0.0;
    REQUIRE(stomatch_instance_total_rate(inst.p, &rate) == STOMATCH_OK);
    CHECK(rate == doctest::Approx(1.0));

    const std::string json = take([&] {
        char* s = nullptr;
        REQUIRE(stomatch_instance_to_json(inst.p, &s) == STOMATCH_OK);
        return s;
    }());
    InstanceGuard again;
    REQUIRE(stomatch_instance_from_json(json.c_str(), &again.p) == STOMATCH_OK);
    char* json2 = nullptr;
    REQUIRE(stomatch_instance_to_json(again.p, &json2) == STOMATCH_OK);
    CHECK(take(json2) == json);

    SolutionGuard sol;
    REQUIRE(stomatch_solve_natural(inst.p, 1e-9, &sol.p) == STOMATCH_OK);
    double obj = 0.0;
    REQUIRE(stomatch_solution_objective(sol.p, &obj) == STOMATCH_OK);
    CHECK(obj == doctest::Approx(0.6321205588285577).epsilon(1e-9));

    double viol = 1.0;
    char* worst = nullptr;
    REQUIRE(stomatch_check_feasible_natural(inst.p, sol.p, &viol, &worst) == STOMATCH_OK);
    CHECK(viol <= 1e-8);
    take(worst);

    SolutionGuard jl;
    REQUIRE(stomatch_solve_jaillet_lu(inst.p, &jl.p) == STOMATCH_OK);
    double jl_obj = 0.0;
    REQUIRE(stomatch_solution_objective(jl.p, &jl_obj) == STOMATCH_OK);
    CHECK(jl_obj >= obj - 1e-7);

    char* sol_json = nullptr;
    REQUIRE(stomatch_solution_to_json(inst.p, sol.p, &sol_json) == STOMATCH_OK);
    CHECK(take(sol_json).find("x_islack") != std::string::npos);

    CHECK(stomatch_instance_gen_structured("pentagon", 3, 0, &again.p) == STOMATCH_ERR_DOMAIN);
    CHECK(stomatch_solve_natural(inst.p, 0.0, &sol.p) != STOMATCH_OK);
}

TEST_CASE("random generation respects the requested shape") {
    InstanceGuard inst;
    REQUIRE(stomatch_instance_gen_random(4, 3, 0.8, 0.5, 2.0, 1.0, 5.0, "general", 7,
                                         &inst.p) == STOMATCH_OK);
    int n_types = 0, n_offline = 0;
    REQUIRE(stomatch_instance_counts(inst.p, &n_types, &n_offline) == STOMATCH_OK);
    CHECK(n_types == 4);
    CHECK(n_offline == 3);
    CHECK(stomatch_instance_gen_random(0, 3, 0.8, 0.5, 2.0, 1.0, 5.0, "general", 7, &inst.p) ==
          STOMATCH_ERR_DOMAIN);
    CHECK(stomatch_instance_gen_random(4, 3, 0.8, 0.5, 2.0, 1.0, 5.0, "lopsided", 7, &inst.p) ==
          STOMATCH_ERR_PARSE);
}

TEST_CASE("plans and Monte Carlo studies through the C surface") {
    InstanceGuard inst;
    REQUIRE(stomatch_instance_gen_structured("complete_uniform", 2, 2, &inst.p) == STOMATCH_OK);
    SolutionGuard sol;
    REQUIRE(stomatch_solve_natural(inst.p, 1e-9, &sol.p) == STOMATCH_OK);

    PlanGuard plan;
    REQUIRE(stomatch_plan_build(inst.p, sol.p, "limit", 1.0, 0.299, &plan.p) == STOMATCH_OK);
    int ok = 0;
    char* report = nullptr;
    REQUIRE(stomatch_plan_verify(inst.p, sol.p, plan.p, &ok, &report) == STOMATCH_OK);
    CHECK(ok == 1);
    CHECK(take(report).find("\"failures\"") != std::string::npos);

    char* plan_json = nullptr;
    REQUIRE(stomatch_plan_to_json(inst.p, plan.p, &plan_json) == STOMATCH_OK);
    CHECK(take(plan_json).find("\"kind\": \"limit\"") != std::string::npos);

    PlanGuard bogus;
    CHECK(stomatch_plan_build(inst.p, sol.p, "eager", 1.0, 0.299, &bogus.p) == STOMATCH_ERR_PARSE);

    char* mc_json = nullptr;
    char* gain_csv = nullptr;
    REQUIRE(stomatch_monte_carlo(inst.p, plan.p, "poisson", 500, 3, 1, &mc_json, &gain_csv) ==
            STOMATCH_OK);
    CHECK(take(mc_json).find("\"ratio_vs_nat\"") != std::string::npos);
    CHECK(take(gain_csv).rfind("n,mean_gain,stderr\n", 0) == 0);
    REQUIRE(stomatch_monte_carlo(inst.p, plan.p, "poisson", 100, 3, 0, &mc_json, nullptr) ==
            STOMATCH_OK);
    take(mc_json);
    CHECK(stomatch_monte_carlo(inst.p, plan.p, "hourly", 100, 3, 0, &mc_json, nullptr) ==
          STOMATCH_ERR_PARSE);

    char* csv = nullptr;
    REQUIRE(stomatch_match_prob(inst.p, sol.p, plan.p, "poisson", 2000, 5, &ok, &report, &csv) ==
            STOMATCH_OK);
    CHECK(ok == 1);
    take(report);
    CHECK(take(csv).rfind("offline_id,freq,stderr,bound\n", 0) == 0);

    REQUIRE(stomatch_monotonicity(inst.p, plan.p, 4000, 7, &ok, &report) == STOMATCH_OK);
    CHECK(ok == 1);
    take(report);

    REQUIRE(stomatch_model_comparison(inst.p, plan.p, 2000, 9, &ok, &report) == STOMATCH_OK);
    CHECK(ok == 1);
    take(report);

    REQUIRE(stomatch_empirical_lp(inst.p, "poisson", 4000, 11, &ok, &report) == STOMATCH_OK);
    CHECK(ok == 1);
    take(report);
}

TEST_CASE("scalar functions and certificates") {
    double out = 0.0;
    REQUIRE(stomatch_phi(1.0, 1.0, &out) == STOMATCH_OK);
    CHECK(out == doctest::Approx(std::log(2.0) - 1.0).epsilon(1e-12));
    REQUIRE(stomatch_unmatched_after_first(1.0, 1.0, &out) == STOMATCH_OK);
    CHECK(out == doctest::Approx(0.2642411176571153).epsilon(1e-12));
    REQUIRE(stomatch_kappa(1.0, 0.5, &out) == STOMATCH_OK);
    CHECK(out == doctest::Approx(0.19314718055994531).epsilon(1e-12));
    REQUIRE(stomatch_delta(0.0, 0.299, &out) == STOMATCH_OK);
    CHECK(out == doctest::Approx(0.299).epsilon(1e-12));
    REQUIRE(stomatch_poisson_tail(1.0, &out) == STOMATCH_OK);
    CHECK(out == doctest::Approx(0.36787944117144233).epsilon(1e-12));
    CHECK(stomatch_phi(1.0, 2.0, &out) == STOMATCH_ERR_DOMAIN);
    CHECK(stomatch_poisson_tail(2.5, &out) == STOMATCH_ERR_DOMAIN);

    int ok = 0;
    char* report = nullptr;
    REQUIRE(stomatch_verify_functions(1e-2, &ok, &report) == STOMATCH_OK);
    CHECK(ok == 1);
    take(report);

    int passed = 0;
    char* summary = nullptr;
    char* csv = nullptr;
    REQUIRE(stomatch_certificate("t15", 1e-3, 1e-10, 0.299, &passed, &summary, &csv) ==
            STOMATCH_OK);
    CHECK(passed == 1);
    const std::string s = take(summary);
    CHECK(s.find("\"theorem\": \"t15\"") != std::string::npos);
    CHECK(s.find("\"passed\": true") != std::string::npos);
    CHECK(take(csv).rfind("x,bound_value,ratio\n", 0) == 0);
    CHECK(stomatch_certificate("t99", 1e-3, 1e-10, 0.299, &passed, &summary, &csv) ==
          STOMATCH_ERR_VALIDATE);

    REQUIRE(stomatch_jensen_battery(50, 13, &ok, &report) == STOMATCH_OK);
    CHECK(ok == 1);
    CHECK(take(report).find("\"worst_upper_gap\"") != std::string::npos);
    CHECK(stomatch_jensen_battery(0, 13, &ok, &report) != STOMATCH_OK);
}
