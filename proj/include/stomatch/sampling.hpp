#pragma once

#include <string>
#include <vector>

#include "stomatch/instance.hpp"
#include "stomatch/lp.hpp"

namespace stomatch {

// Pair entries use offline indices 0..m-1; the value m (the offline count)
// stands for the dummy option, spelled "_bot" in exports.
struct PairDistribution {
    struct Entry {
        int first;
        int second;
        double prob;
    };
    int type = -1;                 // index into inst.types()
    std::vector<Entry> support;    // sorted by (first, second), probs > 0
};

struct RateTable {
    int m = 0;                     // offline count; index m = dummy
    std::vector<double> mu;        // (m+1) x (m+1), row-major

    double at(int j, int k) const { return mu[static_cast<std::size_t>(j) * (m + 1) + k]; }
    double& at(int j, int k) { return mu[static_cast<std::size_t>(j) * (m + 1) + k]; }
    double row_sum(int j) const;   // mu_j: total first-entry rate of j
    double col_sum(int k) const;
    double mu_perp(int j) const { return at(m, j); }
    double out_mass(int j) const { return row_sum(j) - at(j, j); }
    double in_mass(int j) const { return col_sum(j) - at(j, j); }
    double total() const;
};

enum class PlanKind { wasteful, beta, limit, amortized };
std::string to_string(PlanKind kind);
PlanKind plan_kind_from_string(const std::string& s);

struct SamplingPlan {
    PlanKind kind = PlanKind::wasteful;
    double beta = 1.0;             // meaningful for kind == beta
    double beta_drop = 0.299;      // meaningful for kind == amortized
    std::vector<PairDistribution> dists;   // one per type, instance order
    RateTable rates;

    std::string to_json(const Instance& inst) const;
};

// Interval construction: per type, subintervals of lengths x_ij (offline-id
// ascending, dummy last) tile the circle [0, lambda_i); the pair (j, k) gets
// the overlap measure of I_j with the half-circle shift of I_k.
SamplingPlan build_wasteful(const Instance& inst, const FractionalSolution& sol);

// Reallocates the dominant vertex's wasted backup mass, scaled by beta;
// types whose lengths all fit in half the circle keep the interval pmf.
SamplingPlan build_beta(const Instance& inst, const FractionalSolution& sol, double beta);

// The beta -> infinity limit in closed form: no (j*, j*) mass except the
// degenerate single-option type.
SamplingPlan build_limit(const Instance& inst, const FractionalSolution& sol);

// Starts from the interval pmf; every pair led by offline j moves a
// delta(x_j) fraction of its mass to the dummy-led pair with the same backup.
SamplingPlan build_amortized(const Instance& inst, const FractionalSolution& sol,
                             double beta_drop = 0.299);

RateTable rate_table(const Instance& inst, const std::vector<PairDistribution>& dists);

struct PlanPropertyFailure {
    std::string property;
    std::string vertex;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct PlanPropertyReport {
    long long checks = 0;
    std::vector<PlanPropertyFailure> failures;
    bool ok() const { return failures.empty(); }
    std::string to_json() const;
};

// Checks pmf normalization, first-entry marginals, rate-table consistency,
// and the per-kind rate identities at tolerance 1e-9 (kappa one-sided).
PlanPropertyReport verify_plan_properties(const Instance& inst, const FractionalSolution& sol,
                                          const SamplingPlan& plan);

} // namespace stomatch
