#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stomatch/instance.hpp"
#include "stomatch/lp.hpp"
#include "stomatch/sampling.hpp"

namespace stomatch {

enum class ArrivalModel { poisson, fixed };
std::string to_string(ArrivalModel model);
ArrivalModel arrival_model_from_string(const std::string& s);

struct ArrivalSequence {
    ArrivalModel model = ArrivalModel::poisson;
    std::vector<int> arrivals;   // type indices, in arrival order
    std::uint64_t seed = 0;
};

// poisson: count ~ Poisson(total rate), then i.i.d. types with probability
// rate_i / total. fixed: exactly round(total) i.i.d. types; the total rate
// must be integral to 1e-9.
ArrivalSequence draw_arrivals(const Instance& inst, ArrivalModel model, std::uint64_t seed);

struct TrialResult {
    struct Match {
        int arrival;
        int type;
        int offline;
        double weight;
    };
    std::vector<Match> matched;
    double total_weight = 0.0;
    std::vector<double> per_index_gain;       // one entry per arrival
    std::vector<int> offline_matched_by;      // type index, -1 if unmatched
};

// Executes the two-option rule: match the first entry if it is a real,
// unmatched vertex; otherwise the second. The dummy counts as matched.
TrialResult run_pair_sampling(const Instance& inst, const SamplingPlan& plan,
                              const ArrivalSequence& arrivals, std::uint64_t seed);

// Exact maximum-weight matching of the realized graph by incremental
// best-gain augmenting paths; ties broken by (arrival index, offline id).
std::pair<double, std::vector<std::pair<int, int>>> offline_optimum(const Instance& inst,
                                                                    const ArrivalSequence& arrivals);

// Frequency that a thinned arrival (rate y out of x) occurs strictly after
// the first arrival of the full stream.
double simulate_unmatched_after_first(double x, double y, long long samples, std::uint64_t seed);

struct GainPoint {
    double mean = 0.0;
    double se = 0.0;
    long long count = 0;
};

struct MCReport {
    long long trials = 0;
    double mean_alg = 0.0;
    double se_alg = 0.0;
    bool has_opt = false;
    double mean_opt = 0.0;
    double se_opt = 0.0;
    double nat_objective = 0.0;
    double ratio_vs_nat = 0.0;                               // mean_alg / NAT when NAT > 0
    std::vector<std::pair<double, double>> offline_match_freq;   // (freq, se) per offline index
    std::vector<GainPoint> gain_curve;                       // positions 1..floor(total rate)

    std::string to_json(const Instance& inst) const;
    std::string gain_curve_csv() const;                      // n, mean_gain, stderr
};

// Deterministic chunked Monte Carlo; results are identical for any thread
// count (STOMATCH_THREADS, 0 = auto).
MCReport monte_carlo(const Instance& inst, const SamplingPlan& plan, ArrivalModel model,
                     long long trials, std::uint64_t seed, bool want_opt);

struct MatchProbRow {
    int offline = 0;
    double freq = 0.0;
    double se = 0.0;
    double bound = 0.0;
    bool flagged = false;   // freq + 3 se < bound
};

struct MatchProbReport {
    long long trials = 0;
    std::vector<MatchProbRow> rows;
    bool ok() const;
    std::string to_json(const Instance& inst) const;
    std::string csv(const Instance& inst) const;   // offline_id, freq, stderr, bound
};

// Per-offline empirical match frequency against the closed-form lower bound
// (the drop-adjusted bound for amortized plans, with the interval-plan
// reference table).
MatchProbReport match_prob_report(const Instance& inst, const FractionalSolution& sol,
                                  const SamplingPlan& plan, ArrivalModel model, long long trials,
                                  std::uint64_t seed);

struct MonotonicityReport {
    long long trials = 0;
    int positions = 0;
    bool ratio_mode = false;     // amortized plans: per-position ratio bound
    double ratio_bound = 0.0;    // 2 / (1 - beta_drop) in ratio mode
    std::vector<GainPoint> gain_curve;
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
    std::string to_json() const;
};

// Fixed-count model only. Non-amortized plans: per-position gains must be
// non-increasing within 3 sigma (paired). Amortized plans: gain at any later
// position at most ratio_bound times any earlier one, within 3 sigma.
MonotonicityReport monotonicity_report(const Instance& inst, const SamplingPlan& plan,
                                       long long trials, std::uint64_t seed);

struct ModelComparison {
    long long trials = 0;
    double opt_fixed_mean = 0.0, opt_fixed_se = 0.0;
    double opt_poisson_mean = 0.0, opt_poisson_se = 0.0;
    double alg_fixed_mean = 0.0, alg_fixed_se = 0.0;
    double alg_poisson_mean = 0.0, alg_poisson_se = 0.0;
    bool opt_ordering_ok = false;        // OPT_fixed >= OPT_poisson - 3 sigma
    bool alg_ordering_checked = false;   // only for unweighted, non-amortized plans
    bool alg_ordering_ok = false;
    double tail_factor = 0.0;            // 1 - poisson_tail(total rate)
    bool floor_ok = false;               // OPT_poisson >= tail_factor * OPT_fixed - 3 sigma
    bool ok() const;
    std::string to_json() const;
};

ModelComparison model_comparison(const Instance& inst, const SamplingPlan& plan, long long trials,
                                 std::uint64_t seed);

struct LpFeasibilityReport {
    long long trials = 0;
    double max_adjusted_violation = 0.0;   // worst constraint violation after 3-sigma slack
    std::string worst_constraint;
    bool feasible_ok = false;
    double mean_opt = 0.0, se_opt = 0.0;
    double nat_objective = 0.0;
    bool opt_le_nat_ok = false;
    bool ok() const { return feasible_ok && opt_le_nat_ok; }
    std::string to_json() const;
};

// Matched frequencies from per-trial optima, checked against the fractional
// relaxation's constraints with statistical slack, plus mean OPT <= NAT.
LpFeasibilityReport empirical_lp_feasibility(const Instance& inst, ArrivalModel model,
                                             long long trials, std::uint64_t seed);

} // namespace stomatch
