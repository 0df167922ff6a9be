#pragma once

#include <string>
#include <utility>
#include <vector>

#include "stomatch/instance.hpp"

namespace stomatch {

// ---- generic dense LP: maximize c.x subject to A x <= b, x >= 0 ----------
//
// Every rhs here is >= 0, so the slack basis is the starting feasible point.
struct LpRow {
    std::vector<std::pair<int, double>> coeffs;   // (variable index, coefficient)
    double rhs = 0.0;
};

struct LpResult {
    std::vector<double> x;
    double objective = 0.0;
    int iterations = 0;
};

// Deterministic tableau simplex: Dantzig pricing with lowest-index tie breaks,
// switching to Bland's rule when iterations pile up. Throws Error(numeric) on
// unboundedness or iteration-cap exhaustion; never returns silently wrong.
LpResult lp_solve(int n_vars, const std::vector<double>& objective, const std::vector<LpRow>& rows);

// ---- solutions of the matching LPs ----------------------------------------

struct FractionalSolution {
    // x[t][e] is parallel to Instance::types()[t].edges[e].
    std::vector<std::vector<double>> x;
    std::vector<double> x_j;        // per offline vertex: sum_i x_ij
    std::vector<double> x_islack;   // per type: rate_i - sum_j x_ij
    double objective = 0.0;

    std::string to_json(const Instance& inst) const;
};

// Derives marginals, slack and objective from a raw assignment (used by tests
// and by callers that construct solutions by hand). Negative entries below
// -1e-12 are rejected; tiny negatives are clamped to zero.
FractionalSolution make_solution(const Instance& inst, std::vector<std::vector<double>> x);

struct SeparationResult {
    int offline = -1;
    std::vector<int> subset;   // type indices of the worst prefix (empty only for isolated vertices)
    double lhs = 0.0;
    double rhs = 0.0;
    double violation = -1.0;   // lhs - rhs; <= 0 means feasible for this vertex
};

// Sorts the neighbors of offline vertex j by x_ij / rate_i descending (ties by
// type id ascending) and returns the prefix maximizing lhs - (1 - exp(-sum of rates)).
SeparationResult separation_oracle(const Instance& inst, const std::vector<std::vector<double>>& x, int offline);

struct FeasibilityReport {
    double max_violation = 0.0;
    std::string worst_constraint;
};

FeasibilityReport check_feasible_natural(const Instance& inst, const std::vector<std::vector<double>>& x);

// Row generation with the prefix separation oracle; see module docs in the
// implementation for the seeded constraint set. tol bounds the final violation.
FractionalSolution solve_natural(const Instance& inst, double tol = 1e-9);

// Comparison LP with per-vertex budget 1 and the positive-part row linearized
// through auxiliary variables.
FractionalSolution solve_jaillet_lu(const Instance& inst);

} // namespace stomatch
