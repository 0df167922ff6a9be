#include <cmath>
#include <cstddef>
#include <vector>

#include "stomatch/error.hpp"
#include "stomatch/lp.hpp"

namespace stomatch {

namespace {

constexpr double kPivotEps = 1e-11;    // entries below this never pivot
constexpr double kReducedEps = 1e-10;  // optimality threshold on reduced costs

} // namespace

LpResult lp_solve(int n_vars, const std::vector<double>& objective, const std::vector<LpRow>& rows) {
    if (static_cast<int>(objective.size()) != n_vars)
        fail(ErrorCode::internal, "lp_solve: objective size mismatch");
    if (n_vars == 0) return {{}, 0.0, 0};

    const int m = static_cast<int>(rows.size());
    const int width = n_vars + m + 1;   // structural vars, slacks, rhs

    // Tableau in row-major order; last column is the rhs, last row the
    // negated reduced costs.
    std::vector<double> tab(static_cast<std::size_t>(m + 1) * width, 0.0);
    auto at = [&](int r, int c) -> double& { return tab[static_cast<std::size_t>(r) * width + c]; };

    for (int r = 0; r < m; ++r) {
        if (rows[r].rhs < -1e-12) fail(ErrorCode::internal, "lp_solve: negative rhs breaks the slack basis");
        for (const auto& [v, coef] : rows[r].coeffs) {
            if (v < 0 || v >= n_vars) fail(ErrorCode::internal, "lp_solve: coefficient index out of range");
            at(r, v) += coef;
        }
        at(r, n_vars + r) = 1.0;
        at(r, width - 1) = std::max(rows[r].rhs, 0.0);
    }
    for (int v = 0; v < n_vars; ++v) at(m, v) = -objective[v];

    std::vector<int> basis(m);
    for (int r = 0; r < m; ++r) basis[r] = n_vars + r;

    const int bland_after = 20 * (m + n_vars) + 200;
    const int iter_cap = 400 * (m + n_vars) + 5000;
    int iter = 0;
    for (;; ++iter) {
        if (iter > iter_cap) fail(ErrorCode::numeric, "lp_solve: iteration cap exceeded");
        const bool bland = iter > bland_after;

        // Entering column.
        int col = -1;
        double best = -kReducedEps;
        for (int c = 0; c < n_vars + m; ++c) {
            const double rc = at(m, c);
            if (bland) {
                if (rc < -kReducedEps) { col = c; break; }
            } else if (rc < best) {
                best = rc;
                col = c;
            }
        }
        if (col < 0) break;   // optimal

        // Leaving row by minimum ratio; ties to the smallest basis variable
        // keep Bland's rule honest and the run deterministic.
        int row = -1;
        double best_ratio = 0.0;
        for (int r = 0; r < m; ++r) {
            const double a = at(r, col);
            if (a <= kPivotEps) continue;
            const double ratio = at(r, width - 1) / a;
            if (row < 0 || ratio < best_ratio - 1e-12 ||
                (ratio < best_ratio + 1e-12 && basis[r] < basis[row])) {
                row = r;
                best_ratio = ratio;
            }
        }
        if (row < 0) fail(ErrorCode::numeric, "lp_solve: unbounded LP");

        // Pivot.
        const double piv = at(row, col);
        for (int c = 0; c < width; ++c) at(row, c) /= piv;
        at(row, col) = 1.0;
        for (int r = 0; r <= m; ++r) {
            if (r == row) continue;
            const double f = at(r, col);
            if (f == 0.0) continue;
            for (int c = 0; c < width; ++c) at(r, c) -= f * at(row, c);
            at(r, col) = 0.0;
        }
        if (at(row, width - 1) < 0.0) at(row, width - 1) = 0.0;   // degeneracy dust
        basis[row] = col;
    }

    LpResult res;
    res.x.assign(n_vars, 0.0);
    for (int r = 0; r < m; ++r)
        if (basis[r] < n_vars) res.x[basis[r]] = at(r, width - 1);
    double obj = 0.0;
    for (int v = 0; v < n_vars; ++v) obj += objective[v] * res.x[v];
    res.objective = obj;
    res.iterations = iter;
    return res;
}

} // namespace stomatch
