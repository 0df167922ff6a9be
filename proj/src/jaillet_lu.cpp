#include <cmath>
#include <vector>

#include "lp_internal.hpp"
#include "stomatch/lp.hpp"

namespace stomatch {

FractionalSolution solve_jaillet_lu(const Instance& inst) {
    const detail::EdgeVars ev = detail::index_edges(inst);
    if (ev.count == 0) return make_solution(inst, std::vector<std::vector<double>>(inst.types().size()));

    // Variables: x per edge, then y per edge with y >= 2x - rate linearized as
    // 2x - y <= rate (y >= 0 comes from the nonnegativity of LP variables).
    const int n = 2 * ev.count;
    std::vector<double> obj(n, 0.0);
    for (int v = 0; v < ev.count; ++v) obj[v] = ev.weight[v];

    std::vector<LpRow> rows;
    for (std::size_t t = 0; t < inst.types().size(); ++t) {
        LpRow row;
        for (int v : ev.var_of[t]) row.coeffs.emplace_back(v, 1.0);
        row.rhs = inst.types()[t].rate;
        if (!row.coeffs.empty()) rows.push_back(std::move(row));
    }
    const double one_minus_ln2 = 1.0 - std::log(2.0);
    std::vector<LpRow> budget(inst.offline().size()), posmass(inst.offline().size());
    for (int v = 0; v < ev.count; ++v) {
        const auto [t, e] = ev.edge_of[v];
        const int j = inst.types()[t].edges[e].offline;
        budget[j].coeffs.emplace_back(v, 1.0);
        posmass[j].coeffs.emplace_back(ev.count + v, 1.0);
        rows.push_back({{{v, 2.0}, {ev.count + v, -1.0}}, inst.types()[t].rate});
    }
    for (std::size_t j = 0; j < inst.offline().size(); ++j) {
        if (budget[j].coeffs.empty()) continue;
        budget[j].rhs = 1.0;
        posmass[j].rhs = one_minus_ln2;
        rows.push_back(std::move(budget[j]));
        rows.push_back(std::move(posmass[j]));
    }

    const LpResult lp = lp_solve(n, obj, rows);
    return make_solution(inst, detail::unflatten(inst, ev, std::vector<double>(lp.x.begin(), lp.x.begin() + ev.count)));
}

} // namespace stomatch
