#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include <json.hpp>

#include "lp_internal.hpp"
#include "stomatch/error.hpp"
#include "stomatch/lp.hpp"

namespace stomatch {

using detail::EdgeVars;
using detail::index_edges;
using detail::unflatten;

namespace {

void check_shape(const Instance& inst, const std::vector<std::vector<double>>& x, const char* who) {
    if (x.size() != inst.types().size()) fail(ErrorCode::domain, std::string(who) + ": assignment shape mismatch");
    for (std::size_t t = 0; t < x.size(); ++t)
        if (x[t].size() != inst.types()[t].edges.size())
            fail(ErrorCode::domain, std::string(who) + ": assignment shape mismatch for type " + inst.types()[t].id);
}

} // namespace

FractionalSolution make_solution(const Instance& inst, std::vector<std::vector<double>> x) {
    check_shape(inst, x, "make_solution");
    FractionalSolution sol;
    sol.x_j.assign(inst.offline().size(), 0.0);
    sol.x_islack.assign(inst.types().size(), 0.0);
    double obj = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        double row = 0.0;
        for (std::size_t e = 0; e < x[t].size(); ++e) {
            double& v = x[t][e];
            if (v < -1e-12)
                fail(ErrorCode::validate, "solution entry below zero for type " + inst.types()[t].id);
            if (v < 0.0) v = 0.0;
            row += v;
            const Edge& edge = inst.types()[t].edges[e];
            sol.x_j[edge.offline] += v;
            obj += edge.weight * v;
        }
        sol.x_islack[t] = inst.types()[t].rate - row;
    }
    sol.objective = obj;
    sol.x = std::move(x);
    return sol;
}

SeparationResult separation_oracle(const Instance& inst, const std::vector<std::vector<double>>& x, int offline) {
    if (offline < 0 || offline >= static_cast<int>(inst.offline().size()))
        fail(ErrorCode::domain, "separation_oracle: unknown offline vertex index");
    check_shape(inst, x, "separation_oracle");

    struct Neighbor {
        int type;
        double xv;
        double rate;
    };
    std::vector<Neighbor> nbr;
    for (std::size_t t = 0; t < inst.types().size(); ++t) {
        const auto& edges = inst.types()[t].edges;
        for (std::size_t e = 0; e < edges.size(); ++e)
            if (edges[e].offline == offline)
                nbr.push_back({static_cast<int>(t), x[t][e], inst.types()[t].rate});
    }

    SeparationResult best;
    best.offline = offline;
    if (nbr.empty()) return best;   // isolated vertex: nothing to separate

    std::sort(nbr.begin(), nbr.end(), [&](const Neighbor& a, const Neighbor& b) {
        const double ra = a.xv / a.rate, rb = b.xv / b.rate;
        if (ra != rb) return ra > rb;
        return inst.types()[a.type].id < inst.types()[b.type].id;
    });

    double lhs = 0.0, lam = 0.0;
    double best_violation = -std::numeric_limits<double>::infinity();
    std::size_t best_len = 0;
    double best_lhs = 0.0, best_rhs = 0.0;
    for (std::size_t k = 0; k < nbr.size(); ++k) {
        lhs += nbr[k].xv;
        lam += nbr[k].rate;
        const double rhs = -std::expm1(-lam);
        const double violation = lhs - rhs;
        if (violation > best_violation) {
            best_violation = violation;
            best_len = k + 1;
            best_lhs = lhs;
            best_rhs = rhs;
        }
    }
    best.subset.reserve(best_len);
    for (std::size_t k = 0; k < best_len; ++k) best.subset.push_back(nbr[k].type);
    best.lhs = best_lhs;
    best.rhs = best_rhs;
    best.violation = best_violation;
    return best;
}

FeasibilityReport check_feasible_natural(const Instance& inst, const std::vector<std::vector<double>>& x) {
    check_shape(inst, x, "check_feasible_natural");
    FeasibilityReport rep;
    rep.max_violation = -std::numeric_limits<double>::infinity();
    auto consider = [&](double violation, const std::string& what) {
        if (violation > rep.max_violation) {
            rep.max_violation = violation;
            rep.worst_constraint = what;
        }
    };
    for (std::size_t t = 0; t < x.size(); ++t) {
        double row = 0.0;
        for (std::size_t e = 0; e < x[t].size(); ++e) {
            row += x[t][e];
            consider(-x[t][e], "x >= 0 at " + inst.types()[t].id + ":" + inst.offline()[inst.types()[t].edges[e].offline].id);
        }
        consider(row - inst.types()[t].rate, "type capacity of " + inst.types()[t].id);
    }
    for (std::size_t j = 0; j < inst.offline().size(); ++j) {
        SeparationResult sep = separation_oracle(inst, x, static_cast<int>(j));
        if (!sep.subset.empty())
            consider(sep.violation, "prefix constraint at offline " + inst.offline()[j].id);
    }
    if (!std::isfinite(rep.max_violation)) {   // no constraints at all
        rep.max_violation = 0.0;
        rep.worst_constraint = "none";
    }
    return rep;
}

FractionalSolution solve_natural(const Instance& inst, double tol) {
    if (!(tol > 0)) fail(ErrorCode::domain, "solve_natural: tol must be positive");
    const EdgeVars ev = index_edges(inst);
    if (ev.count == 0) return make_solution(inst, std::vector<std::vector<double>>(inst.types().size()));

    std::vector<LpRow> rows;
    // Type capacities.
    for (std::size_t t = 0; t < inst.types().size(); ++t) {
        LpRow row;
        for (int v : ev.var_of[t]) row.coeffs.emplace_back(v, 1.0);
        row.rhs = inst.types()[t].rate;
        if (!row.coeffs.empty()) rows.push_back(std::move(row));
    }

    // Per offline vertex: singleton prefixes and the all-neighbors prefix seed
    // the generation so the first restricted LP is already bounded per vertex.
    std::vector<std::vector<std::pair<int, double>>> nbr_vars(inst.offline().size());  // (var, rate)
    for (int v = 0; v < ev.count; ++v) {
        const auto [t, e] = ev.edge_of[v];
        nbr_vars[inst.types()[t].edges[e].offline].emplace_back(v, inst.types()[t].rate);
    }
    std::vector<std::set<std::vector<int>>> seen(inst.offline().size());
    for (std::size_t j = 0; j < inst.offline().size(); ++j) {
        double lam = 0.0;
        LpRow full;
        std::vector<int> full_key;
        for (const auto& [v, rate] : nbr_vars[j]) {
            rows.push_back({{{v, 1.0}}, -std::expm1(-rate)});
            seen[j].insert({v});
            full.coeffs.emplace_back(v, 1.0);
            full_key.push_back(v);
            lam += rate;
        }
        if (full.coeffs.size() > 1) {
            full.rhs = -std::expm1(-lam);
            std::sort(full_key.begin(), full_key.end());
            seen[j].insert(std::move(full_key));
            rows.push_back(std::move(full));
        }
    }

    FractionalSolution out;
    bool done = false;
    for (int round = 0; round < 1000 && !done; ++round) {
        const LpResult lp = lp_solve(ev.count, ev.weight, rows);
        const auto x = unflatten(inst, ev, lp.x);
        done = true;
        for (std::size_t j = 0; j < inst.offline().size(); ++j) {
            SeparationResult sep = separation_oracle(inst, x, static_cast<int>(j));
            if (sep.subset.empty() || sep.violation <= tol) continue;
            LpRow row;
            std::vector<int> key;
            double lam = 0.0;
            for (int t : sep.subset) {
                // Each subset member contributes its single edge variable to j.
                const auto& edges = inst.types()[t].edges;
                for (std::size_t e = 0; e < edges.size(); ++e)
                    if (edges[e].offline == static_cast<int>(j)) {
                        row.coeffs.emplace_back(ev.var_of[t][e], 1.0);
                        key.push_back(ev.var_of[t][e]);
                    }
                lam += inst.types()[t].rate;
            }
            std::sort(key.begin(), key.end());
            if (!seen[j].insert(std::move(key)).second) continue;   // already present; solver slack will absorb
            row.rhs = -std::expm1(-lam);
            rows.push_back(std::move(row));
            done = false;
        }
        if (done) out = make_solution(inst, x);
    }
    if (!done) fail(ErrorCode::numeric, "solve_natural: row generation did not settle within 1000 rounds");
    return out;
}

std::string FractionalSolution::to_json(const Instance& inst) const {
    nlohmann::json doc;
    doc["objective"] = objective;
    nlohmann::json jx = nlohmann::json::object();
    for (std::size_t t = 0; t < x.size(); ++t)
        for (std::size_t e = 0; e < x[t].size(); ++e)
            jx[inst.types()[t].id + ":" + inst.offline()[inst.types()[t].edges[e].offline].id] = x[t][e];
    doc["x"] = std::move(jx);
    nlohmann::json jj = nlohmann::json::object();
    for (std::size_t j = 0; j < x_j.size(); ++j) jj[inst.offline()[j].id] = x_j[j];
    doc["x_j"] = std::move(jj);
    nlohmann::json js = nlohmann::json::object();
    for (std::size_t t = 0; t < x_islack.size(); ++t) js[inst.types()[t].id] = x_islack[t];
    doc["x_islack"] = std::move(js);
    return doc.dump(2) + "\n";
}

} // namespace stomatch
