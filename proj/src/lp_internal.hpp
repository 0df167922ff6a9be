#pragma once

#include <utility>
#include <vector>

#include "stomatch/instance.hpp"

namespace stomatch::detail {

// Flat variable indexing over the instance's edges, in (type, edge) order.
struct EdgeVars {
    std::vector<std::vector<int>> var_of;          // [type][edge position] -> var
    std::vector<std::pair<int, int>> edge_of;      // var -> (type, edge position)
    std::vector<double> weight;                    // var -> w_ij
    int count = 0;
};

inline EdgeVars index_edges(const Instance& inst) {
    EdgeVars ev;
    ev.var_of.resize(inst.types().size());
    for (std::size_t t = 0; t < inst.types().size(); ++t) {
        const auto& edges = inst.types()[t].edges;
        ev.var_of[t].resize(edges.size());
        for (std::size_t e = 0; e < edges.size(); ++e) {
            ev.var_of[t][e] = ev.count++;
            ev.edge_of.emplace_back(static_cast<int>(t), static_cast<int>(e));
            ev.weight.push_back(edges[e].weight);
        }
    }
    return ev;
}

inline std::vector<std::vector<double>> unflatten(const Instance& inst, const EdgeVars& ev,
                                                  const std::vector<double>& flat) {
    std::vector<std::vector<double>> x(inst.types().size());
    for (std::size_t t = 0; t < inst.types().size(); ++t) {
        x[t].resize(inst.types()[t].edges.size(), 0.0);
        for (std::size_t e = 0; e < x[t].size(); ++e) x[t][e] = flat[ev.var_of[t][e]];
    }
    return x;
}

} // namespace stomatch::detail
