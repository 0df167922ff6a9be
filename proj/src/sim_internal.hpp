#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "stomatch/error.hpp"
#include "stomatch/instance.hpp"
#include "stomatch/rng.hpp"
#include "stomatch/sampling.hpp"
#include "stomatch/simulator.hpp"

namespace stomatch::detail {

// Cumulative pmfs and dense weight lookups, built once per study so trial
// execution stays allocation-light.
struct CompiledPlan {
    const Instance* inst;
    int m;
    std::vector<std::vector<double>> cum;                      // per type
    std::vector<std::vector<std::pair<int, int>>> pairs;       // per type
    std::vector<std::vector<double>> weight;                   // per type by offline; -1 = no edge

    CompiledPlan(const Instance& instance, const SamplingPlan& plan) : inst(&instance) {
        m = static_cast<int>(instance.offline().size());
        const std::size_t n = instance.types().size();
        if (plan.dists.size() != n)
            fail(ErrorCode::domain, "plan does not cover every type of the instance");
        cum.resize(n);
        pairs.resize(n);
        weight.resize(n);
        for (std::size_t t = 0; t < n; ++t) {
            weight[t].assign(m, -1.0);
            for (const Edge& e : instance.types()[t].edges) weight[t][e.offline] = e.weight;
            double run = 0.0;
            for (const PairDistribution::Entry& e : plan.dists[t].support) {
                if (e.first < 0 || e.first > m || e.second < 0 || e.second > m)
                    fail(ErrorCode::domain, "plan entry outside the offline range");
                run += e.prob;
                cum[t].push_back(run);
                pairs[t].emplace_back(e.first, e.second);
            }
        }
    }

    TrialResult run(const ArrivalSequence& seq, std::uint64_t seed) const {
        Rng rng(seed, 2);
        TrialResult res;
        res.offline_matched_by.assign(m, -1);
        res.per_index_gain.assign(seq.arrivals.size(), 0.0);
        for (std::size_t idx = 0; idx < seq.arrivals.size(); ++idx) {
            const int t = seq.arrivals[idx];
            if (t < 0 || t >= static_cast<int>(cum.size()) || cum[t].empty())
                fail(ErrorCode::domain, "arriving type has no sampling distribution");
            const double u = rng.next_double() * cum[t].back();
            const std::size_t pos =
                std::upper_bound(cum[t].begin(), cum[t].end(), u) - cum[t].begin();
            const auto [j, k] = pairs[t][std::min(pos, pairs[t].size() - 1)];
            int target = -1;
            if (j != m && res.offline_matched_by[j] < 0)
                target = j;
            else if (k != m && res.offline_matched_by[k] < 0)
                target = k;
            if (target < 0) continue;
            const double w = weight[t][target];
            if (w < 0.0) fail(ErrorCode::internal, "sampled pair is not an instance edge");
            res.offline_matched_by[target] = t;
            res.matched.push_back({static_cast<int>(idx), t, target, w});
            res.per_index_gain[idx] = w;
            res.total_weight += w;
        }
        return res;
    }
};

// Standard error from power sums; zero for a single observation.
inline double sample_se(double sum, double sumsq, long long t) {
    if (t <= 1) return 0.0;
    const double var = (sumsq - sum * sum / static_cast<double>(t)) / static_cast<double>(t - 1);
    return var > 0.0 ? std::sqrt(var / static_cast<double>(t)) : 0.0;
}

} // namespace stomatch::detail
