#include "stomatch/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sim_internal.hpp"
#include "stomatch/error.hpp"
#include "stomatch/rng.hpp"

namespace stomatch {

std::string to_string(ArrivalModel model) {
    return model == ArrivalModel::poisson ? "poisson" : "fixed";
}

ArrivalModel arrival_model_from_string(const std::string& s) {
    if (s == "poisson") return ArrivalModel::poisson;
    if (s == "fixed") return ArrivalModel::fixed;
    fail(ErrorCode::parse, "unknown arrival model \"" + s + "\"");
}

ArrivalSequence draw_arrivals(const Instance& inst, ArrivalModel model, std::uint64_t seed) {
    const double lam = inst.total_rate();
    Rng rng(seed, 1);
    long long count = 0;
    if (model == ArrivalModel::poisson) {
        count = rng.next_poisson(lam);
    } else {
        const double rounded = std::llround(lam);
        if (std::abs(lam - rounded) > 1e-9)
            fail(ErrorCode::domain, "fixed arrival model requires an integral total rate");
        count = std::llround(lam);
    }
    ArrivalSequence seq;
    seq.model = model;
    seq.seed = seed;
    if (count > 0) {
        std::vector<double> rates;
        rates.reserve(inst.types().size());
        for (const OnlineType& t : inst.types()) rates.push_back(t.rate);
        DiscreteSampler sampler(rates);
        seq.arrivals.reserve(count);
        for (long long i = 0; i < count; ++i)
            seq.arrivals.push_back(static_cast<int>(sampler.sample(rng)));
    }
    return seq;
}

TrialResult run_pair_sampling(const Instance& inst, const SamplingPlan& plan,
                              const ArrivalSequence& arrivals, std::uint64_t seed) {
    detail::CompiledPlan compiled(inst, plan);
    return compiled.run(arrivals, seed);
}

namespace {

constexpr double kGainEps = 1e-12;

// Offline ids ascending; used for every right-vertex scan so ties resolve
// the same way on every run.
std::vector<int> offline_scan_order(const Instance& inst) {
    std::vector<int> order(inst.offline().size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return inst.offline()[a].id < inst.offline()[b].id;
    });
    return order;
}

} // namespace

std::pair<double, std::vector<std::pair<int, int>>> offline_optimum(const Instance& inst,
                                                                    const ArrivalSequence& seq) {
    const int m = static_cast<int>(inst.offline().size());
    const std::vector<int> order = offline_scan_order(inst);
    std::vector<int> owner(m, -1);       // offline -> arrival index
    std::vector<double> owner_w(m, 0.0); // weight of the owning edge
    const double ninf = -std::numeric_limits<double>::infinity();
    std::vector<double> value(m);
    std::vector<int> pred(m);
    double total = 0.0;

    for (std::size_t a = 0; a < seq.arrivals.size(); ++a) {
        const int t = seq.arrivals[a];
        if (t < 0 || t >= static_cast<int>(inst.types().size()))
            fail(ErrorCode::domain, "arrival refers to a type outside the instance");
        std::fill(value.begin(), value.end(), ninf);
        std::fill(pred.begin(), pred.end(), -1);
        for (const Edge& e : inst.types()[t].edges) value[e.offline] = e.weight;

        // Best-gain alternating paths: rematching the owner of j frees j for
        // the new arrival. The incumbent matching is optimal for the arrivals
        // seen so far, so no positive alternating cycle exists and m rounds
        // of relaxation settle every simple path.
        for (int round = 0; round < m; ++round) {
            bool changed = false;
            for (int j : order) {
                if (value[j] == ninf || owner[j] < 0) continue;
                const int b = owner[j];
                for (const Edge& e : inst.types()[seq.arrivals[b]].edges) {
                    if (e.offline == j) continue;
                    const double cand = value[j] - owner_w[j] + e.weight;
                    if (cand > value[e.offline] + kGainEps) {
                        value[e.offline] = cand;
                        pred[e.offline] = j;
                        changed = true;
                    }
                }
            }
            if (!changed) break;
        }

        // A path may end at a free vertex, or end at an occupied vertex by
        // dropping its owner from the matching (the drop costs owner_w[j]).
        int best = -1;
        double best_gain = 0.0;
        for (int j : order) {
            if (value[j] == ninf) continue;
            const double gain = value[j] - (owner[j] >= 0 ? owner_w[j] : 0.0);
            if (gain <= kGainEps) continue;
            if (best < 0 || gain > best_gain + kGainEps) {
                best = j;
                best_gain = gain;
            }
        }
        if (best < 0) continue;
        total += best_gain;

        // Walk the predecessor chain: each hop moves the owner of pred[j]
        // onto j; the chain head takes the new arrival.
        int j = best;
        while (pred[j] >= 0) {
            const int p = pred[j];
            owner[j] = owner[p];
            owner_w[j] = inst.edge_weight(seq.arrivals[owner[p]], j);
            j = p;
        }
        owner[j] = static_cast<int>(a);
        owner_w[j] = inst.edge_weight(t, j);
    }

    std::vector<std::pair<int, int>> matches;
    for (int j : order)
        if (owner[j] >= 0) matches.emplace_back(owner[j], j);
    std::sort(matches.begin(), matches.end());
    return {total, matches};
}

double simulate_unmatched_after_first(double x, double y, long long samples, std::uint64_t seed) {
    if (!(x >= 0.0) || !(y >= 0.0) || y > x + 1e-12)
        fail(ErrorCode::domain, "requires 0 <= y <= x");
    if (samples < 1) fail(ErrorCode::validate, "samples must be positive");
    const double p = x > 0.0 ? std::min(y / x, 1.0) : 0.0;
    Rng rng(seed, 3);
    long long taken = 0;
    for (long long s = 0; s < samples; ++s) {
        const long long n = rng.next_poisson(x);
        bool hit = false;
        for (long long i = 1; i < n && !hit; ++i) hit = rng.next_double() < p;
        if (hit) ++taken;
    }
    return static_cast<double>(taken) / static_cast<double>(samples);
}

} // namespace stomatch
