#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sim_internal.hpp"
#include "stomatch/analysis.hpp"
#include "stomatch/error.hpp"
#include "stomatch/lp.hpp"
#include "stomatch/rng.hpp"
#include "stomatch/simulator.hpp"

namespace stomatch {

namespace {

constexpr long long kChunk = 1024;
constexpr double kSlack = 1e-9;

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int thread_count(long long n_chunks) {
    long long t = 0;
    if (const char* env = std::getenv("STOMATCH_THREADS")) t = std::strtoll(env, nullptr, 10);
    if (t <= 0) t = std::thread::hardware_concurrency();
    if (t <= 0) t = 1;
    return static_cast<int>(std::min<long long>({t, n_chunks, 256}));
}

// Per-chunk power sums; chunks merge in index order so totals do not depend
// on the thread schedule.
struct ChunkStats {
    double sum_alg = 0.0, sumsq_alg = 0.0;
    double sum_opt = 0.0, sumsq_opt = 0.0;
    std::vector<long long> hits;
    std::vector<double> gain_sum, gain_sumsq;
    std::vector<long long> gain_count;
};

ChunkStats run_study(const Instance& inst, const detail::CompiledPlan& compiled,
                     ArrivalModel model, long long trials, std::uint64_t seed, bool want_opt,
                     int positions) {
    const int m = static_cast<int>(inst.offline().size());
    const long long n_chunks = (trials + kChunk - 1) / kChunk;
    std::vector<ChunkStats> acc(n_chunks);
    std::atomic<long long> next{0};
    std::atomic<bool> bad{false};
    std::exception_ptr err;
    std::mutex err_mu;

    auto work = [&] {
        try {
            for (;;) {
                const long long c = next.fetch_add(1);
                if (c >= n_chunks || bad.load(std::memory_order_relaxed)) return;
                ChunkStats& s = acc[c];
                s.hits.assign(m, 0);
                s.gain_sum.assign(positions, 0.0);
                s.gain_sumsq.assign(positions, 0.0);
                s.gain_count.assign(positions, 0);
                const long long lo = c * kChunk;
                const long long hi = std::min(trials, lo + kChunk);
                for (long long g = lo; g < hi; ++g) {
                    const ArrivalSequence seq =
                        draw_arrivals(inst, model, derive_seed(seed, 1, g));
                    const TrialResult res = compiled.run(seq, derive_seed(seed, 2, g));
                    s.sum_alg += res.total_weight;
                    s.sumsq_alg += res.total_weight * res.total_weight;
                    for (int j = 0; j < m; ++j)
                        if (res.offline_matched_by[j] >= 0) ++s.hits[j];
                    const int upto =
                        std::min<int>(positions, static_cast<int>(res.per_index_gain.size()));
                    for (int n = 0; n < upto; ++n) {
                        const double gn = res.per_index_gain[n];
                        s.gain_sum[n] += gn;
                        s.gain_sumsq[n] += gn * gn;
                        ++s.gain_count[n];
                    }
                    if (want_opt) {
                        const double w = offline_optimum(inst, seq).first;
                        s.sum_opt += w;
                        s.sumsq_opt += w * w;
                    }
                }
            }
        } catch (...) {
            std::lock_guard<std::mutex> g(err_mu);
            if (!err) err = std::current_exception();
            bad.store(true);
        }
    };

    const int nt = thread_count(n_chunks);
    if (nt <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nt);
        for (int i = 0; i < nt; ++i) pool.emplace_back(work);
        for (std::thread& th : pool) th.join();
    }
    if (err) std::rethrow_exception(err);

    ChunkStats total;
    total.hits.assign(m, 0);
    total.gain_sum.assign(positions, 0.0);
    total.gain_sumsq.assign(positions, 0.0);
    total.gain_count.assign(positions, 0);
    for (const ChunkStats& s : acc) {
        total.sum_alg += s.sum_alg;
        total.sumsq_alg += s.sumsq_alg;
        total.sum_opt += s.sum_opt;
        total.sumsq_opt += s.sumsq_opt;
        for (int j = 0; j < m; ++j) total.hits[j] += s.hits[j];
        for (int n = 0; n < positions; ++n) {
            total.gain_sum[n] += s.gain_sum[n];
            total.gain_sumsq[n] += s.gain_sumsq[n];
            total.gain_count[n] += s.gain_count[n];
        }
    }
    return total;
}

} // namespace

MCReport monte_carlo(const Instance& inst, const SamplingPlan& plan, ArrivalModel model,
                     long long trials, std::uint64_t seed, bool want_opt) {
    if (trials < 1) fail(ErrorCode::validate, "trials must be positive");
    detail::CompiledPlan compiled(inst, plan);
    const int positions = static_cast<int>(std::floor(inst.total_rate() + 1e-9));
    const ChunkStats s = run_study(inst, compiled, model, trials, seed, want_opt, positions);
    const double T = static_cast<double>(trials);

    MCReport rep;
    rep.trials = trials;
    rep.mean_alg = s.sum_alg / T;
    rep.se_alg = detail::sample_se(s.sum_alg, s.sumsq_alg, trials);
    rep.has_opt = want_opt;
    if (want_opt) {
        rep.mean_opt = s.sum_opt / T;
        rep.se_opt = detail::sample_se(s.sum_opt, s.sumsq_opt, trials);
    }
    rep.nat_objective = solve_natural(inst).objective;
    rep.ratio_vs_nat = rep.nat_objective > 0.0 ? rep.mean_alg / rep.nat_objective : 0.0;
    rep.offline_match_freq.reserve(s.hits.size());
    for (long long h : s.hits) {
        const double hh = static_cast<double>(h);
        rep.offline_match_freq.emplace_back(hh / T, detail::sample_se(hh, hh, trials));
    }
    for (int n = 0; n < positions; ++n) {
        GainPoint p;
        p.count = s.gain_count[n];
        if (p.count > 0) p.mean = s.gain_sum[n] / static_cast<double>(p.count);
        p.se = detail::sample_se(s.gain_sum[n], s.gain_sumsq[n], s.gain_count[n]);
        rep.gain_curve.push_back(p);
    }
    return rep;
}

std::string MCReport::to_json(const Instance& inst) const {
    nlohmann::json doc;
    doc["trials"] = trials;
    doc["mean_alg"] = mean_alg;
    doc["se_alg"] = se_alg;
    doc["has_opt"] = has_opt;
    if (has_opt) {
        doc["mean_opt"] = mean_opt;
        doc["se_opt"] = se_opt;
    }
    doc["nat_objective"] = nat_objective;
    doc["ratio_vs_nat"] = ratio_vs_nat;
    nlohmann::json freq = nlohmann::json::object();
    for (std::size_t j = 0; j < offline_match_freq.size(); ++j)
        freq[inst.offline()[j].id] = {{"freq", offline_match_freq[j].first},
                                      {"stderr", offline_match_freq[j].second}};
    doc["offline_match_freq"] = freq;
    nlohmann::json curve = nlohmann::json::array();
    for (std::size_t n = 0; n < gain_curve.size(); ++n)
        curve.push_back({{"position", n + 1},
                         {"mean", gain_curve[n].mean},
                         {"stderr", gain_curve[n].se},
                         {"count", gain_curve[n].count}});
    doc["gain_curve"] = curve;
    return doc.dump(2) + "\n";
}

std::string MCReport::gain_curve_csv() const {
    std::string out = "n,mean_gain,stderr\n";
    for (std::size_t n = 0; n < gain_curve.size(); ++n) {
        out += std::to_string(n + 1);
        out += ',';
        out += num(gain_curve[n].mean);
        out += ',';
        out += num(gain_curve[n].se);
        out += '\n';
    }
    return out;
}

MatchProbReport match_prob_report(const Instance& inst, const FractionalSolution& sol,
                                  const SamplingPlan& plan, ArrivalModel model, long long trials,
                                  std::uint64_t seed) {
    if (trials < 1) fail(ErrorCode::validate, "trials must be positive");
    const int m = static_cast<int>(inst.offline().size());
    if (static_cast<int>(sol.x_j.size()) != m)
        fail(ErrorCode::validate, "solution does not match the instance shape");
    detail::CompiledPlan compiled(inst, plan);
    const ChunkStats s = run_study(inst, compiled, model, trials, seed, false, 0);
    const double T = static_cast<double>(trials);

    MatchProbReport rep;
    rep.trials = trials;
    const RateTable* ref = nullptr;
    SamplingPlan wasteful_ref;
    if (plan.kind == PlanKind::amortized) {
        wasteful_ref = build_wasteful(inst, sol);
        ref = &wasteful_ref.rates;
    }
    for (int j = 0; j < m; ++j) {
        MatchProbRow row;
        row.offline = j;
        const double h = static_cast<double>(s.hits[j]);
        row.freq = h / T;
        row.se = detail::sample_se(h, h, trials);
        if (plan.kind == PlanKind::amortized) {
            double mass = 0.0;
            for (int k = 0; k < m; ++k)
                if (k != j) mass += ref->at(k, j);
            row.bound = amortized_match_lower_bound(std::min(sol.x_j[j], 1.0), ref->row_sum(j),
                                                    ref->mu_perp(j), mass, plan.beta_drop);
        } else {
            const RateTable& rt = plan.rates;
            std::vector<std::pair<double, double>> pairs;
            for (int k = 0; k < m; ++k) {
                if (k == j) continue;
                const double y = rt.at(k, j);
                if (y > 0.0) pairs.emplace_back(rt.row_sum(k), y);
            }
            row.bound = match_prob_lower_bound(rt.row_sum(j), rt.mu_perp(j), pairs);
        }
        row.flagged = row.freq + 3.0 * row.se + kSlack < row.bound;
        rep.rows.push_back(row);
    }
    return rep;
}

bool MatchProbReport::ok() const {
    for (const MatchProbRow& r : rows)
        if (r.flagged) return false;
    return true;
}

std::string MatchProbReport::to_json(const Instance& inst) const {
    nlohmann::json doc;
    doc["trials"] = trials;
    doc["ok"] = ok();
    nlohmann::json jr = nlohmann::json::object();
    for (const MatchProbRow& r : rows)
        jr[inst.offline()[r.offline].id] = {{"freq", r.freq},
                                            {"stderr", r.se},
                                            {"bound", r.bound},
                                            {"flagged", r.flagged}};
    doc["rows"] = jr;
    return doc.dump(2) + "\n";
}

std::string MatchProbReport::csv(const Instance& inst) const {
    std::string out = "offline_id,freq,stderr,bound\n";
    for (const MatchProbRow& r : rows) {
        out += inst.offline()[r.offline].id;
        out += ',';
        out += num(r.freq);
        out += ',';
        out += num(r.se);
        out += ',';
        out += num(r.bound);
        out += '\n';
    }
    return out;
}

MonotonicityReport monotonicity_report(const Instance& inst, const SamplingPlan& plan,
                                       long long trials, std::uint64_t seed) {
    if (trials < 1) fail(ErrorCode::validate, "trials must be positive");
    const double lam = inst.total_rate();
    const long long pll = std::llround(lam);
    if (std::abs(lam - static_cast<double>(pll)) > 1e-9)
        fail(ErrorCode::domain, "per-position analysis requires an integral total rate");
    const int P = static_cast<int>(pll);
    detail::CompiledPlan compiled(inst, plan);

    MonotonicityReport rep;
    rep.trials = trials;
    rep.positions = P;
    rep.ratio_mode = plan.kind == PlanKind::amortized;
    rep.ratio_bound = rep.ratio_mode ? 2.0 / (1.0 - plan.beta_drop) : 0.0;
    if (P == 0) return rep;

    const bool paired = P <= 64;
    std::vector<double> sum(P, 0.0), sumsq(P, 0.0);
    std::vector<std::vector<double>> cross;
    if (paired) cross.assign(P, std::vector<double>(P, 0.0));
    for (long long t = 0; t < trials; ++t) {
        const ArrivalSequence seq =
            draw_arrivals(inst, ArrivalModel::fixed, derive_seed(seed, 1, t));
        const TrialResult res = compiled.run(seq, derive_seed(seed, 2, t));
        for (int n = 0; n < P; ++n) {
            const double gn = res.per_index_gain[n];
            sum[n] += gn;
            sumsq[n] += gn * gn;
            if (paired)
                for (int k = n; k < P; ++k) cross[n][k] += gn * res.per_index_gain[k];
        }
    }
    const double T = static_cast<double>(trials);
    for (int n = 0; n < P; ++n) {
        GainPoint p;
        p.mean = sum[n] / T;
        p.se = detail::sample_se(sum[n], sumsq[n], trials);
        p.count = trials;
        rep.gain_curve.push_back(p);
    }

    auto diff_se = [&](int a, int b, double r) {
        // standard error of mean(g_b - r * g_a)
        if (paired) {
            const double sd = sum[b] - r * sum[a];
            const double sq = cross[b][b] - 2.0 * r * cross[a][b] + r * r * cross[a][a];
            return detail::sample_se(sd, sq, trials);
        }
        return rep.gain_curve[b].se + r * rep.gain_curve[a].se;
    };

    if (!rep.ratio_mode) {
        for (int n = 1; n < P; ++n) {
            const double d = (sum[n] - sum[n - 1]) / T;
            if (d > 3.0 * diff_se(n - 1, n, 1.0) + kSlack)
                rep.violations.push_back("position " + std::to_string(n + 1) + " mean gain " +
                                         num(rep.gain_curve[n].mean) + " exceeds position " +
                                         std::to_string(n) + " (" +
                                         num(rep.gain_curve[n - 1].mean) + ") beyond 3 sigma");
        }
    } else {
        const double r = rep.ratio_bound;
        for (int l = 0; l < P; ++l)
            for (int n = l + 1; n < P; ++n) {
                const double d = (sum[n] - r * sum[l]) / T;
                if (d > 3.0 * diff_se(l, n, r) + kSlack)
                    rep.violations.push_back(
                        "position " + std::to_string(n + 1) + " mean gain " +
                        num(rep.gain_curve[n].mean) + " exceeds " + num(r) + " x position " +
                        std::to_string(l + 1) + " (" + num(rep.gain_curve[l].mean) +
                        ") beyond 3 sigma");
            }
    }
    return rep;
}

std::string MonotonicityReport::to_json() const {
    nlohmann::json doc;
    doc["trials"] = trials;
    doc["positions"] = positions;
    doc["ratio_mode"] = ratio_mode;
    if (ratio_mode) doc["ratio_bound"] = ratio_bound;
    doc["ok"] = ok();
    nlohmann::json curve = nlohmann::json::array();
    for (std::size_t n = 0; n < gain_curve.size(); ++n)
        curve.push_back({{"position", n + 1},
                         {"mean", gain_curve[n].mean},
                         {"stderr", gain_curve[n].se}});
    doc["gain_curve"] = curve;
    doc["violations"] = violations;
    return doc.dump(2) + "\n";
}

ModelComparison model_comparison(const Instance& inst, const SamplingPlan& plan, long long trials,
                                 std::uint64_t seed) {
    if (trials < 1) fail(ErrorCode::validate, "trials must be positive");
    const double lam = inst.total_rate();
    const long long pll = std::llround(lam);
    if (std::abs(lam - static_cast<double>(pll)) > 1e-9 || pll < 1)
        fail(ErrorCode::domain, "model comparison requires an integral total rate of at least 1");
    detail::CompiledPlan compiled(inst, plan);

    ModelComparison rep;
    rep.trials = trials;
    rep.tail_factor = 1.0 - poisson_tail(static_cast<double>(pll));
    double s_of = 0, q_of = 0, s_op = 0, q_op = 0, s_af = 0, q_af = 0, s_ap = 0, q_ap = 0;
    double s_d1 = 0, q_d1 = 0, s_d2 = 0, q_d2 = 0, s_d3 = 0, q_d3 = 0;
    for (long long t = 0; t < trials; ++t) {
        const ArrivalSequence fseq =
            draw_arrivals(inst, ArrivalModel::fixed, derive_seed(seed, 3, t));
        const ArrivalSequence pseq =
            draw_arrivals(inst, ArrivalModel::poisson, derive_seed(seed, 4, t));
        const double af = compiled.run(fseq, derive_seed(seed, 5, t)).total_weight;
        const double ap = compiled.run(pseq, derive_seed(seed, 6, t)).total_weight;
        const double of = offline_optimum(inst, fseq).first;
        const double op = offline_optimum(inst, pseq).first;
        s_of += of; q_of += of * of;
        s_op += op; q_op += op * op;
        s_af += af; q_af += af * af;
        s_ap += ap; q_ap += ap * ap;
        const double d1 = of - op;
        const double d2 = op - rep.tail_factor * of;
        const double d3 = af - ap;
        s_d1 += d1; q_d1 += d1 * d1;
        s_d2 += d2; q_d2 += d2 * d2;
        s_d3 += d3; q_d3 += d3 * d3;
    }
    const double T = static_cast<double>(trials);
    rep.opt_fixed_mean = s_of / T;
    rep.opt_fixed_se = detail::sample_se(s_of, q_of, trials);
    rep.opt_poisson_mean = s_op / T;
    rep.opt_poisson_se = detail::sample_se(s_op, q_op, trials);
    rep.alg_fixed_mean = s_af / T;
    rep.alg_fixed_se = detail::sample_se(s_af, q_af, trials);
    rep.alg_poisson_mean = s_ap / T;
    rep.alg_poisson_se = detail::sample_se(s_ap, q_ap, trials);
    rep.opt_ordering_ok = s_d1 / T >= -3.0 * detail::sample_se(s_d1, q_d1, trials) - kSlack;
    rep.floor_ok = s_d2 / T >= -3.0 * detail::sample_se(s_d2, q_d2, trials) - kSlack;
    rep.alg_ordering_checked =
        inst.mode() == Mode::unweighted && plan.kind != PlanKind::amortized;
    rep.alg_ordering_ok =
        rep.alg_ordering_checked &&
        s_d3 / T >= -3.0 * detail::sample_se(s_d3, q_d3, trials) - kSlack;
    return rep;
}

bool ModelComparison::ok() const {
    return opt_ordering_ok && floor_ok && (!alg_ordering_checked || alg_ordering_ok);
}

std::string ModelComparison::to_json() const {
    nlohmann::json doc;
    doc["trials"] = trials;
    doc["opt_fixed"] = {{"mean", opt_fixed_mean}, {"stderr", opt_fixed_se}};
    doc["opt_poisson"] = {{"mean", opt_poisson_mean}, {"stderr", opt_poisson_se}};
    doc["alg_fixed"] = {{"mean", alg_fixed_mean}, {"stderr", alg_fixed_se}};
    doc["alg_poisson"] = {{"mean", alg_poisson_mean}, {"stderr", alg_poisson_se}};
    doc["opt_ordering_ok"] = opt_ordering_ok;
    doc["alg_ordering_checked"] = alg_ordering_checked;
    if (alg_ordering_checked) doc["alg_ordering_ok"] = alg_ordering_ok;
    doc["tail_factor"] = tail_factor;
    doc["floor_ok"] = floor_ok;
    doc["ok"] = ok();
    return doc.dump(2) + "\n";
}

LpFeasibilityReport empirical_lp_feasibility(const Instance& inst, ArrivalModel model,
                                             long long trials, std::uint64_t seed) {
    if (trials < 1) fail(ErrorCode::validate, "trials must be positive");
    const int m = static_cast<int>(inst.offline().size());
    const int n = static_cast<int>(inst.types().size());

    std::vector<std::vector<long long>> cnt(n, std::vector<long long>(m, 0));
    std::vector<double> sum_tc(n, 0.0), sumsq_tc(n, 0.0);
    std::vector<int> tc(n, 0);
    double s_opt = 0.0, q_opt = 0.0;
    for (long long t = 0; t < trials; ++t) {
        const ArrivalSequence seq = draw_arrivals(inst, model, derive_seed(seed, 7, t));
        const auto [w, matches] = offline_optimum(inst, seq);
        s_opt += w;
        q_opt += w * w;
        std::fill(tc.begin(), tc.end(), 0);
        for (const auto& [a, j] : matches) {
            const int ty = seq.arrivals[a];
            ++cnt[ty][j];
            ++tc[ty];
        }
        for (int i = 0; i < n; ++i) {
            sum_tc[i] += tc[i];
            sumsq_tc[i] += static_cast<double>(tc[i]) * tc[i];
        }
    }

    LpFeasibilityReport rep;
    rep.trials = trials;
    const double T = static_cast<double>(trials);
    double worst = -std::numeric_limits<double>::infinity();
    std::string worst_name = "none";
    auto consider = [&](double adjusted, const std::string& name) {
        if (adjusted > worst) {
            worst = adjusted;
            worst_name = name;
        }
    };

    for (int i = 0; i < n; ++i) {
        const double mean = sum_tc[i] / T;
        const double se = detail::sample_se(sum_tc[i], sumsq_tc[i], trials);
        consider(mean - inst.types()[i].rate - 3.0 * se,
                 "type capacity " + inst.types()[i].id);
    }
    for (int j = 0; j < m; ++j) {
        struct Nb {
            int type;
            double xhat;
            double rate;
        };
        std::vector<Nb> nbs;
        for (int i = 0; i < n; ++i)
            if (inst.has_edge(i, j))
                nbs.push_back({i, static_cast<double>(cnt[i][j]) / T, inst.types()[i].rate});
        std::sort(nbs.begin(), nbs.end(), [](const Nb& a, const Nb& b) {
            const double ra = a.xhat / a.rate, rb = b.xhat / b.rate;
            if (ra != rb) return ra > rb;
            return a.type < b.type;
        });
        double px = 0.0, pl = 0.0;
        for (std::size_t k = 0; k < nbs.size(); ++k) {
            px += nbs[k].xhat;
            pl += nbs[k].rate;
            const double rhs = -std::expm1(-pl);
            const double se = std::sqrt(std::max(px * (1.0 - px), 0.0) / T);
            consider(px - rhs - 3.0 * se, "offline " + inst.offline()[j].id + " top-" +
                                              std::to_string(k + 1) + " neighborhood");
        }
    }
    if (!std::isfinite(worst)) worst = 0.0;
    rep.max_adjusted_violation = worst;
    rep.worst_constraint = worst_name;
    rep.feasible_ok = worst <= kSlack;
    rep.mean_opt = s_opt / T;
    rep.se_opt = detail::sample_se(s_opt, q_opt, trials);
    rep.nat_objective = solve_natural(inst).objective;
    rep.opt_le_nat_ok = rep.mean_opt <= rep.nat_objective + 3.0 * rep.se_opt + kSlack;
    return rep;
}

std::string LpFeasibilityReport::to_json() const {
    nlohmann::json doc;
    doc["trials"] = trials;
    doc["max_adjusted_violation"] = max_adjusted_violation;
    doc["worst_constraint"] = worst_constraint;
    doc["feasible_ok"] = feasible_ok;
    doc["mean_opt"] = mean_opt;
    doc["se_opt"] = se_opt;
    doc["nat_objective"] = nat_objective;
    doc["opt_le_nat_ok"] = opt_le_nat_ok;
    doc["ok"] = ok();
    return doc.dump(2) + "\n";
}

} // namespace stomatch
