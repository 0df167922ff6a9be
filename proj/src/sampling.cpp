#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "stomatch/analysis.hpp"
#include "stomatch/error.hpp"
#include "stomatch/sampling.hpp"

namespace stomatch {

namespace {

// One laid-out option on a type's circle: offline index (or m = dummy) and
// its interval, [start, start + len) before the final end is pinned to L.
struct Option {
    int who;
    double len;
    double start = 0.0;
    double end = 0.0;
};

void check_builder_input(const Instance& inst, const FractionalSolution& sol) {
    if (sol.x.size() != inst.types().size())
        fail(ErrorCode::validate, "sampling: solution shape mismatch");
    for (std::size_t t = 0; t < sol.x.size(); ++t) {
        if (sol.x[t].size() != inst.types()[t].edges.size())
            fail(ErrorCode::validate, "sampling: solution shape mismatch for type " + inst.types()[t].id);
        double row = 0.0;
        for (double v : sol.x[t]) {
            if (v < -1e-12)
                fail(ErrorCode::validate, "sampling: negative assignment for type " + inst.types()[t].id);
            row += std::max(v, 0.0);
        }
        if (row > inst.types()[t].rate + 1e-9)
            fail(ErrorCode::validate, "sampling: assignments exceed the rate of type " + inst.types()[t].id);
    }
}

// Options in layout order (offline-id ascending via the edge order, dummy
// last), intervals tiling [0, L).
std::vector<Option> lay_options(const Instance& inst, const FractionalSolution& sol, std::size_t t) {
    const int m = static_cast<int>(inst.offline().size());
    const double L = inst.types()[t].rate;
    std::vector<Option> ops;
    double used = 0.0;
    for (std::size_t e = 0; e < sol.x[t].size(); ++e) {
        const double v = std::max(sol.x[t][e], 0.0);
        used += v;
        if (v > 0.0) ops.push_back({inst.types()[t].edges[e].offline, v});
    }
    const double slack = L - used;
    if (slack > 0.0) ops.push_back({m, slack});
    double cursor = 0.0;
    for (Option& o : ops) {
        o.start = cursor;
        cursor += o.len;
        o.end = cursor;
    }
    if (!ops.empty()) ops.back().end = L;   // absorb accumulation dust
    return ops;
}

double seg_overlap(double s1, double e1, double s2, double e2) {
    return std::max(0.0, std::min(e1, e2) - std::max(s1, s2));
}

// Overlap of [s1, e1) with the half-circle shift of [s2, e2) on [0, L).
double half_shift_overlap(double s1, double e1, double s2, double e2, double L) {
    double a = s2 - 0.5 * L;
    double b = e2 - 0.5 * L;
    if (a < 0.0) {
        a += L;
        b += L;
    }
    if (b <= L) return seg_overlap(s1, e1, a, b);
    return seg_overlap(s1, e1, a, L) + seg_overlap(s1, e1, 0.0, b - L);
}

std::vector<PairDistribution::Entry> interval_pmf(const std::vector<Option>& ops, double L) {
    std::vector<PairDistribution::Entry> entries;
    for (const Option& first : ops) {
        for (const Option& second : ops) {
            const double o = half_shift_overlap(first.start, first.end, second.start, second.end, L);
            if (o > 0.0) entries.push_back({first.who, second.who, o / L});
        }
    }
    return entries;
}

bool has_dominant(const std::vector<Option>& ops, double L, std::size_t& pos) {
    for (std::size_t i = 0; i < ops.size(); ++i) {
        if (ops[i].len > 0.5 * L) {
            pos = i;
            return true;
        }
    }
    return false;
}

// Closed-form pmf for a type with a dominant option: backup factor q scales
// the dominant row's off-dominant mass; residual stays on the diagonal.
std::vector<PairDistribution::Entry> dominant_pmf(const std::vector<Option>& ops, std::size_t star,
                                                  double L, double beta, bool limit) {
    std::vector<PairDistribution::Entry> entries;
    double rest = 0.0;
    for (std::size_t i = 0; i < ops.size(); ++i)
        if (i != star) rest += ops[i].len;
    if (L - ops[star].len <= 1e-14 * L) {
        entries.push_back({ops[star].who, ops[star].who, 1.0});
        return entries;
    }
    const double r = ops[star].len / rest;
    const double q = limit ? r : std::min(beta, r);
    for (std::size_t i = 0; i < ops.size(); ++i)
        if (i != star) entries.push_back({ops[i].who, ops[star].who, ops[i].len / L});
    for (std::size_t i = 0; i < ops.size(); ++i)
        if (i != star) entries.push_back({ops[star].who, ops[i].who, ops[i].len * q / L});
    if (!limit && beta < r)
        entries.push_back({ops[star].who, ops[star].who, (ops[star].len - beta * rest) / L});
    return entries;
}

void canonicalize(std::vector<PairDistribution::Entry>& entries) {
    std::sort(entries.begin(), entries.end(), [](const PairDistribution::Entry& a, const PairDistribution::Entry& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    });
}

SamplingPlan assemble(const Instance& inst, std::vector<PairDistribution> dists, PlanKind kind,
                      double beta, double beta_drop) {
    SamplingPlan plan;
    plan.kind = kind;
    plan.beta = beta;
    plan.beta_drop = beta_drop;
    plan.rates = rate_table(inst, dists);
    plan.dists = std::move(dists);
    return plan;
}

std::vector<PairDistribution> wasteful_dists(const Instance& inst, const FractionalSolution& sol) {
    std::vector<PairDistribution> dists(inst.types().size());
    for (std::size_t t = 0; t < inst.types().size(); ++t) {
        dists[t].type = static_cast<int>(t);
        dists[t].support = interval_pmf(lay_options(inst, sol, t), inst.types()[t].rate);
        canonicalize(dists[t].support);
    }
    return dists;
}

std::vector<PairDistribution> scaled_dists(const Instance& inst, const FractionalSolution& sol,
                                           double beta, bool limit) {
    std::vector<PairDistribution> dists(inst.types().size());
    for (std::size_t t = 0; t < inst.types().size(); ++t) {
        const double L = inst.types()[t].rate;
        const std::vector<Option> ops = lay_options(inst, sol, t);
        std::size_t star = 0;
        dists[t].type = static_cast<int>(t);
        dists[t].support = has_dominant(ops, L, star) ? dominant_pmf(ops, star, L, beta, limit)
                                                      : interval_pmf(ops, L);
        canonicalize(dists[t].support);
    }
    return dists;
}

std::string id_of(const Instance& inst, int j) {
    return j == static_cast<int>(inst.offline().size()) ? std::string("_bot") : inst.offline()[j].id;
}

} // namespace

SamplingPlan build_wasteful(const Instance& inst, const FractionalSolution& sol) {
    check_builder_input(inst, sol);
    return assemble(inst, wasteful_dists(inst, sol), PlanKind::wasteful, 1.0, 0.0);
}

SamplingPlan build_beta(const Instance& inst, const FractionalSolution& sol, double beta) {
    if (!(beta >= 1.0)) fail(ErrorCode::domain, "build_beta: beta must be >= 1");
    check_builder_input(inst, sol);
    return assemble(inst, scaled_dists(inst, sol, beta, false), PlanKind::beta, beta, 0.0);
}

SamplingPlan build_limit(const Instance& inst, const FractionalSolution& sol) {
    check_builder_input(inst, sol);
    return assemble(inst, scaled_dists(inst, sol, 1.0, true), PlanKind::limit, 1.0, 0.0);
}

SamplingPlan build_amortized(const Instance& inst, const FractionalSolution& sol, double beta_drop) {
    check_builder_input(inst, sol);
    const int m = static_cast<int>(inst.offline().size());
    std::vector<PairDistribution> dists = wasteful_dists(inst, sol);
    for (PairDistribution& dist : dists) {
        std::map<std::pair<int, int>, double> acc;
        for (const PairDistribution::Entry& e : dist.support) {
            if (e.first == m) {
                acc[{m, e.second}] += e.prob;
                continue;
            }
            const double d = delta(sol.x_j[e.first], beta_drop);
            acc[{e.first, e.second}] += e.prob * (1.0 - d);
            if (d > 0.0) acc[{m, e.second}] += e.prob * d;
        }
        dist.support.clear();
        for (const auto& [key, prob] : acc)
            if (prob > 0.0) dist.support.push_back({key.first, key.second, prob});
    }
    return assemble(inst, std::move(dists), PlanKind::amortized, 1.0, beta_drop);
}

RateTable rate_table(const Instance& inst, const std::vector<PairDistribution>& dists) {
    const int m = static_cast<int>(inst.offline().size());
    if (dists.size() != inst.types().size())
        fail(ErrorCode::domain, "rate_table: need one distribution per type");
    RateTable table;
    table.m = m;
    table.mu.assign(static_cast<std::size_t>(m + 1) * (m + 1), 0.0);
    for (std::size_t t = 0; t < dists.size(); ++t) {
        const double rate = inst.types()[t].rate;
        for (const PairDistribution::Entry& e : dists[t].support) {
            if (e.first < 0 || e.first > m || e.second < 0 || e.second > m)
                fail(ErrorCode::domain, "rate_table: pair entry outside the offline range");
            table.at(e.first, e.second) += rate * e.prob;
        }
    }
    return table;
}

double RateTable::row_sum(int j) const {
    double s = 0.0;
    for (int k = 0; k <= m; ++k) s += at(j, k);
    return s;
}

double RateTable::col_sum(int k) const {
    double s = 0.0;
    for (int j = 0; j <= m; ++j) s += at(j, k);
    return s;
}

double RateTable::total() const {
    double s = 0.0;
    for (double v : mu) s += v;
    return s;
}

std::string to_string(PlanKind kind) {
    switch (kind) {
        case PlanKind::wasteful: return "wasteful";
        case PlanKind::beta: return "beta";
        case PlanKind::limit: return "limit";
        case PlanKind::amortized: return "amortized";
    }
    fail(ErrorCode::internal, "to_string: unknown plan kind");
}

PlanKind plan_kind_from_string(const std::string& s) {
    if (s == "wasteful") return PlanKind::wasteful;
    if (s == "beta") return PlanKind::beta;
    if (s == "limit") return PlanKind::limit;
    if (s == "amortized") return PlanKind::amortized;
    fail(ErrorCode::parse, "unknown plan kind: " + s);
}

std::string SamplingPlan::to_json(const Instance& inst) const {
    nlohmann::json doc;
    doc["kind"] = stomatch::to_string(kind);
    if (kind == PlanKind::beta) doc["beta"] = beta;
    if (kind == PlanKind::amortized) doc["beta_drop"] = beta_drop;
    nlohmann::json jd = nlohmann::json::object();
    for (const PairDistribution& dist : dists) {
        nlohmann::json rows = nlohmann::json::array();
        for (const PairDistribution::Entry& e : dist.support)
            rows.push_back({id_of(inst, e.first), id_of(inst, e.second), e.prob});
        jd[inst.types()[dist.type].id] = std::move(rows);
    }
    doc["dists"] = std::move(jd);
    nlohmann::json jm = nlohmann::json::object();
    for (int j = 0; j <= rates.m; ++j)
        for (int k = 0; k <= rates.m; ++k)
            if (rates.at(j, k) != 0.0) jm[id_of(inst, j) + ":" + id_of(inst, k)] = rates.at(j, k);
    nlohmann::json jrow = nlohmann::json::object(), jperp = nlohmann::json::object(), jout = nlohmann::json::object();
    for (int j = 0; j < rates.m; ++j) {
        jrow[id_of(inst, j)] = rates.row_sum(j);
        jperp[id_of(inst, j)] = rates.mu_perp(j);
        jout[id_of(inst, j)] = rates.out_mass(j);
    }
    doc["rates"] = {{"mu", std::move(jm)},
                    {"mu_j", std::move(jrow)},
                    {"mu_perp_j", std::move(jperp)},
                    {"mu_out", std::move(jout)},
                    {"total", rates.total()}};
    return doc.dump(2) + "\n";
}

PlanPropertyReport verify_plan_properties(const Instance& inst, const FractionalSolution& sol,
                                          const SamplingPlan& plan) {
    check_builder_input(inst, sol);
    const int m = static_cast<int>(inst.offline().size());
    PlanPropertyReport rep;
    const auto add = [&rep](const std::string& property, const std::string& vertex, double lhs, double rhs) {
        rep.failures.push_back({property, vertex, lhs, rhs});
    };
    const auto check_eq = [&](const std::string& property, const std::string& vertex, double lhs, double rhs,
                              double tol = 1e-9) {
        ++rep.checks;
        if (std::abs(lhs - rhs) > tol) add(property, vertex, lhs, rhs);
    };
    // lhs <= rhs + tol
    const auto check_le = [&](const std::string& property, const std::string& vertex, double lhs, double rhs,
                              double tol = 1e-9) {
        ++rep.checks;
        if (lhs > rhs + tol) add(property, vertex, lhs, rhs);
    };

    if (plan.dists.size() != inst.types().size()) {
        add("plan covers every type", "", static_cast<double>(plan.dists.size()),
            static_cast<double>(inst.types().size()));
        return rep;
    }

    // pmf validity and first-entry marginals.
    for (std::size_t t = 0; t < plan.dists.size(); ++t) {
        const std::string& tid = inst.types()[t].id;
        double total = 0.0;
        std::vector<double> marginal(m + 1, 0.0);
        for (const PairDistribution::Entry& e : plan.dists[t].support) {
            ++rep.checks;
            if (!(e.prob >= 0.0)) add("pmf nonnegative", tid, e.prob, 0.0);
            total += e.prob;
            marginal[e.first] += e.prob;
        }
        check_eq("pmf total", tid, total, 1.0, 1e-12);
        std::vector<double> expected(m, 0.0);
        for (std::size_t e = 0; e < inst.types()[t].edges.size(); ++e) {
            const int j = inst.types()[t].edges[e].offline;
            double frac = std::max(sol.x[t][e], 0.0) / inst.types()[t].rate;
            if (plan.kind == PlanKind::amortized) frac *= 1.0 - delta(std::min(sol.x_j[j], 1.0), plan.beta_drop);
            expected[j] += frac;
        }
        for (int j = 0; j < m; ++j)
            if (marginal[j] != 0.0 || expected[j] != 0.0)
                check_eq("first-entry marginal", tid + ":" + inst.offline()[j].id, marginal[j], expected[j]);
    }

    // Rate table consistency with the distributions.
    const RateTable recomputed = rate_table(inst, plan.dists);
    for (int j = 0; j <= m; ++j)
        for (int k = 0; k <= m; ++k)
            check_eq("rate table consistency", id_of(inst, j) + ":" + id_of(inst, k), plan.rates.at(j, k),
                     recomputed.at(j, k), 1e-12);

    const auto marginal_or_flag = [&](int j) {
        const double xj = sol.x_j[j];
        if (xj > 1.0 + 1e-12) {
            add("marginal exceeds 1", inst.offline()[j].id, xj, 1.0);
            return 1.0;
        }
        return std::min(xj, 1.0);
    };

    switch (plan.kind) {
        case PlanKind::wasteful: {
            for (int j = 0; j < m; ++j) {
                const std::string& id = inst.offline()[j].id;
                check_eq("first-choice rate equals marginal", id, plan.rates.row_sum(j), sol.x_j[j]);
                check_le("incoming mass at most 1", id, plan.rates.in_mass(j), 1.0);
                check_le("outgoing mass floor", id, kappa(1.0, marginal_or_flag(j)), plan.rates.out_mass(j));
            }
            for (int j = 0; j <= m; ++j)
                for (int k = j + 1; k <= m; ++k)
                    check_eq("pair rate symmetry", id_of(inst, j) + ":" + id_of(inst, k), plan.rates.at(j, k),
                             plan.rates.at(k, j));
            break;
        }
        case PlanKind::beta: {
            const RateTable ref = build_wasteful(inst, sol).rates;
            for (int j = 0; j < m; ++j) {
                const std::string& id = inst.offline()[j].id;
                check_eq("first-choice rate equals marginal", id, plan.rates.row_sum(j), sol.x_j[j]);
                check_le("incoming mass at most beta", id, plan.rates.in_mass(j), plan.beta);
                check_le("outgoing mass floor", id, kappa(plan.beta, marginal_or_flag(j)), plan.rates.out_mass(j));
            }
            for (int j = 0; j <= m; ++j)
                for (int k = 0; k <= m; ++k)
                    check_le("pair rate beta cap", id_of(inst, j) + ":" + id_of(inst, k), plan.rates.at(j, k),
                             plan.beta * ref.at(j, k));
            break;
        }
        case PlanKind::limit: {
            const RateTable ref = build_wasteful(inst, sol).rates;
            const double beta_star = 1.0 / (1.0 - std::log(2.0));
            for (int j = 0; j < m; ++j) {
                const std::string& id = inst.offline()[j].id;
                check_eq("first-choice rate equals marginal", id, plan.rates.row_sum(j), sol.x_j[j]);
                check_le("outgoing mass floor", id, kappa(beta_star, marginal_or_flag(j)), plan.rates.out_mass(j));
            }
            for (int j = 0; j <= m; ++j)
                for (int k = 0; k <= m; ++k)
                    if (ref.at(j, k) <= 1e-15)
                        check_le("support containment", id_of(inst, j) + ":" + id_of(inst, k),
                                 plan.rates.at(j, k), 0.0);
            for (double b : {1.0, 2.0, 4.0}) {
                const RateTable at_b = build_beta(inst, sol, b).rates;
                for (int j = 0; j <= m; ++j)
                    for (int k = 0; k <= m; ++k)
                        if (j != k)
                            check_le("limit dominates finite beta", id_of(inst, j) + ":" + id_of(inst, k),
                                     at_b.at(j, k), plan.rates.at(j, k));
            }
            break;
        }
        case PlanKind::amortized: {
            const RateTable ref = build_wasteful(inst, sol).rates;
            for (int j = 0; j < m; ++j) {
                const std::string& id = inst.offline()[j].id;
                const double d = delta(marginal_or_flag(j), plan.beta_drop);
                check_eq("first-choice rate drop", id, plan.rates.row_sum(j), (1.0 - d) * ref.row_sum(j));
                for (int k = 0; k <= m; ++k)
                    check_eq("pair rate drop", id + ":" + id_of(inst, k), plan.rates.at(j, k),
                             (1.0 - d) * ref.at(j, k));
            }
            for (int k = 0; k <= m; ++k) {
                double expected = ref.at(m, k);
                for (int j = 0; j < m; ++j)
                    expected += delta(marginal_or_flag(j), plan.beta_drop) * ref.at(j, k);
                check_eq("dummy-led rate identity", id_of(inst, k), plan.rates.at(m, k), expected);
            }
            break;
        }
    }
    return rep;
}

std::string PlanPropertyReport::to_json() const {
    nlohmann::json doc;
    doc["checks"] = checks;
    doc["ok"] = ok();
    nlohmann::json rows = nlohmann::json::array();
    for (const PlanPropertyFailure& f : failures)
        rows.push_back({{"property", f.property}, {"vertex", f.vertex}, {"lhs", f.lhs}, {"rhs", f.rhs}});
    doc["failures"] = std::move(rows);
    return doc.dump(2) + "\n";
}

} // namespace stomatch
