#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "stomatch/analysis.hpp"
#include "stomatch/error.hpp"

namespace stomatch {

namespace {

constexpr double kPhiBranch = 1e-6;

// ln(x/(x-y) e^{-y} - y/(x-y) e^{-x}) rewritten as ln(1 + x expm1(d)/d) - x
// with d = x - y; the rewrite avoids the cancellation of the textbook form
// and is symmetric in (x, y).
double phi_closed(double x, double y) {
    const double d = x - y;
    return std::log1p(x * std::expm1(d) / d) - x;
}

double phi_equal(double m) { return std::log1p(m) - m; }

// Valid on the whole square regardless of the order of x and y.
double phi_any(double x, double y) {
    if (std::abs(x - y) > kPhiBranch) return phi_closed(x, y);
    return phi_equal(0.5 * (x + y));
}

void check_pair_domain(const char* who, double x, double y) {
    if (!(x >= 0.0) || !(y >= 0.0))
        fail(ErrorCode::domain, std::string(who) + ": negative input");
    if (y > x + 1e-12)
        fail(ErrorCode::domain, std::string(who) + ": second rate exceeds first");
}

double ratio_curve(double x) {
    const double c = std::exp(-1.0) * (1.0 - 2.0 * std::exp(-1.0));
    return -std::expm1(-x) / x + c * x;
}

} // namespace

double phi(double x, double y) {
    check_pair_domain("phi", x, y);
    if (y > x) y = x;
    return phi_any(x, y);
}

double unmatched_after_first(double mu_k, double mu_kj) {
    check_pair_domain("unmatched_after_first", mu_k, mu_kj);
    if (mu_kj > mu_k) mu_kj = mu_k;
    const double d = mu_k - mu_kj;
    if (std::abs(d) > kPhiBranch) {
        // 1 - e^{-mu_k} (1 + mu_k expm1(d)/d); shares the stable factor with
        // phi_closed so the exp(phi) identity holds to rounding error.
        return 1.0 - std::exp(-mu_k) * (1.0 + mu_k * std::expm1(d) / d);
    }
    const double m = 0.5 * (mu_k + mu_kj);
    return 1.0 - std::exp(-m) * (1.0 + m);
}

double kappa(double beta, double x) {
    if (!(beta >= 1.0 - 1e-12)) fail(ErrorCode::domain, "kappa: beta must be >= 1");
    if (!(x >= -1e-12) || !(x <= 1.0 + 1e-12)) fail(ErrorCode::domain, "kappa: x must lie in [0,1]");
    x = std::clamp(x, 0.0, 1.0);
    if (x <= 1.0 / (beta + 1.0)) return -beta * (std::log1p(-x) + x);
    return x - 1.0 + beta * std::log1p(1.0 / beta);
}

double delta(double x, double beta_drop) {
    if (!(x >= -1e-12) || !(x <= 1.0 + 1e-12)) fail(ErrorCode::domain, "delta: x must lie in [0,1]");
    if (!(beta_drop >= 0.0) || !(beta_drop < std::log(2.0)))
        fail(ErrorCode::domain, "delta: drop rate must lie in [0, ln 2)");
    x = std::clamp(x, 0.0, 1.0);
    const double a = 1.0 - std::log(2.0);
    return std::max((beta_drop - a * x) / (1.0 - 2.0 * a * x), 0.0);
}

double match_prob_lower_bound(double mu_j, double mu_perp_j,
                              const std::vector<std::pair<double, double>>& resample_pairs) {
    if (!(mu_j >= 0.0) || !(mu_perp_j >= 0.0))
        fail(ErrorCode::domain, "match_prob_lower_bound: negative rate");
    double s = -mu_j - mu_perp_j;
    for (const auto& [mu_k, mu_kj] : resample_pairs) s += phi(mu_k, mu_kj);
    return -std::expm1(s);
}

double amortized_match_lower_bound(double x_j, double mu_j1, double mu_perp_j1,
                                   double resample_mass1, double beta_drop) {
    if (!(mu_j1 >= 0.0) || !(mu_perp_j1 >= 0.0) || !(resample_mass1 >= 0.0))
        fail(ErrorCode::domain, "amortized_match_lower_bound: negative rate");
    const double d = delta(x_j, beta_drop);
    return -std::expm1(-(1.0 - d) * mu_j1 - mu_perp_j1 - beta_drop * resample_mass1);
}

double poisson_tail(double lam) {
    const double rounded = std::round(lam);
    if (!(lam >= 1.0 - 1e-9) || std::abs(lam - rounded) > 1e-9)
        fail(ErrorCode::domain, "poisson_tail: argument must be an integer >= 1");
    return std::exp(rounded * std::log(rounded) - rounded - std::lgamma(rounded + 1.0));
}

StepFunction::StepFunction(std::vector<double> breakpoints, std::vector<double> slopes)
    : bp_(std::move(breakpoints)), slope_(std::move(slopes)) {
    if (bp_.size() < 2 || slope_.size() + 1 != bp_.size())
        fail(ErrorCode::domain, "StepFunction: need k+1 breakpoints for k slopes");
    if (bp_.front() != 0.0 || bp_.back() != 1.0)
        fail(ErrorCode::domain, "StepFunction: breakpoints must span [0, 1]");
    for (std::size_t i = 1; i < bp_.size(); ++i)
        if (!(bp_[i] > bp_[i - 1]))
            fail(ErrorCode::domain, "StepFunction: breakpoints must be strictly increasing");
    for (std::size_t i = 1; i < slope_.size(); ++i)
        if (slope_[i] < slope_[i - 1] - 1e-12)
            fail(ErrorCode::domain, "StepFunction: slopes must be non-decreasing (convexity)");
    offset_.resize(slope_.size());
    double value = 0.0;   // f(0) = 0
    for (std::size_t s = 0; s < slope_.size(); ++s) {
        offset_[s] = value - slope_[s] * bp_[s];
        value += slope_[s] * (bp_[s + 1] - bp_[s]);
    }
}

StepFunction StepFunction::hinge(double beta) {
    if (!(beta >= 0.0)) fail(ErrorCode::domain, "StepFunction::hinge: beta must be >= 0");
    if (beta == 0.0) return StepFunction({0.0, 1.0}, {1.0});
    return StepFunction({0.0, beta / (beta + 1.0), 1.0}, {0.0, beta + 1.0});
}

double StepFunction::operator()(double x) const {
    if (!(x >= -1e-12) || !(x <= 1.0 + 1e-12))
        fail(ErrorCode::domain, "StepFunction: argument outside [0, 1]");
    x = std::clamp(x, 0.0, 1.0);
    std::size_t s = std::upper_bound(bp_.begin(), bp_.end(), x) - bp_.begin();
    s = std::clamp<std::size_t>(s, 1, slope_.size()) - 1;
    return offset_[s] + slope_[s] * x;
}

double StepFunction::integral_exp(double T) const {
    if (std::isnan(T) || T < 0.0) fail(ErrorCode::domain, "StepFunction::integral_exp: T must be >= 0");
    double total = 0.0;
    for (std::size_t s = 0; s < slope_.size(); ++s) {
        // e^{-t} lies in [bp_[s], bp_[s+1]] for t in [t1, t2].
        const double t1 = -std::log(bp_[s + 1]);
        const double t2 = bp_[s] > 0.0 ? -std::log(bp_[s]) : std::numeric_limits<double>::infinity();
        const double lo = std::max(t1, 0.0);
        const double hi = std::min(t2, T);
        if (hi <= lo) continue;
        if (offset_[s] != 0.0) total += offset_[s] * (hi - lo);
        total += slope_[s] * (std::exp(-lo) - std::exp(-hi));
    }
    return total;
}

std::pair<double, double> jensen_converse_check(const StepFunction& f,
                                                const std::vector<double>& lambdas,
                                                const std::vector<double>& x_col) {
    if (lambdas.size() != x_col.size())
        fail(ErrorCode::domain, "jensen_converse_check: size mismatch");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0.0)) fail(ErrorCode::domain, "jensen_converse_check: rates must be positive");
        if (x_col[i] < -1e-12 || x_col[i] > lambdas[i] + 1e-12)
            fail(ErrorCode::domain, "jensen_converse_check: entry outside [0, lambda]");
    }

    // Prefix feasibility for the implied single offline vertex.
    std::vector<std::size_t> order(lambdas.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x_col[a] / lambdas[a] > x_col[b] / lambdas[b];
    });
    double px = 0.0, pl = 0.0;
    for (std::size_t i : order) {
        px += x_col[i];
        pl += lambdas[i];
        if (px > -std::expm1(-pl) + 1e-9)
            fail(ErrorCode::validate, "jensen_converse_check: column violates the prefix constraints");
    }

    double lhs = 0.0, total = 0.0;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        lhs += lambdas[i] * f(std::clamp(x_col[i] / lambdas[i], 0.0, 1.0));
        total += std::max(x_col[i], 0.0);
    }
    const double T = total < 1.0 ? -std::log1p(-total) : std::numeric_limits<double>::infinity();
    return {lhs, f.integral_exp(T)};
}

namespace {

template <class... A>
std::string cat(A&&... a) {
    std::ostringstream os;
    (os << ... << a);
    return os.str();
}

} // namespace

FunctionPropertyReport verify_function_properties(double grid_step) {
    if (!(grid_step > 0.0) || grid_step > 0.5)
        fail(ErrorCode::domain, "verify_function_properties: grid step outside (0, 0.5]");
    const long long n = std::max<long long>(2, std::llround(1.0 / grid_step));
    const double ln2m1 = std::log(2.0) - 1.0;

    FunctionPropertyReport rep;
    // phi extended symmetrically to the whole square.
    const auto at = [n](long long i, long long j) {
        const double x = static_cast<double>(i) / static_cast<double>(n);
        const double y = static_cast<double>(j) / static_cast<double>(n);
        return phi(std::max(x, y), std::min(x, y));
    };
    std::vector<double> grid(static_cast<std::size_t>((n + 1) * (n + 1)));
    for (long long i = 0; i <= n; ++i)
        for (long long j = 0; j <= n; ++j)
            grid[static_cast<std::size_t>(i * (n + 1) + j)] = at(i, j);
    const auto g = [&](long long i, long long j) {
        return grid[static_cast<std::size_t>(i * (n + 1) + j)];
    };

    rep.worst_monotone_step = -std::numeric_limits<double>::infinity();
    rep.worst_second_difference = std::numeric_limits<double>::infinity();
    rep.worst_bilinear_slack = std::numeric_limits<double>::infinity();
    rep.worst_ratio_curve_step = -std::numeric_limits<double>::infinity();
    const auto note = [&rep](std::string s) {
        if (rep.violations.size() < 20) rep.violations.push_back(std::move(s));
    };

    for (long long i = 0; i <= n; ++i) {
        for (long long j = 0; j <= n; ++j) {
            const double x = static_cast<double>(i) / static_cast<double>(n);
            const double y = static_cast<double>(j) / static_cast<double>(n);
            if (j + 1 <= n) {
                const double d = g(i, j + 1) - g(i, j);
                rep.worst_monotone_step = std::max(rep.worst_monotone_step, d);
                ++rep.checks;
                if (d > 1e-12) note(cat("phi increases along y at (", x, ", ", y, "): step ", d));
            }
            if (i + 1 <= n) {
                const double d = g(i + 1, j) - g(i, j);
                rep.worst_monotone_step = std::max(rep.worst_monotone_step, d);
                ++rep.checks;
                if (d > 1e-12) note(cat("phi increases along x at (", x, ", ", y, "): step ", d));
            }
            if (j >= 1 && j + 1 <= n) {
                const double d2 = g(i, j + 1) - 2.0 * g(i, j) + g(i, j - 1);
                rep.worst_second_difference = std::min(rep.worst_second_difference, d2);
                ++rep.checks;
                if (d2 < -1e-10) note(cat("phi concave along y at (", x, ", ", y, "): ", d2));
            }
            if (i >= 1 && i + 1 <= n) {
                const double d2 = g(i + 1, j) - 2.0 * g(i, j) + g(i - 1, j);
                rep.worst_second_difference = std::min(rep.worst_second_difference, d2);
                ++rep.checks;
                if (d2 < -1e-10) note(cat("phi concave along x at (", x, ", ", y, "): ", d2));
            }
            const double slack = ln2m1 * x * y - g(i, j);
            rep.worst_bilinear_slack = std::min(rep.worst_bilinear_slack, slack);
            ++rep.checks;
            if (slack < -1e-12) note(cat("phi exceeds (ln2-1)xy at (", x, ", ", y, "): slack ", slack));
        }
    }

    // Ratio curve non-increasing on [1/2, 1].
    double prev = 0.0;
    bool have_prev = false;
    for (long long i = 0; i <= n; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n);
        if (x < 0.5) continue;
        const double v = ratio_curve(x);
        if (have_prev) {
            const double d = v - prev;
            rep.worst_ratio_curve_step = std::max(rep.worst_ratio_curve_step, d);
            ++rep.checks;
            if (d > 1e-12) note(cat("ratio curve increases at x = ", x, ": step ", d));
        }
        prev = v;
        have_prev = true;
    }

    rep.phi_equality_gap = std::abs(phi(1.0, 1.0) - ln2m1);
    ++rep.checks;
    if (rep.phi_equality_gap > 1e-12) note(cat("phi(1,1) misses ln2 - 1 by ", rep.phi_equality_gap));
    return rep;
}

std::string FunctionPropertyReport::to_json() const {
    nlohmann::json doc;
    doc["checks"] = checks;
    doc["ok"] = ok();
    doc["phi_equality_gap"] = phi_equality_gap;
    doc["worst_bilinear_slack"] = worst_bilinear_slack;
    doc["worst_monotone_step"] = worst_monotone_step;
    doc["worst_ratio_curve_step"] = worst_ratio_curve_step;
    doc["worst_second_difference"] = worst_second_difference;
    doc["violations"] = violations;
    return doc.dump(2) + "\n";
}

} // namespace stomatch
