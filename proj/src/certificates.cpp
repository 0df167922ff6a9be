#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stomatch/analysis.hpp"
#include "stomatch/error.hpp"

namespace stomatch {

namespace {

const double kLn2 = std::log(2.0);
const double kC15 = std::exp(-1.0) * (1.0 - 2.0 * std::exp(-1.0));

template <class F>
double simpson_split(const F& f, double a, double m, double b, double fa, double fm, double fb,
                     double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double diff = left + right - whole;
    if (std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
    if (depth <= 0) fail(ErrorCode::numeric, "adaptive quadrature did not converge");
    return simpson_split(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_split(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_split(f, a, m, b, fa, fm, fb, whole, tol, 48);
}

// Minimum of bound(x)/x over the grid {k/n : k = 1..n} plus a 1e-7-step
// refinement window around the coarse argmin.
RatioCertificate run_grid(const char* theorem, double target, double grid_step,
                          const std::function<double(double)>& bound) {
    if (!(grid_step > 0.0) || grid_step > 0.5)
        fail(ErrorCode::domain, "certificate: grid step outside (0, 0.5]");
    const long long n = std::max<long long>(2, std::llround(1.0 / grid_step));

    RatioCertificate cert;
    cert.theorem = theorem;
    cert.grid_step = 1.0 / static_cast<double>(n);
    cert.target = target;
    cert.points.reserve(static_cast<std::size_t>(n) + 2100);
    for (long long k = 1; k <= n; ++k) {
        const double x = static_cast<double>(k) / static_cast<double>(n);
        const double b = bound(x);
        cert.points.push_back({x, b, b / x});
    }

    std::size_t coarse = 0;
    for (std::size_t i = 1; i < cert.points.size(); ++i)
        if (cert.points[i].ratio < cert.points[coarse].ratio) coarse = i;

    const double span = std::min(cert.grid_step, 1e-3);
    const long long fine = 10000000;   // refinement step 1e-7
    const long long lo = std::max<long long>(std::llround((cert.points[coarse].x - span) * fine), 1);
    const long long hi = std::min<long long>(std::llround((cert.points[coarse].x + span) * fine), fine);
    for (long long k = lo; k <= hi; ++k) {
        const double x = static_cast<double>(k) / static_cast<double>(fine);
        const double b = bound(x);
        cert.points.push_back({x, b, b / x});
    }

    std::sort(cert.points.begin(), cert.points.end(),
              [](const CertPoint& a, const CertPoint& b) { return a.x < b.x; });
    cert.points.erase(std::unique(cert.points.begin(), cert.points.end(),
                                  [](const CertPoint& a, const CertPoint& b) { return a.x == b.x; }),
                      cert.points.end());

    cert.min_ratio = cert.points.front().ratio;
    cert.argmin = cert.points.front().x;
    for (const CertPoint& p : cert.points) {
        if (p.ratio < cert.min_ratio) {
            cert.min_ratio = p.ratio;
            cert.argmin = p.x;
        }
    }
    cert.passed = cert.min_ratio >= target;
    return cert;
}

// (1 - e^{-x})/x >= 2(1 - e^{-1/2}) for every grid point x <= 1/2.
bool basic_part_floor(const std::vector<CertPoint>& points) {
    const double floor = -2.0 * std::expm1(-0.5);
    for (const CertPoint& p : points) {
        if (p.x > 0.5) continue;
        if (-std::expm1(-p.x) / p.x < floor - 1e-12) return false;
    }
    return true;
}

} // namespace

double theorem19_integral(double quad_tol) {
    if (!(quad_tol > 0.0)) fail(ErrorCode::domain, "theorem19_integral: tolerance must be positive");
    const double a = 1.0 - kLn2;
    const auto f = [a](double b) { return std::exp(-a * b) * (std::log1p(1.0 / b) - 1.0 / (b + 1.0)); };
    return adaptive_simpson(f, 1.0, 1.0 / a, quad_tol);
}

RatioCertificate certificate_t15(double grid_step) {
    const auto bound = [](double x) { return -std::expm1(-x) + kC15 * x * kappa(1.0, x); };
    RatioCertificate cert = run_grid("t15", 0.699, grid_step, bound);
    cert.side_condition_ok = basic_part_floor(cert.points);
    return cert;
}

RatioCertificate certificate_t19(double quad_tol, double grid_step) {
    const double integral = theorem19_integral(quad_tol);
    const auto bound = [integral](double x) {
        const double basic = -std::expm1(-x);
        if (x <= 0.5) return basic;
        return basic + kC15 * x * (x - 1.0 + kLn2) + (1.0 - kLn2) * std::exp(-1.0) * x * integral;
    };
    RatioCertificate cert = run_grid("t19", 0.711, grid_step, bound);
    cert.side_condition_ok = basic_part_floor(cert.points);
    return cert;
}

RatioCertificate certificate_t22(double beta_drop, double grid_step) {
    const auto bound = [beta_drop](double x) {
        return -std::expm1(-(1.0 - delta(x, beta_drop)) * x - beta_drop * kappa(1.0, x));
    };
    RatioCertificate cert = run_grid("t22", 0.7009, grid_step, bound);
    return cert;
}

std::string RatioCertificate::summary_json() const {
    nlohmann::json doc;
    doc["theorem"] = theorem;
    doc["min_ratio"] = min_ratio;
    doc["argmin"] = argmin;
    doc["target"] = target;
    doc["passed"] = passed;
    return doc.dump(2) + "\n";
}

std::string RatioCertificate::csv() const {
    std::string out = "x,bound_value,ratio\n";
    char line[128];
    for (const CertPoint& p : points) {
        std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", p.x, p.bound_value, p.ratio);
        out += line;
    }
    return out;
}

} // namespace stomatch
