#pragma once

#include <string>
#include <utility>
#include <vector>

namespace stomatch {

// Log-probability that no (*,j,k) arrival follows the first (*,j,*) arrival,
// at rates x = mu_j, y = mu_jk. Requires 0 <= y <= x; phi(x, x) = ln(1+x) - x.
double phi(double x, double y);

// Probability that at least one (*,k,j) arrival follows the first (*,k,*)
// arrival. Satisfies exp(phi(x, y)) + unmatched_after_first(x, y) = 1.
double unmatched_after_first(double mu_k, double mu_kj);

// Lower bound on a vertex's outgoing backup mass as a function of its
// fractional marginal x, piecewise with breakpoint at x = 1/(beta+1).
double kappa(double beta, double x);

// Drop rate for amortized sampling: max{(b - (1-ln2)x)/(1 - 2(1-ln2)x), 0}.
double delta(double x, double beta_drop = 0.299);

// 1 - exp(-mu_j - mu_perp_j + sum phi(mu_k, mu_kj)) over the resample pairs.
double match_prob_lower_bound(double mu_j, double mu_perp_j,
                              const std::vector<std::pair<double, double>>& resample_pairs);

// 1 - exp(-(1-delta(x_j))*mu_j1 - mu_perp_j1 - beta_drop*resample_mass1).
double amortized_match_lower_bound(double x_j, double mu_j1, double mu_perp_j1,
                                   double resample_mass1, double beta_drop);

// L^L e^{-L} / L! for integer L >= 1, evaluated in log space.
double poisson_tail(double lam);

// Piecewise-linear convex function on [0,1] with f(0) = 0, described by
// breakpoints 0 = b_0 < ... < b_m = 1 and one slope per segment.
class StepFunction {
public:
    StepFunction(std::vector<double> breakpoints, std::vector<double> slopes);

    // max{(beta+1)x - beta, 0} for beta >= 0.
    static StepFunction hinge(double beta);

    double operator()(double x) const;

    // Integral of f(e^{-t}) dt over [0, T]; T may be +infinity.
    double integral_exp(double T) const;

    const std::vector<double>& breakpoints() const { return bp_; }
    const std::vector<double>& slopes() const { return slope_; }

private:
    std::vector<double> bp_;
    std::vector<double> slope_;
    std::vector<double> offset_;   // f(x) = offset_[s] + slope_[s]*x on segment s
};

// For a single offline vertex with neighbor rates `lambdas` and assignment
// column `x_col`: lhs = sum lambda_i f(x_i/lambda_i), rhs = the integral of
// f(e^{-t}) over [0, -ln(1 - sum x_i)]. Rejects columns that violate the
// prefix constraints.
std::pair<double, double> jensen_converse_check(const StepFunction& f,
                                                const std::vector<double>& lambdas,
                                                const std::vector<double>& x_col);

struct FunctionPropertyReport {
    long long checks = 0;
    double worst_monotone_step = 0.0;     // max adjacent difference of phi (want <= 1e-12)
    double worst_second_difference = 0.0; // min second difference of phi (want >= -1e-10)
    double worst_bilinear_slack = 0.0;    // min of (ln2-1)xy - phi(x,y) (want >= -1e-12)
    double worst_ratio_curve_step = 0.0;  // max adjacent difference of the ratio curve on [1/2,1]
    double phi_equality_gap = 0.0;        // |phi(1,1) - (ln2 - 1)|
    std::vector<std::string> violations;  // capped listing of offending grid points
    bool ok() const { return violations.empty(); }
    std::string to_json() const;
};

// Grid checks over [0,1]^2: phi non-increasing and convex per coordinate,
// phi(x,y) <= (ln2-1)xy, and (1-e^{-x})/x + (1/e)(1-2/e)x non-increasing
// on [1/2, 1].
FunctionPropertyReport verify_function_properties(double grid_step = 1e-3);

struct CertPoint {
    double x;
    double bound_value;
    double ratio;   // bound_value / x
};

struct RatioCertificate {
    std::string theorem;        // "t15" | "t19" | "t22"
    double grid_step = 0.0;
    double target = 0.0;
    double min_ratio = 0.0;
    double argmin = 0.0;
    bool passed = false;
    bool side_condition_ok = true;   // small-x basic-part floor where applicable
    std::vector<CertPoint> points;

    std::string summary_json() const;   // {theorem, min_ratio, argmin, target, passed}
    std::string csv() const;            // columns x, bound_value, ratio
};

// Integral over [1, 1/(1-ln2)] of e^{-(1-ln2)b} (ln((b+1)/b) - 1/(b+1)) db,
// by adaptive Simpson quadrature to the given tolerance.
double theorem19_integral(double quad_tol = 1e-10);

// Ratio certificates: minimum of bound(x)/x over a grid on (0,1] with local
// refinement around the argmin.
RatioCertificate certificate_t15(double grid_step = 1e-4);
RatioCertificate certificate_t19(double quad_tol = 1e-10, double grid_step = 1e-4);
RatioCertificate certificate_t22(double beta_drop = 0.299, double grid_step = 1e-4);

} // namespace stomatch
