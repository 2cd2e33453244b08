#pragma once

#include <cstdint>

namespace parqkd {

// All logarithms in this module are base 2.

double binary_entropy(double p);  // h(p), endpoints give 0

// F(x) = 1 - h(1/2 + sqrt(3 - 16 x (1-x)) / 2) on [3/4, (2+sqrt2)/4].
// Strict domain: throws outside.
double capital_f(double x);
double capital_f_prime(double x);  // analytic derivative, interior points

// g_{alpha,nu}(omega) = 1 - (1-omega) / (nu (1-alpha)^2)
double g_alpha_nu(double omega, double alpha, double nu);

// Admissible winning-probability window of the anchored game.
double omega_min(double alpha, double nu);  // 1 - (1-alpha)^2 nu / 4
double omega_max(double alpha, double nu);  // 1 - (2-sqrt2)/4 (1-alpha)^2 nu

// Single-round entropy bound (1-alpha) F(g_{alpha,nu}(omega)); omega must lie
// in [omega_min, omega_max].
double single_round_bound(double omega, double alpha, double nu);

// Piecewise min-tradeoff ingredient F_{alpha,nu}(x): equals
// (1-alpha) F(g(x/gamma)) when x/gamma is in the window, 0 elsewhere.
double tradeoff_f(double x, double alpha, double nu, double gamma);

struct AffineTradeoff {
    double intercept, slope, grad_bound;
    double at(double x) const { return intercept + slope * x; }
};

// Tangent of F_{alpha,nu} at x0 = gamma * omega_th (omega_th in the window
// interior). Since F_{alpha,nu} is convex on the window, the tangent lies
// below it there and below 0 = F_{alpha,nu} to the left of the window.
AffineTradeoff affine_min_tradeoff(double alpha, double nu, double gamma, double omega_th);

// mu of the entropy-accumulation bound:
//   ((8 sqrt(eps) + 2 eps) / (1 - eps^2/(dimA*dimB)^2) * log2(dimA*dimB/eps))^(1/3)
double mu_of_eps(double eps, double dim_a, double dim_b);
// Application variant: (4 (4 sqrt(eps) + eps) log2(alphabet_product/eps))^(1/3)
double mu_application(double eps, double alphabet_product);
double mu_prime(double mu, double p_omega);  // 2 sqrt(mu / P(Omega))

double g1(double x, double y);  // -log2(1 - sqrt(1-x^2)) - log2(1-y^2)
double g2(double x);            // x log2(1/x) + (1+x) log2(1+x)

struct EatParams {
    double n_rounds;        // number of accumulation steps
    double dim_a, dim_b;    // |A|, |B| register dimensions
    double epsilon;         // approximation parameter, in (0,1)
    double eps_prime;       // smoothing split, mu' + eps' < 1
    double p_omega;         // success probability of the conditioning event
    double tradeoff_h;      // min-tradeoff value h on the event
    double grad_bound;      // ||grad f||_inf
};

// Full right-hand side of the accumulation bound:
//   n (h - V (3 sqrt(mu) + 4 eps) - g2(2 eps))
//   - V/sqrt(mu) (2 log2(1/(P - mu)) + 2/mu^2 + 2 log2(1/(1-mu^2)) + g1(eps', mu'))
// with V = log2(1 + 2|A|) + 2 ceil(grad_bound). Throws when eps is outside
// (0,1), P <= mu, or mu' + eps' >= 1.
double eat_lower_bound(const EatParams& p);

// Knobs for the unspecified O(.) factors of the asymptotic statements.
struct BoundConstants {
    double c_eps = 1.0;       // eps = c_eps * delta^(1/16) / alpha^3
    double c_mu_term = 1.0;   // loss term c * sqrt(mu) / (nu gamma)
    double c_additive = 1.0;  // the single collected O(1) additive term, bits
};

double leak_ir(double t, double nu, double alpha, double delta1,
               const BoundConstants& c = {});                 // t h(2(nu+alpha+delta1)) + c_additive
double test_leak(double t, double gamma, double dim_a);       // 2 gamma t log2|A|
double hmax_b_given_a(double t, double nu, double alpha, double delta1);

// floor(bound - 2 log2(1/eps_pa)) clamped at 0.
std::int64_t pa_output_length(double hmin_bound, double eps_pa);

}  // namespace parqkd
