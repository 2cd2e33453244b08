#include "parqkd/entropy.hpp"

#include <cmath>
#include <stdexcept>

namespace parqkd {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

double binary_entropy(double p) {
    if (!(p >= 0 && p <= 1)) throw std::invalid_argument("binary_entropy: p must be in [0,1]");
    if (p == 0 || p == 1) return 0;
    return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

double capital_f(double x) {
    const double lo = 0.75, hi = (2 + kSqrt2) / 4;
    if (!(x >= lo - 1e-15 && x <= hi + 1e-15))
        throw std::invalid_argument("capital_f: x outside [3/4, (2+sqrt2)/4]");
    double s = 3 - 16 * x * (1 - x);
    if (s < 0) s = 0;  // roundoff at the lower endpoint
    double u = 0.5 + 0.5 * std::sqrt(s);
    if (u > 1) u = 1;  // roundoff at the upper endpoint
    return 1 - binary_entropy(u);
}

double capital_f_prime(double x) {
    const double lo = 0.75, hi = (2 + kSqrt2) / 4;
    if (!(x > lo && x < hi))
        throw std::invalid_argument("capital_f_prime: x outside the open domain");
    double s = 3 - 16 * x * (1 - x);
    double u = 0.5 + 0.5 * std::sqrt(s);
    // dF/dx = h'(u) * (-du/dx) with h'(u) = log2((1-u)/u),
    // du/dx = 4(2x-1)/sqrt(s).
    double du = 4 * (2 * x - 1) / std::sqrt(s);
    return -std::log2((1 - u) / u) * du;
}

double g_alpha_nu(double omega, double alpha, double nu) {
    double denom = nu * (1 - alpha) * (1 - alpha);
    if (!(denom > 0)) throw std::invalid_argument("g_alpha_nu: nu (1-alpha)^2 must be positive");
    return 1 - (1 - omega) / denom;
}

double omega_min(double alpha, double nu) { return 1 - (1 - alpha) * (1 - alpha) * nu / 4; }

double omega_max(double alpha, double nu) {
    return 1 - (2 - kSqrt2) / 4 * (1 - alpha) * (1 - alpha) * nu;
}

double single_round_bound(double omega, double alpha, double nu) {
    const double lo = omega_min(alpha, nu), hi = omega_max(alpha, nu);
    if (!(omega >= lo - 1e-15 && omega <= hi + 1e-15))
        throw std::invalid_argument("single_round_bound: omega outside the admissible window");
    return (1 - alpha) * capital_f(g_alpha_nu(omega, alpha, nu));
}

double tradeoff_f(double x, double alpha, double nu, double gamma) {
    if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("tradeoff_f: gamma must be in (0,1)");
    double omega = x / gamma;
    if (omega < omega_min(alpha, nu) || omega > omega_max(alpha, nu)) return 0;
    return (1 - alpha) * capital_f(g_alpha_nu(omega, alpha, nu));
}

AffineTradeoff affine_min_tradeoff(double alpha, double nu, double gamma, double omega_th) {
    if (!(gamma > 0 && gamma < 1))
        throw std::invalid_argument("affine_min_tradeoff: gamma must be in (0,1)");
    if (!(omega_th > omega_min(alpha, nu) && omega_th < omega_max(alpha, nu)))
        throw std::invalid_argument("affine_min_tradeoff: omega_th not in the window interior");
    double g = g_alpha_nu(omega_th, alpha, nu);
    double value = (1 - alpha) * capital_f(g);
    // d/dx (1-alpha) F(g(x/gamma)) = F'(g) / (nu gamma (1-alpha))
    double slope = capital_f_prime(g) / (nu * gamma * (1 - alpha));
    double x0 = gamma * omega_th;
    return AffineTradeoff{value - slope * x0, slope, std::abs(slope)};
}

double mu_of_eps(double eps, double dim_a, double dim_b) {
    if (!(eps > 0 && eps < 1)) throw std::invalid_argument("mu_of_eps: eps must be in (0,1)");
    if (!(dim_a >= 2 && dim_b >= 2)) throw std::invalid_argument("mu_of_eps: dims must be >= 2");
    double ab = dim_a * dim_b;
    double num = (8 * std::sqrt(eps) + 2 * eps) / (1 - eps * eps / (ab * ab));
    return std::cbrt(num * std::log2(ab / eps));
}

double mu_application(double eps, double alphabet_product) {
    if (!(eps > 0 && eps < 1))
        throw std::invalid_argument("mu_application: eps must be in (0,1)");
    if (!(alphabet_product >= 2))
        throw std::invalid_argument("mu_application: alphabet product must be >= 2");
    return std::cbrt(4 * (4 * std::sqrt(eps) + eps) * std::log2(alphabet_product / eps));
}

double mu_prime(double mu, double p_omega) {
    if (!(p_omega > 0 && p_omega <= 1))
        throw std::invalid_argument("mu_prime: P(Omega) must be in (0,1]");
    if (!(mu >= 0)) throw std::invalid_argument("mu_prime: mu must be nonnegative");
    return 2 * std::sqrt(mu / p_omega);
}

double g1(double x, double y) {
    if (!(x > 0 && x < 1 && y >= 0 && y < 1)) throw std::invalid_argument("g1: domain");
    return -std::log2(1 - std::sqrt(1 - x * x)) - std::log2(1 - y * y);
}

double g2(double x) {
    if (!(x > 0)) throw std::invalid_argument("g2: x must be positive");
    return x * std::log2(1 / x) + (1 + x) * std::log2(1 + x);
}

double eat_lower_bound(const EatParams& p) {
    if (!(p.n_rounds >= 1)) throw std::invalid_argument("eat_lower_bound: n_rounds < 1");
    double mu = mu_of_eps(p.epsilon, p.dim_a, p.dim_b);
    if (!(p.p_omega > mu))
        throw std::invalid_argument("eat_lower_bound: P(Omega) must exceed mu");
    double mup = mu_prime(mu, p.p_omega);
    if (!(p.eps_prime > 0 && mup + p.eps_prime < 1))
        throw std::invalid_argument("eat_lower_bound: need mu' + eps' < 1");
    double v = std::log2(1 + 2 * p.dim_a) + 2 * std::ceil(p.grad_bound);
    double first =
        p.n_rounds * (p.tradeoff_h - v * (3 * std::sqrt(mu) + 4 * p.epsilon) - g2(2 * p.epsilon));
    double second = v / std::sqrt(mu) *
                    (2 * std::log2(1 / (p.p_omega - mu)) + 2 / (mu * mu) +
                     2 * std::log2(1 / (1 - mu * mu)) + g1(p.eps_prime, mup));
    return first - second;
}

double leak_ir(double t, double nu, double alpha, double delta1, const BoundConstants& c) {
    double arg = 2 * (nu + alpha + delta1);
    if (!(t >= 0) || !(arg >= 0 && arg <= 1))
        throw std::invalid_argument("leak_ir: arguments out of range");
    return t * binary_entropy(arg) + c.c_additive;
}

double test_leak(double t, double gamma, double dim_a) {
    if (!(t >= 0) || !(gamma >= 0 && gamma <= 1) || !(dim_a >= 2))
        throw std::invalid_argument("test_leak: arguments out of range");
    return 2 * gamma * t * std::log2(dim_a);
}

double hmax_b_given_a(double t, double nu, double alpha, double delta1) {
    double arg = 2 * (nu + alpha + delta1);
    if (!(t >= 0) || !(arg >= 0 && arg <= 1))
        throw std::invalid_argument("hmax_b_given_a: arguments out of range");
    return t * binary_entropy(arg);
}

std::int64_t pa_output_length(double hmin_bound, double eps_pa) {
    if (!(hmin_bound >= 0)) throw std::invalid_argument("pa_output_length: bound must be >= 0");
    if (!(eps_pa > 0 && eps_pa < 1))
        throw std::invalid_argument("pa_output_length: eps_pa must be in (0,1)");
    double len = hmin_bound - 2 * std::log2(1 / eps_pa);
    if (len <= 0) return 0;
    return static_cast<std::int64_t>(std::floor(len));
}

}  // namespace parqkd
