#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "parqkd/entropy.hpp"

using namespace parqkd;

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
const double kOmegaQ = (2 + kSqrt2) / 4;
}  // namespace

TEST_CASE("binary entropy") {
    CHECK(binary_entropy(0.5) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK(binary_entropy(1.0) == 0.0);
    // high-precision reference value for h(0.006)
    CHECK(binary_entropy(0.006) == doctest::Approx(0.05291508034484765).epsilon(1e-12));
    CHECK(binary_entropy(0.2) == doctest::Approx(0.7219280948873623).epsilon(1e-12));
    CHECK(binary_entropy(0.3) == doctest::Approx(0.8812908992306926).epsilon(1e-12));
    CHECK_THROWS_AS(binary_entropy(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(binary_entropy(1.1), std::invalid_argument);
}

TEST_CASE("capital F endpoints and reference values") {
    CHECK(std::abs(capital_f(0.75)) < 1e-9);
    CHECK(std::abs(capital_f(kOmegaQ) - 1.0) < 1e-9);
    CHECK(capital_f(0.85) == doctest::Approx(0.9185310849856458).epsilon(1e-10));
    CHECK(capital_f(0.84) == doctest::Approx(0.7617052504650198).epsilon(1e-10));
    CHECK_THROWS_AS(capital_f(0.7), std::invalid_argument);
    CHECK_THROWS_AS(capital_f(0.9), std::invalid_argument);
}

TEST_CASE("capital F is convex and nondecreasing on a 1e3 grid") {
    const int n = 1000;
    std::vector<double> v(n);
    for (int k = 0; k < n; ++k)
        v[static_cast<std::size_t>(k)] = capital_f(0.75 + (kOmegaQ - 0.75) * k / (n - 1.0));
    for (int k = 1; k < n; ++k) CHECK(v[static_cast<std::size_t>(k)] >= v[static_cast<std::size_t>(k - 1)] - 1e-12);
    for (int k = 1; k + 1 < n; ++k) {
        double second = v[static_cast<std::size_t>(k + 1)] - 2 * v[static_cast<std::size_t>(k)] +
                        v[static_cast<std::size_t>(k - 1)];
        CHECK(second >= -1e-9);
    }
}

namespace {
// five-point central stencil, O(h^4) truncation
double central5(double x, double h) {
    return (-capital_f(x + 2 * h) + 8 * capital_f(x + h) - 8 * capital_f(x - h) +
            capital_f(x - 2 * h)) /
           (12 * h);
}
}  // namespace

TEST_CASE("capital F derivative matches a central difference") {
    for (double x : {0.78, 0.80, 0.82, 0.84, 0.85}) {
        CHECK(std::abs(capital_f_prime(x) - central5(x, 1e-4)) < 1e-6);
    }
}

TEST_CASE("g map") {
    CHECK(g_alpha_nu(0.9, 0.0, 1.0) == doctest::Approx(0.9).epsilon(1e-15));
    // lower admissible endpoint maps to 3/4
    double a = 0.03, nu = 0.07;
    CHECK(g_alpha_nu(omega_min(a, nu), a, nu) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(g_alpha_nu(omega_max(a, nu), a, nu) == doctest::Approx(kOmegaQ).epsilon(1e-12));
    // alpha = nu = 1e-3: inverting the affine map at g = 0.84
    double omega = 1 - (1 - 0.84) * 1e-3 * (1 - 1e-3) * (1 - 1e-3);
    CHECK(g_alpha_nu(omega, 1e-3, 1e-3) == doctest::Approx(0.84).epsilon(1e-12));
    CHECK(g_alpha_nu(0.99984032, 1e-3, 1e-3) == doctest::Approx(0.8400001603204806).epsilon(1e-10));
    CHECK_THROWS_AS(g_alpha_nu(0.9, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("single-round bound window and composition") {
    double a = 0.05, nu = 0.05;
    CHECK(std::abs(single_round_bound(omega_min(a, nu), a, nu)) < 1e-9);
    CHECK(single_round_bound(omega_max(a, nu), a, nu) == doctest::Approx(1 - a).epsilon(1e-9));
    // omega chosen so that g = 0.84; composition oracle (1-a) * F(0.84)
    double omega = 1 - (1 - 0.84) * nu * (1 - a) * (1 - a);
    CHECK(single_round_bound(omega, a, nu) ==
          doctest::Approx(0.95 * 0.7617052504650198).epsilon(1e-10));
    CHECK_THROWS_AS(single_round_bound(0.9, a, nu), std::invalid_argument);
    CHECK_THROWS_AS(single_round_bound(0.9999, a, nu), std::invalid_argument);

    // nondecreasing in omega across the window
    double prev = -1;
    for (int k = 0; k <= 200; ++k) {
        double w = omega_min(a, nu) + (omega_max(a, nu) - omega_min(a, nu)) * k / 200.0;
        double b = single_round_bound(w, a, nu);
        CHECK(b >= prev - 1e-12);
        prev = b;
    }
}

TEST_CASE("piecewise tradeoff function") {
    double a = 0.05, nu = 0.05, gamma = 0.3;
    CHECK(std::abs(tradeoff_f(gamma * omega_min(a, nu), a, nu, gamma)) < 1e-9);
    CHECK(tradeoff_f(gamma * omega_max(a, nu), a, nu, gamma) ==
          doctest::Approx(1 - a).epsilon(1e-9));
    CHECK(tradeoff_f(0.0, a, nu, gamma) == 0.0);
    CHECK(tradeoff_f(gamma * (omega_max(a, nu) + 1e-6), a, nu, gamma) == 0.0);
}

TEST_CASE("affine min-tradeoff: tangency, tangent-below, slope") {
    double a = 0.05, nu = 0.05, gamma = 0.3;
    double omega_th = omega_min(a, nu) + 0.6 * (omega_max(a, nu) - omega_min(a, nu));
    AffineTradeoff f = affine_min_tradeoff(a, nu, gamma, omega_th);

    CHECK(f.at(gamma * omega_th) ==
          doctest::Approx(tradeoff_f(gamma * omega_th, a, nu, gamma)).epsilon(1e-12));

    // tangent never exceeds the piecewise function on a 50-point window grid
    for (int k = 0; k <= 49; ++k) {
        double x = gamma * (omega_min(a, nu) +
                            (omega_max(a, nu) - omega_min(a, nu)) * k / 49.0);
        CHECK(f.at(x) <= tradeoff_f(x, a, nu, gamma) + 1e-9);
    }
    // and stays below zero to the left of the window
    CHECK(f.at(gamma * (omega_min(a, nu) - 1e-4)) <= 0.0);

    // slope agrees with the derivative of F at g (finite-difference oracle)
    double g = g_alpha_nu(omega_th, a, nu);
    CHECK(std::abs(f.slope * nu * gamma * (1 - a) - central5(g, 1e-4)) < 1e-6);
    CHECK(f.grad_bound == std::abs(f.slope));
    CHECK_THROWS_AS(affine_min_tradeoff(a, nu, gamma, omega_max(a, nu)), std::invalid_argument);
}

TEST_CASE("mu formulas") {
    // independent high-precision evaluation of the printed formula
    CHECK(mu_of_eps(1e-8, 2, 2) == doctest::Approx(0.2838122780628581).epsilon(1e-10));
    CHECK(mu_application(1e-8, 4) == doctest::Approx(0.3575810633500119).epsilon(1e-10));
    CHECK(mu_prime(0.04, 1.0) == doctest::Approx(0.4).epsilon(1e-15));
    // monotone decreasing along a decreasing eps sequence
    double prev = mu_of_eps(1e-2, 2, 2);
    for (double eps : {1e-4, 1e-6, 1e-8, 1e-10, 1e-12}) {
        double mu = mu_of_eps(eps, 2, 2);
        CHECK(mu < prev);
        prev = mu;
    }
    CHECK_THROWS_AS(mu_of_eps(0.0, 2, 2), std::invalid_argument);
    CHECK_THROWS_AS(mu_of_eps(1.0, 2, 2), std::invalid_argument);
    CHECK_THROWS_AS(mu_prime(0.1, 0.0), std::invalid_argument);
}

TEST_CASE("g1 and g2 are nonnegative") {
    for (double x : {0.01, 0.1, 0.5, 0.9, 0.99}) {
        CHECK(g2(x) >= 0.0);
        for (double y : {0.0, 0.1, 0.5, 0.9, 0.99}) CHECK(g1(x, y) >= 0.0);
    }
}

namespace {

// Independent re-implementation of the accumulation bound for the
// duplicate-evaluation check.
double eat_reference(double n, double dim_a, double dim_b, double eps, double eps_prime,
                     double p_omega, double h, double grad) {
    double ab = dim_a * dim_b;
    double mu = std::pow((8 * std::sqrt(eps) + 2 * eps) / (1 - eps * eps / (ab * ab)) *
                             std::log2(ab / eps),
                         1.0 / 3.0);
    double mup = 2 * std::sqrt(mu / p_omega);
    double v = std::log2(1 + 2 * dim_a) + 2 * std::ceil(grad);
    double two_eps = 2 * eps;
    double g2v = two_eps * std::log2(1 / two_eps) + (1 + two_eps) * std::log2(1 + two_eps);
    double g1v = -std::log2(1 - std::sqrt(1 - eps_prime * eps_prime)) - std::log2(1 - mup * mup);
    return n * (h - v * (3 * std::sqrt(mu) + 4 * eps) - g2v) -
           v / std::sqrt(mu) *
               (2 * std::log2(1 / (p_omega - mu)) + 2 / (mu * mu) + 2 * std::log2(1 / (1 - mu * mu)) +
                g1v);
}

}  // namespace

TEST_CASE("eat lower bound: duplicate evaluation and domain") {
    EatParams p{1e6, 4, 24, 1e-24, 0.1, 0.9, 0.74, 1e3};
    double got = eat_lower_bound(p);
    double ref = eat_reference(1e6, 4, 24, 1e-24, 0.1, 0.9, 0.74, 1e3);
    CHECK(got == doctest::Approx(ref).epsilon(1e-12));

    CHECK_THROWS_AS(eat_lower_bound(EatParams{10, 2, 2, 0.0, 0.1, 1.0, 1.0, 0.0}),
                    std::invalid_argument);
    // P(Omega) <= mu
    CHECK_THROWS_AS(eat_lower_bound(EatParams{10, 2, 2, 1e-2, 0.1, 0.1, 1.0, 0.0}),
                    std::invalid_argument);
    // mu' + eps' >= 1
    CHECK_THROWS_AS(eat_lower_bound(EatParams{10, 2, 2, 1e-2, 0.9, 1.0, 1.0, 0.0}),
                    std::invalid_argument);

    // h = 0 keeps the bound nonpositive (all loss terms are nonnegative)
    for (double eps : {1e-14, 1e-12, 1e-10}) {
        EatParams q{1000, 2, 2, eps, 0.05, 1.0, 0.0, 3.0};
        CHECK(eat_lower_bound(q) <= 0.0);
    }
}

TEST_CASE("eat lower bound monotonicity in its regime") {
    // In the regime where the n-term dominates (mu not too small) the bound
    // decreases in eps and grad and increases in h and P(Omega).
    EatParams base{1e6, 4, 24, 1e-12, 0.05, 0.9, 0.74, 10};
    double b0 = eat_lower_bound(base);
    {
        EatParams p = base;
        p.epsilon = 3e-12;
        double b1 = eat_lower_bound(p);
        CHECK(b1 <= b0);
        p.epsilon = 1e-11;
        CHECK(eat_lower_bound(p) <= b1);
    }
    {
        EatParams p = base;
        p.grad_bound = 100;
        CHECK(eat_lower_bound(p) <= b0);
    }
    {
        EatParams p = base;
        p.tradeoff_h = 0.9;
        CHECK(eat_lower_bound(p) >= b0);
    }
    {
        EatParams p = base;
        p.p_omega = 0.99;
        CHECK(eat_lower_bound(p) >= b0);
    }
}

TEST_CASE("leakage and privacy-amplification lengths") {
    BoundConstants c;
    c.c_additive = 0;
    CHECK(leak_ir(10000, 1e-3, 1e-3, 1e-3, c) ==
          doctest::Approx(10000 * 0.05291508034484765).epsilon(1e-12));
    CHECK(hmax_b_given_a(10000, 1e-3, 1e-3, 1e-3) ==
          doctest::Approx(529.1508034484765).epsilon(1e-12));
    CHECK(hmax_b_given_a(10000, 0, 0, 0) == 0.0);
    CHECK(test_leak(10000, 1e-3, 2) == doctest::Approx(20.0).epsilon(1e-15));

    CHECK(pa_output_length(100, std::pow(2.0, -10)) == 80);
    CHECK(pa_output_length(10, std::pow(2.0, -10)) == 0);
    CHECK(pa_output_length(529.3, 1e-6) == 489);
}
