#pragma once

#include <string>
#include <vector>

#include "parqkd/entropy.hpp"
#include "parqkd/protocol.hpp"

namespace parqkd {

// Full finite-size accounting for one parameter point. Every term of the
// bound chain is recorded so reports are auditable.
struct KeyRateReport {
    ProtocolParams params;
    BoundConstants constants;
    double t = 0;

    double eps = 0;        // c_eps delta^(1/16) / alpha^3
    double mu = 0;         // application-variant mu
    double mu_prime = 0;   // 2 sqrt(mu / P(notF))
    double eps_prime = 0;  // smoothing split, min(0.1, (1 - mu')/2)
    double eps_pa = 1e-6;
    double p_not_f = 1.0;  // probability of not aborting (analytic default 1)

    double h_tradeoff = 0;   // (1-alpha) F(g(omega_th))
    double grad_bound = 0;   // |slope| of the affine min-tradeoff
    double mu_loss = 0;      // c_mu_term sqrt(mu) / (nu gamma), per round
    double prefactor = 0;    // h_tradeoff - mu_loss - 2h(2(nu+alpha+delta1)) - 2 gamma log2|A|

    double eat_bound = 0;     // t (h_tradeoff - mu_loss)
    double hmax_removed = 0;  // t h(2(nu+alpha+delta1))
    double test_leak = 0;     // 2 gamma t log2|A|
    double leak_ir = 0;       // t h(2(nu+alpha+delta1)) + c_additive

    double key_length = 0;  // floor of the clamped assembled bound, in bits
    double pa_length = 0;   // key_length after the leftover-hashing cost
    double rate = 0;        // key_length / n

    double security_eps = 0;      // conservative sum mu' + 8 eps' + eps_pa
    bool trivial_security = false;  // P(notF) < 2 mu: secrecy holds at 2 mu

    // Loss sum alpha F + 2h(2(nu+alpha+delta1)) + 2 gamma log2|A|; flagged
    // when it exceeds 0.1 (the nominal small-loss regime).
    double combined_loss = 0;
    bool combined_loss_exceeds_claim = false;

    double vn_proxy_rate = 0;

    std::string to_json() const;
};

// Assembles the finite-size key length from the recorded terms:
//   t (h_tradeoff - mu_loss) - hmax_removed - test_leak - leak_ir
// clamped at 0. p_not_f defaults to 1 (analytic mode); feed the empirical
// non-abort frequency from simulation otherwise. Throws std::invalid_argument
// on invalid parameters and infeasible_error when eps is outside (0,1) or
// mu' + eps' >= 1 with c_mu_term > 0.
KeyRateReport finite_size_key_length(const ProtocolParams& params,
                                     const BoundConstants& constants = {},
                                     double p_not_f = 1.0, double eps_pa = 1e-6);

// Von Neumann proxy rate per round:
//   (t/n) (F(g(omega_th)) - c (eps_win/nu + delta^(1/16) log2(1/delta) / (alpha^3 nu))
//          - h(2 alpha + nu + Q))
// with eps_win = 0 (the negligible winning-probability slack).
double vn_proxy_rate(const ProtocolParams& params, const BoundConstants& constants = {});

struct infeasible_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SearchSpace {
    std::vector<double> alphas{1e-3, 3e-3, 1e-2, 3e-2};
    std::vector<double> nus{1e-3, 3e-3, 1e-2, 3e-2};
    std::vector<double> gammas{1e-3, 1e-2, 1e-1, 0.5};
    std::vector<double> omega_fracs{0.5, 0.7, 0.9};  // position inside the window
    std::vector<double> delta1s{1e-3, 1e-2};
    double delta_lo = 1e-300, delta_hi = 1e-100;
    int delta_points = 5;  // log-spaced
};

struct OptimizeResult {
    bool feasible = false;
    KeyRateReport best;
    std::vector<KeyRateReport> evaluated;  // every grid point visited, in order
};

// Deterministic coordinate descent over (alpha, nu, gamma, omega_th, delta1)
// for each delta on the log grid; maximises rate subject to
// security_eps <= target_security. Grid evaluation is order-independent, so
// points are visited concurrently under Exec::Parallel.
OptimizeResult optimize(double target_security, double n, const SearchSpace& space,
                        const BoundConstants& constants = {}, Exec exec = Exec::Serial);

std::string sweep_to_csv(const std::vector<KeyRateReport>& reports);

struct ScalingFit {
    double slope_mu_prime_vs_delta = 0;  // expected ~ 1/192
    double slope_mu_vs_eps = 0;          // expected ~ 1/6
    int points = 0;
};

// Least-squares slopes of log mu' against log delta (through the
// eps = delta^(1/16)/alpha^3 chain) and of log mu against log eps. The sweep
// alpha defaults to 0.8 so that eps stays inside (0,1) across the delta
// range.
ScalingFit scaling_exponent_fit(const BoundConstants& constants = {}, double alpha = 0.8,
                                double delta_lo = 1e-60, double delta_hi = 1e-12,
                                int points = 25);

}  // namespace parqkd
