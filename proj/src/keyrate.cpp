#include "parqkd/keyrate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace parqkd {

namespace {

// Alphabet sizes of the anchored 3CHSH game feeding the accumulation bound:
// |A| = |B| = 2 answers, |X| = 3, |Y| = 4 questions, |T| = 2.
constexpr double kDimA = 2, kDimB = 2, kDimX = 3, kDimY = 4, kDimT = 2;
constexpr double kAlphabetProduct = kDimA * kDimB * kDimX * kDimY * kDimT;

}  // namespace

KeyRateReport finite_size_key_length(const ProtocolParams& params, const BoundConstants& constants,
                                     double p_not_f, double eps_pa) {
    params.validate();
    if (!(p_not_f > 0 && p_not_f <= 1))
        throw std::invalid_argument("finite_size_key_length: P(notF) must be in (0,1]");
    if (constants.c_eps < 0 || constants.c_mu_term < 0 || constants.c_additive < 0)
        throw std::invalid_argument("finite_size_key_length: constants must be nonnegative");

    KeyRateReport r;
    r.params = params;
    r.constants = constants;
    r.eps_pa = eps_pa;
    r.p_not_f = p_not_f;
    r.t = t_of(params.n, params.delta);

    const double a = params.alpha, nu = params.nu, gamma = params.gamma, d1 = params.delta1;
    const double t = r.t;

    r.eps = constants.c_eps * std::pow(params.delta, 1.0 / 16) / (a * a * a);
    if (constants.c_mu_term > 0) {
        if (!(r.eps > 0 && r.eps < 1))
            throw infeasible_error("finite_size_key_length: eps = c delta^(1/16)/alpha^3 not in (0,1)");
        r.mu = mu_application(r.eps, kAlphabetProduct);
        r.mu_prime = mu_prime(r.mu, p_not_f);
        if (p_not_f < 2 * r.mu) {
            // Secrecy holds trivially at parameter 2 mu; report rather than fail.
            r.trivial_security = true;
            r.eps_prime = 0;
        } else {
            r.eps_prime = std::min(0.1, (1 - r.mu_prime) / 2);
            if (!(r.eps_prime > 0 && r.mu_prime + r.eps_prime < 1))
                throw infeasible_error("finite_size_key_length: mu' + eps' >= 1");
        }
    } else {
        // Optimistic-constants diagnostic mode: the mu loss is switched off.
        r.eps = constants.c_eps > 0 ? r.eps : 0;
        r.mu = 0;
        r.mu_prime = 0;
        r.eps_prime = 0.1;
    }

    AffineTradeoff tradeoff = affine_min_tradeoff(a, nu, gamma, params.omega_th);
    r.h_tradeoff = single_round_bound(params.omega_th, a, nu);
    r.grad_bound = tradeoff.grad_bound;
    r.mu_loss = constants.c_mu_term * std::sqrt(r.mu) / (nu * gamma);

    r.eat_bound = t * (r.h_tradeoff - r.mu_loss);
    r.hmax_removed = hmax_b_given_a(r.t, nu, a, d1);
    r.test_leak = test_leak(r.t, gamma, kDimA);
    r.leak_ir = leak_ir(r.t, nu, a, d1, constants);

    r.prefactor = r.h_tradeoff - r.mu_loss - 2 * binary_entropy(2 * (nu + a + d1)) -
                  2 * gamma * std::log2(kDimA);

    double length = r.eat_bound - r.hmax_removed - r.test_leak - r.leak_ir;
    if (r.trivial_security) length = 0;  // the accumulation bound carries no weight here
    r.key_length = length > 0 ? std::floor(length) : 0;
    double pa = r.key_length - 2 * std::log2(1 / eps_pa);
    r.pa_length = pa > 0 ? std::floor(pa) : 0;
    r.rate = r.key_length / params.n;

    r.security_eps =
        r.trivial_security ? 2 * r.mu + eps_pa : r.mu_prime + 8 * r.eps_prime + eps_pa;
    r.combined_loss = a * capital_f(g_alpha_nu(params.omega_th, a, nu)) +
                      2 * binary_entropy(2 * (nu + a + d1)) + 2 * gamma * std::log2(kDimA);
    r.combined_loss_exceeds_claim = r.combined_loss >= 0.1;

    r.vn_proxy_rate = vn_proxy_rate(params, constants);
    return r;
}

double vn_proxy_rate(const ProtocolParams& params, const BoundConstants& constants) {
    params.validate();
    const double t = t_of(params.n, params.delta);
    const double f_term = capital_f(g_alpha_nu(params.omega_th, params.alpha, params.nu));
    const double a3 = params.alpha * params.alpha * params.alpha;
    const double sim_loss = constants.c_mu_term *
                            (std::pow(params.delta, 1.0 / 16) / (a3 * params.nu)) *
                            std::log2(1 / params.delta);
    const double ir = binary_entropy(2 * params.alpha + params.nu + params.q_noise);
    return t / params.n * (f_term - sim_loss - ir);
}

OptimizeResult optimize(double target_security, double n, const SearchSpace& space,
                        const BoundConstants& constants, Exec exec) {
    OptimizeResult out;
    if (space.delta_points < 1 || !(space.delta_lo > 0) || !(space.delta_hi >= space.delta_lo))
        throw std::invalid_argument("optimize: bad delta grid");

    auto evaluate = [&](double delta, double alpha, double nu, double gamma, double frac,
                        double d1) -> std::optional<KeyRateReport> {
        ProtocolParams p;
        p.n = n;
        p.delta = delta;
        p.alpha = alpha;
        p.nu = nu;
        p.gamma = gamma;
        p.delta1 = d1;
        p.omega_th = ProtocolParams::omega_th_at(alpha, nu, frac);
        try {
            KeyRateReport r = finite_size_key_length(p, constants);
            if (r.security_eps > target_security) return std::nullopt;
            return r;
        } catch (const std::invalid_argument&) {
            return std::nullopt;
        } catch (const infeasible_error&) {
            return std::nullopt;
        }
    };

    std::vector<double> deltas;
    for (int k = 0; k < space.delta_points; ++k) {
        double f = space.delta_points == 1
                       ? 0
                       : static_cast<double>(k) / static_cast<double>(space.delta_points - 1);
        deltas.push_back(std::exp(std::log(space.delta_lo) +
                                  f * (std::log(space.delta_hi) - std::log(space.delta_lo))));
    }

    // Coordinate descent per delta; candidate evaluations inside one
    // coordinate pass are independent and can run in parallel.
    std::vector<std::optional<KeyRateReport>> per_delta_best(deltas.size());
    for (std::size_t dk = 0; dk < deltas.size(); ++dk) {
        double delta = deltas[dk];
        std::size_t ia = space.alphas.size() / 2, in = space.nus.size() / 2,
                    ig = space.gammas.size() / 2, io = space.omega_fracs.size() / 2,
                    id = space.delta1s.size() / 2;
        std::optional<KeyRateReport> best;
        for (int pass = 0; pass < 4; ++pass) {
            bool moved = false;
            auto sweep_coord = [&](const std::vector<double>& grid, std::size_t& pos, int coord) {
                std::vector<std::optional<KeyRateReport>> cand(grid.size());
                parallel_for(exec, static_cast<std::int64_t>(grid.size()), [&](std::int64_t gi) {
                    double va = space.alphas[ia], vn = space.nus[in], vg = space.gammas[ig],
                           vo = space.omega_fracs[io], vd = space.delta1s[id];
                    double v = grid[static_cast<std::size_t>(gi)];
                    switch (coord) {
                        case 0: va = v; break;
                        case 1: vn = v; break;
                        case 2: vg = v; break;
                        case 3: vo = v; break;
                        default: vd = v; break;
                    }
                    cand[static_cast<std::size_t>(gi)] = evaluate(delta, va, vn, vg, vo, vd);
                });
                for (std::size_t gi = 0; gi < grid.size(); ++gi) {
                    if (cand[gi]) out.evaluated.push_back(*cand[gi]);
                    if (cand[gi] && (!best || cand[gi]->rate > best->rate)) {
                        best = cand[gi];
                        if (pos != gi) moved = true;
                        pos = gi;
                    }
                }
            };
            sweep_coord(space.alphas, ia, 0);
            sweep_coord(space.nus, in, 1);
            sweep_coord(space.gammas, ig, 2);
            sweep_coord(space.omega_fracs, io, 3);
            sweep_coord(space.delta1s, id, 4);
            if (!moved) break;
        }
        per_delta_best[dk] = best;
    }
    for (const auto& b : per_delta_best) {
        if (b && (!out.feasible || b->rate > out.best.rate)) {
            out.feasible = true;
            out.best = *b;
        }
    }
    return out;
}

ScalingFit scaling_exponent_fit(const BoundConstants& constants, double alpha, double delta_lo,
                                double delta_hi, int points) {
    if (points < 6 || !(delta_lo > 0) || !(delta_hi > delta_lo))
        throw std::invalid_argument("scaling_exponent_fit: need >= 6 points over a valid range");
    if (std::log10(delta_hi) - std::log10(delta_lo) < 6)
        throw std::invalid_argument("scaling_exponent_fit: sweep must span >= 6 decades");

    auto fit_slope = [](const std::vector<double>& xs, const std::vector<double>& ys) {
        double mx = 0, my = 0;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            mx += xs[k];
            my += ys[k];
        }
        mx /= static_cast<double>(xs.size());
        my /= static_cast<double>(xs.size());
        double sxy = 0, sxx = 0;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            sxy += (xs[k] - mx) * (ys[k] - my);
            sxx += (xs[k] - mx) * (xs[k] - mx);
        }
        return sxy / sxx;
    };

    ScalingFit fit;
    fit.points = points;
    std::vector<double> xs, ys;
    for (int k = 0; k < points; ++k) {
        double f = static_cast<double>(k) / static_cast<double>(points - 1);
        double delta =
            std::exp(std::log(delta_lo) + f * (std::log(delta_hi) - std::log(delta_lo)));
        double eps = constants.c_eps * std::pow(delta, 1.0 / 16) / (alpha * alpha * alpha);
        if (!(eps > 0 && eps < 1))
            throw std::invalid_argument("scaling_exponent_fit: eps left (0,1); adjust alpha");
        double mup = mu_prime(mu_application(eps, kAlphabetProduct), 1.0);
        xs.push_back(std::log(delta));
        ys.push_back(std::log(mup));
    }
    fit.slope_mu_prime_vs_delta = fit_slope(xs, ys);

    xs.clear();
    ys.clear();
    for (int k = 0; k < points; ++k) {
        double f = static_cast<double>(k) / static_cast<double>(points - 1);
        double eps = std::exp(std::log(1e-30) + f * (std::log(1e-6) - std::log(1e-30)));
        xs.push_back(std::log(eps));
        ys.push_back(std::log(mu_application(eps, kAlphabetProduct)));
    }
    fit.slope_mu_vs_eps = fit_slope(xs, ys);
    return fit;
}

std::string KeyRateReport::to_json() const {
    std::ostringstream out;
    out.precision(17);
    out << "{\"params\":{"
        << "\"n\":" << params.n << ",\"delta\":" << params.delta << ",\"alpha\":" << params.alpha
        << ",\"nu\":" << params.nu << ",\"gamma\":" << params.gamma
        << ",\"omega_th\":" << params.omega_th << ",\"delta1\":" << params.delta1
        << ",\"q_noise\":" << params.q_noise << ",\"rng_seed\":" << params.rng_seed << "}"
        << ",\"constants\":{\"c_eps\":" << constants.c_eps
        << ",\"c_mu_term\":" << constants.c_mu_term << ",\"c_additive\":" << constants.c_additive
        << "}"
        << ",\"t\":" << t << ",\"eps\":" << (eps) << ",\"mu\":" << (mu)
        << ",\"mu_prime\":" << (mu_prime) << ",\"eps_prime\":" << (eps_prime)
        << ",\"eps_pa\":" << (eps_pa) << ",\"p_not_f\":" << (p_not_f)
        << ",\"h_tradeoff\":" << (h_tradeoff) << ",\"grad_bound\":" << (grad_bound)
        << ",\"mu_loss\":" << (mu_loss) << ",\"prefactor\":" << (prefactor)
        << ",\"eat_bound\":" << (eat_bound) << ",\"hmax_removed\":" << (hmax_removed)
        << ",\"test_leak\":" << (test_leak) << ",\"leak_ir\":" << (leak_ir)
        << ",\"key_length\":" << key_length << ",\"pa_length\":" << pa_length
        << ",\"rate\":" << (rate) << ",\"security_eps\":" << (security_eps)
        << ",\"trivial_security\":" << (trivial_security ? "true" : "false")
        << ",\"combined_loss\":" << (combined_loss) << ",\"combined_loss_exceeds_claim\":"
        << (combined_loss_exceeds_claim ? "true" : "false")
        << ",\"vn_proxy_rate\":" << (vn_proxy_rate) << "}";
    return out.str();
}

std::string sweep_to_csv(const std::vector<KeyRateReport>& reports) {
    std::ostringstream out;
    out.precision(17);
    out << "n,delta,alpha,nu,gamma,omega_th,delta1,t,eps,mu,mu_prime,prefactor,key_length,rate,"
           "security_eps,vn_proxy_rate\n";
    for (const auto& r : reports) {
        out << r.params.n << ',' << r.params.delta << ',' << r.params.alpha << ',' << r.params.nu
            << ',' << r.params.gamma << ',' << r.params.omega_th << ',' << r.params.delta1 << ','
            << r.t << ',' << r.eps << ',' << r.mu << ',' << r.mu_prime << ',' << r.prefactor << ','
            << r.key_length << ',' << r.rate << ',' << r.security_eps << ',' << r.vn_proxy_rate
            << '\n';
    }
    return out.str();
}

}  // namespace parqkd
