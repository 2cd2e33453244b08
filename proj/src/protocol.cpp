#include "parqkd/protocol.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "parqkd/entropy.hpp"

namespace parqkd {

double ProtocolParams::window_lo() const { return omega_min(alpha, nu); }
double ProtocolParams::window_hi() const { return omega_max(alpha, nu); }

double ProtocolParams::omega_th_at(double alpha, double nu, double fraction) {
    double lo = omega_min(alpha, nu), hi = omega_max(alpha, nu);
    return lo + fraction * (hi - lo);
}

void ProtocolParams::validate() const {
    if (!(n >= 1)) throw std::invalid_argument("ProtocolParams: n must be >= 1");
    if (!(delta > 0 && delta < 0.5))
        throw std::invalid_argument("ProtocolParams: delta must be in (0, 1/2)");
    if (!(alpha > 0 && alpha < 0.1) || !(nu > 0 && nu < 0.1))
        throw std::invalid_argument("ProtocolParams: alpha, nu must be in (0, 0.1)");
    if (!(gamma > 0 && gamma <= 1))
        throw std::invalid_argument("ProtocolParams: gamma must be in (0, 1]");
    if (!(omega_th > window_lo() && omega_th < window_hi()))
        throw std::invalid_argument("ProtocolParams: omega_th outside the admissible window");
    if (!(delta1 > 0 && delta1 < 1))
        throw std::invalid_argument("ProtocolParams: delta1 must be in (0, 1)");
    if (!(q_noise >= 0 && q_noise <= 0.1))
        throw std::invalid_argument("ProtocolParams: q_noise must be in [0, 0.1]");
    t_of(n, delta);  // throws when t < 1
}

double t_of(double n, double delta, double log2_ab) {
    if (!(n >= 1)) throw std::invalid_argument("t_of: n must be >= 1");
    if (!(delta > 0) || !(log2_ab > 0)) throw std::invalid_argument("t_of: bad parameters");
    double t = std::floor(delta * n / (log2_ab + delta));
    if (!(t >= 1)) throw std::invalid_argument("t_of: t < 1; increase n or delta");
    // Subset guarantee used by the analysis: |C| log|A||B| / (n - |C|) <= delta
    // for every C strictly inside J; |C| <= t suffices.
    if (t * log2_ab > delta * (n - t) * (1 + 1e-12) + 1e-9)
        throw std::logic_error("t_of: subset inequality violated");
    return t;
}

ProtocolContext ProtocolContext::make(const ProtocolParams& params) {
    params.validate();
    if (params.n > 1e8 || params.n != std::floor(params.n))
        throw std::invalid_argument("ProtocolContext: simulation needs integral n <= 1e8");
    ProtocolContext ctx;
    ctx.game = anchor(chsh3_spec(params.nu), params.alpha);
    ctx.ext = holenstein_seed_extension(ctx.game);
    ctx.t = static_cast<std::int64_t>(t_of(
        params.n, params.delta, std::log2(static_cast<double>(ctx.game.na()) * ctx.game.nb())));
    ctx.x02 = ctx.game.question_a_index("0");
    ctx.y02 = ctx.game.question_b_index("2");
    return ctx;
}

HonestDevice::HonestDevice(const GameSpec& game, const Strategy& strategy)
    : na_(game.na()), nb_(game.nb()) {
    strategy.validate(game);
    tables_.reserve(static_cast<std::size_t>(game.nx()) * game.ny());
    for (int x = 0; x < game.nx(); ++x)
        for (int y = 0; y < game.ny(); ++y)
            tables_.push_back(answer_distribution_given(game, strategy, x, y));
}

void HonestDevice::respond(const GameSpec& game, const std::vector<int>& x,
                           const std::vector<int>& y, Rng& rng, std::vector<int>& a,
                           std::vector<int>& b) {
    a.resize(x.size());
    b.resize(y.size());
    std::vector<double> w(static_cast<std::size_t>(na_) * nb_);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const Eigen::MatrixXd& t = tables_[static_cast<std::size_t>(x[i]) * game.ny() + y[i]];
        for (int aa = 0; aa < na_; ++aa)
            for (int bb = 0; bb < nb_; ++bb) w[static_cast<std::size_t>(aa) * nb_ + bb] = t(aa, bb);
        int k = rng.categorical(w);
        a[i] = k / nb_;
        b[i] = k % nb_;
    }
}

void AlwaysWinDevice::respond(const GameSpec& game, const std::vector<int>& x,
                              const std::vector<int>& y, Rng&, std::vector<int>& a,
                              std::vector<int>& b) {
    a.resize(x.size());
    b.resize(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        bool found = false;
        for (int aa = 0; aa < game.na() && !found; ++aa)
            for (int bb = 0; bb < game.nb() && !found; ++bb)
                if (game.wins(x[i], y[i], aa, bb)) {
                    a[i] = aa;
                    b[i] = bb;
                    found = true;
                }
        if (!found) throw std::invalid_argument("AlwaysWinDevice: unsatisfiable question pair");
    }
}

RunResult run(const ProtocolParams& params, const ProtocolContext& ctx, DeviceModel& device,
              const PostprocPlan* plan) {
    Rng rng(params.rng_seed);
    const auto n = static_cast<std::int64_t>(params.n);
    const std::int64_t t = ctx.t;
    Transcript tr;
    tr.omega.resize(static_cast<std::size_t>(n));
    tr.x.resize(static_cast<std::size_t>(n));
    tr.y.resize(static_cast<std::size_t>(n));

    // Steps 1-3: seeds i.i.d., questions conditionally independent given each seed.
    std::vector<double> p_omega(ctx.ext.p_omega.data(),
                                ctx.ext.p_omega.data() + ctx.ext.p_omega.size());
    std::vector<double> row(static_cast<std::size_t>(std::max(ctx.game.nx(), ctx.game.ny())));
    for (std::int64_t i = 0; i < n; ++i) {
        int w = rng.categorical(p_omega);
        tr.omega[static_cast<std::size_t>(i)] = w;
        row.assign(ctx.ext.p_x_given_omega.row(w).begin(), ctx.ext.p_x_given_omega.row(w).end());
        tr.x[static_cast<std::size_t>(i)] = rng.categorical(row);
        row.assign(ctx.ext.p_y_given_omega.row(w).begin(), ctx.ext.p_y_given_omega.row(w).end());
        tr.y[static_cast<std::size_t>(i)] = rng.categorical(row);
    }

    // Step 4: one shot of the device with all questions.
    device.respond(ctx.game, tr.x, tr.y, rng, tr.a, tr.b);
    if (static_cast<std::int64_t>(tr.a.size()) != n || static_cast<std::int64_t>(tr.b.size()) != n)
        throw std::runtime_error("run: device returned wrong answer count");

    // Step 5: uniformly random ordered t-subset via partial Fisher-Yates.
    std::vector<std::int64_t> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 0);
    for (std::int64_t k = 0; k < t; ++k) {
        std::int64_t pick = k + rng.below(n - k);
        std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick)]);
    }
    tr.j.assign(pool.begin(), pool.begin() + t);

    // Step 6: test flags.
    tr.t_flags.resize(static_cast<std::size_t>(t));
    for (std::int64_t k = 0; k < t; ++k) {
        tr.t_flags[static_cast<std::size_t>(k)] = rng.bernoulli(params.gamma) ? 1 : 0;
        if (tr.t_flags[static_cast<std::size_t>(k)]) tr.s.push_back(tr.j[static_cast<std::size_t>(k)]);
    }

    // Step 7: abort check, threshold gamma * omega_th * t with the integer t.
    tr.win_count_on_s = 0;
    for (std::int64_t i : tr.s) {
        auto idx = static_cast<std::size_t>(i);
        if (ctx.game.wins(tr.x[idx], tr.y[idx], tr.a[idx], tr.b[idx])) ++tr.win_count_on_s;
    }
    tr.aborted = !(static_cast<double>(tr.win_count_on_s) >=
                   params.gamma * params.omega_th * static_cast<double>(t));

    RunResult result;
    if (!tr.aborted) {
        for (std::int64_t i : tr.j) {
            tr.raw_key_a.push_back(static_cast<std::uint8_t>(tr.a[static_cast<std::size_t>(i)] & 1));
            tr.raw_key_b.push_back(static_cast<std::uint8_t>(tr.b[static_cast<std::size_t>(i)] & 1));
        }
        // Step 8 runs only when a plan is supplied.
        if (plan) {
            IrResult ir = ir_reconcile(tr.raw_key_a, tr.raw_key_b, plan->ir_budget_bits,
                                       rng.next(), params.nu, params.alpha, params.delta1);
            result.ir_outcome = ir.outcome;
            if (ir.outcome == IrOutcome::Ok) {
                ToeplitzHash pa_hash;
                Bits key_a =
                    privacy_amplify(tr.raw_key_a, plan->pa_hmin_bound, plan->eps_pa, rng, &pa_hash);
                tr.final_key_hex = bits_to_hex(key_a);
                result.final_key_b_hex =
                    key_a.empty() ? "" : bits_to_hex(pa_hash.apply(ir.b_corrected));
            }
        }
    }
    result.transcript = std::move(tr);
    return result;
}

RunResult run(const ProtocolParams& params, DeviceModel& device, const PostprocPlan* plan) {
    return run(params, ProtocolContext::make(params), device, plan);
}

std::vector<RunResult> run_trials(const ProtocolParams& params, const Strategy& strategy,
                                  int trials, Exec exec, const PostprocPlan* plan) {
    ProtocolContext ctx = ProtocolContext::make(params);
    HonestDevice proto_device(ctx.game, strategy);
    std::vector<RunResult> results(static_cast<std::size_t>(trials));
    Rng base(params.rng_seed);
    parallel_for(exec, trials, [&](std::int64_t k) {
        ProtocolParams p = params;
        p.rng_seed = base.fork(static_cast<std::uint64_t>(k)).next();
        HonestDevice device = proto_device;  // tables are immutable; copy is cheap
        results[static_cast<std::size_t>(k)] = run(p, ctx, device, plan);
    });
    return results;
}

double relative_error_on_j(const Transcript& t) {
    if (t.aborted) throw std::invalid_argument("relative_error_on_j: transcript aborted");
    if (t.raw_key_a.size() != t.raw_key_b.size() || t.raw_key_a.empty())
        throw std::invalid_argument("relative_error_on_j: missing raw keys");
    std::int64_t d = 0;
    for (std::size_t k = 0; k < t.raw_key_a.size(); ++k)
        if (t.raw_key_a[k] != t.raw_key_b[k]) ++d;
    return static_cast<double>(d) / static_cast<double>(t.raw_key_a.size());
}

EventTailReport event_tails(const std::vector<RunResult>& results, const ProtocolParams& params,
                            const ProtocolContext& ctx) {
    if (results.size() < 100)
        throw std::invalid_argument("event_tails: need at least 100 transcripts");
    EventTailReport rep;
    rep.trials = static_cast<int>(results.size());
    const double t = static_cast<double>(ctx.t);
    const double p02 =
        (1 - params.alpha) * (1 - params.alpha) * (1 - params.nu);  // anchored weight of (0,2)
    int aborts = 0, n_err = 0;
    double win_sum = 0, err_sum = 0;
    for (const auto& r : results) {
        const Transcript& tr = r.transcript;
        double s_frac = static_cast<double>(tr.s.size()) / t;
        std::int64_t bar_j = 0, wins_j = 0;
        for (std::int64_t i : tr.j) {
            auto idx = static_cast<std::size_t>(i);
            if (tr.x[idx] == ctx.x02 && tr.y[idx] == ctx.y02) ++bar_j;
            if (ctx.game.wins(tr.x[idx], tr.y[idx], tr.a[idx], tr.b[idx])) ++wins_j;
        }
        if (!(s_frac >= params.gamma - params.delta1)) rep.p_not_e1 += 1;
        if (!(static_cast<double>(bar_j) / t >= p02 - params.delta1)) rep.p_not_e2 += 1;
        if (!(static_cast<double>(wins_j) / t >= params.omega_th - params.delta1)) rep.p_not_e3 += 1;
        if (tr.aborted) {
            ++aborts;
        } else {
            if (!tr.s.empty())
                win_sum += static_cast<double>(tr.win_count_on_s) / static_cast<double>(tr.s.size());
            err_sum += relative_error_on_j(tr);
            ++n_err;
        }
    }
    const double trials = static_cast<double>(rep.trials);
    rep.p_not_e1 /= trials;
    rep.p_not_e2 /= trials;
    rep.p_not_e3 /= trials;
    rep.abort_rate = static_cast<double>(aborts) / trials;
    rep.mean_win_fraction_on_s = n_err ? win_sum / static_cast<double>(n_err) : 0;
    rep.mean_relative_error_on_j = n_err ? err_sum / static_cast<double>(n_err) : 0;
    rep.ref_hoeffding = std::exp(-2 * params.delta1 * params.delta1 * t);
    rep.ref_e3 = std::exp(-2 * params.delta1 * params.delta1 * params.gamma * t);
    return rep;
}

std::string transcript_to_json(const Transcript& t, const ProtocolContext& ctx) {
    std::ostringstream out;
    auto emit_int_array = [&](const char* key, const auto& v, auto&& f) {
        out << '"' << key << "\":[";
        for (std::size_t k = 0; k < v.size(); ++k) out << (k ? "," : "") << f(v[k]);
        out << ']';
    };
    out << '{';
    emit_int_array("omega", t.omega,
                   [&](int w) { return '"' + ctx.ext.omega_alphabet[static_cast<std::size_t>(w)] + '"'; });
    out << ',';
    emit_int_array("x", t.x, [&](int v) { return '"' + ctx.game.questions_a[static_cast<std::size_t>(v)] + '"'; });
    out << ',';
    emit_int_array("y", t.y, [&](int v) { return '"' + ctx.game.questions_b[static_cast<std::size_t>(v)] + '"'; });
    out << ',';
    emit_int_array("a", t.a, [](int v) { return std::to_string(v); });
    out << ',';
    emit_int_array("b", t.b, [](int v) { return std::to_string(v); });
    out << ',';
    emit_int_array("j", t.j, [](std::int64_t v) { return std::to_string(v); });
    out << ',';
    emit_int_array("t_flags", t.t_flags, [](std::uint8_t v) { return std::to_string(int(v)); });
    out << ',';
    emit_int_array("s", t.s, [](std::int64_t v) { return std::to_string(v); });
    out << ",\"aborted\":" << (t.aborted ? "true" : "false") << ',';
    emit_int_array("raw_key_a", t.raw_key_a, [](std::uint8_t v) { return std::to_string(int(v)); });
    out << ',';
    emit_int_array("raw_key_b", t.raw_key_b, [](std::uint8_t v) { return std::to_string(int(v)); });
    out << ",\"final_key_hex\":\"" << t.final_key_hex << "\"}";
    return out.str();
}

}  // namespace parqkd
