#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "parqkd/entropy.hpp"
#include "parqkd/protocol.hpp"

using namespace parqkd;

namespace {

ProtocolParams base_params() {
    ProtocolParams p;
    p.n = 10000;
    p.delta = 0.1;
    p.alpha = 0.05;
    p.nu = 0.05;
    p.gamma = 0.5;
    p.omega_th = ProtocolParams::omega_th_at(0.05, 0.05, 0.5);
    p.delta1 = 0.1;
    p.q_noise = 0.0;
    p.rng_seed = 424242;
    return p;
}

}  // namespace

TEST_CASE("t_of") {
    CHECK(t_of(1000, 0.1) == 47.0);
    CHECK(t_of(21, 0.1) == 1.0);
    CHECK_THROWS_AS(t_of(10, 0.01), std::invalid_argument);  // t < 1
    // subset inequality: t log|A||B| <= delta (n - t)
    for (double n : {100.0, 1234.0, 99991.0})
        for (double delta : {0.05, 0.1, 0.3}) {
            double t = t_of(n, delta);
            CHECK(t * 2.0 <= delta * (n - t) + 1e-9);
        }
}

TEST_CASE("parameter validation") {
    ProtocolParams p = base_params();
    p.validate();
    p.omega_th = 0.9;  // below the window
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = base_params();
    p.omega_th = 0.9999;  // above the window
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = base_params();
    p.nu = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = base_params();
    p.delta = 0.7;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("transcripts reproduce byte-for-byte from the seed") {
    ProtocolParams p = base_params();
    p.n = 2000;
    ProtocolContext ctx = ProtocolContext::make(p);
    Strategy s = honest_strategy(p.nu, p.alpha, p.q_noise);
    HonestDevice d1(ctx.game, s), d2(ctx.game, s);
    RunResult r1 = run(p, ctx, d1);
    RunResult r2 = run(p, ctx, d2);
    CHECK(transcript_to_json(r1.transcript, ctx) == transcript_to_json(r2.transcript, ctx));

    p.rng_seed = 7;
    RunResult r3 = run(p, ctx, d1);
    CHECK(transcript_to_json(r1.transcript, ctx) != transcript_to_json(r3.transcript, ctx));
}

TEST_CASE("gamma = 1 tests every index in J") {
    ProtocolParams p = base_params();
    p.n = 1000;
    p.gamma = 1.0;
    ProtocolContext ctx = ProtocolContext::make(p);
    Strategy s = honest_strategy(p.nu, p.alpha, 0.0);
    HonestDevice dev(ctx.game, s);
    RunResult r = run(p, ctx, dev);
    CHECK(r.transcript.s == r.transcript.j);
    CHECK(static_cast<std::int64_t>(r.transcript.s.size()) == ctx.t);
}

TEST_CASE("always-winning device never aborts") {
    // gamma = 1 pins |S| = t; for gamma < 1 the binomial fluctuation of |S|
    // alone can dip below gamma omega_th t at desk-scale t.
    ProtocolParams p = base_params();
    p.n = 1000;
    p.gamma = 1.0;
    ProtocolContext ctx = ProtocolContext::make(p);
    AlwaysWinDevice dev;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        p.rng_seed = seed;
        RunResult r = run(p, ctx, dev);
        CHECK_FALSE(r.transcript.aborted);
        CHECK(r.transcript.win_count_on_s == static_cast<std::int64_t>(r.transcript.s.size()));
        CHECK(r.transcript.raw_key_a.size() == static_cast<std::size_t>(ctx.t));
    }
}

TEST_CASE("question marginals match the anchored distribution") {
    ProtocolParams p = base_params();
    p.n = 20000;
    ProtocolContext ctx = ProtocolContext::make(p);
    Strategy s = honest_strategy(p.nu, p.alpha, 0.0);
    HonestDevice dev(ctx.game, s);
    RunResult r = run(p, ctx, dev);

    int bot_x = ctx.game.question_a_index(kAnchor), bot_y = ctx.game.question_b_index(kAnchor);
    double n_bot = 0, n_02 = 0;
    for (std::size_t i = 0; i < r.transcript.x.size(); ++i) {
        if (r.transcript.x[i] == bot_x && r.transcript.y[i] == bot_y) ++n_bot;
        if (r.transcript.x[i] == ctx.x02 && r.transcript.y[i] == ctx.y02) ++n_02;
    }
    auto within_3_sigma = [&](double count, double prob) {
        double sigma = std::sqrt(prob * (1 - prob) * p.n);
        return std::abs(count - prob * p.n) <= 3 * sigma;
    };
    CHECK(within_3_sigma(n_bot, p.alpha * p.alpha));
    CHECK(within_3_sigma(n_02, (1 - p.alpha) * (1 - p.alpha) * (1 - p.nu)));
}

TEST_CASE("win fraction on S tracks the Born value at gamma = 1") {
    ProtocolParams p = base_params();
    p.n = 20000;
    p.gamma = 1.0;
    ProtocolContext ctx = ProtocolContext::make(p);
    Strategy s = honest_strategy(p.nu, p.alpha, 0.03);
    double w = winning_probability(ctx.game, s);
    HonestDevice dev(ctx.game, s);
    RunResult r = run(p, ctx, dev);
    double frac = static_cast<double>(r.transcript.win_count_on_s) /
                  static_cast<double>(r.transcript.s.size());
    double sigma = std::sqrt(w * (1 - w) / static_cast<double>(r.transcript.s.size()));
    CHECK(std::abs(frac - w) <= 3 * sigma);
}

TEST_CASE("event tails over honest trials") {
    ProtocolParams p = base_params();
    p.n = 5000;
    ProtocolContext ctx = ProtocolContext::make(p);
    Strategy s = honest_strategy(p.nu, p.alpha, 0.0);
    auto results = run_trials(p, s, 150, Exec::Parallel);
    EventTailReport rep = event_tails(results, p, ctx);
    CHECK(rep.trials == 150);
    // omega_th sits mid-window, delta1 = 0.1 is generous: E3 nearly always holds
    CHECK(rep.p_not_e3 <= 0.01);
    CHECK(rep.p_not_e1 <= 0.05);
    CHECK(rep.p_not_e2 <= 0.05);
    CHECK(rep.ref_hoeffding == doctest::Approx(std::exp(-2 * 0.01 * ctx.t)).epsilon(1e-12));

    // delta1 >= gamma makes E1 vacuous
    ProtocolParams p2 = p;
    p2.gamma = 0.3;
    p2.delta1 = 0.4;
    ProtocolContext ctx2 = ProtocolContext::make(p2);
    auto results2 = run_trials(p2, s, 120, Exec::Parallel);
    EventTailReport rep2 = event_tails(results2, p2, ctx2);
    CHECK(rep2.p_not_e1 == 0.0);

    CHECK_THROWS_AS(event_tails({}, p, ctx), std::invalid_argument);
}

TEST_CASE("relative error on the raw keys") {
    Transcript t;
    t.aborted = false;
    t.raw_key_a = {1, 0, 1, 1};
    t.raw_key_b = {1, 0, 1, 1};
    CHECK(relative_error_on_j(t) == 0.0);
    t.raw_key_b = {1, 1, 1, 0};
    CHECK(relative_error_on_j(t) == doctest::Approx(0.5).epsilon(1e-15));
    t.aborted = true;
    CHECK_THROWS_AS(relative_error_on_j(t), std::invalid_argument);
}

TEST_CASE("honest relative error stays below 2(nu+alpha+delta1) on average") {
    ProtocolParams p = base_params();
    p.n = 4200;  // t = 200
    p.q_noise = 0.05;
    p.delta1 = 0.05;
    ProtocolContext ctx = ProtocolContext::make(p);
    Strategy s = honest_strategy(p.nu, p.alpha, p.q_noise);
    auto results = run_trials(p, s, 120, Exec::Parallel);
    EventTailReport rep = event_tails(results, p, ctx);
    CHECK(rep.mean_relative_error_on_j <= 2 * (p.nu + p.alpha + p.delta1));
    CHECK(rep.mean_relative_error_on_j > 0.0);
}

TEST_CASE("trial seeds are independent of the execution policy") {
    ProtocolParams p = base_params();
    p.n = 1500;
    ProtocolContext ctx = ProtocolContext::make(p);
    Strategy s = honest_strategy(p.nu, p.alpha, 0.02);
    auto a = run_trials(p, s, 16, Exec::Serial);
    auto b = run_trials(p, s, 16, Exec::Parallel);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k)
        CHECK(transcript_to_json(a[k].transcript, ctx) == transcript_to_json(b[k].transcript, ctx));
}

TEST_CASE("post-processing pipeline on a clean run") {
    ProtocolParams p = base_params();
    p.n = 336;  // t = 16
    p.gamma = 0.25;
    p.q_noise = 0.0;
    p.rng_seed = 5;
    ProtocolContext ctx = ProtocolContext::make(p);
    REQUIRE(ctx.t == 16);
    Strategy s = honest_strategy(p.nu, p.alpha, 0.0);
    HonestDevice dev(ctx.game, s);
    PostprocPlan plan;
    plan.ir_budget_bits = 16 * binary_entropy(1.0 / 16) + 16;
    plan.pa_hmin_bound = 14;
    plan.eps_pa = std::pow(2.0, -5);
    RunResult r = run(p, ctx, dev, &plan);
    REQUIRE_FALSE(r.transcript.aborted);
    REQUIRE(r.ir_outcome.has_value());
    CHECK(*r.ir_outcome == IrOutcome::Ok);
    CHECK_FALSE(r.transcript.final_key_hex.empty());
    CHECK(r.transcript.final_key_hex == r.final_key_b_hex);
}

TEST_CASE("transcript json carries the full field set") {
    ProtocolParams p = base_params();
    p.n = 500;
    ProtocolContext ctx = ProtocolContext::make(p);
    AlwaysWinDevice dev;
    RunResult r = run(p, ctx, dev);
    std::string j = transcript_to_json(r.transcript, ctx);
    for (const char* key : {"\"omega\"", "\"x\"", "\"y\"", "\"a\"", "\"b\"", "\"j\"",
                            "\"t_flags\"", "\"s\"", "\"aborted\"", "\"raw_key_a\"",
                            "\"raw_key_b\"", "\"final_key_hex\""})
        CHECK(j.find(key) != std::string::npos);
}
