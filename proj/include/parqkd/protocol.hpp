#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "parqkd/exec.hpp"
#include "parqkd/games.hpp"
#include "parqkd/postproc.hpp"
#include "parqkd/quantum.hpp"
#include "parqkd/rng.hpp"

namespace parqkd {

struct ProtocolParams {
    // Round count. A double so the analytic key-rate path can evaluate the
    // astronomically large n the bound chain demands; simulation requires an
    // integral value at most 1e8.
    double n = 10000;
    double delta = 0.1;      // raw-key size parameter, in (0, 1/2)
    double alpha = 0.05;     // anchoring probability, in (0, 0.1)
    double nu = 0.05;        // 3CHSH weight, in (0, 0.1)
    double gamma = 0.5;      // test-round sampling probability, in (0, 1)
    double omega_th = 0.0;   // threshold, must lie inside the game window
    double delta1 = 0.01;    // concentration slack, in (0, 1)
    double q_noise = 0.0;    // depolarising parameter Q, in [0, 0.1]
    std::uint64_t rng_seed = 1;

    void validate() const;  // throws std::invalid_argument
    double window_lo() const;
    double window_hi() const;
    // omega_th at the given fraction of the admissible window (0 < f < 1).
    static double omega_th_at(double alpha, double nu, double fraction);
};

// t = floor(delta n / (log2|A||B| + delta)), at least 1 (throws otherwise).
// For every C subset of J this guarantees |C| log2|A||B| / (n-|C|) <= delta.
double t_of(double n, double delta, double log2_ab = 2.0);

struct Transcript {
    std::vector<int> omega, x, y, a, b;   // per-round indices
    std::vector<std::int64_t> j;          // ordered test indices I_1..I_t
    std::vector<std::uint8_t> t_flags;    // T_1..T_t
    std::vector<std::int64_t> s;          // {I_j : T_j = 1}, in J order
    bool aborted = false;
    std::int64_t win_count_on_s = 0;
    Bits raw_key_a, raw_key_b;            // empty when aborted
    std::string final_key_hex;            // empty unless post-processing succeeded
};

// Device behaviour: given all questions at once, produce all answers.
struct DeviceModel {
    virtual ~DeviceModel() = default;
    virtual void respond(const GameSpec& game, const std::vector<int>& x,
                         const std::vector<int>& y, Rng& rng,
                         std::vector<int>& a, std::vector<int>& b) = 0;
};

// Samples each round independently from the single-round Born distribution.
// Also serves as the i.i.d.-adversarial device for an arbitrary strategy.
class HonestDevice : public DeviceModel {
  public:
    HonestDevice(const GameSpec& game, const Strategy& strategy);
    void respond(const GameSpec& game, const std::vector<int>& x, const std::vector<int>& y,
                 Rng& rng, std::vector<int>& a, std::vector<int>& b) override;

  private:
    std::vector<Eigen::MatrixXd> tables_;  // per (x,y): P(a,b|x,y)
    int na_, nb_;
};

// Deterministic device that always satisfies the predicate.
class AlwaysWinDevice : public DeviceModel {
  public:
    void respond(const GameSpec& game, const std::vector<int>& x, const std::vector<int>& y,
                 Rng& rng, std::vector<int>& a, std::vector<int>& b) override;
};

// Classical post-processing configuration for step 8.
struct PostprocPlan {
    double ir_budget_bits = 0;  // syndrome budget, typically t h(2(nu+alpha+delta1))
    double pa_hmin_bound = 0;   // min-entropy credited to the raw key
    double eps_pa = 1e-6;
};

struct RunResult {
    Transcript transcript;
    std::optional<IrOutcome> ir_outcome;  // engaged iff post-processing ran
    std::string final_key_b_hex;          // Bob's key; must match on Ok
};

// Derived per-params context (game, seed extension, t); cached by callers
// that run many trials.
struct ProtocolContext {
    GameSpec game;
    SeedExtension ext;
    std::int64_t t = 0;
    int x02 = -1, y02 = -1;  // indices of the (0,2) question pair, -1 if absent

    static ProtocolContext make(const ProtocolParams& params);
};

// Faithful execution of the eight protocol steps on the given device.
// Post-processing runs only when `plan` is non-null and the run did not
// abort. Identical seeds produce identical transcripts byte for byte.
RunResult run(const ProtocolParams& params, const ProtocolContext& ctx, DeviceModel& device,
              const PostprocPlan* plan = nullptr);
RunResult run(const ProtocolParams& params, DeviceModel& device,
              const PostprocPlan* plan = nullptr);

// Independent trials with per-trial forked seeds; trial k uses
// params.rng_seed forked by k, so the result is independent of Exec.
std::vector<RunResult> run_trials(const ProtocolParams& params, const Strategy& strategy,
                                  int trials, Exec exec = Exec::Serial,
                                  const PostprocPlan* plan = nullptr);

struct EventTailReport {
    int trials = 0;
    double p_not_e1 = 0, p_not_e2 = 0, p_not_e3 = 0;
    double ref_hoeffding = 0;  // exp(-2 delta1^2 t), reference for E1/E2
    double ref_e3 = 0;         // exp(-2 delta1^2 gamma t)
    double abort_rate = 0;
    double mean_win_fraction_on_s = 0;
    double mean_relative_error_on_j = 0;  // over non-aborting trials
};

// Empirical tail frequencies of the three concentration events over >= 100
// transcripts, against the Hoeffding reference curves.
EventTailReport event_tails(const std::vector<RunResult>& results, const ProtocolParams& params,
                            const ProtocolContext& ctx);

// Hamming fraction between the raw keys; throws on an aborted transcript.
double relative_error_on_j(const Transcript& t);

std::string transcript_to_json(const Transcript& t, const ProtocolContext& ctx);

}  // namespace parqkd
