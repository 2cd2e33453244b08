#pragma once

#include <optional>
#include <vector>

#include "parqkd/exec.hpp"
#include "parqkd/games.hpp"
#include "parqkd/quantum.hpp"
#include "parqkd/rng.hpp"

namespace parqkd {

// Explicit n-round parallel strategy (n <= 3): a shared state on
// E_A (x) E_B plus joint POVMs indexed by full question tuples; every POVM
// element is an explicit matrix. Tuples use mixed-radix encoding with round 0
// as the most significant digit.
struct ParallelStrategy {
    int n = 0;
    int nx = 0, ny = 0;      // per-round question alphabet sizes
    int na = 0, nb = 0;      // per-round answer alphabet sizes
    int dim_a = 0, dim_b = 0;  // total measured dimensions
    DensityMatrix shared_state;                      // dim_a * dim_b
    std::vector<std::vector<MatC>> povm_a, povm_b;   // [question tuple][answer tuple]

    int n_x_tuples() const;
    int n_y_tuples() const;
    int n_a_tuples() const;
    int n_b_tuples() const;

    void validate(double tol = 1e-9) const;
};

// Tuple encoding helpers (round 0 most significant).
int encode_tuple(std::span<const int> digits, int radix);
std::vector<int> decode_tuple(int code, int radix, int n);

// n independent copies of a single-round strategy.
ParallelStrategy product_strategy(const GameSpec& game, const Strategy& s, int n);

// Unstructured random strategy: random mixed shared state (2^n per site) and
// independent random joint POVMs for every question tuple.
ParallelStrategy random_parallel_strategy(const GameSpec& game, int n, Rng& rng);

// Dependency-breaking variable R_{-i}: the seeds outside C u {i} together
// with questions and answers on C.
struct DependencyBreaker {
    std::vector<int> subset_c;      // sorted round indices
    int i = 0;                      // distinguished round, not in C
    std::vector<int> omega_minus_i; // omega_j for rounds outside C u {i}, in round order
    std::vector<int> x_c, y_c;      // questions on C (same order as subset_c)
    std::vector<int> a_c, b_c;      // answers on C
};

enum class Party { Alice, Bob };

// A(a_C) = sum over full answer tuples consistent with a_C; the result is a
// POVM over assignments on C. a_c_code enumerates answers on C in subset_c
// order (mixed radix).
std::vector<MatC> coarse_povm(const ParallelStrategy& ps, int x_tuple,
                              std::span<const int> subset_c, Party party);

// Omega-averaged measurement: E over question tuples conditioned on
// Omega_{-i} and the round-i question. Returns one operator per full answer
// tuple; throws on zero-probability conditioning.
std::vector<MatC> omega_averaged_povm(const ParallelStrategy& ps, const SeedExtension& ext,
                                      const DependencyBreaker& r, int question, Party party);

struct PhiState {
    MatC coeffs;  // (dim_a*dim_b) x dim_e coefficient matrix of the unnormalised vector
    double norm;
};

// sqrt(A_{w,x}(a_C)) (x) sqrt(B_{w,y}(b_C)) applied to the square-root
// purification of the shared state. Its squared norm equals
// P(a_C, b_C | omega_{-i}, x, y).
PhiState phi_state(const ParallelStrategy& ps, const SeedExtension& ext,
                   const DependencyBreaker& r, int x, int y);

// hat measurement: conjugation of the a_C-consistent block by the
// Moore-Penrose inverse square root of A(a_C), completed by the projector
// onto the orthogonal complement of the support (assigned to answer 0).
Povm hat_povm(const ParallelStrategy& ps, const SeedExtension& ext,
              const DependencyBreaker& r, int question, Party party);

// |  ||Phi||^2 - P(a_C, b_C | omega_{-i}, x, y) |, the conditional computed
// by exhaustive Born-rule enumeration.
double norm_identity_deviation(const ParallelStrategy& ps, const SeedExtension& ext,
                        const DependencyBreaker& r, int x, int y);

// Max over (a, b) of the trace-norm gap between
//   tr_{E_A E_B}[(hatA(a) (x) hatB(b)) PhiTilde]  and
//   P(a, b | r_{-i}, x, y) rho_E^{(r_{-i}, x, y, a, b)},
// the right-hand side computed by exhaustive enumeration. Returns nullopt on
// zero-probability conditioning (flagged skip).
std::optional<double> conditioned_state_identity_deviation(
    const ParallelStrategy& ps, const SeedExtension& ext,
    const DependencyBreaker& r, int x, int y);

// E_I || P_{R_{-i}} P_{XY} - P_{R_{-i} X_i Y_i} ||_1 over i uniform outside C.
// Reported for inspection only; no constant is available to assert against.
double theta_rho_distance(const ParallelStrategy& ps, const SeedExtension& ext,
                          std::span<const int> subset_c);

// Conditional mutual information I(Omega_1 : Omega_2 A_1^2 E | X_1) for the
// two-round Markov-chain setup: seeds/questions i.i.d. from the extension,
// E_A measured by Alice's joint POVM, rho0 an arbitrary state on
// E_A (x) E. Exact; must vanish.
double markov_chain_cmi(const ParallelStrategy& ps, const SeedExtension& ext,
                        const DensityMatrix& rho0_ea_e);

struct IdentityReport {
    int cases = 0;
    int configs = 0;
    int skipped_zero_prob = 0;
    double max_norm_identity = 0;
    double max_conditioned_state = 0;
    double max_hat_completeness = 0;
    double max_povm_completeness = 0;  // input-strategy POVMs
    double max_markov_cmi = 0;
    double max_theta_rho = 0;   // reported, not asserted
    double mean_theta_rho = 0;
};

// Sweep over random strategies at the given round count: checks the norm
// identity, the conditioned-state identity and hat-POVM completeness for all
// (C, i, r, x, y) with nonzero probability, plus the Markov-chain CMI and the
// theta/rho distance per case. Cases run concurrently with per-case seeds.
IdentityReport identity_sweep(const GameSpec& game, const SeedExtension& ext,
                              int n_rounds, int n_cases, std::uint64_t seed,
                              Exec exec = Exec::Serial);

}  // namespace parqkd
