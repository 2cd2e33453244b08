#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "parqkd/games.hpp"
#include "parqkd/rng.hpp"

namespace parqkd {

using Cplx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;

struct DensityMatrix {
    MatC mat;

    int dim() const { return static_cast<int>(mat.rows()); }
    double trace() const { return mat.trace().real(); }
    double purity() const { return (mat * mat).trace().real(); }

    // Hermitian within tol, eigenvalues >= -tol, trace 1 within tol.
    void validate(double tol = 1e-9) const;
};

struct Povm {
    std::vector<MatC> elements;

    int dim() const { return elements.empty() ? 0 : static_cast<int>(elements[0].rows()); }
    // Each element PSD within tol, elements sum to identity within tol.
    void validate(double tol = 1e-9) const;
    double completeness_deviation() const;
};

// Single-round strategy: shared bipartite state plus per-question POVMs for
// each party, keyed by question label so one strategy can serve a game and
// its anchored extension.
struct Strategy {
    DensityMatrix shared_state;  // on E_A (x) E_B
    int dim_a = 0, dim_b = 0;
    std::map<std::string, Povm> povms_a, povms_b;

    void validate(const GameSpec& game) const;
};

DensityMatrix bell_state();  // |Phi+><Phi+| on two qubits

// Convex mixture with the maximally mixed state: (1-two_q) rho + two_q I/d.
DensityMatrix depolarize(const DensityMatrix& state, double two_q);

// Ideal CHSH strategy: A0 = sz, A1 = sx, B0 = (sz+sx)/sqrt2, B1 = (sz-sx)/sqrt2
// on a Bell pair. Wins 2CHSH with probability (2+sqrt2)/4.
Strategy optimal_chsh_strategy();

// Honest device model for the (anchored) 3CHSH game: the CHSH measurements
// plus B2 = sz; on an anchor question Alice measures A0 and Bob B2 (any
// choice wins there). Shared state is the Bell pair depolarised by 2Q.
Strategy honest_strategy(double nu, double alpha, double q_noise);

// Honest strategy with every measurement angle jittered by up to
// `angle_jitter` radians (uniform), for randomised strategy families.
Strategy perturbed_honest_strategy(double nu, double alpha, double q_noise,
                                   double angle_jitter, Rng& rng);

// sum_{x,y} P(x,y) sum_{a,b: V} tr[(A_x(a) (x) B_y(b)) rho]
double winning_probability(const GameSpec& game, const Strategy& s);

// Joint single-round answer distribution P(a,b) (questions marginalised).
Eigen::MatrixXd answer_distribution(const GameSpec& game, const Strategy& s);
// Conditional answer distribution P(a,b | x, y).
Eigen::MatrixXd answer_distribution_given(const GameSpec& game, const Strategy& s,
                                          int x, int y);

double prob_equal_answers(const GameSpec& game, const Strategy& s);
double prob_answers_differ_given(const GameSpec& game, const Strategy& s,
                                 const std::string& xq, const std::string& yq);

// Exact H(A | E X) where E purifies the shared state (square-root
// purification into a register of equal dimension). Computed per question as
// H(AE)_x - H(E) from the eigenvalues of the conditional Eve blocks.
// Requires dim(E_A x E_B) <= 64.
double conditional_entropy_answer_given_eve(const GameSpec& game, const Strategy& s);

// Exact H(A|B) of the single-round classical answer distribution.
double conditional_entropy_a_given_b(const GameSpec& game, const Strategy& s);

// ---- linear-algebra helpers shared with the parallel-repetition module ----

// Shannon entropy in bits of an unnormalised nonnegative weight list;
// weights below 1e-12 are treated as zero.
double shannon_bits(std::span<const double> weights);

// Von Neumann entropy in bits of a Hermitian PSD matrix (may be
// subnormalised; eigenvalue cutoff 1e-12).
double entropy_bits(const MatC& hermitian);

double trace_norm(const MatC& hermitian);

// PSD square root / Moore-Penrose inverse square root on the numerical
// support (eigenvalue cutoff `cut`).
MatC psd_sqrt(const MatC& m, double cut = 1e-12);
MatC psd_inv_sqrt(const MatC& m, double cut = 1e-10);
// Projector onto the numerical support.
MatC support_projector(const MatC& m, double cut = 1e-10);

// Square-root purification |psi> = sum_ij (sqrt rho)_ij |i>|j> returned as
// the d x d coefficient matrix M (row = system index, column = purifier).
MatC purification_matrix(const DensityMatrix& rho);

// For |psi> with coefficient matrix M on H_front (x) H_back and an operator
// K on the front factor: tr_front[(K (x) I) |psi><psi|], a back x back matrix.
MatC back_state_after(const MatC& psi, const MatC& k_front);

MatC kron(const MatC& a, const MatC& b);

}  // namespace parqkd
