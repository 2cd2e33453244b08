#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "parqkd/exec.hpp"

namespace parqkd {

// Question symbol used by the anchoring transform.
inline constexpr const char* kAnchor = "bot";

// A two-player non-local game: finite question/answer alphabets, a question
// distribution and a total winning predicate.
struct GameSpec {
    std::string name;
    std::vector<std::string> questions_a, questions_b;
    std::vector<std::string> answers_a, answers_b;
    Eigen::MatrixXd question_dist;   // |X| x |Y|, entries >= 0, sums to 1
    std::vector<std::uint8_t> predicate;  // indexed by ((x*|Y|+y)*|A|+a)*|B|+b

    int nx() const { return static_cast<int>(questions_a.size()); }
    int ny() const { return static_cast<int>(questions_b.size()); }
    int na() const { return static_cast<int>(answers_a.size()); }
    int nb() const { return static_cast<int>(answers_b.size()); }

    bool wins(int x, int y, int a, int b) const {
        return predicate[((static_cast<std::size_t>(x) * ny() + y) * na() + a) * nb() + b] != 0;
    }
    double prob(int x, int y) const { return question_dist(x, y); }

    Eigen::VectorXd marginal_x() const { return question_dist.rowwise().sum(); }
    Eigen::VectorXd marginal_y() const { return question_dist.colwise().sum(); }

    int question_a_index(const std::string& label) const;
    int question_b_index(const std::string& label) const;

    // Throws std::invalid_argument if the distribution or predicate table is
    // malformed (negative weight, total != 1 within 1e-12, wrong table size).
    void validate() const;
};

// The standard CHSH game: uniform questions on {0,1}^2, win iff a^b = x&y.
GameSpec chsh2_spec();

// Three-question CHSH variant: question pair (0,2) has weight 1-nu and asks
// for equal answers; pairs in {0,1}^2 carry weight nu/4 each and use the CHSH
// predicate. nu must lie in (0,1).
GameSpec chsh3_spec(double nu);

// Anchoring transform: each question is independently replaced by the anchor
// symbol with probability alpha; any round containing the anchor is won.
GameSpec anchor(const GameSpec& game, double alpha);

// Exact classical value via exhaustive search over deterministic strategy
// pairs (shared randomness cannot beat the deterministic maximum). The
// search order is lexicographic in (Alice function index, Bob function
// index); Alice's function index f encodes f(x) = (f / |A|^x) % |A|.
// Throws if |A|^|X| * |B|^|Y| exceeds 1e6.
double classical_value(const GameSpec& game, Exec exec = Exec::Serial);

// Same search, also reporting the first maximising pair of function indices.
struct ClassicalValueResult {
    double value;
    long alice_fn, bob_fn;
};
ClassicalValueResult classical_value_detail(const GameSpec& game, Exec exec = Exec::Serial);

// Extension of the question distribution by a public seed Omega such that
// P(x,y) = sum_w P(w) P(x|w) P(y|w). Holds the tables of the factorised
// distribution; all rows of the conditionals are normalised.
struct SeedExtension {
    std::vector<std::string> omega_alphabet;
    Eigen::VectorXd p_omega;
    Eigen::MatrixXd p_x_given_omega;  // |Omega| x |X|
    Eigen::MatrixXd p_y_given_omega;  // |Omega| x |Y|

    int n_omega() const { return static_cast<int>(omega_alphabet.size()); }

    // max_{x,y} |sum_w P(w)P(x|w)P(y|w) - P_XY(x,y)|
    double factorization_residual(const GameSpec& game) const;
    void validate(const GameSpec& game) const;
};

// Dependency-breaking construction: Omega = (side, revealed question), with
// the side chosen uniformly. Given Omega = (A, x), Alice's question is x and
// Bob samples from P_{Y|X=x}; symmetrically for side B. Satisfies the
// factorisation exactly and lets both parties sample locally.
SeedExtension holenstein_seed_extension(const GameSpec& game);

// Plain-text record: alphabets, distribution rows "x y p", predicate rows
// "x y a b v". Round-trips through game_from_text.
std::string game_to_text(const GameSpec& game);
GameSpec game_from_text(const std::string& text);

}  // namespace parqkd
