#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "parqkd/entropy.hpp"
#include "parqkd/quantum.hpp"

using namespace parqkd;

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
const double kOmegaQ2 = (2 + kSqrt2) / 4;
}  // namespace

TEST_CASE("bell state") {
    DensityMatrix phi = bell_state();
    phi.validate();
    CHECK(phi.trace() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(phi.purity() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(phi.mat(0, 3).real() == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("depolarizing channel") {
    DensityMatrix phi = bell_state();
    CHECK((depolarize(phi, 0.0).mat - phi.mat).cwiseAbs().maxCoeff() == 0.0);
    DensityMatrix mixed = depolarize(phi, 1.0);
    CHECK((mixed.mat - MatC::Identity(4, 4) / 4.0).cwiseAbs().maxCoeff() < 1e-15);
    // purity oracle: (1-2Q)^2 + 2(1-2Q)(2Q) tr(Phi tau) + (2Q)^2 tr(tau^2)
    double q = 0.05;
    double oracle = 0.9 * 0.9 * 1.0 + 2 * 0.9 * 0.1 * 0.25 + 0.1 * 0.1 * 0.25;
    CHECK(depolarize(phi, 2 * q).purity() == doctest::Approx(oracle).epsilon(1e-13));
    CHECK(oracle == doctest::Approx(0.8575).epsilon(1e-15));
    CHECK_THROWS_AS(depolarize(phi, 1.5), std::invalid_argument);
}

TEST_CASE("optimal CHSH strategy wins (2+sqrt2)/4") {
    Strategy s = optimal_chsh_strategy();
    GameSpec g = chsh2_spec();
    s.validate(g);
    CHECK(std::abs(winning_probability(g, s) - kOmegaQ2) < 1e-9);
    // depolarising noise moves the value linearly: w - (sqrt2/2) Q
    for (double q : {0.02, 0.05, 0.1}) {
        Strategy noisy = s;
        noisy.shared_state = depolarize(bell_state(), 2 * q);
        CHECK(winning_probability(g, noisy) ==
              doctest::Approx(kOmegaQ2 - (kSqrt2 / 2) * q).epsilon(1e-12));
    }
}

TEST_CASE("honest strategy on 3CHSH and its anchored value") {
    double nu = 0.1, alpha = 0.1;
    Strategy s = honest_strategy(nu, alpha, 0.0);
    GameSpec g3 = chsh3_spec(nu);
    s.validate(g3);
    double w3 = winning_probability(g3, s);
    CHECK(w3 == doctest::Approx(1 - (2 - kSqrt2) * nu / 4).epsilon(1e-12));

    GameSpec ga = anchor(g3, alpha);
    s.validate(ga);
    double wa = winning_probability(ga, s);
    CHECK(wa == doctest::Approx(1 - (1 - alpha) * (1 - alpha) * (1 - w3)).epsilon(1e-12));
    CHECK(wa == doctest::Approx(0.9881378246380552).epsilon(1e-10));

    CHECK_THROWS_AS(honest_strategy(0.2, 0.05, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(honest_strategy(0.05, 0.05, 0.5), std::invalid_argument);
}

TEST_CASE("anchoring value relation holds for arbitrary strategies") {
    double nu = 0.05, alpha = 0.08;
    GameSpec g3 = chsh3_spec(nu);
    GameSpec ga = anchor(g3, alpha);
    Rng rng(7);
    for (int k = 0; k < 40; ++k) {
        Strategy s = perturbed_honest_strategy(nu, alpha, 0.1 * rng.uniform(), 0.8, rng);
        double w3 = winning_probability(g3, s);
        double wa = winning_probability(ga, s);
        CHECK(std::abs(wa - (1 - (1 - alpha) * (1 - alpha) * (1 - w3))) < 1e-9);
    }
}

TEST_CASE("classical deterministic strategy matches classical evaluation") {
    // answer 0 regardless of question, on a product state
    GameSpec g = chsh2_spec();
    Strategy s;
    s.dim_a = s.dim_b = 2;
    VecC e0 = VecC::Zero(4);
    e0(0) = 1;
    s.shared_state = DensityMatrix{e0 * e0.adjoint()};
    Povm always0;
    always0.elements = {MatC::Identity(2, 2), MatC::Zero(2, 2)};
    s.povms_a["0"] = s.povms_a["1"] = always0;
    s.povms_b["0"] = s.povms_b["1"] = always0;
    double expected = 0;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            if (g.wins(x, y, 0, 0)) expected += g.prob(x, y);
    CHECK(winning_probability(g, s) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(conditional_entropy_answer_given_eve(g, s) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("noise model: Pr[A != B | X=0, Y=2] equals Q") {
    GameSpec g = chsh3_spec(0.05);
    for (int k = 1; k <= 10; ++k) {
        double q = 0.01 * k;
        Strategy s = honest_strategy(0.05, 0.05, q);
        CHECK(std::abs(prob_answers_differ_given(g, s, "0", "2") - q) < 1e-12);
    }
}

TEST_CASE("H(A|B) of the honest model stays below h(2a+nu+Q)") {
    double a = 0.05, nu = 0.05, q = 0.05;
    GameSpec g = anchor(chsh3_spec(nu), a);
    Strategy s = honest_strategy(nu, a, q);
    double h_ab = conditional_entropy_a_given_b(g, s);
    CHECK(h_ab <= binary_entropy(2 * a + nu + q) + 1e-12);
    CHECK(binary_entropy(0.2) == doctest::Approx(0.7219280948873623).epsilon(1e-12));
    CHECK(h_ab > 0.0);

    // questions pinned to (0,2) at Q = 0: perfectly correlated answers
    Strategy clean = honest_strategy(nu, a, 0.0);
    Eigen::MatrixXd t = answer_distribution_given(g, clean, g.question_a_index("0"),
                                                  g.question_b_index("2"));
    double joint[4] = {t(0, 0), t(0, 1), t(1, 0), t(1, 1)};
    double marg[2] = {t(0, 0) + t(1, 0), t(0, 1) + t(1, 1)};
    CHECK(shannon_bits(std::span<const double>(joint, 4)) -
              shannon_bits(std::span<const double>(marg, 2)) ==
          doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("H(A|EX): optimal pure strategy decouples Eve") {
    GameSpec g = chsh2_spec();
    Strategy s = optimal_chsh_strategy();
    CHECK(conditional_entropy_answer_given_eve(g, s) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("H(A|EX) respects the single-round bound on the honest family") {
    double a = 0.05, nu = 0.05;
    GameSpec ga = anchor(chsh3_spec(nu), a);
    Rng rng(13);
    int in_window = 0;
    for (int k = 0; k < 60; ++k) {
        Strategy s = perturbed_honest_strategy(nu, a, 0.004 * rng.uniform(), 0.01, rng);
        double w = winning_probability(ga, s);
        if (w < omega_min(a, nu) || w > omega_max(a, nu)) continue;
        ++in_window;
        double h = conditional_entropy_answer_given_eve(ga, s);
        CHECK(h >= single_round_bound(w, a, nu) - 1e-9);
    }
    CHECK(in_window >= 40);
}

TEST_CASE("Pr[A=B] >= omega - nu - 2 alpha on a wide strategy family") {
    double a = 0.06, nu = 0.07;
    GameSpec ga = anchor(chsh3_spec(nu), a);
    Rng rng(29);
    for (int k = 0; k < 100; ++k) {
        Strategy s = perturbed_honest_strategy(nu, a, 0.1 * rng.uniform(), 1.5, rng);
        double w = winning_probability(ga, s);
        CHECK(prob_equal_answers(ga, s) >= w - nu - 2 * a - 1e-12);
    }
}

TEST_CASE("3CHSH reduction: omega-hat reaches 3/4 whenever omega >= 1 - nu/4") {
    double nu = 0.08;
    GameSpec g3 = chsh3_spec(nu);
    Rng rng(31);
    int checked = 0;
    for (int k = 0; k < 100; ++k) {
        Strategy s = perturbed_honest_strategy(nu, 0.05, 0.004 * rng.uniform(), 0.05, rng);
        double w = winning_probability(g3, s);
        if (w < 1 - nu / 4) continue;
        ++checked;
        CHECK((w - (1 - nu)) / nu >= 0.75 - 1e-12);
    }
    CHECK(checked > 10);
}

TEST_CASE("purification sanity: H(E) equals H of the shared state") {
    DensityMatrix rho = depolarize(bell_state(), 0.3);
    MatC psi = purification_matrix(rho);
    MatC rho_e = back_state_after(psi, MatC::Identity(4, 4));
    CHECK(std::abs(rho_e.trace().real() - 1.0) < 1e-12);
    CHECK(entropy_bits(rho_e) == doctest::Approx(entropy_bits(rho.mat)).epsilon(1e-10));
}

TEST_CASE("povm and strategy validation catch malformed inputs") {
    Povm bad;
    bad.elements = {MatC::Identity(2, 2) * 0.7, MatC::Identity(2, 2) * 0.7};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    Strategy s = optimal_chsh_strategy();
    GameSpec g3 = chsh3_spec(0.05);
    CHECK_THROWS_AS(s.validate(g3), std::invalid_argument);  // no POVM for question 2
    CHECK_THROWS_AS(winning_probability(g3, s), std::out_of_range);
}
