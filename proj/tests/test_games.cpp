#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "parqkd/games.hpp"

using namespace parqkd;

TEST_CASE("2CHSH spec") {
    GameSpec g = chsh2_spec();
    g.validate();
    CHECK(g.wins(0, 0, 0, 0));
    CHECK_FALSE(g.wins(1, 1, 0, 0));
    CHECK(g.wins(1, 1, 0, 1));
    CHECK(g.prob(0, 1) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("3CHSH spec") {
    GameSpec g = chsh3_spec(0.1);
    g.validate();
    CHECK(g.prob(0, 2) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(g.prob(1, 0) == doctest::Approx(0.025).epsilon(1e-15));
    CHECK(g.prob(1, 2) == 0.0);
    CHECK(g.wins(0, 2, 1, 1));
    CHECK_FALSE(g.wins(0, 2, 0, 1));
    CHECK_THROWS_AS(chsh3_spec(0.0), std::invalid_argument);
    CHECK_THROWS_AS(chsh3_spec(1.0), std::invalid_argument);
}

TEST_CASE("anchoring transform") {
    GameSpec g = anchor(chsh3_spec(0.1), 0.1);
    g.validate();
    int bx = g.question_a_index(kAnchor), by = g.question_b_index(kAnchor);
    REQUIRE(bx >= 0);
    REQUIRE(by >= 0);
    CHECK(g.prob(bx, by) == doctest::Approx(0.01).epsilon(1e-14));
    // direct product (1-alpha)^2 P_XY; the two-stage sampling gives the same
    CHECK(g.prob(0, 2) == doctest::Approx(0.81 * 0.9).epsilon(1e-14));
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            CHECK(g.wins(bx, 1, a, b));
            CHECK(g.wins(0, by, a, b));
        }
    CHECK_THROWS_AS(anchor(chsh2_spec(), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(anchor(g, 0.1), std::invalid_argument);  // anchor symbol already present
}

TEST_CASE("classical values") {
    CHECK(classical_value(chsh2_spec()) == 0.75);
    for (double nu : {0.02, 0.05, 0.1})
        CHECK(classical_value(chsh3_spec(nu)) == doctest::Approx(1 - nu / 4).epsilon(1e-13));
    // brute force over the 16 deterministic pairs with the anchored distribution
    CHECK(classical_value(anchor(chsh2_spec(), 0.5)) == doctest::Approx(0.9375).epsilon(1e-13));
    // anchored classical value follows the same transform as the quantum one
    for (double a : {0.1, 0.3}) {
        double v = classical_value(anchor(chsh2_spec(), a));
        CHECK(v == doctest::Approx(1 - (1 - a) * (1 - a) * 0.25).epsilon(1e-12));
    }

    GameSpec big = chsh2_spec();
    big.questions_a = {"0", "1", "2", "3", "4", "5", "6", "7", "8", "9"};
    big.answers_a = {"0", "1", "2", "3"};
    big.question_dist = Eigen::MatrixXd::Constant(10, 2, 0.05);
    big.predicate.assign(static_cast<std::size_t>(10) * 2 * 4 * 2, 1);
    CHECK_THROWS_AS(classical_value(big), std::invalid_argument);  // 4^10 * 2^2 > 1e6
}

TEST_CASE("classical value search is deterministic across exec policies") {
    GameSpec g = anchor(chsh3_spec(0.05), 0.2);
    ClassicalValueResult s = classical_value_detail(g, Exec::Serial);
    ClassicalValueResult p = classical_value_detail(g, Exec::Parallel);
    CHECK(s.value == p.value);
    CHECK(s.alice_fn == p.alice_fn);
    CHECK(s.bob_fn == p.bob_fn);
}

TEST_CASE("seed extension") {
    GameSpec g2 = chsh2_spec();
    SeedExtension e2 = holenstein_seed_extension(g2);
    // P_Omega((A,0)) = 1/2 * P_X(0) = 1/4
    CHECK(e2.omega_alphabet[0] == "A:0");
    CHECK(e2.p_omega(0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(e2.factorization_residual(g2) < 1e-12);

    for (double nu : {0.05, 0.1}) {
        GameSpec g = anchor(chsh3_spec(nu), 0.1);
        SeedExtension e = holenstein_seed_extension(g);
        CHECK(e.factorization_residual(g) < 1e-12);
        // enumeration oracle for the (anchor, anchor) marginal
        int bx = g.question_a_index(kAnchor), by = g.question_b_index(kAnchor);
        double p = 0;
        for (int w = 0; w < e.n_omega(); ++w)
            p += e.p_omega(w) * e.p_x_given_omega(w, bx) * e.p_y_given_omega(w, by);
        CHECK(p == doctest::Approx(0.01).epsilon(1e-12));
    }
}

TEST_CASE("game text record round-trips") {
    GameSpec g = anchor(chsh3_spec(0.07), 0.03);
    GameSpec back = game_from_text(game_to_text(g));
    CHECK(back.questions_a == g.questions_a);
    CHECK(back.questions_b == g.questions_b);
    CHECK(back.predicate == g.predicate);
    CHECK((back.question_dist - g.question_dist).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(game_from_text("nonsense"), std::invalid_argument);
}
