#include "parqkd/games.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>

namespace parqkd {

namespace {

int find_label(const std::vector<std::string>& labels, const std::string& label) {
    auto it = std::find(labels.begin(), labels.end(), label);
    return it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
}

long ipow(long base, long exp) {
    long r = 1;
    for (long k = 0; k < exp; ++k) r *= base;
    return r;
}

}  // namespace

int GameSpec::question_a_index(const std::string& label) const {
    return find_label(questions_a, label);
}
int GameSpec::question_b_index(const std::string& label) const {
    return find_label(questions_b, label);
}

void GameSpec::validate() const {
    if (questions_a.empty() || questions_b.empty() || answers_a.empty() || answers_b.empty())
        throw std::invalid_argument("GameSpec: empty alphabet");
    if (question_dist.rows() != nx() || question_dist.cols() != ny())
        throw std::invalid_argument("GameSpec: distribution table shape mismatch");
    double total = 0;
    for (int x = 0; x < nx(); ++x)
        for (int y = 0; y < ny(); ++y) {
            double p = question_dist(x, y);
            if (p < 0) throw std::invalid_argument("GameSpec: negative question probability");
            total += p;
        }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("GameSpec: question probabilities must sum to 1");
    if (predicate.size() !=
        static_cast<std::size_t>(nx()) * ny() * na() * nb())
        throw std::invalid_argument("GameSpec: predicate not total");
}

GameSpec chsh2_spec() {
    GameSpec g;
    g.name = "2CHSH";
    g.questions_a = {"0", "1"};
    g.questions_b = {"0", "1"};
    g.answers_a = {"0", "1"};
    g.answers_b = {"0", "1"};
    g.question_dist = Eigen::MatrixXd::Constant(2, 2, 0.25);
    g.predicate.assign(16, 0);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    g.predicate[((x * 2 + y) * 2 + a) * 2 + b] =
                        static_cast<std::uint8_t>((a ^ b) == (x & y));
    return g;
}

GameSpec chsh3_spec(double nu) {
    if (!(nu > 0 && nu < 1)) throw std::invalid_argument("chsh3_spec: nu must be in (0,1)");
    GameSpec g;
    g.name = "3CHSH";
    g.questions_a = {"0", "1"};
    g.questions_b = {"0", "1", "2"};
    g.answers_a = {"0", "1"};
    g.answers_b = {"0", "1"};
    g.question_dist = Eigen::MatrixXd::Zero(2, 3);
    g.question_dist(0, 2) = 1 - nu;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) g.question_dist(x, y) = nu / 4;
    g.predicate.assign(2 * 3 * 2 * 2, 0);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 3; ++y)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    // y = 2 demands equal answers, the rest is plain CHSH.
                    bool win = (y == 2) ? (a == b) : ((a ^ b) == (x & y));
                    g.predicate[((x * 3 + y) * 2 + a) * 2 + b] = static_cast<std::uint8_t>(win);
                }
    return g;
}

GameSpec anchor(const GameSpec& game, double alpha) {
    if (!(alpha > 0 && alpha <= 1)) throw std::invalid_argument("anchor: alpha must be in (0,1]");
    if (game.question_a_index(kAnchor) >= 0 || game.question_b_index(kAnchor) >= 0)
        throw std::invalid_argument("anchor: game already carries the anchor symbol");
    GameSpec g;
    g.name = game.name + "_anchored";
    g.questions_a = game.questions_a;
    g.questions_a.push_back(kAnchor);
    g.questions_b = game.questions_b;
    g.questions_b.push_back(kAnchor);
    g.answers_a = game.answers_a;
    g.answers_b = game.answers_b;

    const int nx = game.nx(), ny = game.ny();
    Eigen::VectorXd px = game.marginal_x(), py = game.marginal_y();
    g.question_dist = Eigen::MatrixXd::Zero(nx + 1, ny + 1);
    for (int x = 0; x < nx; ++x)
        for (int y = 0; y < ny; ++y)
            g.question_dist(x, y) = (1 - alpha) * (1 - alpha) * game.question_dist(x, y);
    for (int x = 0; x < nx; ++x) g.question_dist(x, ny) = (1 - alpha) * alpha * px(x);
    for (int y = 0; y < ny; ++y) g.question_dist(nx, y) = alpha * (1 - alpha) * py(y);
    g.question_dist(nx, ny) = alpha * alpha;

    const int na = game.na(), nb = game.nb();
    g.predicate.assign(static_cast<std::size_t>(nx + 1) * (ny + 1) * na * nb, 0);
    for (int x = 0; x <= nx; ++x)
        for (int y = 0; y <= ny; ++y)
            for (int a = 0; a < na; ++a)
                for (int b = 0; b < nb; ++b) {
                    bool win = (x == nx || y == ny) ? true : game.wins(x, y, a, b);
                    g.predicate[((static_cast<std::size_t>(x) * (ny + 1) + y) * na + a) * nb + b] =
                        static_cast<std::uint8_t>(win);
                }
    return g;
}

namespace {

double deterministic_win(const GameSpec& g, long f_idx, long g_idx) {
    const int na = g.na(), nb = g.nb();
    double win = 0;
    long f = f_idx;
    for (int x = 0; x < g.nx(); ++x) {
        int a = static_cast<int>(f % na);
        f /= na;
        long gg = g_idx;
        for (int y = 0; y < g.ny(); ++y) {
            int b = static_cast<int>(gg % nb);
            gg /= nb;
            if (g.wins(x, y, a, b)) win += g.prob(x, y);
        }
    }
    return win;
}

}  // namespace

ClassicalValueResult classical_value_detail(const GameSpec& game, Exec exec) {
    game.validate();
    const long n_f = ipow(game.na(), game.nx());
    const long n_g = ipow(game.nb(), game.ny());
    if (n_f * n_g > 1000000L)
        throw std::invalid_argument("classical_value: deterministic strategy space exceeds 1e6");

    // Per-f best over g; the cross-f reduction runs serially afterwards so
    // both execution policies return the identical first-found maximiser.
    std::vector<double> best_val(static_cast<std::size_t>(n_f));
    std::vector<long> best_g(static_cast<std::size_t>(n_f));
    parallel_for(exec, n_f, [&](std::int64_t f) {
        double v = -1;
        long gb = 0;
        for (long gi = 0; gi < n_g; ++gi) {
            double w = deterministic_win(game, f, gi);
            if (w > v) {
                v = w;
                gb = gi;
            }
        }
        best_val[static_cast<std::size_t>(f)] = v;
        best_g[static_cast<std::size_t>(f)] = gb;
    });
    ClassicalValueResult r{-1, 0, 0};
    for (long f = 0; f < n_f; ++f) {
        if (best_val[static_cast<std::size_t>(f)] > r.value) {
            r.value = best_val[static_cast<std::size_t>(f)];
            r.alice_fn = f;
            r.bob_fn = best_g[static_cast<std::size_t>(f)];
        }
    }
    return r;
}

double classical_value(const GameSpec& game, Exec exec) {
    return classical_value_detail(game, exec).value;
}

double SeedExtension::factorization_residual(const GameSpec& game) const {
    double worst = 0;
    for (int x = 0; x < game.nx(); ++x)
        for (int y = 0; y < game.ny(); ++y) {
            double s = 0;
            for (int w = 0; w < n_omega(); ++w)
                s += p_omega(w) * p_x_given_omega(w, x) * p_y_given_omega(w, y);
            worst = std::max(worst, std::abs(s - game.prob(x, y)));
        }
    return worst;
}

void SeedExtension::validate(const GameSpec& game) const {
    if (p_omega.size() != n_omega() || p_x_given_omega.rows() != n_omega() ||
        p_y_given_omega.rows() != n_omega() || p_x_given_omega.cols() != game.nx() ||
        p_y_given_omega.cols() != game.ny())
        throw std::invalid_argument("SeedExtension: table shape mismatch");
    if (std::abs(p_omega.sum() - 1.0) > 1e-12)
        throw std::invalid_argument("SeedExtension: P(Omega) must sum to 1");
    for (int w = 0; w < n_omega(); ++w) {
        if (std::abs(p_x_given_omega.row(w).sum() - 1.0) > 1e-12 ||
            std::abs(p_y_given_omega.row(w).sum() - 1.0) > 1e-12)
            throw std::invalid_argument("SeedExtension: conditional rows must sum to 1");
    }
    if (factorization_residual(game) > 1e-12)
        throw std::invalid_argument("SeedExtension: factorisation residual exceeds 1e-12");
}

SeedExtension holenstein_seed_extension(const GameSpec& game) {
    game.validate();
    const int nx = game.nx(), ny = game.ny();
    Eigen::VectorXd px = game.marginal_x(), py = game.marginal_y();

    SeedExtension ext;
    const int n_omega = nx + ny;
    ext.p_omega = Eigen::VectorXd::Zero(n_omega);
    ext.p_x_given_omega = Eigen::MatrixXd::Zero(n_omega, nx);
    ext.p_y_given_omega = Eigen::MatrixXd::Zero(n_omega, ny);

    // Side A symbols first: Omega = (A, x).
    for (int x = 0; x < nx; ++x) {
        ext.omega_alphabet.push_back("A:" + game.questions_a[x]);
        ext.p_omega(x) = 0.5 * px(x);
        ext.p_x_given_omega(x, x) = 1.0;
        if (px(x) > 0) {
            for (int y = 0; y < ny; ++y) ext.p_y_given_omega(x, y) = game.prob(x, y) / px(x);
        } else {
            ext.p_y_given_omega.row(x).setConstant(1.0 / ny);
        }
    }
    for (int y = 0; y < ny; ++y) {
        int w = nx + y;
        ext.omega_alphabet.push_back("B:" + game.questions_b[y]);
        ext.p_omega(w) = 0.5 * py(y);
        ext.p_y_given_omega(w, y) = 1.0;
        if (py(y) > 0) {
            for (int x = 0; x < nx; ++x) ext.p_x_given_omega(w, x) = game.prob(x, y) / py(y);
        } else {
            ext.p_x_given_omega.row(w).setConstant(1.0 / nx);
        }
    }
    ext.validate(game);
    return ext;
}

std::string game_to_text(const GameSpec& game) {
    std::ostringstream out;
    out.precision(17);
    auto emit_alphabet = [&](const char* tag, const std::vector<std::string>& labels) {
        out << tag;
        for (const auto& l : labels) out << ' ' << l;
        out << '\n';
    };
    out << "game " << game.name << '\n';
    emit_alphabet("questions_a", game.questions_a);
    emit_alphabet("questions_b", game.questions_b);
    emit_alphabet("answers_a", game.answers_a);
    emit_alphabet("answers_b", game.answers_b);
    out << "dist\n";
    for (int x = 0; x < game.nx(); ++x)
        for (int y = 0; y < game.ny(); ++y)
            out << game.questions_a[x] << ' ' << game.questions_b[y] << ' ' << game.prob(x, y)
                << '\n';
    out << "predicate\n";
    for (int x = 0; x < game.nx(); ++x)
        for (int y = 0; y < game.ny(); ++y)
            for (int a = 0; a < game.na(); ++a)
                for (int b = 0; b < game.nb(); ++b)
                    out << game.questions_a[x] << ' ' << game.questions_b[y] << ' '
                        << game.answers_a[a] << ' ' << game.answers_b[b] << ' '
                        << (game.wins(x, y, a, b) ? 1 : 0) << '\n';
    out << "end\n";
    return out.str();
}

GameSpec game_from_text(const std::string& text) {
    std::istringstream in(text);
    GameSpec g;
    std::string line;
    auto read_alphabet = [&](const std::string& l, const char* tag,
                             std::vector<std::string>& out) {
        std::istringstream ls(l);
        std::string head;
        ls >> head;
        if (head != tag) throw std::invalid_argument("game_from_text: expected " + std::string(tag));
        std::string tok;
        while (ls >> tok) out.push_back(tok);
    };
    if (!std::getline(in, line) || line.rfind("game ", 0) != 0)
        throw std::invalid_argument("game_from_text: missing game header");
    g.name = line.substr(5);
    std::getline(in, line);
    read_alphabet(line, "questions_a", g.questions_a);
    std::getline(in, line);
    read_alphabet(line, "questions_b", g.questions_b);
    std::getline(in, line);
    read_alphabet(line, "answers_a", g.answers_a);
    std::getline(in, line);
    read_alphabet(line, "answers_b", g.answers_b);

    std::getline(in, line);
    if (line != "dist") throw std::invalid_argument("game_from_text: expected dist section");
    g.question_dist = Eigen::MatrixXd::Zero(g.nx(), g.ny());
    std::string xs, ys;
    for (int k = 0; k < g.nx() * g.ny(); ++k) {
        double p;
        in >> xs >> ys >> p;
        int x = g.question_a_index(xs), y = g.question_b_index(ys);
        if (x < 0 || y < 0) throw std::invalid_argument("game_from_text: unknown question label");
        g.question_dist(x, y) = p;
    }
    in >> line;
    if (line != "predicate") throw std::invalid_argument("game_from_text: expected predicate section");
    g.predicate.assign(static_cast<std::size_t>(g.nx()) * g.ny() * g.na() * g.nb(), 0);
    std::string as, bs;
    for (std::size_t k = 0; k < g.predicate.size(); ++k) {
        int v;
        in >> xs >> ys >> as >> bs >> v;
        int x = g.question_a_index(xs), y = g.question_b_index(ys);
        int a = find_label(g.answers_a, as), b = find_label(g.answers_b, bs);
        if (x < 0 || y < 0 || a < 0 || b < 0)
            throw std::invalid_argument("game_from_text: unknown label in predicate row");
        g.predicate[((static_cast<std::size_t>(x) * g.ny() + y) * g.na() + a) * g.nb() + b] =
            static_cast<std::uint8_t>(v != 0);
    }
    in >> line;
    if (line != "end") throw std::invalid_argument("game_from_text: missing end marker");
    g.validate();
    return g;
}

}  // namespace parqkd
