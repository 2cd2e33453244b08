#include "parqkd/quantum.hpp"

#include <cmath>
#include <stdexcept>

namespace parqkd {

namespace {

constexpr double kEntropyCut = 1e-12;  // eigenvalue cutoff, 0 log 0 := 0

MatC pauli_z() {
    MatC m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

MatC pauli_x() {
    MatC m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

// Observable cos(theta) sz + sin(theta) sx; squares to the identity for any
// theta, so (I +- O)/2 are the eigenprojectors.
MatC plane_observable(double theta) {
    return std::cos(theta) * pauli_z() + std::sin(theta) * pauli_x();
}

Povm projective_from_observable(const MatC& obs) {
    MatC id = MatC::Identity(obs.rows(), obs.cols());
    Povm p;
    p.elements = {(id + obs) / 2.0, (id - obs) / 2.0};  // answer 0 <-> +1 outcome
    return p;
}

}  // namespace

void DensityMatrix::validate(double tol) const {
    if (mat.rows() != mat.cols() || mat.rows() == 0)
        throw std::invalid_argument("DensityMatrix: not square");
    if ((mat - mat.adjoint()).cwiseAbs().maxCoeff() > tol)
        throw std::invalid_argument("DensityMatrix: not Hermitian");
    Eigen::SelfAdjointEigenSolver<MatC> es(mat, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol)
        throw std::invalid_argument("DensityMatrix: negative eigenvalue");
    if (std::abs(mat.trace().real() - 1.0) > tol)
        throw std::invalid_argument("DensityMatrix: trace must be 1");
}

void Povm::validate(double tol) const {
    if (elements.empty()) throw std::invalid_argument("Povm: empty");
    MatC sum = MatC::Zero(elements[0].rows(), elements[0].cols());
    for (const auto& e : elements) {
        if (e.rows() != sum.rows() || e.cols() != sum.cols())
            throw std::invalid_argument("Povm: element shape mismatch");
        if ((e - e.adjoint()).cwiseAbs().maxCoeff() > tol)
            throw std::invalid_argument("Povm: element not Hermitian");
        Eigen::SelfAdjointEigenSolver<MatC> es(e, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -tol)
            throw std::invalid_argument("Povm: element not PSD");
        sum += e;
    }
    if ((sum - MatC::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff() > tol)
        throw std::invalid_argument("Povm: elements do not sum to identity");
}

double Povm::completeness_deviation() const {
    if (elements.empty()) return 0;
    MatC sum = MatC::Zero(elements[0].rows(), elements[0].cols());
    for (const auto& e : elements) sum += e;
    return (sum - MatC::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff();
}

void Strategy::validate(const GameSpec& game) const {
    shared_state.validate();
    if (shared_state.dim() != dim_a * dim_b)
        throw std::invalid_argument("Strategy: shared state dimension mismatch");
    for (const auto& q : game.questions_a) {
        auto it = povms_a.find(q);
        if (it == povms_a.end())
            throw std::invalid_argument("Strategy: missing Alice POVM for question " + q);
        if (it->second.dim() != dim_a)
            throw std::invalid_argument("Strategy: Alice POVM dimension mismatch");
        it->second.validate();
    }
    for (const auto& q : game.questions_b) {
        auto it = povms_b.find(q);
        if (it == povms_b.end())
            throw std::invalid_argument("Strategy: missing Bob POVM for question " + q);
        if (it->second.dim() != dim_b)
            throw std::invalid_argument("Strategy: Bob POVM dimension mismatch");
        it->second.validate();
    }
}

DensityMatrix bell_state() {
    VecC phi = VecC::Zero(4);
    phi(0) = 1 / std::sqrt(2.0);
    phi(3) = 1 / std::sqrt(2.0);
    return DensityMatrix{phi * phi.adjoint()};
}

DensityMatrix depolarize(const DensityMatrix& state, double two_q) {
    if (!(two_q >= 0 && two_q <= 1))
        throw std::invalid_argument("depolarize: 2Q must be in [0,1]");
    const int d = state.dim();
    return DensityMatrix{(1 - two_q) * state.mat +
                         two_q * MatC::Identity(d, d) / static_cast<double>(d)};
}

Strategy optimal_chsh_strategy() {
    Strategy s;
    s.dim_a = s.dim_b = 2;
    s.shared_state = bell_state();
    s.povms_a["0"] = projective_from_observable(plane_observable(0));
    s.povms_a["1"] = projective_from_observable(plane_observable(M_PI / 2));
    s.povms_b["0"] = projective_from_observable(plane_observable(M_PI / 4));
    s.povms_b["1"] = projective_from_observable(plane_observable(-M_PI / 4));
    return s;
}

Strategy honest_strategy(double nu, double alpha, double q_noise) {
    if (!(nu > 0 && nu <= 0.1) || !(alpha > 0 && alpha <= 0.1))
        throw std::invalid_argument("honest_strategy: nu, alpha must be in (0, 0.1]");
    if (!(q_noise >= 0 && q_noise <= 0.1))
        throw std::invalid_argument("honest_strategy: Q must be in [0, 0.1]");
    Strategy s = optimal_chsh_strategy();
    s.shared_state = depolarize(s.shared_state, 2 * q_noise);
    s.povms_b["2"] = projective_from_observable(plane_observable(0));  // sz, matches A0
    s.povms_a[kAnchor] = s.povms_a.at("0");
    s.povms_b[kAnchor] = s.povms_b.at("2");
    return s;
}

Strategy perturbed_honest_strategy(double nu, double alpha, double q_noise,
                                   double angle_jitter, Rng& rng) {
    Strategy s = honest_strategy(nu, alpha, std::min(q_noise, 0.1));
    s.shared_state = depolarize(bell_state(), 2 * q_noise);
    auto jitter = [&](double base) {
        return base + angle_jitter * (2 * rng.uniform() - 1);
    };
    s.povms_a["0"] = projective_from_observable(plane_observable(jitter(0)));
    s.povms_a["1"] = projective_from_observable(plane_observable(jitter(M_PI / 2)));
    s.povms_b["0"] = projective_from_observable(plane_observable(jitter(M_PI / 4)));
    s.povms_b["1"] = projective_from_observable(plane_observable(jitter(-M_PI / 4)));
    s.povms_b["2"] = projective_from_observable(plane_observable(jitter(0)));
    s.povms_a[kAnchor] = s.povms_a.at("0");
    s.povms_b[kAnchor] = s.povms_b.at("2");
    return s;
}

namespace {

// P(a, b | x, y) for the given strategy via the Born rule.
double born(const Strategy& s, const Povm& pa, const Povm& pb, int a, int b) {
    return (kron(pa.elements[a], pb.elements[b]) * s.shared_state.mat).trace().real();
}

}  // namespace

Eigen::MatrixXd answer_distribution_given(const GameSpec& game, const Strategy& s, int x,
                                          int y) {
    const Povm& pa = s.povms_a.at(game.questions_a[x]);
    const Povm& pb = s.povms_b.at(game.questions_b[y]);
    Eigen::MatrixXd t(game.na(), game.nb());
    for (int a = 0; a < game.na(); ++a)
        for (int b = 0; b < game.nb(); ++b) t(a, b) = born(s, pa, pb, a, b);
    return t;
}

double winning_probability(const GameSpec& game, const Strategy& s) {
    game.validate();
    if (s.shared_state.dim() != s.dim_a * s.dim_b)
        throw std::invalid_argument("winning_probability: state dimension mismatch");
    double win = 0;
    for (int x = 0; x < game.nx(); ++x)
        for (int y = 0; y < game.ny(); ++y) {
            double pxy = game.prob(x, y);
            if (pxy == 0) continue;
            Eigen::MatrixXd t = answer_distribution_given(game, s, x, y);
            for (int a = 0; a < game.na(); ++a)
                for (int b = 0; b < game.nb(); ++b)
                    if (game.wins(x, y, a, b)) win += pxy * t(a, b);
        }
    return win;
}

Eigen::MatrixXd answer_distribution(const GameSpec& game, const Strategy& s) {
    Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(game.na(), game.nb());
    for (int x = 0; x < game.nx(); ++x)
        for (int y = 0; y < game.ny(); ++y) {
            double pxy = game.prob(x, y);
            if (pxy == 0) continue;
            joint += pxy * answer_distribution_given(game, s, x, y);
        }
    return joint;
}

double prob_equal_answers(const GameSpec& game, const Strategy& s) {
    Eigen::MatrixXd joint = answer_distribution(game, s);
    double p = 0;
    for (int a = 0; a < std::min(game.na(), game.nb()); ++a)
        if (game.answers_a[a] == game.answers_b[a]) p += joint(a, a);
    return p;
}

double prob_answers_differ_given(const GameSpec& game, const Strategy& s,
                                 const std::string& xq, const std::string& yq) {
    int x = game.question_a_index(xq), y = game.question_b_index(yq);
    if (x < 0 || y < 0) throw std::invalid_argument("prob_answers_differ_given: unknown question");
    Eigen::MatrixXd t = answer_distribution_given(game, s, x, y);
    double p = 0;
    for (int a = 0; a < game.na(); ++a)
        for (int b = 0; b < game.nb(); ++b)
            if (game.answers_a[a] != game.answers_b[b]) p += t(a, b);
    return p;
}

double shannon_bits(std::span<const double> weights) {
    double h = 0;
    for (double w : weights)
        if (w > kEntropyCut) h -= w * std::log2(w);
    return h;
}

double entropy_bits(const MatC& hermitian) {
    Eigen::SelfAdjointEigenSolver<MatC> es(hermitian, Eigen::EigenvaluesOnly);
    double h = 0;
    for (int k = 0; k < es.eigenvalues().size(); ++k) {
        double l = es.eigenvalues()(k);
        if (l > kEntropyCut) h -= l * std::log2(l);
    }
    return h;
}

double trace_norm(const MatC& hermitian) {
    Eigen::SelfAdjointEigenSolver<MatC> es(hermitian, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
}

MatC psd_sqrt(const MatC& m, double cut) {
    Eigen::SelfAdjointEigenSolver<MatC> es(m);
    Eigen::VectorXd l = es.eigenvalues();
    if (l.minCoeff() < -1e-9) throw std::invalid_argument("psd_sqrt: matrix not PSD");
    Eigen::VectorXd r = l.unaryExpr([&](double v) { return v > cut ? std::sqrt(v) : 0.0; });
    return es.eigenvectors() * r.asDiagonal() * es.eigenvectors().adjoint();
}

MatC psd_inv_sqrt(const MatC& m, double cut) {
    Eigen::SelfAdjointEigenSolver<MatC> es(m);
    Eigen::VectorXd l = es.eigenvalues();
    if (l.minCoeff() < -1e-9) throw std::invalid_argument("psd_inv_sqrt: matrix not PSD");
    Eigen::VectorXd r =
        l.unaryExpr([&](double v) { return v > cut ? 1.0 / std::sqrt(v) : 0.0; });
    return es.eigenvectors() * r.asDiagonal() * es.eigenvectors().adjoint();
}

MatC support_projector(const MatC& m, double cut) {
    Eigen::SelfAdjointEigenSolver<MatC> es(m);
    Eigen::VectorXd r =
        es.eigenvalues().unaryExpr([&](double v) { return v > cut ? 1.0 : 0.0; });
    return es.eigenvectors() * r.asDiagonal() * es.eigenvectors().adjoint();
}

MatC purification_matrix(const DensityMatrix& rho) { return psd_sqrt(rho.mat); }

MatC back_state_after(const MatC& psi, const MatC& k_front) {
    // |psi> = sum_ij psi(i,j) |i>_front |j>_back;
    // result(j, j') = sum_{i,i'} psi(i,j) K(i',i) conj(psi(i',j')).
    if (psi.rows() != k_front.cols())
        throw std::invalid_argument("back_state_after: dimension mismatch");
    return psi.transpose() * k_front.transpose() * psi.conjugate();
}

MatC kron(const MatC& a, const MatC& b) {
    MatC out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

double conditional_entropy_answer_given_eve(const GameSpec& game, const Strategy& s) {
    if (s.shared_state.dim() > 64)
        throw std::invalid_argument("conditional_entropy_answer_given_eve: dim(E_A x E_B) > 64");
    MatC psi = purification_matrix(s.shared_state);
    const double h_e = entropy_bits(back_state_after(psi, MatC::Identity(psi.rows(), psi.rows())));

    Eigen::VectorXd px = game.marginal_x();
    MatC id_b = MatC::Identity(s.dim_b, s.dim_b);
    double h = 0;
    for (int x = 0; x < game.nx(); ++x) {
        if (px(x) == 0) continue;
        const Povm& pa = s.povms_a.at(game.questions_a[x]);
        // cq state over (A, E): block-diagonal, entropy from all blocks' spectra.
        std::vector<double> eig;
        for (const auto& element : pa.elements) {
            MatC blk = back_state_after(psi, kron(element, id_b));
            Eigen::SelfAdjointEigenSolver<MatC> es(blk, Eigen::EigenvaluesOnly);
            for (int k = 0; k < es.eigenvalues().size(); ++k) eig.push_back(es.eigenvalues()(k));
        }
        h += px(x) * (shannon_bits(eig) - h_e);
    }
    return h;
}

double conditional_entropy_a_given_b(const GameSpec& game, const Strategy& s) {
    Eigen::MatrixXd joint = answer_distribution(game, s);
    std::vector<double> all, marg_b;
    for (int b = 0; b < joint.cols(); ++b) {
        double m = 0;
        for (int a = 0; a < joint.rows(); ++a) {
            all.push_back(joint(a, b));
            m += joint(a, b);
        }
        marg_b.push_back(m);
    }
    return shannon_bits(all) - shannon_bits(marg_b);
}

}  // namespace parqkd
