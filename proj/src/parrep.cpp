#include "parqkd/parrep.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace parqkd {

int encode_tuple(std::span<const int> digits, int radix) {
    int code = 0;
    for (int d : digits) code = code * radix + d;
    return code;
}

std::vector<int> decode_tuple(int code, int radix, int n) {
    std::vector<int> digits(static_cast<std::size_t>(n));
    for (int k = n - 1; k >= 0; --k) {
        digits[static_cast<std::size_t>(k)] = code % radix;
        code /= radix;
    }
    return digits;
}

int ParallelStrategy::n_x_tuples() const { return static_cast<int>(std::pow(nx, n) + 0.5); }
int ParallelStrategy::n_y_tuples() const { return static_cast<int>(std::pow(ny, n) + 0.5); }
int ParallelStrategy::n_a_tuples() const { return static_cast<int>(std::pow(na, n) + 0.5); }
int ParallelStrategy::n_b_tuples() const { return static_cast<int>(std::pow(nb, n) + 0.5); }

void ParallelStrategy::validate(double tol) const {
    if (n < 1 || n > 3) throw std::invalid_argument("ParallelStrategy: n must be in [1,3]");
    if (dim_a * dim_b > 256)
        throw std::invalid_argument("ParallelStrategy: total dimension exceeds 256");
    shared_state.validate(tol);
    if (shared_state.dim() != dim_a * dim_b)
        throw std::invalid_argument("ParallelStrategy: state dimension mismatch");
    if (static_cast<int>(povm_a.size()) != n_x_tuples() ||
        static_cast<int>(povm_b.size()) != n_y_tuples())
        throw std::invalid_argument("ParallelStrategy: question tuple count mismatch");
    for (const auto& povm : povm_a) {
        Povm p{povm};
        p.validate(tol);
    }
    for (const auto& povm : povm_b) {
        Povm p{povm};
        p.validate(tol);
    }
}

ParallelStrategy product_strategy(const GameSpec& game, const Strategy& s, int n) {
    if (n < 1 || n > 3) throw std::invalid_argument("product_strategy: n must be in [1,3]");
    s.validate(game);
    ParallelStrategy ps;
    ps.n = n;
    ps.nx = game.nx();
    ps.ny = game.ny();
    ps.na = game.na();
    ps.nb = game.nb();
    ps.dim_a = static_cast<int>(std::pow(s.dim_a, n) + 0.5);
    ps.dim_b = static_cast<int>(std::pow(s.dim_b, n) + 0.5);

    // Shared state: reorder (A1 B1)(A2 B2).. into (A1 A2..)(B1 B2..).
    MatC rho1 = s.shared_state.mat;
    MatC rho = rho1;
    for (int k = 1; k < n; ++k) rho = kron(rho, rho1);
    const int d_tot = ps.dim_a * ps.dim_b;
    MatC reordered = MatC::Zero(d_tot, d_tot);
    auto mixed_index = [&](int code) {
        // code digits alternate (a_1, b_1, a_2, b_2, ...); map to a-major order
        std::vector<int> dig(static_cast<std::size_t>(2 * n));
        int c = code;
        for (int k = 2 * n - 1; k >= 0; --k) {
            int radix = (k % 2 == 0) ? s.dim_a : s.dim_b;
            dig[static_cast<std::size_t>(k)] = c % radix;
            c /= radix;
        }
        int ia = 0, ib = 0;
        for (int k = 0; k < n; ++k) ia = ia * s.dim_a + dig[static_cast<std::size_t>(2 * k)];
        for (int k = 0; k < n; ++k) ib = ib * s.dim_b + dig[static_cast<std::size_t>(2 * k + 1)];
        return ia * ps.dim_b + ib;
    };
    for (int r = 0; r < d_tot; ++r)
        for (int c = 0; c < d_tot; ++c) reordered(mixed_index(r), mixed_index(c)) = rho(r, c);
    ps.shared_state = DensityMatrix{reordered};

    auto build = [&](const std::map<std::string, Povm>& povms,
                     const std::vector<std::string>& labels, int n_q, int n_ans) {
        std::vector<std::vector<MatC>> out(static_cast<std::size_t>(std::pow(n_q, n) + 0.5));
        for (std::size_t xt = 0; xt < out.size(); ++xt) {
            auto xd = decode_tuple(static_cast<int>(xt), n_q, n);
            out[xt].resize(static_cast<std::size_t>(std::pow(n_ans, n) + 0.5));
            for (std::size_t at = 0; at < out[xt].size(); ++at) {
                auto ad = decode_tuple(static_cast<int>(at), n_ans, n);
                MatC m = povms.at(labels[static_cast<std::size_t>(xd[0])])
                             .elements[static_cast<std::size_t>(ad[0])];
                for (int k = 1; k < n; ++k)
                    m = kron(m, povms.at(labels[static_cast<std::size_t>(xd[static_cast<std::size_t>(k)])])
                                    .elements[static_cast<std::size_t>(ad[static_cast<std::size_t>(k)])]);
                out[xt][at] = m;
            }
        }
        return out;
    };
    ps.povm_a = build(s.povms_a, game.questions_a, ps.nx, ps.na);
    ps.povm_b = build(s.povms_b, game.questions_b, ps.ny, ps.nb);
    return ps;
}

namespace {

MatC random_gaussian(int d, Rng& rng) {
    MatC m(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) m(r, c) = Cplx(rng.normal(), rng.normal());
    return m;
}

std::vector<MatC> random_povm(int d, int n_elements, Rng& rng) {
    std::vector<MatC> gs;
    MatC sum = MatC::Zero(d, d);
    for (int k = 0; k < n_elements; ++k) {
        MatC m = random_gaussian(d, rng);
        gs.push_back(m * m.adjoint());
        sum += gs.back();
    }
    MatC w = psd_inv_sqrt(sum, 1e-12);
    for (auto& g : gs) g = w * g * w;
    return gs;
}

}  // namespace

ParallelStrategy random_parallel_strategy(const GameSpec& game, int n, Rng& rng) {
    ParallelStrategy ps;
    ps.n = n;
    ps.nx = game.nx();
    ps.ny = game.ny();
    ps.na = game.na();
    ps.nb = game.nb();
    ps.dim_a = 1 << n;
    ps.dim_b = 1 << n;
    MatC m = random_gaussian(ps.dim_a * ps.dim_b, rng);
    MatC w = m * m.adjoint();
    ps.shared_state = DensityMatrix{w / w.trace().real()};
    ps.povm_a.resize(static_cast<std::size_t>(ps.n_x_tuples()));
    for (auto& povm : ps.povm_a) povm = random_povm(ps.dim_a, ps.n_a_tuples(), rng);
    ps.povm_b.resize(static_cast<std::size_t>(ps.n_y_tuples()));
    for (auto& povm : ps.povm_b) povm = random_povm(ps.dim_b, ps.n_b_tuples(), rng);
    return ps;
}

namespace {

bool contains(std::span<const int> v, int x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

// Per-round question distributions under the conditioning
// (X_C = x_C or Y_C = y_C, round i question fixed, Omega elsewhere).
std::vector<std::vector<double>> round_question_dists(const ParallelStrategy& ps,
                                                      const SeedExtension& ext,
                                                      const DependencyBreaker& r, int question,
                                                      Party party) {
    const int n_q = party == Party::Alice ? ps.nx : ps.ny;
    const Eigen::MatrixXd& cond =
        party == Party::Alice ? ext.p_x_given_omega : ext.p_y_given_omega;
    const std::vector<int>& pinned = party == Party::Alice ? r.x_c : r.y_c;

    std::vector<std::vector<double>> rows(static_cast<std::size_t>(ps.n),
                                          std::vector<double>(static_cast<std::size_t>(n_q), 0));
    std::size_t omega_pos = 0;
    for (int j = 0; j < ps.n; ++j) {
        auto& row = rows[static_cast<std::size_t>(j)];
        if (j == r.i) {
            row[static_cast<std::size_t>(question)] = 1;
        } else if (auto it = std::find(r.subset_c.begin(), r.subset_c.end(), j);
                   it != r.subset_c.end()) {
            int q = pinned[static_cast<std::size_t>(it - r.subset_c.begin())];
            row[static_cast<std::size_t>(q)] = 1;
        } else {
            if (omega_pos >= r.omega_minus_i.size())
                throw std::invalid_argument("DependencyBreaker: too few omega values");
            int w = r.omega_minus_i[omega_pos++];
            if (ext.p_omega(w) <= 0)
                throw std::invalid_argument("omega_averaged_povm: zero-probability seed value");
            for (int q = 0; q < n_q; ++q) row[static_cast<std::size_t>(q)] = cond(w, q);
        }
    }
    if (omega_pos != r.omega_minus_i.size())
        throw std::invalid_argument("DependencyBreaker: too many omega values");
    return rows;
}

// Weight of a question tuple under per-round distributions.
double tuple_weight(const std::vector<std::vector<double>>& rows, std::span<const int> digits) {
    double w = 1;
    for (std::size_t j = 0; j < digits.size(); ++j)
        w *= rows[j][static_cast<std::size_t>(digits[j])];
    return w;
}

bool tuple_consistent(std::span<const int> digits, std::span<const int> subset,
                      std::span<const int> values) {
    for (std::size_t k = 0; k < subset.size(); ++k)
        if (digits[static_cast<std::size_t>(subset[k])] != values[k]) return false;
    return true;
}

}  // namespace

std::vector<MatC> coarse_povm(const ParallelStrategy& ps, int x_tuple,
                              std::span<const int> subset_c, Party party) {
    const auto& povm = party == Party::Alice ? ps.povm_a : ps.povm_b;
    const int n_ans = party == Party::Alice ? ps.na : ps.nb;
    const int dim = party == Party::Alice ? ps.dim_a : ps.dim_b;
    for (int c : subset_c)
        if (c < 0 || c >= ps.n) throw std::invalid_argument("coarse_povm: index out of range");

    const int n_coarse = static_cast<int>(std::pow(n_ans, subset_c.size()) + 0.5);
    std::vector<MatC> out(static_cast<std::size_t>(n_coarse), MatC::Zero(dim, dim));
    const auto& elements = povm.at(static_cast<std::size_t>(x_tuple));
    for (std::size_t at = 0; at < elements.size(); ++at) {
        auto digits = decode_tuple(static_cast<int>(at), n_ans, ps.n);
        int code = 0;
        for (int c : subset_c) code = code * n_ans + digits[static_cast<std::size_t>(c)];
        out[static_cast<std::size_t>(code)] += elements[at];
    }
    return out;
}

std::vector<MatC> omega_averaged_povm(const ParallelStrategy& ps, const SeedExtension& ext,
                                      const DependencyBreaker& r, int question, Party party) {
    auto rows = round_question_dists(ps, ext, r, question, party);
    const auto& povm = party == Party::Alice ? ps.povm_a : ps.povm_b;
    const int n_q = party == Party::Alice ? ps.nx : ps.ny;
    const int dim = party == Party::Alice ? ps.dim_a : ps.dim_b;
    const int n_ans_tuples = party == Party::Alice ? ps.n_a_tuples() : ps.n_b_tuples();
    const int n_q_tuples = party == Party::Alice ? ps.n_x_tuples() : ps.n_y_tuples();

    std::vector<MatC> out(static_cast<std::size_t>(n_ans_tuples), MatC::Zero(dim, dim));
    for (int qt = 0; qt < n_q_tuples; ++qt) {
        auto digits = decode_tuple(qt, n_q, ps.n);
        double w = tuple_weight(rows, digits);
        if (w == 0) continue;
        const auto& elements = povm[static_cast<std::size_t>(qt)];
        for (int at = 0; at < n_ans_tuples; ++at) out[static_cast<std::size_t>(at)] += w * elements[static_cast<std::size_t>(at)];
    }
    return out;
}

namespace {

// A_{w,x}(a_C): coarse-grain the omega-averaged POVM on the subset C.
MatC averaged_coarse(const ParallelStrategy& ps, const std::vector<MatC>& averaged,
                     const DependencyBreaker& r, Party party) {
    const int n_ans = party == Party::Alice ? ps.na : ps.nb;
    const int dim = party == Party::Alice ? ps.dim_a : ps.dim_b;
    const auto& values = party == Party::Alice ? r.a_c : r.b_c;
    MatC out = MatC::Zero(dim, dim);
    for (std::size_t at = 0; at < averaged.size(); ++at) {
        auto digits = decode_tuple(static_cast<int>(at), n_ans, ps.n);
        if (tuple_consistent(digits, r.subset_c, values)) out += averaged[at];
    }
    return out;
}

}  // namespace

PhiState phi_state(const ParallelStrategy& ps, const SeedExtension& ext,
                   const DependencyBreaker& r, int x, int y) {
    MatC a_c = averaged_coarse(ps, omega_averaged_povm(ps, ext, r, x, Party::Alice), r,
                               Party::Alice);
    MatC b_c = averaged_coarse(ps, omega_averaged_povm(ps, ext, r, y, Party::Bob), r, Party::Bob);
    MatC psi = purification_matrix(ps.shared_state);
    PhiState phi;
    phi.coeffs = kron(psd_sqrt(a_c), psd_sqrt(b_c)) * psi;
    phi.norm = phi.coeffs.norm();
    return phi;
}

Povm hat_povm(const ParallelStrategy& ps, const SeedExtension& ext, const DependencyBreaker& r,
              int question, Party party) {
    auto averaged = omega_averaged_povm(ps, ext, r, question, party);
    const int n_ans = party == Party::Alice ? ps.na : ps.nb;
    const int dim = party == Party::Alice ? ps.dim_a : ps.dim_b;
    const auto& values = party == Party::Alice ? r.a_c : r.b_c;

    MatC s = averaged_coarse(ps, averaged, r, party);
    MatC s_inv = psd_inv_sqrt(s);
    MatC proj = support_projector(s);

    Povm out;
    out.elements.assign(static_cast<std::size_t>(n_ans), MatC::Zero(dim, dim));
    for (std::size_t at = 0; at < averaged.size(); ++at) {
        auto digits = decode_tuple(static_cast<int>(at), n_ans, ps.n);
        if (!tuple_consistent(digits, r.subset_c, values)) continue;
        out.elements[static_cast<std::size_t>(digits[static_cast<std::size_t>(r.i)])] += averaged[at];
    }
    for (auto& e : out.elements) e = s_inv * e * s_inv;
    // Complete on the orthogonal complement of supp(A(a_C)); assigned to answer 0.
    out.elements[0] += MatC::Identity(dim, dim) - proj;
    return out;
}

namespace {

// Exhaustive conditional statistics given (r_{-i}, x, y): for every (a_i, b_i)
// the unnormalised Eve block and its trace P(a_C, b_C, a_i, b_i | ...).
struct ConditionalCensus {
    std::vector<MatC> eve_blocks;  // indexed a_i * nb + b_i
    std::vector<double> probs;
    double total = 0;  // P(a_C, b_C | omega_{-i}, x, y)
};

ConditionalCensus enumerate_conditionals(const ParallelStrategy& ps, const SeedExtension& ext,
                                         const DependencyBreaker& r, int x, int y) {
    auto rows_a = round_question_dists(ps, ext, r, x, Party::Alice);
    auto rows_b = round_question_dists(ps, ext, r, y, Party::Bob);
    MatC psi = purification_matrix(ps.shared_state);
    const int d_e = static_cast<int>(psi.cols());

    ConditionalCensus cen;
    cen.eve_blocks.assign(static_cast<std::size_t>(ps.na * ps.nb), MatC::Zero(d_e, d_e));
    cen.probs.assign(static_cast<std::size_t>(ps.na * ps.nb), 0.0);

    for (int xt = 0; xt < ps.n_x_tuples(); ++xt) {
        auto xd = decode_tuple(xt, ps.nx, ps.n);
        double wx = tuple_weight(rows_a, xd);
        if (wx == 0) continue;
        // Per round-i answer, the sum of elements consistent with (a_C, a_i).
        std::vector<MatC> sum_a(static_cast<std::size_t>(ps.na), MatC::Zero(ps.dim_a, ps.dim_a));
        for (int at = 0; at < ps.n_a_tuples(); ++at) {
            auto ad = decode_tuple(at, ps.na, ps.n);
            if (!tuple_consistent(ad, r.subset_c, r.a_c)) continue;
            sum_a[static_cast<std::size_t>(ad[static_cast<std::size_t>(r.i)])] +=
                ps.povm_a[static_cast<std::size_t>(xt)][static_cast<std::size_t>(at)];
        }
        for (int yt = 0; yt < ps.n_y_tuples(); ++yt) {
            auto yd = decode_tuple(yt, ps.ny, ps.n);
            double wy = tuple_weight(rows_b, yd);
            if (wy == 0) continue;
            std::vector<MatC> sum_b(static_cast<std::size_t>(ps.nb),
                                    MatC::Zero(ps.dim_b, ps.dim_b));
            for (int bt = 0; bt < ps.n_b_tuples(); ++bt) {
                auto bd = decode_tuple(bt, ps.nb, ps.n);
                if (!tuple_consistent(bd, r.subset_c, r.b_c)) continue;
                sum_b[static_cast<std::size_t>(bd[static_cast<std::size_t>(r.i)])] +=
                    ps.povm_b[static_cast<std::size_t>(yt)][static_cast<std::size_t>(bt)];
            }
            for (int a = 0; a < ps.na; ++a)
                for (int b = 0; b < ps.nb; ++b) {
                    MatC blk = wx * wy *
                               back_state_after(psi, kron(sum_a[static_cast<std::size_t>(a)],
                                                          sum_b[static_cast<std::size_t>(b)]));
                    int slot = a * ps.nb + b;
                    cen.eve_blocks[static_cast<std::size_t>(slot)] += blk;
                    double p = blk.trace().real();
                    cen.probs[static_cast<std::size_t>(slot)] += p;
                    cen.total += p;
                }
        }
    }
    return cen;
}

}  // namespace

double norm_identity_deviation(const ParallelStrategy& ps, const SeedExtension& ext,
                        const DependencyBreaker& r, int x, int y) {
    PhiState phi = phi_state(ps, ext, r, x, y);
    ConditionalCensus cen = enumerate_conditionals(ps, ext, r, x, y);
    return std::abs(phi.norm * phi.norm - cen.total);
}

std::optional<double> conditioned_state_identity_deviation(const ParallelStrategy& ps,
                                                           const SeedExtension& ext,
                                                           const DependencyBreaker& r, int x,
                                                           int y) {
    PhiState phi = phi_state(ps, ext, r, x, y);
    if (phi.norm * phi.norm < 1e-12) return std::nullopt;  // zero-probability conditioning
    MatC psi_tilde = phi.coeffs / phi.norm;

    Povm hat_a = hat_povm(ps, ext, r, x, Party::Alice);
    Povm hat_b = hat_povm(ps, ext, r, y, Party::Bob);
    ConditionalCensus cen = enumerate_conditionals(ps, ext, r, x, y);

    double worst = 0;
    for (int a = 0; a < ps.na; ++a)
        for (int b = 0; b < ps.nb; ++b) {
            MatC lhs = back_state_after(
                psi_tilde, kron(hat_a.elements[static_cast<std::size_t>(a)],
                                hat_b.elements[static_cast<std::size_t>(b)]));
            MatC rhs = cen.eve_blocks[static_cast<std::size_t>(a * ps.nb + b)] / cen.total;
            worst = std::max(worst, trace_norm(lhs - rhs));
        }
    return worst;
}

double theta_rho_distance(const ParallelStrategy& ps, const SeedExtension& ext,
                          std::span<const int> subset_c) {
    const int n = ps.n;
    std::vector<int> c_sorted(subset_c.begin(), subset_c.end());
    std::sort(c_sorted.begin(), c_sorted.end());
    const int n_omega = ext.n_omega();

    // Born probabilities coarse-grained to the answers on C.
    const int n_ac = static_cast<int>(std::pow(ps.na, c_sorted.size()) + 0.5);
    const int n_bc = static_cast<int>(std::pow(ps.nb, c_sorted.size()) + 0.5);
    std::vector<double> born_c(
        static_cast<std::size_t>(ps.n_x_tuples()) * ps.n_y_tuples() * n_ac * n_bc, 0.0);
    for (int xt = 0; xt < ps.n_x_tuples(); ++xt)
        for (int yt = 0; yt < ps.n_y_tuples(); ++yt)
            for (int at = 0; at < ps.n_a_tuples(); ++at) {
                auto ad = decode_tuple(at, ps.na, n);
                int ac = 0;
                for (int c : c_sorted) ac = ac * ps.na + ad[static_cast<std::size_t>(c)];
                for (int bt = 0; bt < ps.n_b_tuples(); ++bt) {
                    auto bd = decode_tuple(bt, ps.nb, n);
                    int bc = 0;
                    for (int c : c_sorted) bc = bc * ps.nb + bd[static_cast<std::size_t>(c)];
                    MatC op = kron(ps.povm_a[static_cast<std::size_t>(xt)][static_cast<std::size_t>(at)],
                                   ps.povm_b[static_cast<std::size_t>(yt)][static_cast<std::size_t>(bt)]);
                    double p = (op * ps.shared_state.mat).trace().real();
                    born_c[((static_cast<std::size_t>(xt) * ps.n_y_tuples() + yt) * n_ac + ac) * n_bc +
                           bc] += p;
                }
            }

    double avg = 0;
    int n_i = 0;
    for (int i = 0; i < n; ++i) {
        if (contains(c_sorted, i)) continue;
        ++n_i;
        // Joint distribution of (r_{-i}, x_i, y_i) by full enumeration.
        std::map<std::vector<int>, double> joint;
        std::map<std::vector<int>, double> marg_r;
        const int n_om_tuples = static_cast<int>(std::pow(n_omega, n) + 0.5);
        for (int ot = 0; ot < n_om_tuples; ++ot) {
            auto od = decode_tuple(ot, n_omega, n);
            double pw = 1;
            for (int j = 0; j < n; ++j) pw *= ext.p_omega(od[static_cast<std::size_t>(j)]);
            if (pw == 0) continue;
            for (int xt = 0; xt < ps.n_x_tuples(); ++xt) {
                auto xd = decode_tuple(xt, ps.nx, n);
                double px = pw;
                for (int j = 0; j < n; ++j)
                    px *= ext.p_x_given_omega(od[static_cast<std::size_t>(j)], xd[static_cast<std::size_t>(j)]);
                if (px == 0) continue;
                for (int yt = 0; yt < ps.n_y_tuples(); ++yt) {
                    auto yd = decode_tuple(yt, ps.ny, n);
                    double pxy = px;
                    for (int j = 0; j < n; ++j)
                        pxy *= ext.p_y_given_omega(od[static_cast<std::size_t>(j)], yd[static_cast<std::size_t>(j)]);
                    if (pxy == 0) continue;
                    for (int ac = 0; ac < n_ac; ++ac)
                        for (int bc = 0; bc < n_bc; ++bc) {
                            double p = pxy *
                                       born_c[((static_cast<std::size_t>(xt) * ps.n_y_tuples() + yt) * n_ac +
                                               ac) * n_bc + bc];
                            if (p == 0) continue;
                            std::vector<int> r_key;
                            for (int j = 0; j < n; ++j)
                                if (j != i && !contains(c_sorted, j))
                                    r_key.push_back(od[static_cast<std::size_t>(j)]);
                            for (int c : c_sorted) r_key.push_back(xd[static_cast<std::size_t>(c)]);
                            for (int c : c_sorted) r_key.push_back(yd[static_cast<std::size_t>(c)]);
                            r_key.push_back(ac);
                            r_key.push_back(bc);
                            marg_r[r_key] += p;
                            r_key.push_back(xd[static_cast<std::size_t>(i)]);
                            r_key.push_back(yd[static_cast<std::size_t>(i)]);
                            joint[std::move(r_key)] += p;
                        }
                }
            }
        }
        double dist = 0;
        for (const auto& [r_key, pr] : marg_r) {
            for (int x = 0; x < ps.nx; ++x)
                for (int y = 0; y < ps.ny; ++y) {
                    std::vector<int> full = r_key;
                    full.push_back(x);
                    full.push_back(y);
                    auto it = joint.find(full);
                    double pj = it == joint.end() ? 0.0 : it->second;
                    double pxy = 0;
                    for (int w = 0; w < n_omega; ++w)
                        pxy += ext.p_omega(w) * ext.p_x_given_omega(w, x) * ext.p_y_given_omega(w, y);
                    dist += std::abs(pr * pxy - pj);
                }
        }
        avg += dist;
    }
    if (n_i == 0) throw std::invalid_argument("theta_rho_distance: C covers every round");
    return avg / n_i;
}

namespace {

// tr_front[(K (x) I_back) rho] for a mixed state on front (x) back.
MatC back_state_after_mixed(const MatC& rho, const MatC& k_front, int dim_front, int dim_back) {
    MatC out = MatC::Zero(dim_back, dim_back);
    for (int i = 0; i < dim_front; ++i)
        for (int ip = 0; ip < dim_front; ++ip) {
            Cplx k = k_front(i, ip);
            if (k == Cplx(0, 0)) continue;
            out += k * rho.block(ip * dim_back, i * dim_back, dim_back, dim_back);
        }
    return out;
}

}  // namespace

double markov_chain_cmi(const ParallelStrategy& ps, const SeedExtension& ext,
                        const DensityMatrix& rho0_ea_e) {
    if (ps.n != 2) throw std::invalid_argument("markov_chain_cmi: defined for n = 2");
    const int d_e = rho0_ea_e.dim() / ps.dim_a;
    if (d_e * ps.dim_a != rho0_ea_e.dim())
        throw std::invalid_argument("markov_chain_cmi: rho0 dimension mismatch");
    const int n_omega = ext.n_omega();
    const int n_at = ps.n_a_tuples();

    double cmi = 0;
    for (int x1 = 0; x1 < ps.nx; ++x1) {
        // Unnormalised blocks U(w1, w2, a) on E for this x1, X2 marginalised.
        std::vector<MatC> blocks(static_cast<std::size_t>(n_omega) * n_omega * n_at,
                                 MatC::Zero(d_e, d_e));
        double px1 = 0;
        for (int w1 = 0; w1 < n_omega; ++w1) {
            double p1 = ext.p_omega(w1) * ext.p_x_given_omega(w1, x1);
            if (p1 == 0) continue;
            for (int w2 = 0; w2 < n_omega; ++w2) {
                double p12 = p1 * ext.p_omega(w2);
                if (p12 == 0) continue;
                for (int x2 = 0; x2 < ps.nx; ++x2) {
                    double p = p12 * ext.p_x_given_omega(w2, x2);
                    if (p == 0) continue;
                    int xt = x1 * ps.nx + x2;
                    for (int at = 0; at < n_at; ++at)
                        blocks[(static_cast<std::size_t>(w1) * n_omega + w2) * n_at + at] +=
                            p * back_state_after_mixed(
                                    rho0_ea_e.mat,
                                    ps.povm_a[static_cast<std::size_t>(xt)][static_cast<std::size_t>(at)],
                                    ps.dim_a, d_e);
                }
            }
        }
        std::vector<double> spec_all, w1_weights(static_cast<std::size_t>(n_omega), 0.0);
        std::vector<MatC> w2a_blocks(static_cast<std::size_t>(n_omega) * n_at,
                                     MatC::Zero(d_e, d_e));
        for (int w1 = 0; w1 < n_omega; ++w1)
            for (int w2 = 0; w2 < n_omega; ++w2)
                for (int at = 0; at < n_at; ++at) {
                    const MatC& blk =
                        blocks[(static_cast<std::size_t>(w1) * n_omega + w2) * n_at + at];
                    double tr = blk.trace().real();
                    px1 += tr;
                    w1_weights[static_cast<std::size_t>(w1)] += tr;
                    w2a_blocks[static_cast<std::size_t>(w2) * n_at + at] += blk;
                    Eigen::SelfAdjointEigenSolver<MatC> es(blk, Eigen::EigenvaluesOnly);
                    for (int k = 0; k < es.eigenvalues().size(); ++k)
                        spec_all.push_back(es.eigenvalues()(k));
                }
        if (px1 <= 0) continue;
        // Normalise spectra by p(x1) and weight the conditional entropies.
        auto h_of = [&](std::vector<double>& spec) {
            for (double& v : spec) v /= px1;
            return shannon_bits(spec);
        };
        std::vector<double> spec_w2a;
        for (const auto& blk : w2a_blocks) {
            Eigen::SelfAdjointEigenSolver<MatC> es(blk, Eigen::EigenvaluesOnly);
            for (int k = 0; k < es.eigenvalues().size(); ++k) spec_w2a.push_back(es.eigenvalues()(k));
        }
        double h_joint = h_of(spec_all);
        double h_w2a = h_of(spec_w2a);
        double h_w1 = h_of(w1_weights);
        cmi += px1 * (h_w1 + h_w2a - h_joint);
    }
    return cmi;
}

IdentityReport identity_sweep(const GameSpec& game, const SeedExtension& ext, int n_rounds,
                              int n_cases, std::uint64_t seed, Exec exec) {
    if (n_rounds < 2 || n_rounds > 3)
        throw std::invalid_argument("identity_sweep: n_rounds must be 2 or 3");
    std::vector<IdentityReport> per_case(static_cast<std::size_t>(n_cases));
    Rng base(seed);

    parallel_for(exec, n_cases, [&](std::int64_t case_idx) {
        Rng rng = base.fork(static_cast<std::uint64_t>(case_idx));
        ParallelStrategy ps;
        switch (case_idx % 3) {
            case 0: {
                Strategy s = honest_strategy(0.05, 0.05, 0.05 * rng.uniform());
                ps = product_strategy(game, s, n_rounds);
                break;
            }
            case 1: {
                Strategy s = perturbed_honest_strategy(0.05, 0.05, 0.1 * rng.uniform(), 0.3, rng);
                ps = product_strategy(game, s, n_rounds);
                break;
            }
            default:
                ps = random_parallel_strategy(game, n_rounds, rng);
        }
        IdentityReport rep;
        rep.cases = 1;
        for (const auto& povm : ps.povm_a)
            rep.max_povm_completeness =
                std::max(rep.max_povm_completeness, Povm{povm}.completeness_deviation());
        for (const auto& povm : ps.povm_b)
            rep.max_povm_completeness =
                std::max(rep.max_povm_completeness, Povm{povm}.completeness_deviation());

        // Positive-probability question pairs of the single-round game.
        std::vector<std::pair<int, int>> pos_pairs;
        for (int x = 0; x < game.nx(); ++x)
            for (int y = 0; y < game.ny(); ++y)
                if (game.prob(x, y) > 0) pos_pairs.emplace_back(x, y);

        // Enumerate every (C, i, r, x, y) with nonzero probability for
        // |C| <= 1. At n = 2 this is the complete set of dependency breakers;
        // at n = 3 the per-config cost forces a seeded subsample.
        struct Config {
            DependencyBreaker r;
            int x, y;
        };
        std::vector<Config> configs;
        for (int i = 0; i < n_rounds; ++i) {
            DependencyBreaker r;
            r.i = i;
            const int n_free = n_rounds - 1;
            const int n_om = static_cast<int>(std::pow(ext.n_omega(), n_free) + 0.5);
            for (int ot = 0; ot < n_om; ++ot) {
                r.omega_minus_i = decode_tuple(ot, ext.n_omega(), n_free);
                bool positive = true;
                for (int w : r.omega_minus_i) positive = positive && ext.p_omega(w) > 0;
                if (!positive) continue;
                for (auto [x, y] : pos_pairs) configs.push_back({r, x, y});
            }
        }
        for (int c = 0; c < n_rounds; ++c)
            for (int i = 0; i < n_rounds; ++i) {
                if (i == c) continue;
                const int n_free = n_rounds - 2;
                const int n_om = static_cast<int>(std::pow(ext.n_omega(), n_free) + 0.5);
                for (int ot = 0; ot < n_om; ++ot) {
                    DependencyBreaker r;
                    r.subset_c = {c};
                    r.i = i;
                    r.omega_minus_i = decode_tuple(ot, ext.n_omega(), n_free);
                    bool positive = true;
                    for (int w : r.omega_minus_i) positive = positive && ext.p_omega(w) > 0;
                    if (!positive) continue;
                    for (auto [xc, yc] : pos_pairs) {
                        r.x_c = {xc};
                        r.y_c = {yc};
                        for (int ac = 0; ac < game.na(); ++ac)
                            for (int bc = 0; bc < game.nb(); ++bc) {
                                r.a_c = {ac};
                                r.b_c = {bc};
                                for (auto [x, y] : pos_pairs) configs.push_back({r, x, y});
                            }
                    }
                }
            }
        if (n_rounds == 3 && configs.size() > 24) {
            std::vector<Config> sampled;
            for (int k = 0; k < 24; ++k)
                sampled.push_back(configs[static_cast<std::size_t>(
                    rng.below(static_cast<std::int64_t>(configs.size())))]);
            configs = std::move(sampled);
        }

        for (const auto& cfg : configs) {
            ++rep.configs;
            rep.max_norm_identity =
                std::max(rep.max_norm_identity, norm_identity_deviation(ps, ext, cfg.r, cfg.x, cfg.y));
            auto dev = conditioned_state_identity_deviation(ps, ext, cfg.r, cfg.x, cfg.y);
            if (dev) {
                rep.max_conditioned_state = std::max(rep.max_conditioned_state, *dev);
                rep.max_hat_completeness = std::max(
                    rep.max_hat_completeness,
                    std::max(hat_povm(ps, ext, cfg.r, cfg.x, Party::Alice).completeness_deviation(),
                             hat_povm(ps, ext, cfg.r, cfg.y, Party::Bob).completeness_deviation()));
            } else {
                ++rep.skipped_zero_prob;
            }
        }

        // Theta/rho distances and (n = 2) the Markov-chain CMI.
        std::vector<std::vector<int>> c_sets;
        c_sets.push_back({});
        for (int c = 0; c < n_rounds; ++c) c_sets.push_back({c});
        double sum_tr = 0;
        for (const auto& cs : c_sets) {
            double d = theta_rho_distance(ps, ext, cs);
            rep.max_theta_rho = std::max(rep.max_theta_rho, d);
            sum_tr += d;
        }
        rep.mean_theta_rho = sum_tr / static_cast<double>(c_sets.size());
        if (n_rounds == 2) {
            MatC m = random_gaussian(ps.dim_a * 4, rng);
            MatC w = m * m.adjoint();
            rep.max_markov_cmi =
                std::abs(markov_chain_cmi(ps, ext, DensityMatrix{w / w.trace().real()}));
        }
        per_case[static_cast<std::size_t>(case_idx)] = rep;
    });

    IdentityReport total;
    for (const auto& rep : per_case) {
        total.cases += rep.cases;
        total.configs += rep.configs;
        total.skipped_zero_prob += rep.skipped_zero_prob;
        total.max_norm_identity = std::max(total.max_norm_identity, rep.max_norm_identity);
        total.max_conditioned_state = std::max(total.max_conditioned_state, rep.max_conditioned_state);
        total.max_hat_completeness = std::max(total.max_hat_completeness, rep.max_hat_completeness);
        total.max_povm_completeness = std::max(total.max_povm_completeness, rep.max_povm_completeness);
        total.max_markov_cmi = std::max(total.max_markov_cmi, rep.max_markov_cmi);
        total.max_theta_rho = std::max(total.max_theta_rho, rep.max_theta_rho);
        total.mean_theta_rho += rep.mean_theta_rho;
    }
    if (n_cases > 0) total.mean_theta_rho /= static_cast<double>(n_cases);
    return total;
}

}  // namespace parqkd
