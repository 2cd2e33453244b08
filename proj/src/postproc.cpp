#include "parqkd/postproc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "parqkd/entropy.hpp"

namespace parqkd {

std::string bits_to_hex(const Bits& bits) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    const std::size_t n_bytes = (bits.size() + 7) / 8;
    for (std::size_t byte = 0; byte < n_bytes; ++byte) {
        unsigned v = 0;
        for (int k = 0; k < 8; ++k) {
            std::size_t idx = byte * 8 + k;
            v = (v << 1) | (idx < bits.size() ? (bits[idx] & 1) : 0);
        }
        out.push_back(digits[v >> 4]);
        out.push_back(digits[v & 0xF]);
    }
    return out;
}

ToeplitzHash ToeplitzHash::random(int rows, int cols, Rng& rng) {
    if (rows < 0 || cols <= 0) throw std::invalid_argument("ToeplitzHash: bad shape");
    ToeplitzHash h;
    h.rows = rows;
    h.cols = cols;
    h.seed_bits.resize(static_cast<std::size_t>(std::max(rows + cols - 1, 0)));
    for (auto& b : h.seed_bits) b = static_cast<std::uint8_t>(rng.next() & 1);
    return h;
}

Bits ToeplitzHash::apply(const Bits& input) const {
    if (static_cast<int>(input.size()) != cols)
        throw std::invalid_argument("ToeplitzHash::apply: input length mismatch");
    Bits out(static_cast<std::size_t>(rows), 0);
    for (int i = 0; i < rows; ++i) {
        unsigned acc = 0;
        for (int j = 0; j < cols; ++j)
            acc ^= static_cast<unsigned>(seed_bits[static_cast<std::size_t>(i - j + cols - 1)] &
                                         input[static_cast<std::size_t>(j)]);
        out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(acc & 1);
    }
    return out;
}

std::int64_t toeplitz_max_kernel_count(int rows, int cols, Exec exec) {
    if (rows <= 0 || cols <= 0 || rows + cols - 1 > 62)
        throw std::invalid_argument("toeplitz_max_kernel_count: shape too large for enumeration");
    const std::int64_t n_seeds = 1LL << (rows + cols - 1);
    const std::uint64_t col_mask = (1ULL << cols) - 1;
    const std::int64_t n_d = (1LL << cols) - 1;

    // T_s d = 0 iff parity((s >> i) & rev(d)) = 0 for every row i, where rev
    // reverses the low `cols` bits (row i of T_s reads seed bits
    // i+cols-1 .. i in descending order).
    std::vector<std::int64_t> counts(static_cast<std::size_t>(n_d), 0);
    parallel_for(exec, n_d, [&](std::int64_t di) {
        std::uint64_t d = static_cast<std::uint64_t>(di + 1);
        std::uint64_t rev = 0;
        for (int j = 0; j < cols; ++j)
            if (d & (1ULL << j)) rev |= 1ULL << (cols - 1 - j);
        std::int64_t c = 0;
        for (std::int64_t s = 0; s < n_seeds; ++s) {
            bool zero = true;
            for (int i = 0; i < rows && zero; ++i)
                zero = (std::popcount((static_cast<std::uint64_t>(s) >> i) & col_mask & rev) & 1) == 0;
            if (zero) ++c;
        }
        counts[static_cast<std::size_t>(di)] = c;
    });
    return *std::max_element(counts.begin(), counts.end());
}

namespace {

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32_be(const std::vector<std::uint8_t>& in, std::size_t& pos) {
    if (pos + 4 > in.size()) throw std::invalid_argument("IrMessage: truncated record");
    std::uint32_t v = (static_cast<std::uint32_t>(in[pos]) << 24) |
                      (static_cast<std::uint32_t>(in[pos + 1]) << 16) |
                      (static_cast<std::uint32_t>(in[pos + 2]) << 8) |
                      static_cast<std::uint32_t>(in[pos + 3]);
    pos += 4;
    return v;
}

std::vector<std::uint8_t> pack_bits(const Bits& bits) {
    std::vector<std::uint8_t> bytes((bits.size() + 7) / 8, 0);
    for (std::size_t k = 0; k < bits.size(); ++k)
        if (bits[k]) bytes[k / 8] |= static_cast<std::uint8_t>(0x80 >> (k % 8));
    return bytes;
}

Bits unpack_bits(const std::vector<std::uint8_t>& bytes, std::size_t n_bits, std::size_t& pos) {
    std::size_t n_bytes = (n_bits + 7) / 8;
    if (pos + n_bytes > bytes.size()) throw std::invalid_argument("IrMessage: truncated field");
    Bits bits(n_bits, 0);
    for (std::size_t k = 0; k < n_bits; ++k)
        bits[k] = (bytes[pos + k / 8] >> (7 - k % 8)) & 1;
    pos += n_bytes;
    return bits;
}

}  // namespace

std::vector<std::uint8_t> IrMessage::to_bytes() const {
    std::vector<std::uint8_t> out;
    put_u32_be(out, static_cast<std::uint32_t>(syndrome.size()));
    auto sb = pack_bits(syndrome);
    out.insert(out.end(), sb.begin(), sb.end());
    put_u32_be(out, static_cast<std::uint32_t>(tag.size()));
    auto tb = pack_bits(tag);
    out.insert(out.end(), tb.begin(), tb.end());
    put_u32_be(out, 64);
    for (int k = 7; k >= 0; --k) out.push_back(static_cast<std::uint8_t>(code_seed >> (8 * k)));
    return out;
}

IrMessage IrMessage::from_bytes(const std::vector<std::uint8_t>& bytes) {
    IrMessage m;
    std::size_t pos = 0;
    std::uint32_t n_syn = get_u32_be(bytes, pos);
    m.syndrome = unpack_bits(bytes, n_syn, pos);
    std::uint32_t n_tag = get_u32_be(bytes, pos);
    m.tag = unpack_bits(bytes, n_tag, pos);
    if (get_u32_be(bytes, pos) != 64) throw std::invalid_argument("IrMessage: bad seed length");
    if (pos + 8 > bytes.size()) throw std::invalid_argument("IrMessage: truncated seed");
    m.code_seed = 0;
    for (int k = 0; k < 8; ++k) m.code_seed = (m.code_seed << 8) | bytes[pos + k];
    return m;
}

namespace {

using Word = std::uint64_t;

struct Syndrome {
    std::vector<Word> words;
    bool is_zero() const {
        for (Word w : words)
            if (w) return false;
        return true;
    }
    void flip_with(const Syndrome& col) {
        for (std::size_t k = 0; k < words.size(); ++k) words[k] ^= col.words[k];
    }
    int weight() const {
        int w = 0;
        for (Word x : words) w += std::popcount(x);
        return w;
    }
    bool operator==(const Syndrome&) const = default;
};

// Lexicographic depth-first search for an error pattern of weight <= max_w
// whose syndrome matches `target`; lowest weight wins, ties broken by first
// combination found.
bool find_error(const std::vector<Syndrome>& cols, const Syndrome& target, int max_w,
                Bits& error) {
    const int t = static_cast<int>(cols.size());
    std::vector<int> chosen;
    Syndrome acc{std::vector<Word>(target.words.size(), 0)};

    std::function<bool(int, int)> dfs = [&](int start, int remaining) -> bool {
        if (remaining == 0) return acc == target;
        for (int c = start; c <= t - remaining; ++c) {
            acc.flip_with(cols[static_cast<std::size_t>(c)]);
            chosen.push_back(c);
            if (dfs(c + 1, remaining - 1)) return true;
            chosen.pop_back();
            acc.flip_with(cols[static_cast<std::size_t>(c)]);
        }
        return false;
    };

    for (int w = 0; w <= max_w; ++w) {
        chosen.clear();
        if (dfs(0, w)) {
            error.assign(static_cast<std::size_t>(t), 0);
            for (int c : chosen) error[static_cast<std::size_t>(c)] = 1;
            return true;
        }
    }
    return false;
}

// Greedy bit-flip decoder for lengths beyond exhaustive reach: repeatedly
// flips the single bit that most reduces the residual syndrome weight.
bool greedy_bitflip(const std::vector<Syndrome>& cols, Syndrome residual, int max_flips,
                    Bits& error) {
    const int t = static_cast<int>(cols.size());
    error.assign(static_cast<std::size_t>(t), 0);
    for (int step = 0; step < max_flips && !residual.is_zero(); ++step) {
        int best_c = -1, best_w = residual.weight();
        for (int c = 0; c < t; ++c) {
            Syndrome trial = residual;
            trial.flip_with(cols[static_cast<std::size_t>(c)]);
            int w = trial.weight();
            if (w < best_w) {
                best_w = w;
                best_c = c;
            }
        }
        if (best_c < 0) return false;  // stuck
        residual.flip_with(cols[static_cast<std::size_t>(best_c)]);
        error[static_cast<std::size_t>(best_c)] ^= 1;
    }
    return residual.is_zero();
}

}  // namespace

IrResult ir_reconcile(const Bits& a_key, const Bits& b_key, double rate_budget_bits,
                      std::uint64_t code_seed, double nu, double alpha, double delta1,
                      int tag_bits) {
    if (a_key.size() != b_key.size())
        throw std::invalid_argument("ir_reconcile: key length mismatch");
    if (!(rate_budget_bits >= 0))
        throw std::invalid_argument("ir_reconcile: budget must be nonnegative");
    const int t = static_cast<int>(a_key.size());
    const int m = std::min(static_cast<int>(std::ceil(rate_budget_bits)), t);
    const int n_words = (m + 63) / 64;

    // Random code and validation-tag hash, both expanded from the public seed.
    Rng rng(code_seed);
    std::vector<Syndrome> cols(static_cast<std::size_t>(t),
                               Syndrome{std::vector<Word>(static_cast<std::size_t>(n_words), 0)});
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < t; ++c)
            if (rng.next() & 1)
                cols[static_cast<std::size_t>(c)].words[static_cast<std::size_t>(r / 64)] ^=
                    Word(1) << (r % 64);
    ToeplitzHash tag_hash = ToeplitzHash::random(tag_bits, t, rng);

    auto syndrome_of = [&](const Bits& key) {
        Syndrome s{std::vector<Word>(static_cast<std::size_t>(n_words), 0)};
        for (int c = 0; c < t; ++c)
            if (key[static_cast<std::size_t>(c)]) s.flip_with(cols[static_cast<std::size_t>(c)]);
        return s;
    };

    IrResult res;
    res.message.code_seed = code_seed;
    res.message.tag = tag_hash.apply(a_key);
    Syndrome sa = syndrome_of(a_key);
    res.message.syndrome.assign(static_cast<std::size_t>(m), 0);
    for (int r = 0; r < m; ++r)
        res.message.syndrome[static_cast<std::size_t>(r)] =
            static_cast<std::uint8_t>((sa.words[static_cast<std::size_t>(r / 64)] >> (r % 64)) & 1);
    res.leak_bits = m + tag_bits;

    // Bob's side: decode the syndrome difference.
    Syndrome diff = syndrome_of(b_key);
    diff.flip_with(sa);
    Bits error;
    bool decoded;
    if (t <= 24) {
        decoded = find_error(cols, diff, t, error);
    } else {
        int radius =
            static_cast<int>(std::ceil(2 * (nu + alpha + delta1) * static_cast<double>(t))) + 2;
        decoded = greedy_bitflip(cols, diff, std::min(radius, t), error);
    }
    if (!decoded) {
        res.outcome = IrOutcome::ValidationFail;
        return res;
    }
    res.b_corrected = b_key;
    for (int c = 0; c < t; ++c) res.b_corrected[static_cast<std::size_t>(c)] ^= error[static_cast<std::size_t>(c)];
    res.outcome = (tag_hash.apply(res.b_corrected) == res.message.tag) ? IrOutcome::Ok
                                                                       : IrOutcome::ValidationFail;
    return res;
}

Bits privacy_amplify(const Bits& raw, double hmin_bound, double eps_pa, Rng& rng,
                     ToeplitzHash* used) {
    const std::int64_t out_len = pa_output_length(std::max(hmin_bound, 0.0), eps_pa);
    ToeplitzHash h = ToeplitzHash::random(static_cast<int>(out_len),
                                          static_cast<int>(raw.size()), rng);
    if (used) *used = h;
    if (out_len == 0) return {};
    return h.apply(raw);
}

LhlResult leftover_hash_exact_test(const Eigen::MatrixXd& p_ae, int in_bits, int out_bits,
                                   Exec exec) {
    if (in_bits < 1 || in_bits > 12)
        throw std::invalid_argument("leftover_hash_exact_test: in_bits must be in [1,12]");
    if (out_bits < 0 || out_bits > in_bits)
        throw std::invalid_argument("leftover_hash_exact_test: out_bits must be in [0,in_bits]");
    const std::int64_t n_a = 1LL << in_bits;
    if (p_ae.rows() != n_a) throw std::invalid_argument("leftover_hash_exact_test: row count");
    const int n_e = static_cast<int>(p_ae.cols());

    Eigen::VectorXd p_e = p_ae.colwise().sum();
    double total = p_e.sum();
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("leftover_hash_exact_test: distribution must sum to 1");

    double hmin_arg = 0;
    for (int e = 0; e < n_e; ++e) hmin_arg += p_ae.col(e).maxCoeff();
    LhlResult res;
    res.hmin = -std::log2(hmin_arg);
    res.bound = std::pow(2.0, (static_cast<double>(out_bits) - res.hmin) / 2);
    if (out_bits == 0) {  // |Z| = 1: the output register is trivially uniform
        res.distance = 0;
        return res;
    }

    const int seed_bits = out_bits + in_bits - 1;
    const std::int64_t n_seeds = 1LL << seed_bits;
    const std::int64_t n_z = 1LL << out_bits;
    const std::uint64_t col_mask = (1ULL << in_bits) - 1;
    const double tau = 1.0 / static_cast<double>(n_z);

    // Per-seed distances computed independently, then summed in seed order so
    // serial and parallel runs agree bitwise.
    std::vector<double> per_seed(static_cast<std::size_t>(n_seeds), 0.0);
    parallel_for(exec, n_seeds, [&](std::int64_t f) {
        std::uint64_t rows[12];
        for (int i = 0; i < out_bits; ++i) {
            // row i reads seed bits i+in_bits-1 .. i, reversed into column order
            std::uint64_t w = (static_cast<std::uint64_t>(f) >> i) & col_mask;
            std::uint64_t rev = 0;
            for (int j = 0; j < in_bits; ++j)
                if (w & (1ULL << j)) rev |= 1ULL << (in_bits - 1 - j);
            rows[i] = rev;
        }
        Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n_z, n_e);
        for (std::int64_t a = 0; a < n_a; ++a) {
            std::int64_t z = 0;
            for (int i = 0; i < out_bits; ++i)
                z |= static_cast<std::int64_t>(
                         std::popcount(rows[i] & static_cast<std::uint64_t>(a)) & 1)
                     << i;
            for (int e = 0; e < n_e; ++e) q(z, e) += p_ae(a, e);
        }
        double d = 0;
        for (std::int64_t z = 0; z < n_z; ++z)
            for (int e = 0; e < n_e; ++e) d += std::abs(q(z, e) - tau * p_e(e));
        per_seed[static_cast<std::size_t>(f)] = 0.5 * d;
    });
    double sum = 0;
    for (double d : per_seed) sum += d;
    res.distance = sum / static_cast<double>(n_seeds);
    return res;
}

}  // namespace parqkd
