#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "parqkd/exec.hpp"
#include "parqkd/rng.hpp"

namespace parqkd {

using Bits = std::vector<std::uint8_t>;  // one bit per entry, values 0/1

std::string bits_to_hex(const Bits& bits);  // MSB-first packing, lowercase

// Toeplitz matrix over GF(2) defined by rows + cols - 1 seed bits:
// T(i, j) = seed[i - j + cols - 1]. The family is exactly 2^-rows universal.
struct ToeplitzHash {
    int rows = 0, cols = 0;
    Bits seed_bits;  // length rows + cols - 1

    static ToeplitzHash random(int rows, int cols, Rng& rng);
    Bits apply(const Bits& input) const;  // throws on length mismatch
};

// Largest kernel over seeds: max over nonzero d of #{seeds : T_seed d = 0}.
// 2-universality of the family is equivalent to this being at most
// 2^(rows + cols - 1 - rows) = 2^(cols - 1).
std::int64_t toeplitz_max_kernel_count(int rows, int cols, Exec exec = Exec::Serial);

// One-way information-reconciliation message: syndrome of a random binary
// linear code plus a validation tag, framed as length-prefixed byte records
// (u32 lengths, big-endian).
struct IrMessage {
    Bits syndrome;
    Bits tag;
    std::uint64_t code_seed = 0;

    std::vector<std::uint8_t> to_bytes() const;
    static IrMessage from_bytes(const std::vector<std::uint8_t>& bytes);
};

enum class IrOutcome { Ok, ValidationFail };

struct IrResult {
    IrOutcome outcome = IrOutcome::ValidationFail;
    Bits b_corrected;
    std::int64_t leak_bits = 0;  // syndrome rows + tag bits
    IrMessage message;
};

inline constexpr int kValidationTagBits = 64;

// Alice sends the syndrome of a random m-row code (m = min(ceil(budget), t))
// and a validation tag; Bob searches for the lowest-weight error pattern
// consistent with the syndrome difference, exhaustively when t <= 24 and up
// to radius ceil(2(nu+alpha+delta1) t) + 2 otherwise. Decode failure or a tag
// mismatch yields ValidationFail. `tag_bits` is overridable for empirical
// tag-collision tests only.
IrResult ir_reconcile(const Bits& a_key, const Bits& b_key, double rate_budget_bits,
                      std::uint64_t code_seed, double nu, double alpha, double delta1,
                      int tag_bits = kValidationTagBits);

// Toeplitz extraction at the leftover-hashing output length
// floor(hmin_bound - 2 log2(1/eps_pa)); empty when that is not positive. The
// hash actually used is written to *used when non-null (Bob must apply the
// same one).
Bits privacy_amplify(const Bits& raw, double hmin_bound, double eps_pa, Rng& rng,
                     ToeplitzHash* used = nullptr);

struct LhlResult {
    double distance;  // exact (1/2)||rho_ZEF - tau_Z (x) rho_EF||_1
    double bound;     // 2^((out_bits - hmin)/2), the eps = 0 extraction bound
    double hmin;      // -log2 sum_e max_a p(a, e)
};

// Exhaustive leftover-hashing check for classical side information: p_ae is
// the joint distribution of an in_bits-bit string A (row index) and side
// information E (column index); enumerates every Toeplitz seed. Feasible up
// to in_bits = 12.
LhlResult leftover_hash_exact_test(const Eigen::MatrixXd& p_ae, int in_bits, int out_bits,
                                   Exec exec = Exec::Serial);

}  // namespace parqkd
