// Timing comparison of the OpenMP kernels against their serial reference
// implementations. Outputs are checked for equality, so this doubles as a
// smoke test of the parallel paths.
//
//   ./parqkd_bench [repeats]

#include <chrono>
#include <cstdio>
#include <string>

#include "parqkd/games.hpp"
#include "parqkd/parrep.hpp"
#include "parqkd/postproc.hpp"
#include "parqkd/protocol.hpp"

using namespace parqkd;
namespace chrono = std::chrono;

namespace {

template <typename Fn>
double time_ms(int repeats, const Fn& fn) {
    auto t0 = chrono::steady_clock::now();
    for (int k = 0; k < repeats; ++k) fn();
    auto t1 = chrono::steady_clock::now();
    return chrono::duration_cast<chrono::duration<double, std::milli>>(t1 - t0).count() / repeats;
}

void report(const char* name, double serial_ms, double parallel_ms, bool equal) {
    std::printf("%-28s serial %9.2f ms   openmp %9.2f ms   speedup %5.2fx   %s\n", name,
                serial_ms, parallel_ms, serial_ms / parallel_ms, equal ? "outputs equal" : "OUTPUTS DIFFER");
}

}  // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::stoi(argv[1]) : 3;

    {
        // Large deterministic-strategy search: 3CHSH with a widened answer
        // alphabet pushes the pair count near the 1e6 cap.
        GameSpec g = anchor(chsh3_spec(0.05), 0.05);
        g.answers_a = {"0", "1", "2", "3", "4", "5"};
        g.answers_b = {"0", "1", "2", "3", "4"};
        g.predicate.assign(static_cast<std::size_t>(g.nx()) * g.ny() * g.na() * g.nb(), 0);
        for (int x = 0; x < g.nx(); ++x)
            for (int y = 0; y < g.ny(); ++y)
                for (int a = 0; a < g.na(); ++a)
                    for (int b = 0; b < g.nb(); ++b)
                        g.predicate[((static_cast<std::size_t>(x) * g.ny() + y) * g.na() + a) *
                                        g.nb() + b] = static_cast<std::uint8_t>((a ^ b ^ x ^ y) % 3 == 0);
        double vs = 0, vp = 0;
        double ts = time_ms(repeats, [&] { vs = classical_value(g, Exec::Serial); });
        double tp = time_ms(repeats, [&] { vp = classical_value(g, Exec::Parallel); });
        report("classical_value (216x625)", ts, tp, vs == vp);
    }
    {
        ProtocolParams p;
        p.n = 20000;
        p.omega_th = ProtocolParams::omega_th_at(p.alpha, p.nu, 0.5);
        Strategy s = honest_strategy(p.nu, p.alpha, p.q_noise);
        std::vector<RunResult> rs, rp;
        double ts = time_ms(repeats, [&] { rs = run_trials(p, s, 64, Exec::Serial); });
        double tp = time_ms(repeats, [&] { rp = run_trials(p, s, 64, Exec::Parallel); });
        bool equal = rs.size() == rp.size();
        for (std::size_t k = 0; equal && k < rs.size(); ++k)
            equal = rs[k].transcript.a == rp[k].transcript.a &&
                    rs[k].transcript.final_key_hex == rp[k].transcript.final_key_hex;
        report("protocol trials (64x20k)", ts, tp, equal);
    }
    {
        GameSpec g = anchor(chsh3_spec(0.05), 0.05);
        SeedExtension ext = holenstein_seed_extension(g);
        IdentityReport a, b;
        double ts = time_ms(repeats, [&] { a = identity_sweep(g, ext, 2, 6, 11, Exec::Serial); });
        double tp = time_ms(repeats, [&] { b = identity_sweep(g, ext, 2, 6, 11, Exec::Parallel); });
        report("identity sweep (6 cases)", ts, tp,
               a.max_norm_identity == b.max_norm_identity && a.max_conditioned_state == b.max_conditioned_state);
    }
    {
        Eigen::MatrixXd p_ae = Eigen::MatrixXd::Constant(1 << 12, 1, 1.0 / (1 << 12));
        LhlResult a, b;
        double ts =
            time_ms(repeats, [&] { a = leftover_hash_exact_test(p_ae, 12, 4, Exec::Serial); });
        double tp =
            time_ms(repeats, [&] { b = leftover_hash_exact_test(p_ae, 12, 4, Exec::Parallel); });
        report("leftover hashing (2^15 f)", ts, tp, a.distance == b.distance);
    }
    {
        std::int64_t a = 0, b = 0;
        double ts = time_ms(repeats, [&] { a = toeplitz_max_kernel_count(8, 12, Exec::Serial); });
        double tp = time_ms(repeats, [&] { b = toeplitz_max_kernel_count(8, 12, Exec::Parallel); });
        report("toeplitz kernels (8,12)", ts, tp, a == b);
    }
    return 0;
}
