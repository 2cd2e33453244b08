#pragma once

#include <cstdint>

namespace parqkd {

// Execution policy for the data-parallel kernels. Every kernel has a serial
// path that is kept as the reference implementation; the parallel path must
// produce bit-identical results (workers write to disjoint slots, reductions
// are re-ordered deterministically).
enum class Exec { Serial, Parallel };

// Runs body(i) for i in [0, count). With Exec::Parallel the iterations are
// distributed over OpenMP threads; the body must only write to slots owned
// by iteration i.
template <typename Body>
void parallel_for(Exec exec, std::int64_t count, const Body& body) {
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (std::int64_t i = 0; i < count; ++i) body(i);
    } else {
        for (std::int64_t i = 0; i < count; ++i) body(i);
    }
}

}  // namespace parqkd
