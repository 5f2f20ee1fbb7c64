#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nuc {

/// Caps the OpenMP worker count for subsequent parallel regions.
/// n <= 0 leaves the runtime default in place.
void set_thread_count(int n);

int thread_count();

// Fixed block size for deterministic reductions. Partial sums are formed
// per block (serially within each block) and combined in block order, so
// results do not depend on the number of threads.
inline constexpr std::size_t kReduceBlock = 4096;

inline std::size_t reduce_block_count(std::size_t n) {
    return (n + kReduceBlock - 1) / kReduceBlock;
}

}  // namespace nuc
