#pragma once
// Deterministic parallelism helpers.
//
// Results must be bitwise independent of the worker count, so the rules are:
//   - parallel_for may only be used where each output element is written by
//     exactly one iteration (no shared accumulators);
//   - reductions always run through block_sum / block_sum_complex, which use a
//     fixed blocking (4096 elements) and accumulate block partials serially in
//     index order, regardless of thread count.

#include <complex>
#include <cstdint>
#include <functional>

namespace edlab {

// 0 means "hardware concurrency". Affects elementwise maps and sampler chains
// only; never reduction order.
void set_thread_count(int n);
int thread_count();

// Invokes fn(begin, end) over a partition of [0, n). Chunks are contiguous and
// the partition does not depend on the thread count beyond which thread runs
// which chunk.
void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

// Deterministic blocked summation: partial sums over fixed 4096-element blocks
// combined in index order with compensated accumulation.
double block_sum(std::int64_t n, const std::function<double(std::int64_t)>& f);

std::complex<double> block_sum_complex(
    std::int64_t n, const std::function<std::complex<double>(std::int64_t)>& f);

}  // namespace edlab
