#pragma once

// Deterministic fork-join helper. Work on [0, n) is split into contiguous
// chunks, one per worker, so writes to disjoint slices need no locks and the
// result is independent of scheduling. Reductions must merge in chunk order.

#include <cstddef>
#include <functional>

namespace icboost {

int hardware_threads();

// 0 restores the hardware default.
void set_num_threads(int n);
int num_threads();

// fn(begin, end, chunk) is invoked for each contiguous chunk; chunk ids are
// dense from 0. With one thread (or tiny n) everything runs inline.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

std::size_t parallel_chunk_count(std::size_t n);

}  // namespace icboost
