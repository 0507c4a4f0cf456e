#pragma once

#include <cstddef>
#include <functional>

namespace kere {

/** Number of worker threads used by parallel_for.
 *
 *  Defaults to the hardware concurrency and can be capped with the
 *  KERE_THREADS environment variable (values below 1 are treated as 1).
 */
std::size_t thread_count();

/** Runs fn(i) for i in [0, count) over a fixed block partition.
 *
 *  Each index is processed exactly once and the partition depends only on
 *  count and the thread count, so results written to disjoint slots are
 *  deterministic.  Falls back to a plain loop when one thread suffices.
 */
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace kere
