#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mheat/stats.hpp"

namespace mheat {

/// Paths per work unit. Chunk boundaries are fixed so that results do not
/// depend on the number of workers.
inline constexpr std::int64_t kChunkPaths = 1024;

using StatBank = std::vector<RunningStats>;
using PathKernel = std::function<void(std::int64_t path_id, StatBank& acc)>;

/// Runs `kernel` for path ids 0..n_paths-1, accumulating into `n_stats`
/// running statistics per chunk; chunks are merged in index order.
StatBank run_ensemble(std::int64_t n_paths, int n_stats, int workers, const PathKernel& kernel);

/// Evaluates job(i) for i in [0, n) on up to `workers` threads.
void parallel_for(int n, int workers, const std::function<void(int)>& job);

/// Worker count from an explicit value, else MANIFOLD_HEAT_WORKERS, else 1.
int resolve_workers(int requested);

}  // namespace mheat
