#include "mheat/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace mheat {

void parallel_for(int n, int workers, const std::function<void(int)>& job) {
  workers = std::clamp(workers, 1, std::max(n, 1));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

StatBank run_ensemble(std::int64_t n_paths, int n_stats, int workers, const PathKernel& kernel) {
  const auto n_chunks = static_cast<int>((n_paths + kChunkPaths - 1) / kChunkPaths);
  std::vector<StatBank> partial(n_chunks, StatBank(n_stats));
  parallel_for(n_chunks, workers, [&](int c) {
    const std::int64_t begin = c * kChunkPaths;
    const std::int64_t end = std::min(n_paths, begin + kChunkPaths);
    for (std::int64_t id = begin; id < end; ++id) kernel(id, partial[c]);
  });
  StatBank total(n_stats);
  for (const auto& bank : partial)
    for (int s = 0; s < n_stats; ++s) total[s].merge(bank[s]);
  return total;
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MANIFOLD_HEAT_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w > 0) return w;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

}  // namespace mheat
