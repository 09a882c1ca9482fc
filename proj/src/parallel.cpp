#include "mvsfuse/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace mvsfuse {

namespace {
std::atomic<int> g_jobs{0};
thread_local bool t_inside_parallel = false;
}

void set_default_jobs(int jobs) { g_jobs.store(jobs < 0 ? 0 : jobs); }

int default_jobs() {
  int jobs = g_jobs.load();
  if (jobs <= 0) {
    jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs <= 0) jobs = 1;
  }
  return jobs;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int jobs) {
  if (n == 0) return;
  if (jobs <= 0) jobs = default_jobs();
  const std::size_t workers = std::min<std::size_t>(jobs, n);
  // Nested calls run serially; the outermost loop owns the workers.
  if (workers <= 1 || t_inside_parallel) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([begin, end, &fn] {
      t_inside_parallel = true;
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& t : threads) t.join();
}

}  // namespace mvsfuse
