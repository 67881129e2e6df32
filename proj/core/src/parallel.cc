#include "gforge/parallel.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace gforge {
namespace {

int initial_thread_count() {
  const char* env = std::getenv("GUIDANCE_FORGE_THREADS");
  if (env == nullptr) return 1;
  try {
    int n = std::stoi(env);
    return std::clamp(n, 1, 256);
  } catch (...) {
    return 1;
  }
}

std::atomic<int>& thread_count_storage() {
  static std::atomic<int> count{initial_thread_count()};
  return count;
}

}  // namespace

int thread_count() { return thread_count_storage().load(); }

void set_thread_count(int n) { thread_count_storage().store(std::clamp(n, 1, 256)); }

void parallel_chunks(std::size_t n,
                     const std::function<void(int, std::size_t, std::size_t)>& fn) {
  const int threads = thread_count();
  if (threads <= 1 || n < 2) {
    fn(0, 0, n);
    return;
  }
  const std::size_t chunks = std::min<std::size_t>(threads, n);
  std::vector<std::thread> workers;
  workers.reserve(chunks - 1);
  for (std::size_t c = 1; c < chunks; ++c) {
    workers.emplace_back([&, c] { fn(static_cast<int>(c), n * c / chunks, n * (c + 1) / chunks); });
  }
  fn(0, 0, n / chunks);
  for (auto& w : workers) w.join();
}

}  // namespace gforge
