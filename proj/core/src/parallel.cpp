#include "kdvlab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace kdvlab {
namespace {

std::atomic<std::size_t> g_override{0};

std::size_t threads_from_env() {
  const char* raw = std::getenv("KDV_TRANSPORT_THREADS");
  if (raw == nullptr) return 1;
  try {
    const long v = std::stol(raw);
    return v > 0 ? static_cast<std::size_t>(v) : 1;
  } catch (...) {
    return 1;
  }
}

}  // namespace

std::size_t default_threads() {
  const std::size_t o = g_override.load();
  return o != 0 ? o : threads_from_env();
}

void set_default_threads(std::size_t threads) { g_override.store(threads); }

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = default_threads();
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::size_t error_index = std::numeric_limits<std::size_t>::max();
  std::exception_ptr error;

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };

  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace kdvlab
