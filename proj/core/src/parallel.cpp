#include "pgland/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>
#include <vector>

namespace pgland {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void for_each_chunk(long n, long chunk_size, int threads,
                    const std::function<void(long, long, long)>& body) {
  if (n <= 0) return;
  chunk_size = std::max(1L, chunk_size);
  const long n_chunks = (n + chunk_size - 1) / chunk_size;
  const int workers = static_cast<int>(std::min<long>(resolve_threads(threads), n_chunks));

  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_chunks));
  std::atomic<long> next{0};
  auto work = [&] {
    for (long c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) {
      try {
        body(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void RunningMoments::merge(const RunningMoments& other) {
  if (other.count == 0) return;
  if (count == 0) {
    *this = other;
    return;
  }
  const double total = static_cast<double>(count + other.count);
  const double delta = other.mean - mean;
  mean += delta * static_cast<double>(other.count) / total;
  m2 += other.m2 + delta * delta * static_cast<double>(count) * static_cast<double>(other.count) / total;
  count += other.count;
}

double RunningMoments::std_err() const {
  return count > 0 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
}

}  // namespace pgland
