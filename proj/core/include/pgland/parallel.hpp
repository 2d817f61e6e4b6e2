#pragma once

#include <functional>

namespace pgland {

/// Number of worker threads to use for `requested` (0 = hardware concurrency).
int resolve_threads(int requested);

/// Splits [0, n) into consecutive chunks of `chunk_size` items and calls
/// `body(chunk_index, begin, end)` for every chunk, spreading chunks over
/// `threads` workers. The chunking does not depend on `threads`, so callers
/// that reduce per-chunk results in chunk order get bitwise-identical output
/// for any degree of parallelism. Exceptions thrown by `body` are rethrown
/// (the one from the lowest chunk index wins).
void for_each_chunk(long n, long chunk_size, int threads,
                    const std::function<void(long chunk, long begin, long end)>& body);

/// Mean / variance accumulator with a deterministic pairwise merge.
struct RunningMoments {
  long count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }
  void merge(const RunningMoments& other);
  double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
  double std_err() const;
};

}  // namespace pgland
