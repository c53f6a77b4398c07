#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace eegintent {

/// Derives an independent 64-bit seed for a named random substream
/// (e.g. "split", "adasyn", "shuffle", "synth") so each component can be
/// reproduced on its own from the single run seed.
std::uint64_t substream_seed(std::uint64_t run_seed, std::string_view name,
                             std::uint64_t index = 0);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

/// Fixed-point with the given number of decimals; used for report columns.
std::string format_fixed(double v, int decimals);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Each index is handled
/// exactly once; callers write results into index-addressed slots so output
/// order never depends on scheduling. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr error;
  auto body = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= n || error) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

/// Worker count used when a caller passes jobs == 0.
unsigned default_jobs();

}  // namespace eegintent
