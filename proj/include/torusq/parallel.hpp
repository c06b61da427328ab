#pragma once

// Deterministic data-parallel helpers. Work is always split into tasks whose
// boundaries depend only on the problem size; threads pick tasks dynamically
// and write into per-task slots, so reductions done afterwards in task order
// are bitwise independent of the thread count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace torusq::parallel {

namespace detail {
inline std::atomic<unsigned>& thread_setting() {
  static std::atomic<unsigned> value{0};
  return value;
}
}  // namespace detail

/// Number of worker threads used by library kernels. 0 selects
/// std::thread::hardware_concurrency().
inline void set_threads(unsigned count) { detail::thread_setting() = count; }

inline unsigned threads() {
  unsigned t = detail::thread_setting().load();
  if (t == 0) t = std::max(1u, std::thread::hardware_concurrency());
  return t;
}

/// Calls fn(task) for every task in [0, count). Exceptions thrown by any task
/// are rethrown (the first one captured) after all workers join.
template <class Fn>
void for_each_task(std::size_t count, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(threads(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Half-open index range of a task.
struct Chunk {
  std::size_t begin;
  std::size_t end;
};

/// Splits [0, total) into contiguous chunks of at most `chunk_size` items.
inline std::vector<Chunk> make_chunks(std::size_t total, std::size_t chunk_size) {
  std::vector<Chunk> chunks;
  if (chunk_size == 0) chunk_size = 1;
  for (std::size_t b = 0; b < total; b += chunk_size) {
    chunks.push_back({b, std::min(total, b + chunk_size)});
  }
  return chunks;
}

/// Neumaier-compensated accumulator; used wherever a long floating sum must
/// be reproducible and accurate.
template <class T>
class CompensatedSum {
 public:
  void add(T x) {
    const T t = sum_ + x;
    if (abs_(sum_) >= abs_(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  T value() const { return sum_ + comp_; }

 private:
  static T abs_(T v) { return v < T(0) ? -v : v; }
  T sum_{0};
  T comp_{0};
};

}  // namespace torusq::parallel
