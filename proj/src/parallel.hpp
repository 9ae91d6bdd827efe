#ifndef DBM_SRC_PARALLEL_HPP_
#define DBM_SRC_PARALLEL_HPP_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dbm/errors.hpp"

namespace dbm::detail {

inline unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned w = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(w, std::max<std::size_t>(jobs, 1)));
}

/// One slot per trial: the value, or the message of the NumericError that
/// aborted it.
template <typename T>
struct TrialSlot {
  std::optional<T> value;
  std::string error;
};

/// Runs fn(k) for k in [0, count) on `threads` workers. Each call writes only
/// its own slot. NumericError aborts the trial; any other exception stops the
/// run and is rethrown after the workers join.
template <typename T, typename Fn>
std::vector<TrialSlot<T>> run_trials(std::size_t count, unsigned threads, Fn fn) {
  std::vector<TrialSlot<T>> slots(count);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      if (stop.load(std::memory_order_relaxed)) return;
      const std::size_t k = next.fetch_add(1, std::memory_order_relaxed);
      if (k >= count) return;
      try {
        slots[k].value.emplace(fn(k));
      } catch (const NumericError& e) {
        slots[k].error = e.what();
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        stop = true;
      }
    }
  };

  const unsigned workers = worker_count(threads, count);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return slots;
}

}  // namespace dbm::detail

#endif  // DBM_SRC_PARALLEL_HPP_
