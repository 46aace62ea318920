#pragma once

#include <cstddef>
#include <memory>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>
#include <tbb/partitioner.h>
#include <tbb/task_arena.h>

namespace mvsde {

/// Fixed-size worker pool. Work split across it only ever touches disjoint
/// elements, so results never depend on the worker count.
class Executor {
 public:
  explicit Executor(std::size_t threads = 1);

  std::size_t threads() const noexcept { return threads_; }

  /// Calls body(begin, end) over [0, n) in chunks of at most `grain`.
  template <typename Body>
  void parallel_for(std::size_t n, std::size_t grain, Body&& body) const {
    if (threads_ <= 1 || n <= grain) {
      if (n > 0) body(std::size_t{0}, n);
      return;
    }
    arena_->execute([&] {
      tbb::parallel_for(
          tbb::blocked_range<std::size_t>(0, n, grain),
          [&](const tbb::blocked_range<std::size_t>& r) { body(r.begin(), r.end()); },
          tbb::simple_partitioner());
    });
  }

  /// Shared single-threaded executor.
  static const Executor& serial();

 private:
  std::size_t threads_;
  std::shared_ptr<tbb::task_arena> arena_;
};

}  // namespace mvsde
