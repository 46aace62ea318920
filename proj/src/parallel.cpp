#include "mvsde/parallel.hpp"

#include <algorithm>

namespace mvsde {

Executor::Executor(std::size_t threads)
    : threads_(std::max<std::size_t>(threads, 1)),
      arena_(std::make_shared<tbb::task_arena>(static_cast<int>(threads_))) {}

const Executor& Executor::serial() {
  static const Executor executor(1);
  return executor;
}

}  // namespace mvsde
