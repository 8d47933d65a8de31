#pragma once

#include <cstddef>
#include <memory>
#include <utility>

#include <tbb/global_control.h>
#include <tbb/parallel_invoke.h>

namespace zdtree {

/// Below this many points a recursive build or update runs sequentially.
inline constexpr std::size_t kParallelGrain = 1000;

/// Runs both callables, in parallel when `parallel` is set.
template <class Left, class Right>
void fork_join(bool parallel, Left&& left, Right&& right) {
  if (parallel) {
    tbb::parallel_invoke(std::forward<Left>(left), std::forward<Right>(right));
  } else {
    left();
    right();
  }
}

/// Caps the worker count for the lifetime of the scope. 0 keeps the default.
class WorkerScope {
 public:
  explicit WorkerScope(std::size_t workers) {
    if (workers > 0) {
      control_ = std::make_unique<tbb::global_control>(
          tbb::global_control::max_allowed_parallelism, workers);
    }
  }

  static std::size_t active() {
    return tbb::global_control::active_value(tbb::global_control::max_allowed_parallelism);
  }

 private:
  std::unique_ptr<tbb::global_control> control_;
};

}  // namespace zdtree
