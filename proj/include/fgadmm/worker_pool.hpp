// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <barrier>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "fgadmm/error.hpp"

namespace fgadmm {

/// Half-open range of task indices handed to one worker.
struct TaskRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Contiguous static partition: worker `rank` of `workers` gets
/// [count·rank/workers, count·(rank+1)/workers).
inline TaskRange static_chunk(std::size_t count, std::size_t rank, std::size_t workers) {
  return {count * rank / workers, count * (rank + 1) / workers};
}

/// Fixed set of threads running one parallel loop at a time.
///
/// parallel_for publishes a loop body, releases every worker through a start
/// barrier, runs chunk 0 on the calling thread and waits on a finish barrier.
/// A call therefore returns only after every chunk is done, which is the
/// phase barrier of the iteration. The first exception thrown by any chunk is
/// rethrown on the caller.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers)
      : workers_(workers), start_(static_cast<std::ptrdiff_t>(workers)),
        finish_(static_cast<std::ptrdiff_t>(workers)) {
    if (workers == 0) throw UsageError("WorkerPool: need at least one worker");
    threads_.reserve(workers - 1);
    for (std::size_t rank = 1; rank < workers; ++rank) {
      threads_.emplace_back([this, rank] { worker_loop(rank); });
    }
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    if (threads_.empty()) return;
    stop_ = true;
    start_.arrive_and_wait();
    for (auto& t : threads_) t.join();
  }

  std::size_t size() const noexcept { return workers_; }

  /// Runs body(TaskRange) over [0, count) split across the workers.
  template <typename Body>
  void parallel_for(std::size_t count, Body&& body) {
    using Fn = std::remove_reference_t<Body>;
    if (workers_ == 1) {
      body(TaskRange{0, count});
      return;
    }
    count_ = count;
    context_ = const_cast<void*>(static_cast<const void*>(std::addressof(body)));
    invoke_ = [](void* ctx, TaskRange r) { (*static_cast<Fn*>(ctx))(r); };
    error_ = nullptr;

    start_.arrive_and_wait();
    run_chunk(0);
    finish_.arrive_and_wait();

    if (error_) std::rethrow_exception(std::exchange(error_, nullptr));
  }

 private:
  void run_chunk(std::size_t rank) {
    try {
      invoke_(context_, static_chunk(count_, rank, workers_));
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex_);
      if (!error_) error_ = std::current_exception();
    }
  }

  void worker_loop(std::size_t rank) {
    for (;;) {
      start_.arrive_and_wait();
      if (stop_) return;
      run_chunk(rank);
      finish_.arrive_and_wait();
    }
  }

  std::size_t workers_;
  std::barrier<> start_;
  std::barrier<> finish_;
  std::vector<std::thread> threads_;

  // Published before start_ and read by workers after it.
  std::size_t count_ = 0;
  void* context_ = nullptr;
  void (*invoke_)(void*, TaskRange) = nullptr;
  bool stop_ = false;

  std::mutex error_mutex_;
  std::exception_ptr error_;
};

}  // namespace fgadmm
