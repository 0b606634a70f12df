#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace treesmpc {

/// Fixed-size pool running index-range loops with a barrier at the end of
/// each loop. The range is split into one contiguous chunk per thread and
/// the caller thread works on the first chunk. Loop bodies must write only
/// to per-index outputs; with that discipline results do not depend on the
/// thread count.
class WorkerPool {
 public:
  explicit WorkerPool(int threads = 1);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int size() const { return static_cast<int>(workers_.size()) + 1; }

  /// Calls body(i) for every i in [begin, end) and returns when all are done.
  template <typename Body>
  void parallel_for(int begin, int end, Body&& body) {
    if (end <= begin) return;
    if (workers_.empty() || end - begin < 2) {
      for (int i = begin; i < end; ++i) body(i);
      return;
    }
    run([&](int lo, int hi) {
      for (int i = lo; i < hi; ++i) body(i);
    }, begin, end);
  }

 private:
  void run(const std::function<void(int, int)>& chunk, int begin, int end);
  void worker_loop(int index);
  std::pair<int, int> chunk_bounds(int index) const;

  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::atomic<std::uint64_t> generation_{0};
  std::atomic<int> pending_{0};
  bool stop_ = false;

  const std::function<void(int, int)>* job_ = nullptr;
  int begin_ = 0;
  int end_ = 0;
};

/// Thread count from TREESMPC_THREADS, or 1 when unset or invalid.
int default_thread_count();

}  // namespace treesmpc
