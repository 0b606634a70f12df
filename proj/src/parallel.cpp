#include "treesmpc/parallel.hpp"

#include <cstdlib>
#include <string>

namespace treesmpc {

namespace {
constexpr int kSpinRounds = 4000;
}

WorkerPool::WorkerPool(int threads) {
  const int n = threads < 1 ? 1 : threads;
  workers_.reserve(static_cast<std::size_t>(n - 1));
  for (int w = 1; w < n; ++w) workers_.emplace_back([this, w] { worker_loop(w); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
    generation_.fetch_add(1, std::memory_order_release);
  }
  wake_.notify_all();
  for (auto& t : workers_) t.join();
}

std::pair<int, int> WorkerPool::chunk_bounds(int index) const {
  const int count = end_ - begin_;
  const int parts = size();
  const int base = count / parts;
  const int extra = count % parts;
  const int lo = begin_ + index * base + (index < extra ? index : extra);
  const int hi = lo + base + (index < extra ? 1 : 0);
  return {lo, hi};
}

void WorkerPool::run(const std::function<void(int, int)>& chunk, int begin, int end) {
  {
    std::lock_guard lock(mutex_);
    job_ = &chunk;
    begin_ = begin;
    end_ = end;
    pending_.store(static_cast<int>(workers_.size()), std::memory_order_relaxed);
    generation_.fetch_add(1, std::memory_order_release);
  }
  wake_.notify_all();

  const auto [lo, hi] = chunk_bounds(0);
  if (lo < hi) chunk(lo, hi);

  while (pending_.load(std::memory_order_acquire) != 0) std::this_thread::yield();
}

void WorkerPool::worker_loop(int index) {
  std::uint64_t seen = 0;
  for (;;) {
    std::uint64_t gen = generation_.load(std::memory_order_acquire);
    for (int spin = 0; gen == seen && spin < kSpinRounds; ++spin) {
      std::this_thread::yield();
      gen = generation_.load(std::memory_order_acquire);
    }
    if (gen == seen) {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return generation_.load(std::memory_order_acquire) != seen; });
      gen = generation_.load(std::memory_order_acquire);
    }
    seen = gen;

    const std::function<void(int, int)>* job = nullptr;
    std::pair<int, int> bounds;
    {
      std::lock_guard lock(mutex_);
      if (stop_) return;
      job = job_;
      bounds = chunk_bounds(index);
    }
    if (bounds.first < bounds.second) (*job)(bounds.first, bounds.second);
    pending_.fetch_sub(1, std::memory_order_acq_rel);
  }
}

int default_thread_count() {
  const char* env = std::getenv("TREESMPC_THREADS");
  if (env == nullptr) return 1;
  try {
    const int n = std::stoi(env);
    return n >= 1 ? n : 1;
  } catch (const std::exception&) {
    return 1;
  }
}

}  // namespace treesmpc
