#pragma once

#include <condition_variable>
#include <mutex>

namespace resum {

// Counting semaphore for in-flight request caps (runtime-configured count,
// unlike std::counting_semaphore).
class Semaphore {
 public:
  explicit Semaphore(int count) : count_(count) {}

  void acquire() {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [&] { return count_ > 0; });
    --count_;
  }

  void release() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      ++count_;
    }
    cv_.notify_one();
  }

  class Guard {
   public:
    explicit Guard(Semaphore* sem) : sem_(sem) {
      if (sem_) sem_->acquire();
    }
    ~Guard() {
      if (sem_) sem_->release();
    }
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;

   private:
    Semaphore* sem_;
  };

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int count_;
};

}  // namespace resum
