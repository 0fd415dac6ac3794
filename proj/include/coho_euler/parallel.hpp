#pragma once

#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"

namespace coho_euler {

/// Reads COHO_EULER_WORKERS; defaults to 1 when unset.
inline int workers_from_env() {
    const char* s = std::getenv("COHO_EULER_WORKERS");
    if (s == nullptr || *s == '\0') return 1;
    char* end = nullptr;
    const long n = std::strtol(s, &end, 10);
    if (*end != '\0' || n < 1 || n > 1024)
        throw InputError(std::string("COHO_EULER_WORKERS must be a positive integer, got '") + s + "'");
    return static_cast<int>(n);
}

/// Persistent pool running static, contiguous chunks of an index range. The
/// chunking never affects per-index arithmetic, so results are independent of
/// the worker count as long as callers reduce in a fixed order.
class WorkerPool {
public:
    explicit WorkerPool(int workers = 1) : workers_(workers < 1 ? 1 : workers) {
        for (int k = 1; k < workers_; ++k) threads_.emplace_back([this, k] { run(k); });
    }

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    ~WorkerPool() {
        {
            std::lock_guard lock(mutex_);
            stop_ = true;
            ++generation_;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    int workers() const { return workers_; }

    /// fn(begin, end) over [0, n).
    void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
        if (workers_ == 1 || n < static_cast<std::size_t>(workers_)) {
            fn(0, n);
            return;
        }
        {
            std::lock_guard lock(mutex_);
            task_ = &fn;
            count_ = n;
            pending_ = workers_ - 1;
            errors_.assign(static_cast<std::size_t>(workers_), nullptr);
            ++generation_;
        }
        cv_.notify_all();
        run_chunk(0);
        std::unique_lock lock(mutex_);
        done_cv_.wait(lock, [this] { return pending_ == 0; });
        task_ = nullptr;
        for (auto& e : errors_)
            if (e) std::rethrow_exception(e);
    }

private:
    void run_chunk(int k) {
        const std::size_t begin = count_ * static_cast<std::size_t>(k) / static_cast<std::size_t>(workers_);
        const std::size_t end = count_ * static_cast<std::size_t>(k + 1) / static_cast<std::size_t>(workers_);
        try {
            (*task_)(begin, end);
        } catch (...) {
            errors_[static_cast<std::size_t>(k)] = std::current_exception();
        }
    }

    void run(int k) {
        std::uint64_t seen = 0;
        for (;;) {
            {
                std::unique_lock lock(mutex_);
                cv_.wait(lock, [&] { return generation_ != seen; });
                seen = generation_;
                if (stop_) return;
            }
            run_chunk(k);
            {
                std::lock_guard lock(mutex_);
                --pending_;
            }
            done_cv_.notify_one();
        }
    }

    int workers_;
    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable cv_, done_cv_;
    const std::function<void(std::size_t, std::size_t)>* task_ = nullptr;
    std::size_t count_ = 0;
    int pending_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
    std::vector<std::exception_ptr> errors_;
};

} // namespace coho_euler
