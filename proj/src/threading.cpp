#include "qclearn/threading.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

#include "qclearn/rng.hpp"

namespace qclearn {

namespace {

int default_threads() {
    if (const char* env = std::getenv("QCLEARN_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

int g_threads = default_threads();
thread_local bool tl_inside_parallel = false;

// Persistent worker pool running one job at a time. Job state is published
// under the mutex before the generation counter advances, and run() does not
// return until every worker has left the job, so no thread can ever observe
// a half-initialized or stale job.
class Pool {
  public:
    void run(std::int64_t count, std::int64_t chunk, void (*fn)(std::int64_t, std::int64_t, void*),
             void* ctx, int want_workers) {
        std::unique_lock<std::mutex> job_lock(job_mutex_);
        {
            std::lock_guard<std::mutex> lk(mutex_);
            ensure_workers(want_workers);
            fn_ = fn;
            ctx_ = ctx;
            count_ = count;
            chunk_ = chunk;
            cursor_.store(0, std::memory_order_relaxed);
            remaining_.store((count + chunk - 1) / chunk, std::memory_order_relaxed);
            ++generation_;
        }
        wake_.notify_all();
        work();
        std::unique_lock<std::mutex> lk(mutex_);
        done_.wait(lk, [&] { return remaining_.load() == 0 && busy_ == 0; });
    }

  private:
    void ensure_workers(int want) {
        while (static_cast<int>(workers_.size()) < want)
            workers_.emplace_back([this, gen = generation_] { worker_loop(gen); });
    }

    void worker_loop(std::uint64_t seen) {
        std::unique_lock<std::mutex> lk(mutex_);
        for (;;) {
            wake_.wait(lk, [&] { return generation_ != seen; });
            seen = generation_;
            // A worker may sleep through a whole job and only wake after it
            // completed (and run() returned). Joining then would race the
            // next job's state publication, so join only while the job it
            // woke for is demonstrably still in flight.
            if (remaining_.load() == 0) continue;
            ++busy_;
            lk.unlock();
            work();
            lk.lock();
            --busy_;
            if (busy_ == 0 && remaining_.load() == 0) done_.notify_all();
        }
    }

    void work() {
        tl_inside_parallel = true;
        for (;;) {
            const std::int64_t begin = cursor_.fetch_add(chunk_);
            if (begin >= count_) break;
            fn_(begin, std::min(count_, begin + chunk_), ctx_);
            remaining_.fetch_sub(1);
        }
        tl_inside_parallel = false;
    }

    std::mutex job_mutex_;  // serializes run() callers
    std::mutex mutex_;      // guards generation_, busy_, and job publication
    std::condition_variable wake_;
    std::condition_variable done_;
    std::vector<std::thread> workers_;
    std::uint64_t generation_ = 0;
    int busy_ = 0;
    void (*fn_)(std::int64_t, std::int64_t, void*) = nullptr;
    void* ctx_ = nullptr;
    std::int64_t count_ = 0;
    std::int64_t chunk_ = 1;
    std::atomic<std::int64_t> cursor_{0};
    std::atomic<std::int64_t> remaining_{0};
};

Pool& pool() {
    // Leaked on purpose: workers live for the whole process and joining them
    // at static destruction would deadlock.
    static Pool* p = new Pool();
    return *p;
}

}  // namespace

void set_threads(int n) { g_threads = std::max(1, n); }

int threads() { return g_threads; }

void parallel_for(std::int64_t count, void (*fn)(std::int64_t, std::int64_t, void*), void* ctx) {
    if (count <= 0) return;
    const int nthreads = static_cast<int>(std::min<std::int64_t>(g_threads, count));
    if (nthreads <= 1 || tl_inside_parallel) {
        fn(0, count, ctx);
        return;
    }
    // 2x chunk oversubscription smooths uneven chunk costs without changing
    // which output each index writes.
    const std::int64_t chunk = std::max<std::int64_t>(1, count / (2 * nthreads));
    pool().run(count, chunk, fn, ctx, nthreads - 1);
}

}  // namespace qclearn

namespace qclearn {

double Rng::next_normal() {
    // Box-Muller; u clamped away from 0 so the log stays finite.
    double u = next_double();
    double v = next_double();
    if (u < 1e-300) u = 1e-300;
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586477 * v);
}

}  // namespace qclearn
