#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "dbose/errors.hpp"

namespace dbose {

// explicit > 0 wins, then DBOSE_WORKERS, then the hardware count
inline int resolve_workers(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("DBOSE_WORKERS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return int(v);
        throw ConfigError(std::string("DBOSE_WORKERS must be a positive integer, got '") + env + "'");
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : int(hc);
}

// f(i) for i in [0, n). Work is handed out in chunks; callers write results by index,
// so nothing depends on which thread ran what.
template <class F>
void parallel_for(long n, int workers, F&& f) {
    workers = std::max(1, std::min<int>(workers, int(std::max<long>(n, 1))));
    if (workers == 1) {
        for (long i = 0; i < n; ++i) f(i);
        return;
    }
    const long chunk = std::max<long>(1, n / (long(workers) * 16));
    std::atomic<long> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto body = [&] {
        try {
            for (;;) {
                long b = next.fetch_add(chunk);
                if (b >= n) break;
                long e = std::min(n, b + chunk);
                for (long i = b; i < e; ++i) f(i);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lk(err_mu);
            if (!err) err = std::current_exception();
            next.store(n);
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

// Neumaier-compensated sum in index order
inline double ordered_sum(const std::vector<double>& v) {
    double s = 0.0, c = 0.0;
    for (double x : v) {
        double t = s + x;
        c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
        s = t;
    }
    return s + c;
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
    MeanSe r;
    const double n = double(v.size());
    if (v.empty()) return r;
    r.mean = ordered_sum(v) / n;
    if (v.size() < 2) return r;
    std::vector<double> d(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) d[i] = (v[i] - r.mean) * (v[i] - r.mean);
    r.se = std::sqrt(ordered_sum(d) / (n - 1) / n);
    return r;
}

}  // namespace dbose
