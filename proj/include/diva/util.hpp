#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

#include "diva/errors.hpp"

namespace diva {

// Shortest decimal representation that round-trips exactly; used by every
// CSV writer so save/load is lossless.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) throw parse_error("not a number: '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string> split_csv_line(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string strip_cr(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
    return s;
}

// Empirical quantile, "higher" interpolation: smallest element v such that
// the fraction of values <= v is at least q. Input must be sorted ascending.
inline double quantile_higher(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw validation_error("quantile of empty list");
    if (q <= 0.0) return sorted.front();
    const double pos = std::ceil(q * static_cast<double>(sorted.size())) - 1.0;
    const std::size_t idx = std::min(sorted.size() - 1, static_cast<std::size_t>(std::max(0.0, pos)));
    return sorted[idx];
}

inline double median_sorted(const std::vector<double>& sorted) {
    return quantile_higher(sorted, 0.5);
}

inline double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Population standard deviation.
inline double stddev(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return median_sorted(v);
}

inline double clamp01(double v) {
    return std::min(1.0, std::max(0.0, v));
}

// Runs fn(i) for i in [0, jobs) on up to `threads` workers. Each job writes
// only its own output slot, so results are identical for any thread count.
inline void parallel_for(std::size_t jobs, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (jobs == 0) return;
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs)));
    if (workers == 1) {
        for (std::size_t i = 0; i < jobs; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error = nullptr;
    std::mutex err_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= jobs) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace diva
