#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace miai {

// Base error for everything raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input: malformed files, schema violations, capability mismatches.
// The CLI maps these to exit code 1, everything else to 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    for (size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

// Split, trim each piece, drop empties. For comma lists in config files.
inline std::vector<std::string> split_list(std::string_view s, char sep) {
    std::vector<std::string> out;
    for (auto& p : split(s, sep)) {
        std::string t = trim(p);
        if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
}

// splitmix64: cheap, well-mixed, and stable across platforms. Used wherever
// determinism must not depend on std library distribution internals.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic stream of uniform draws derived from a seed.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(splitmix64(seed ^ 0x5851f42d4c957f2dULL)) {}

    uint64_t next() {
        state_ = splitmix64(state_);
        return state_;
    }

    // uniform in [0, bound)
    uint64_t below(uint64_t bound) {
        uint64_t threshold = (~bound + 1) % bound;  // 2^64 mod bound, rejection bound
        for (;;) {
            uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    // uniform in [0, 1)
    double uniform() { return (next() >> 11) * 0x1.0p-53; }

    // standard normal via Box-Muller
    double normal() {
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    uint64_t state_;
};

// One double in [0,1) from (seed, index); independent of call order so
// per-record randomness survives parallel fan-out.
inline double indexed_uniform(uint64_t seed, uint64_t index) {
    uint64_t r = splitmix64(splitmix64(seed) ^ splitmix64(index + 0x9e3779b97f4a7c15ULL));
    return (r >> 11) * 0x1.0p-53;
}

inline void shuffle_indices(std::vector<size_t>& idx, Rng& rng) {
    for (size_t i = idx.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.below(i));
        std::swap(idx[i - 1], idx[j]);
    }
}

// Runs fn(i) for i in [0, n). jobs <= 1 stays on the calling thread.
// Static chunking: each index is processed exactly once, so results written
// to per-index slots are independent of the worker count.
template <typename Fn>
void parallel_for(size_t n, int jobs, Fn&& fn) {
    if (jobs <= 1 || n < 2) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    size_t workers = std::min<size_t>(static_cast<size_t>(jobs), n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::atomic<int> failures{0};
    std::string first_error;
    std::mutex err_mutex;
    for (size_t w = 0; w < workers; ++w) {
        size_t lo = n * w / workers;
        size_t hi = n * (w + 1) / workers;
        pool.emplace_back([&, lo, hi] {
            try {
                for (size_t i = lo; i < hi; ++i) fn(i);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (failures.fetch_add(1) == 0) first_error = e.what();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failures.load() != 0) throw Error(first_error.empty() ? "worker failed" : first_error);
}

// Percent with two decimals, ties rounded up; used by the text reports only.
inline std::string format_percent(double fraction) {
    double pct = fraction * 100.0;
    double rounded = std::floor(pct * 100.0 + 0.5) / 100.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f%%", rounded);
    return buf;
}

// Full-precision, locale-independent number formatting for machine output.
inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline int argmax_lowest(const std::vector<double>& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

}  // namespace miai
