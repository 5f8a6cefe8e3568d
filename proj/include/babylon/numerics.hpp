#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace babylon {

// Neumaier-compensated summation. Deterministic for a fixed add order.
struct KahanSum {
    double s = 0.0;
    double c = 0.0;

    void add(double x) noexcept {
        const double t = s + x;
        if (std::abs(s) >= std::abs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }

    void scale(double k) noexcept {
        s *= k;
        c *= k;
    }

    double value() const noexcept { return s + c; }
};

// Streaming log-sum-exp with a running maximum: accumulates sum_m exp(w_m)
// without overflow. Merge is associative as long as callers fix the order.
struct LogSumExp {
    double max_w = -std::numeric_limits<double>::infinity();
    KahanSum sum;  // sum of exp(w - max_w)
    std::uint64_t count = 0;

    void add(double w) {
        ++count;
        if (w == -std::numeric_limits<double>::infinity()) return;  // contributes exp = 0
        if (w <= max_w) {
            sum.add(std::exp(w - max_w));
            return;
        }
        if (max_w != -std::numeric_limits<double>::infinity())
            sum.scale(std::exp(max_w - w));
        max_w = w;
        sum.add(1.0);
    }

    void merge(const LogSumExp& o) {
        count += o.count;
        if (o.max_w == -std::numeric_limits<double>::infinity()) return;
        if (o.max_w <= max_w) {
            sum.add(o.sum.value() * std::exp(o.max_w - max_w));
        } else {
            const double scaled = sum.value() * std::exp(max_w - o.max_w);
            sum = o.sum;
            sum.add(scaled);
            max_w = o.max_w;
        }
    }

    // log sum_m exp(w_m)
    double log_sum() const { return max_w + std::log(sum.value()); }

    // log( (1/count) sum_m exp(w_m) ); exact when all w_m are equal
    double log_mean() const {
        return max_w + std::log(sum.value() / static_cast<double>(count));
    }
};

// log cosh(x) = |x| + log1p(exp(-2|x|)) - log 2.
// Stable for large |x| and even in x by construction.
inline double log_cosh(double x) noexcept {
    const double a = std::abs(x);
    return a + std::log1p(std::exp(-2.0 * a)) - 0.6931471805599453094172321214581766;
}

// tanh that is odd in x bit-for-bit; antithetic cancellations rely on this.
inline double odd_tanh(double x) noexcept {
    return std::copysign(std::tanh(std::abs(x)), x);
}

// Contiguous [begin, end) shards covering [0, total), one per worker.
std::vector<std::pair<std::uint64_t, std::uint64_t>> split_range(std::uint64_t total, int jobs);

// Runs fn(worker, begin, end) on each shard; worker 0 runs on the calling
// thread when jobs == 1. Callers merge per-worker state in worker order.
void run_sharded(std::uint64_t total, int jobs,
                 const std::function<void(int, std::uint64_t, std::uint64_t)>& fn);

}  // namespace babylon
