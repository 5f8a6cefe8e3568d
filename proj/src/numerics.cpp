#include "babylon/numerics.hpp"

#include <stdexcept>
#include <thread>

namespace babylon {

std::vector<std::pair<std::uint64_t, std::uint64_t>> split_range(std::uint64_t total, int jobs) {
    if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
    const auto j = static_cast<std::uint64_t>(jobs);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
    out.reserve(j);
    for (std::uint64_t w = 0; w < j; ++w) {
        const std::uint64_t begin = total / j * w + std::min<std::uint64_t>(w, total % j);
        const std::uint64_t len = total / j + (w < total % j ? 1 : 0);
        out.emplace_back(begin, begin + len);
    }
    return out;
}

void run_sharded(std::uint64_t total, int jobs,
                 const std::function<void(int, std::uint64_t, std::uint64_t)>& fn) {
    const auto ranges = split_range(total, jobs);
    if (jobs == 1) {
        fn(0, ranges[0].first, ranges[0].second);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(ranges.size());
    for (std::size_t w = 0; w < ranges.size(); ++w)
        threads.emplace_back(fn, static_cast<int>(w), ranges[w].first, ranges[w].second);
    for (auto& t : threads) t.join();
}

}  // namespace babylon
