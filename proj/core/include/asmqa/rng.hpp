#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace asmqa {

/// Seeded random stream with platform-independent draws.
///
/// Every random decision in the pipeline comes from a stream derived from
/// (global seed, record key, purpose), never from thread identity, so output
/// does not depend on the worker count. The draw helpers avoid the
/// implementation-defined std distributions so results match across
/// standard libraries.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    /// Stream for one (seed, key, purpose) triple.
    static RngStream derive(std::uint64_t seed, std::string_view key, std::string_view purpose);

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, n); n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n);

    /// Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform01();

    /// True with probability p (p <= 0 never, p >= 1 always).
    bool bernoulli(double p);

    /// In-place Fisher-Yates shuffle (Durstenfeld, high index first).
    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_index(i));
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

}  // namespace asmqa
