// Counter-based random streams.
//
// Every deviate is a pure function of (seed, stream_id, counter), so a run
// can be sharded across workers, replayed trial-by-trial, or resumed at any
// point and still produce bit-identical numbers. Streams are cheap values;
// copying one forks an independent cursor into the same sequence.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace bellsim {

namespace detail {

// SplitMix64 finalizer (Stafford mix 13). Full avalanche on 64 bits.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// FNV-1a over a short tag, used to derive stream ids from module names.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace detail

class RngStream {
public:
    RngStream() = default;
    RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t counter = 0) noexcept
        : seed_(seed), stream_id_(stream_id), counter_(counter),
          key_(detail::mix64(seed ^ detail::mix64(stream_id))) {}

    // Stream keyed by (run seed, module tag, trial index); the per-trial
    // discipline that makes parallel and serial runs identical.
    static RngStream for_trial(std::uint64_t run_seed, std::string_view module_tag,
                               std::uint64_t trial_index) noexcept {
        return RngStream(run_seed,
                         detail::mix64(detail::fnv1a(module_tag)) ^ trial_index);
    }

    static RngStream for_module(std::uint64_t run_seed, std::string_view module_tag) noexcept {
        return RngStream(run_seed, detail::fnv1a(module_tag));
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept {
        return detail::mix64(key_ + detail::mix64(counter_++));
    }

    // Uniform in [0,1), 53-bit mantissa.
    double next_double() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo,hi).
    double next_in(double lo, double hi) noexcept {
        return lo + (hi - lo) * next_double();
    }

    // Uniform integer in [0,n).
    std::uint64_t next_below(std::uint64_t n) noexcept {
        // 128-bit multiply rejection-free map; bias < 2^-64, irrelevant here.
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller. Consumes exactly two counters per call,
    // keeping the (seed, stream, counter) -> deviate map stateless.
    double next_normal() noexcept {
        const double u1 = 1.0 - next_double(); // (0,1], keeps log() finite
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    bool next_bernoulli(double p) noexcept { return next_double() < p; }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t stream_id_ = 0;
    std::uint64_t counter_ = 0;
    std::uint64_t key_ = detail::mix64(0);
};

} // namespace bellsim
