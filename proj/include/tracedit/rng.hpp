#pragma once

// Counter-based random streams (Philox 4x32-10). Each stream is keyed by
// (purpose, seed, substream) and advances a 64-bit draw counter, so any draw
// sequence can be replayed independently of every other stream.

#include "tracedit/tensor.hpp"

#include <cstdint>
#include <stdexcept>

namespace tracedit {

enum class RngPurpose : uint32_t {
    data_gen = 0xD47A0001u,
    init = 0x1417A002u,
    corruption_noise = 0xC0124003u,
    shuffle = 0x5A0FF004u,
};

namespace detail {

struct PhiloxBlock {
    uint32_t x[4];
};

inline uint32_t mulhi(uint32_t a, uint32_t b) {
    return static_cast<uint32_t>((static_cast<uint64_t>(a) * b) >> 32);
}

inline PhiloxBlock philox4x32(uint64_t counter, uint64_t substream, uint32_t key0, uint32_t key1) {
    constexpr uint32_t kMul0 = 0xD2511F53u, kMul1 = 0xCD9E8D57u;
    constexpr uint32_t kWeyl0 = 0x9E3779B9u, kWeyl1 = 0xBB67AE85u;
    uint32_t c0 = static_cast<uint32_t>(counter);
    uint32_t c1 = static_cast<uint32_t>(counter >> 32);
    uint32_t c2 = static_cast<uint32_t>(substream);
    uint32_t c3 = static_cast<uint32_t>(substream >> 32);
    uint32_t k0 = key0, k1 = key1;
    for (int round = 0; round < 10; ++round) {
        uint32_t hi0 = mulhi(kMul0, c0), lo0 = kMul0 * c0;
        uint32_t hi1 = mulhi(kMul1, c2), lo1 = kMul1 * c2;
        uint32_t n0 = hi1 ^ c1 ^ k0;
        uint32_t n1 = lo1;
        uint32_t n2 = hi0 ^ c3 ^ k1;
        uint32_t n3 = lo0;
        c0 = n0; c1 = n1; c2 = n2; c3 = n3;
        k0 += kWeyl0; k1 += kWeyl1;
    }
    return PhiloxBlock{{c0, c1, c2, c3}};
}

}  // namespace detail

class RngStream {
public:
    RngStream(RngPurpose purpose, uint64_t seed, uint64_t substream = 0)
        : purpose_(purpose), seed_(seed), substream_(substream) {}

    RngPurpose purpose() const { return purpose_; }
    uint64_t seed() const { return seed_; }
    uint64_t counter() const { return counter_; }

    // Independent child stream; the parent's counter is not disturbed.
    RngStream substream(uint64_t id) const {
        return RngStream(purpose_, seed_, substream_ * 0x100000001B3ull + id + 1);
    }

    uint32_t next_u32() {
        if (buffered_ == 0) {
            block_ = detail::philox4x32(counter_++, substream_,
                                        static_cast<uint32_t>(seed_) ^ static_cast<uint32_t>(purpose_),
                                        static_cast<uint32_t>(seed_ >> 32) + static_cast<uint32_t>(purpose_));
            buffered_ = 4;
        }
        return block_.x[4 - buffered_--];
    }

    uint64_t next_u64() {
        uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    uint64_t uniform_index(uint64_t n) {
        if (n == 0) throw std::invalid_argument("rng: uniform_index with n=0");
        // Rejection sampling keeps the distribution exact.
        uint64_t limit = ~uint64_t(0) - (~uint64_t(0) % n);
        uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    double gaussian(double mean = 0.0, double std = 1.0) {
        if (std < 0.0) throw std::invalid_argument("rng: negative gaussian std");
        if (!have_spare_) {
            // Box-Muller on open-interval uniforms.
            double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
            double u2 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
            double radius = std::sqrt(-2.0 * std::log(u1));
            double angle = 2.0 * M_PI * u2;
            spare_ = radius * std::sin(angle);
            have_spare_ = true;
            return mean + std * radius * std::cos(angle);
        }
        have_spare_ = false;
        return mean + std * spare_;
    }

    template <typename T>
    Tensor<T> uniform_tensor(Shape shape) {
        Tensor<T> t = Tensor<T>::zeros(std::move(shape));
        for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = static_cast<T>(uniform());
        return t;
    }

    template <typename T>
    Tensor<T> gaussian_tensor(Shape shape, double mean = 0.0, double std = 1.0) {
        Tensor<T> t = Tensor<T>::zeros(std::move(shape));
        for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = static_cast<T>(gaussian(mean, std));
        return t;
    }

    template <typename Int>
    void shuffle(std::vector<Int>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    RngPurpose purpose_;
    uint64_t seed_;
    uint64_t substream_;
    uint64_t counter_ = 0;
    detail::PhiloxBlock block_{};
    int buffered_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace tracedit
