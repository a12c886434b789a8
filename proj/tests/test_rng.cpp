#include <doctest.h>

#include "tracedit/rng.hpp"

#include <cmath>
#include <numeric>

using namespace tracedit;

TEST_CASE("same purpose and seed replays an identical sequence") {
    RngStream a(RngPurpose::corruption_noise, 1234);
    RngStream b(RngPurpose::corruption_noise, 1234);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    auto ta = RngStream(RngPurpose::init, 7).gaussian_tensor<double>({4, 5});
    auto tb = RngStream(RngPurpose::init, 7).gaussian_tensor<double>({4, 5});
    for (int64_t i = 0; i < ta.size(); ++i) CHECK(ta.data()[i] == tb.data()[i]);
}

TEST_CASE("different purposes and seeds decorrelate") {
    RngStream a(RngPurpose::data_gen, 1);
    RngStream b(RngPurpose::shuffle, 1);
    RngStream c(RngPurpose::data_gen, 2);
    CHECK(a.next_u64() != b.next_u64());
    RngStream a2(RngPurpose::data_gen, 1);
    CHECK(a2.next_u64() != c.next_u64());
}

TEST_CASE("gaussian with zero std is the mean") {
    RngStream s(RngPurpose::init, 9);
    auto t = s.gaussian_tensor<float>({3, 3}, 0.0, 0.0);
    for (int64_t i = 0; i < t.size(); ++i) CHECK(t.data()[i] == 0.0f);
    RngStream s2(RngPurpose::init, 9);
    CHECK(s2.gaussian(2.5, 0.0) == doctest::Approx(2.5));
}

TEST_CASE("negative std rejected") {
    RngStream s(RngPurpose::init, 1);
    CHECK_THROWS_AS(s.gaussian(0.0, -1.0), std::invalid_argument);
}

TEST_CASE("gaussian sample statistics over 1e5 draws") {
    RngStream s(RngPurpose::corruption_noise, 42);
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double v = s.gaussian();
        sum += v;
        sumsq += v * v;
    }
    double mean = sum / n;
    double std = std::sqrt(sumsq / n - mean * mean);
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(std - 1.0) < 0.02);
}

TEST_CASE("uniform draws land in [0,1) with sane statistics") {
    RngStream s(RngPurpose::data_gen, 3);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        double v = s.uniform();
        REQUIRE(v >= 0.0);
        REQUIRE(v < 1.0);
        sum += v;
    }
    CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("uniform_index covers the range and rejects n=0") {
    RngStream s(RngPurpose::shuffle, 11);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) hits[s.uniform_index(7)]++;
    for (int h : hits) CHECK(h > 700);
    CHECK_THROWS_AS(s.uniform_index(0), std::invalid_argument);
}

TEST_CASE("substreams are independent of the parent counter") {
    RngStream parent(RngPurpose::corruption_noise, 5);
    auto child_before = parent.substream(3);
    parent.next_u64();
    auto child_after = parent.substream(3);
    CHECK(child_before.next_u64() == child_after.next_u64());

    auto c1 = parent.substream(1);
    auto c2 = parent.substream(2);
    CHECK(c1.next_u64() != c2.next_u64());
}

TEST_CASE("shuffle is a seeded permutation") {
    std::vector<int> v(20);
    std::iota(v.begin(), v.end(), 0);
    auto w = v;
    RngStream(RngPurpose::shuffle, 8).shuffle(v);
    RngStream(RngPurpose::shuffle, 8).shuffle(w);
    CHECK(v == w);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> expect(20);
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(sorted == expect);
}
