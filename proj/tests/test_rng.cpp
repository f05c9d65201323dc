#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "dbose/parallel.hpp"
#include "dbose/rng.hpp"

using namespace dbose;

// Random123 known-answer vectors for philox4x32-10
TEST(Philox, KnownAnswers) {
    auto a = detail::philox4x32({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(a[0], 0x6627e8d5u);
    EXPECT_EQ(a[1], 0xe169c58du);
    EXPECT_EQ(a[2], 0xbc57ac4cu);
    EXPECT_EQ(a[3], 0x9b00dbd8u);
    auto b = detail::philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(b[0], 0x408f276du);
    EXPECT_EQ(b[1], 0x41c83b0eu);
    EXPECT_EQ(b[2], 0xa20bc7c6u);
    EXPECT_EQ(b[3], 0x6d5451fdu);
    auto c = detail::philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(c[0], 0xd16cfe09u);
    EXPECT_EQ(c[1], 0x94fdccebu);
    EXPECT_EQ(c[2], 0x5001e420u);
    EXPECT_EQ(c[3], 0x24126ea1u);
}

TEST(Stream, ReproducibleAndIndependentOfCallOrder) {
    Stream a(7, 3, Channel::radial), b(7, 3, Channel::radial);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
    // consuming another stream in between changes nothing
    Stream c(7, 3, Channel::radial), other(7, 4, Channel::radial);
    Stream d(7, 3, Channel::radial);
    std::vector<std::uint64_t> x, y;
    for (int i = 0; i < 50; ++i) {
        x.push_back(c.next_u64());
        other.next_u64();
    }
    for (int i = 0; i < 50; ++i) y.push_back(d.next_u64());
    EXPECT_EQ(x, y);
}

TEST(Stream, DistinctSeedsPathsChannels) {
    std::set<std::uint64_t> first;
    for (std::uint64_t seed : {1ull, 2ull, 1ull << 40})
        for (std::uint64_t path : {0ull, 1ull, 1ull << 33})
            for (Channel ch : {Channel::radial, Channel::angular, Channel::init, free_channel(3)})
                first.insert(Stream(seed, path, ch).next_u64());
    EXPECT_EQ(first.size(), 3u * 3u * 4u);
}

TEST(Stream, UniformMoments) {
    Stream s(1, 0, Channel::radial);
    const int n = 200000;
    double m = 0, m2 = 0, lo = 1, hi = 0;
    for (int i = 0; i < n; ++i) {
        double u = s.uniform();
        m += u;
        m2 += u * u;
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    m /= n;
    m2 /= n;
    EXPECT_NEAR(m, 0.5, 4 * std::sqrt(1.0 / 12 / n));
    EXPECT_NEAR(m2 - m * m, 1.0 / 12, 3e-3);
    EXPECT_GT(lo, 0.0);
    EXPECT_LT(hi, 1.0);
}

TEST(Stream, NormalMoments) {
    Stream s(2, 5, Channel::angular);
    const int n = 200000;
    double m = 0, m2 = 0, m4 = 0;
    for (int i = 0; i < n; ++i) {
        double z = s.normal();
        m += z;
        m2 += z * z;
        m4 += z * z * z * z;
    }
    m /= n;
    m2 /= n;
    m4 /= n;
    EXPECT_NEAR(m, 0.0, 4 / std::sqrt(double(n)));
    EXPECT_NEAR(m2, 1.0, 4 * std::sqrt(2.0 / n));
    EXPECT_NEAR(m4, 3.0, 4 * std::sqrt(96.0 / n));
}

TEST(Parallel, OrderedSumIndependentOfWorkers) {
    std::vector<double> v(10007);
    Stream s(3, 0, Channel::radial);
    for (auto& x : v) x = s.normal() * 1e6 + s.uniform();
    std::vector<double> w1(v.size()), w4(v.size());
    parallel_for(long(v.size()), 1, [&](long i) { w1[i] = v[i] * 2; });
    parallel_for(long(v.size()), 4, [&](long i) { w4[i] = v[i] * 2; });
    EXPECT_EQ(w1, w4);
    EXPECT_EQ(ordered_sum(w1), ordered_sum(w4));
    EXPECT_GE(resolve_workers(0), 1);
    EXPECT_EQ(resolve_workers(3), 3);
}
