#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <limits>
#include <vector>

#include "bpsim/random.hpp"

using namespace bpsim;

namespace {

// Poisson pmf via log-gamma, independent of the sampler's recurrences.
double poisson_pmf(double mean, unsigned k) {
    return std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
}

struct Moments {
    double mean = 0.0;
    double var = 0.0;
};

Moments poisson_moments(std::uint64_t seed, double mean, std::size_t draws) {
    RngStream s(seed, {3, 1, Purpose::Test, static_cast<std::uint64_t>(mean * 1000)});
    double sum = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < draws; ++k) {
        const auto x = static_cast<double>(sample_poisson(s, mean));
        sum += x;
        sq += x * x;
    }
    const double n = static_cast<double>(draws);
    const double m = sum / n;
    return {m, (sq - n * m * m) / (n - 1.0)};
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("mix64 is the SplitMix64 finalizer") {
    // Reference outputs of SplitMix64 seeded with 0: state advances by gamma,
    // output is the finalizer of the state.
    CHECK(mix64(0x9e3779b97f4a7c15ULL) == 0xe220a8397b1dcdafULL);
    CHECK(mix64(2 * 0x9e3779b97f4a7c15ULL) == 0x6e789e6aa1b965f4ULL);
}

TEST_CASE("poisson degenerate and invalid means") {
    RngStream s(1, {});
    CHECK(sample_poisson(s, 0.0) == 0);
    CHECK_THROWS_AS(sample_poisson(s, -0.5), std::invalid_argument);
    CHECK_THROWS_AS(sample_poisson(s, std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
    CHECK_THROWS_AS(sample_poisson(s, std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST_CASE("poisson mean and variance within 4 SE over 1e6 draws") {
    constexpr std::size_t kDraws = 1000000;
    for (double mean : {0.1, 0.3, 1.0, 5.0, 10.0, 37.5}) {
        CAPTURE(mean);
        const Moments m = poisson_moments(11, mean, kDraws);
        const double se_mean = std::sqrt(mean / kDraws);
        const double se_var = std::sqrt((mean + 2.0 * mean * mean) / kDraws);
        CHECK(std::fabs(m.mean - mean) <= 4.0 * se_mean);
        CHECK(std::fabs(m.var - mean) <= 4.0 * se_var);
    }
}

TEST_CASE("poisson frequencies match the pmf on both sampler branches") {
    constexpr std::size_t kDraws = 400000;
    for (double mean : {3.0, 10.0, 25.0}) {
        CAPTURE(mean);
        RngStream s(5, {0, 0, Purpose::Test, static_cast<std::uint64_t>(mean)});
        std::vector<double> count(200, 0.0);
        for (std::size_t k = 0; k < kDraws; ++k) {
            const auto x = sample_poisson(s, mean);
            if (x < count.size()) count[x] += 1.0;
        }
        for (unsigned k = 0; k < count.size(); ++k) {
            const double p = poisson_pmf(mean, k);
            if (p * kDraws < 50.0) continue;
            const double se = std::sqrt(kDraws * p * (1.0 - p));
            CAPTURE(k);
            CHECK(std::fabs(count[k] - kDraws * p) <= 5.0 * se);
        }
    }
}

TEST_CASE("uniform sampler") {
    RngStream s(2, {});
    CHECK(sample_uniform(s, 2.0, 2.0) == 2.0);
    CHECK_THROWS_AS(sample_uniform(s, 5.0, 1.0), std::invalid_argument);

    constexpr std::size_t kDraws = 1000000;
    for (auto [lo, hi] : {std::pair{0.1, 0.5}, std::pair{1.0, 5.0}}) {
        CAPTURE(lo);
        double sum = 0.0;
        bool inside = true;
        for (std::size_t k = 0; k < kDraws; ++k) {
            const double x = sample_uniform(s, lo, hi);
            inside = inside && x >= lo && x < hi;
            sum += x;
        }
        CHECK(inside);
        const double se = (hi - lo) / std::sqrt(12.0 * kDraws);
        CHECK(std::fabs(sum / kDraws - 0.5 * (lo + hi)) <= 4.0 * se);
    }
}

TEST_CASE("sample_index covers its range evenly") {
    RngStream s(3, {});
    std::vector<double> hits(7, 0.0);
    constexpr std::size_t kDraws = 700000;
    for (std::size_t k = 0; k < kDraws; ++k) hits[sample_index(s, 7)] += 1.0;
    const double p = 1.0 / 7.0;
    for (double h : hits) CHECK(std::fabs(h - kDraws * p) <= 5.0 * std::sqrt(kDraws * p * (1 - p)));
    CHECK(sample_index(s, 1) == 0);
}

TEST_CASE("streams are reproducible and depend on every key field") {
    const StreamKey key{4, 2, Purpose::Arrival, 9};
    RngStream a(42, key), b(42, key);
    for (int k = 0; k < 10000; ++k) REQUIRE(a.next_u64() == b.next_u64());

    const std::uint64_t base = RngStream(42, key).key();
    CHECK(RngStream(43, key).key() != base);
    CHECK(RngStream(42, {5, 2, Purpose::Arrival, 9}).key() != base);
    CHECK(RngStream(42, {4, 3, Purpose::Arrival, 9}).key() != base);
    CHECK(RngStream(42, {4, 2, Purpose::Departure, 9}).key() != base);
    CHECK(RngStream(42, {4, 2, Purpose::Arrival, 10}).key() != base);
}

TEST_CASE("neighbouring streams are uncorrelated") {
    constexpr std::size_t kDraws = 100000;
    const StreamKey base{10, 0, Purpose::Departure, 1};
    const StreamKey others[] = {{11, 0, Purpose::Departure, 1},
                                {10, 1, Purpose::Departure, 1},
                                {10, 0, Purpose::Arrival, 1},
                                {10, 0, Purpose::Departure, 2}};
    for (const StreamKey& other : others) {
        RngStream a(99, base), b(99, other);
        std::vector<double> xa(kDraws), xb(kDraws);
        for (std::size_t k = 0; k < kDraws; ++k) {
            xa[k] = static_cast<double>(sample_poisson(a, 2.0));
            xb[k] = static_cast<double>(sample_poisson(b, 2.0));
        }
        CHECK(std::fabs(correlation(xa, xb)) < 0.01);
    }
}

TEST_CASE("node parameters") {
    const ParamRanges ranges;
    const NodeParams p = draw_node_params(17, 1000, ranges);
    REQUIRE(p.size() == 1000);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(p.lambda[i] >= 0.1);
        CHECK(p.lambda[i] < 0.5);
        CHECK(p.m[i] >= 1.0);
        CHECK(p.m[i] < 5.0);
    }
    const NodeParams again = draw_node_params(17, 1000, ranges);
    CHECK(again.lambda == p.lambda);
    CHECK(again.m == p.m);
    // Node i's values depend only on (seed, i).
    const NodeParams prefix = draw_node_params(17, 10, ranges);
    for (std::size_t i = 0; i < 10; ++i) CHECK(prefix.lambda[i] == p.lambda[i]);
    CHECK(draw_node_params(18, 1000, ranges).lambda != p.lambda);

    const NodeParams fixed = draw_node_params(1, 5, ParamRanges{0.2, 0.2, 3.0, 3.0});
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(fixed.lambda[i] == 0.2);
        CHECK(fixed.m[i] == 3.0);
    }
}

TEST_CASE("parameter ranges are validated") {
    CHECK_NOTHROW(ParamRanges{}.validate());
    CHECK_THROWS_WITH_AS(ParamRanges({0.5, 0.1, 1.0, 5.0}).validate(), doctest::Contains("lambda"),
                         std::invalid_argument);
    CHECK_THROWS_AS(ParamRanges({-0.1, 0.5, 1.0, 5.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(ParamRanges({0.1, 0.5, 1.0, 2e6}).validate(), std::invalid_argument);
}
