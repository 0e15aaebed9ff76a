#pragma once

// Counter-based random streams and the samplers the simulator needs.
//
// Every draw in a run is addressed by (master seed, node, sample, purpose,
// step). A stream is a small value: deriving one is a handful of integer
// mixes, so kernels build them on the fly inside parallel loops and the
// sequence seen by any (node, sample, step) never depends on thread count or
// iteration order.

#include <cstdint>
#include <span>
#include <vector>

namespace bpsim {

enum class Purpose : std::uint32_t {
    Arrival = 1,
    Departure = 2,
    Representative = 3,
    NodeParams = 4,
    Test = 5,
};

/// Stafford variant 13 finalizer (the SplitMix64 output function).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct StreamKey {
    std::uint64_t node = 0;
    std::uint64_t sample = 0;
    Purpose purpose = Purpose::Test;
    std::uint64_t step = 0;
};

class RngStream {
public:
    RngStream(std::uint64_t master_seed, const StreamKey& key) noexcept;

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return mix64(key_ + counter_ * kGamma);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_unit() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    std::uint64_t key() const noexcept { return key_; }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Exact Poisson(mean) draw: sequential inversion below mean 10, Hörmann's
/// transformed rejection (PTRS) above. Throws std::invalid_argument for
/// negative or non-finite means.
std::uint64_t sample_poisson(RngStream& stream, double mean);

/// Uniform in [lo, hi); returns lo when lo == hi. Throws if lo > hi.
double sample_uniform(RngStream& stream, double lo, double hi);

/// Uniform integer in [0, n). n must be positive.
std::uint64_t sample_index(RngStream& stream, std::uint64_t n);

struct ParamRanges {
    double lambda_min = 0.1;
    double lambda_max = 0.5;
    double m_min = 1.0;
    double m_max = 5.0;

    static constexpr double kMaxRateCap = 1.0e6;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

struct NodeParams {
    std::vector<double> lambda;  // external arrival rate per unit time
    std::vector<double> m;       // base service rate per unit time

    std::size_t size() const noexcept { return lambda.size(); }
};

/// Draws (lambda_i, m_i) for every node from the keyed NodeParams streams.
/// Node i's values depend only on (seed, i).
NodeParams draw_node_params(std::uint64_t master_seed, std::size_t num_nodes,
                            const ParamRanges& ranges);

}  // namespace bpsim
