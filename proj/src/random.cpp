#include "bpsim/random.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bpsim {

RngStream::RngStream(std::uint64_t master_seed, const StreamKey& key) noexcept {
    std::uint64_t h = mix64(master_seed ^ 0x6a09e667f3bcc908ULL);
    h = mix64(h + key.node * 0xd1b54a32d192ed03ULL);
    h = mix64(h + key.sample * 0xabc98388fb8fac03ULL);
    h = mix64(h + static_cast<std::uint64_t>(key.purpose) * 0x8cb92ba72f3d8dd7ULL);
    h = mix64(h + key.step * 0xf1357aea2e62a9c5ULL);
    key_ = h;
}

namespace {

std::uint64_t poisson_inversion(RngStream& stream, double mean) {
    const double u = stream.next_unit();
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t n = 0;
    while (u >= cdf) {
        ++n;
        p *= mean / static_cast<double>(n);
        const double next = cdf + p;
        // CDF has saturated in floating point; u lies in the rounding gap.
        if (next == cdf) break;
        cdf = next;
    }
    return n;
}

// Hörmann (1993), "The transformed rejection method for generating Poisson
// random variables", algorithm PTRS.
std::uint64_t poisson_ptrs(RngStream& stream, double mean) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);

    for (;;) {
        const double u = stream.next_unit() - 0.5;
        const double v = stream.next_unit();
        const double us = 0.5 - std::fabs(u);
        const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            -mean + k * loglam - std::lgamma(k + 1.0)) {
            return static_cast<std::uint64_t>(k);
        }
    }
}

}  // namespace

std::uint64_t sample_poisson(RngStream& stream, double mean) {
    if (!std::isfinite(mean) || mean < 0.0) {
        throw std::invalid_argument("sample_poisson: mean must be finite and >= 0, got " +
                                    std::to_string(mean));
    }
    if (mean == 0.0) return 0;
    if (mean < 10.0) return poisson_inversion(stream, mean);
    return poisson_ptrs(stream, mean);
}

double sample_uniform(RngStream& stream, double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
        throw std::invalid_argument("sample_uniform: need finite lo <= hi");
    }
    if (lo == hi) return lo;
    const double x = lo + (hi - lo) * stream.next_unit();
    // lo + (hi-lo)*u can round up to hi for u close to 1.
    return x < hi ? x : std::nextafter(hi, lo);
}

std::uint64_t sample_index(RngStream& stream, std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("sample_index: n must be positive");
    // Lemire's nearly-divisionless bounded draw.
    unsigned __int128 m = static_cast<unsigned __int128>(stream.next_u64()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            m = static_cast<unsigned __int128>(stream.next_u64()) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

void ParamRanges::validate() const {
    auto check = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("invalid parameter range: ") + what);
    };
    check(std::isfinite(lambda_min) && std::isfinite(lambda_max), "lambda-min/lambda-max must be finite");
    check(lambda_min >= 0.0, "lambda-min must be >= 0");
    check(lambda_min <= lambda_max, "lambda-min must be <= lambda-max");
    check(std::isfinite(m_min) && std::isfinite(m_max), "m-min/m-max must be finite");
    check(m_min >= 0.0, "m-min must be >= 0");
    check(m_min <= m_max, "m-min must be <= m-max");
    check(m_max <= kMaxRateCap, "m-max exceeds the finite rate cap");
    check(lambda_max <= kMaxRateCap, "lambda-max exceeds the finite rate cap");
}

NodeParams draw_node_params(std::uint64_t master_seed, std::size_t num_nodes,
                            const ParamRanges& ranges) {
    ranges.validate();
    NodeParams params;
    params.lambda.resize(num_nodes);
    params.m.resize(num_nodes);
    for (std::size_t i = 0; i < num_nodes; ++i) {
        RngStream s(master_seed, {i, 0, Purpose::NodeParams, 0});
        params.lambda[i] = sample_uniform(s, ranges.lambda_min, ranges.lambda_max);
        params.m[i] = sample_uniform(s, ranges.m_min, ranges.m_max);
    }
    return params;
}

}  // namespace bpsim
