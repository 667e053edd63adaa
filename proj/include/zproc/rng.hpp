#pragma once

// Counter-based random streams (Philox4x32-10). A stream is identified by
// (seed, stream index); stream index selects the high 64 bits of the 128-bit
// counter, so distinct streams draw from disjoint counter blocks and never
// overlap. Output is platform-independent; the first blocks of reference
// streams are pinned by tests/fixtures/rng_vectors.txt.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace zproc {

class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    std::uint64_t next_u64();
    double uniform01();  // strictly inside (0, 1)
    double normal();     // standard normal, Marsaglia polar method
    double exponential(double rate);

    void fill_normals(std::span<double> out);
    std::vector<double> normals(std::size_t n);

    // Raw Philox4x32-10 block function, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                                   std::array<std::uint32_t, 2> key);

private:
    void refill();

    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t block_ = 0;  // low 64 bits of the counter
    std::array<std::uint64_t, 2> buf_{};
    int buf_pos_ = 2;  // consumed
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace zproc
