#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "zproc/rng.hpp"

using namespace zproc;

namespace {

std::string fixture_path(const char* name) {
    return std::string(ZPROC_FIXTURE_DIR) + "/" + name;
}

}  // namespace

TEST_SUITE("rng") {

TEST_CASE("philox4x32-10 known-answer vectors") {
    // Reference vectors from the Random123 distribution.
    auto out = RngStream::philox4x32({0, 0, 0, 0}, {0, 0});
    CHECK(out == std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});

    out = RngStream::philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                {0xffffffffu, 0xffffffffu});
    CHECK(out == std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});

    out = RngStream::philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                {0xa4093822u, 0x299f31d0u});
    CHECK(out == std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("committed stream fixture reproduces bit-exactly") {
    std::ifstream in(fixture_path("rng_vectors.txt"));
    REQUIRE(in.good());
    std::string line;
    int checked = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string seed_s, index_s, values_s;
        REQUIRE(std::getline(ls, seed_s, ','));
        REQUIRE(std::getline(ls, index_s, ','));
        REQUIRE(std::getline(ls, values_s));

        RngStream rng(std::stoull(seed_s), std::stoull(index_s));
        std::istringstream vs(values_s);
        std::string hex;
        while (vs >> hex) {
            CHECK(rng.next_u64() == std::stoull(hex, nullptr, 16));
        }
        ++checked;
    }
    CHECK(checked >= 10);
}

TEST_CASE("identical seed and request sequence is bit-identical") {
    RngStream a(9001, 3), b(9001, 3);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
    CHECK(a.normals(17) == b.normals(17));
}

TEST_CASE("empty request yields empty output") {
    RngStream rng(42, 0);
    CHECK(rng.normals(0).empty());
}

TEST_CASE("derived streams differ almost everywhere") {
    RngStream a(7, 0), b(7, 1);
    const std::vector<double> xa = a.normals(1000);
    const std::vector<double> xb = b.normals(1000);
    int differs = 0;
    for (std::size_t i = 0; i < 1000; ++i) differs += (xa[i] != xb[i]) ? 1 : 0;
    CHECK(differs >= 990);
}

TEST_CASE("normals pass the law-of-large-numbers check") {
    RngStream rng(42, 0);
    const std::vector<double> xs = rng.normals(1000000);
    CHECK(std::fabs(ztest::mean_of(xs)) <= 0.005);
    CHECK(std::fabs(ztest::variance_of(xs) - 1.0) <= 0.01);
}

TEST_CASE("uniforms stay strictly inside the unit interval") {
    RngStream rng(5, 5);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform01();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

}  // TEST_SUITE
