#include <string>

#include "doctest.h"

#include "beamlab/mask_io.hpp"
#include "test_support.hpp"

using beamlab::IoError;
using beamlab::ValidationError;
namespace geo = beamlab::geo;
namespace io = beamlab::io;
using testutil::TempDir;

TEST_SUITE("mask_io") {

TEST_CASE("pbm packs rows most significant bit first") {
    geo::BinaryMask m(10, 2);
    m.set(0, 0);
    m.set(9, 0);
    m.set(4, 1);
    const std::string pbm = io::format_pbm(m);
    const std::string header = "P4\n10 2\n";
    REQUIRE(pbm.size() == header.size() + 4);  // two bytes per 10-wide row
    CHECK(pbm.substr(0, header.size()) == header);
    const auto byte = [&](int i) {
        return static_cast<unsigned char>(pbm[header.size() + i]);
    };
    CHECK(byte(0) == 0b10000000);  // x=0 in the top row
    CHECK(byte(1) == 0b01000000);  // x=9 lands in bit 6 of the second byte
    CHECK(byte(2) == 0b00001000);  // x=4 in the bottom row
    CHECK(byte(3) == 0b00000000);
}

TEST_CASE("pbm row width multiple of eight has no padding") {
    geo::BinaryMask m(8, 1);
    for (int x = 0; x < 8; ++x) m.set(x, 0);
    const std::string pbm = io::format_pbm(m);
    CHECK(pbm == std::string("P4\n8 1\n") + '\xFF');
}

TEST_CASE("pgm writes one byte per pixel") {
    geo::BinaryMask m(3, 2);
    m.set(1, 0);
    m.set(2, 1);
    const std::string pgm = io::format_pgm(m);
    const std::string header = "P5\n3 2\n255\n";
    REQUIRE(pgm.size() == header.size() + 6);
    CHECK(pgm.substr(0, header.size()) == header);
    const char* px = pgm.data() + header.size();
    CHECK(static_cast<unsigned char>(px[0]) == 0);
    CHECK(static_cast<unsigned char>(px[1]) == 255);
    CHECK(static_cast<unsigned char>(px[2]) == 0);
    CHECK(static_cast<unsigned char>(px[3]) == 0);
    CHECK(static_cast<unsigned char>(px[4]) == 0);
    CHECK(static_cast<unsigned char>(px[5]) == 255);
}

TEST_CASE("empty masks are rejected") {
    CHECK_THROWS_AS(io::format_pbm(geo::BinaryMask()), ValidationError);
    CHECK_THROWS_AS(io::format_pgm(geo::BinaryMask()), ValidationError);
}

TEST_CASE("write failures surface as io errors") {
    TempDir tmp;
    geo::BinaryMask m(4, 4);
    m.set(2, 2);
    const auto path = tmp.file("mask.pbm");
    io::write_pbm(m, path);
    CHECK(testutil::read_file(path) == io::format_pbm(m));
    io::write_pgm(m, tmp.file("mask.pgm"));
    CHECK(testutil::read_file(tmp.file("mask.pgm")) == io::format_pgm(m));

    CHECK_THROWS_AS(io::write_pbm(m, tmp.path() / "no_such_dir" / "mask.pbm"), IoError);
    CHECK_THROWS_AS(io::write_pgm(m, tmp.path() / "no_such_dir" / "mask.pgm"), IoError);
}

}  // TEST_SUITE("mask_io")
