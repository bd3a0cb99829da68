#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "ksgdiffuse/io.hpp"
#include "ksgdiffuse/mask.hpp"
#include "ksgdiffuse/phantom.hpp"
#include "ksgdiffuse/rng.hpp"

using namespace ksg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ksg_io_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

// Round through the encoder itself so the fixture is f32-exact by
// construction (a plain double->float->double cast loop is mis-optimized by
// some compilers at -O3).
ComplexImage f32_exact_image(std::size_t h, std::size_t w, std::uint64_t seed) {
    const ComplexImage raw = CounterRng(seed, RngPurpose::Phantom).normal_field(0, h, w, 1.0);
    return ComplexImage(decode_cim(encode_cim(raw, Domain::Image), "round").grid);
}

} // namespace

TEST_CASE("cim round trip is exact for f32-representable data") {
    TempDir tmp;
    const ComplexImage img = f32_exact_image(7, 11, 1);
    const fs::path p = tmp.path / "x.cim";
    write_cim(p, img, Domain::Image);
    const CimFile back = read_cim(p);
    CHECK(back.domain == Domain::Image);
    REQUIRE(back.grid.height() == 7);
    REQUIRE(back.grid.width() == 11);
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(back.grid[i] == img[i]);

    write_cim(p, img, Domain::Kspace);
    CHECK(read_cim(p).domain == Domain::Kspace);
    // byte determinism
    CHECK(encode_cim(img, Domain::Image) == encode_cim(img, Domain::Image));
}

TEST_CASE("cim rejects malformed input") {
    TempDir tmp;
    const fs::path p = tmp.path / "bad.cim";
    {
        std::ofstream out(p, std::ios::binary);
        out << "NOTACIM1FILE";
    }
    CHECK_THROWS_AS(read_cim(p), IoError);
    // truncated payload
    const ComplexImage img = f32_exact_image(4, 4, 2);
    std::string bytes = encode_cim(img, Domain::Image);
    bytes.resize(bytes.size() - 5);
    CHECK_THROWS_AS(decode_cim(bytes, "trunc"), IoError);
    CHECK_THROWS_AS(read_cim(tmp.path / "missing.cim"), IoError);
}

TEST_CASE("mask round trip") {
    TempDir tmp;
    const Mask m = make_cartesian_mask(6, 32, 4.0, 0.08, 5);
    const fs::path p = tmp.path / "m.msk";
    write_mask(p, m);
    const Mask back = read_mask(p);
    REQUIRE(back.height() == 6);
    REQUIRE(back.width() == 32);
    CHECK(back.entries() == m.entries());

    std::string bytes = encode_mask(m);
    bytes[16] = 2; // invalid entry
    CHECK_THROWS_AS(decode_mask(bytes, "bad"), IoError);
    bytes.resize(10);
    CHECK_THROWS_AS(decode_mask(bytes, "short"), IoError);
}

TEST_CASE("f32 grid with sidecar") {
    TempDir tmp;
    RealGrid g(3, 5);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<float>(0.25 * i);
    const fs::path p = tmp.path / "var.f32";
    write_f32_grid(p, g);
    CHECK(fs::exists(tmp.path / "var.f32.json"));
    const RealGrid back = read_f32_grid(p, 3, 5);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(back[i] == g[i]);
    CHECK_THROWS_AS(read_f32_grid(p, 4, 5), IoError);

    std::ifstream sc(tmp.path / "var.f32.json");
    std::string sidecar((std::istreambuf_iterator<char>(sc)), std::istreambuf_iterator<char>());
    CHECK(sidecar.find("\"height\": 3") != std::string::npos);
    CHECK(sidecar.find("\"width\": 5") != std::string::npos);
}

TEST_CASE("atomic writes leave no temp files behind") {
    TempDir tmp;
    const ComplexImage img = f32_exact_image(4, 4, 3);
    write_cim(tmp.path / "a.cim", img, Domain::Image);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(tmp.path)) {
        ++files;
        CHECK(e.path().extension() == ".cim");
    }
    CHECK(files == 1);
}

TEST_CASE("png export emits a well-formed grayscale image") {
    TempDir tmp;
    const ComplexImage img = smooth_bump(16, 24);
    const fs::path p = tmp.path / "x.png";
    write_png_magnitude(p, img);
    std::ifstream in(p, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE(bytes.size() > 50);
    CHECK(bytes.compare(0, 8, "\x89PNG\r\n\x1a\n", 8) == 0);
    // IHDR: width 24, height 16, bit depth 8, color type 0
    CHECK(static_cast<unsigned char>(bytes[19]) == 24);
    CHECK(static_cast<unsigned char>(bytes[23]) == 16);
    CHECK(static_cast<unsigned char>(bytes[24]) == 8);
    CHECK(static_cast<unsigned char>(bytes[25]) == 0);
    CHECK(bytes.find("IEND") != std::string::npos);
}
