#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

#include "ksgdiffuse/grid.hpp"
#include "ksgdiffuse/mask.hpp"

namespace ksg {

/// File or format failure (maps to CLI exit code 3).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Domain : std::uint8_t { Image = 0, Kspace = 1 };

namespace io_detail {

inline void put_u32(std::string& buf, std::uint32_t v) {
    buf.push_back(static_cast<char>(v & 0xFF));
    buf.push_back(static_cast<char>((v >> 8) & 0xFF));
    buf.push_back(static_cast<char>((v >> 16) & 0xFF));
    buf.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline void put_f32(std::string& buf, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

inline std::uint32_t get_u32(const std::string& buf, std::size_t off) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off])) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + 1])) << 8) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + 2])) << 16) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + 3])) << 24);
}

inline float get_f32(const std::string& buf, std::size_t off) {
    const std::uint32_t bits = get_u32(buf, off);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

/// Write-to-temp-then-rename so readers never observe partial files.
inline void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw IoError("rename failed: " + path.string() + ": " + ec.message());
    }
}

inline std::string read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

} // namespace io_detail

// ---- CIM1: complex image / k-space container -------------------------------
// magic "CIMGv1\0\0", u32 LE H, u32 LE W, u8 domain (0=image, 1=kspace),
// 3 pad bytes, then H*W f32 LE (re, im) pairs, row-major.

inline constexpr char kCimMagic[8] = {'C', 'I', 'M', 'G', 'v', '1', '\0', '\0'};
inline constexpr char kMskMagic[8] = {'M', 'A', 'S', 'K', 'v', '1', '\0', '\0'};

inline std::string encode_cim(const ComplexGrid& g, Domain domain) {
    std::string buf;
    buf.reserve(20 + g.size() * 8);
    buf.append(kCimMagic, 8);
    io_detail::put_u32(buf, static_cast<std::uint32_t>(g.height()));
    io_detail::put_u32(buf, static_cast<std::uint32_t>(g.width()));
    buf.push_back(static_cast<char>(domain));
    buf.append(3, '\0');
    for (std::size_t i = 0; i < g.size(); ++i) {
        io_detail::put_f32(buf, static_cast<float>(g[i].real()));
        io_detail::put_f32(buf, static_cast<float>(g[i].imag()));
    }
    return buf;
}

struct CimFile {
    ComplexGrid grid;
    Domain domain;
};

inline CimFile decode_cim(const std::string& bytes, const std::string& what) {
    if (bytes.size() < 20 || std::memcmp(bytes.data(), kCimMagic, 8) != 0) {
        throw IoError(what + ": not a CIM1 file");
    }
    const std::uint32_t h = io_detail::get_u32(bytes, 8);
    const std::uint32_t w = io_detail::get_u32(bytes, 12);
    const auto tag = static_cast<std::uint8_t>(bytes[16]);
    if (tag > 1) throw IoError(what + ": bad domain tag");
    if (h == 0 || w == 0 || bytes.size() != 20 + std::size_t(h) * w * 8) {
        throw IoError(what + ": truncated or inconsistent CIM1 payload");
    }
    ComplexGrid g(h, w);
    std::size_t off = 20;
    for (std::size_t i = 0; i < g.size(); ++i, off += 8) {
        g[i] = Complex(io_detail::get_f32(bytes, off), io_detail::get_f32(bytes, off + 4));
    }
    return {std::move(g), static_cast<Domain>(tag)};
}

inline void write_cim(const std::filesystem::path& path, const ComplexGrid& g, Domain domain) {
    io_detail::atomic_write(path, encode_cim(g, domain));
}

inline CimFile read_cim(const std::filesystem::path& path) {
    return decode_cim(io_detail::read_all(path), path.string());
}

// ---- MSK1: binary mask ------------------------------------------------------
// magic "MASKv1\0\0", u32 LE H, u32 LE W, then H*W bytes in {0,1}, row-major.

inline std::string encode_mask(const Mask& m) {
    std::string buf;
    buf.reserve(16 + m.size());
    buf.append(kMskMagic, 8);
    io_detail::put_u32(buf, static_cast<std::uint32_t>(m.height()));
    io_detail::put_u32(buf, static_cast<std::uint32_t>(m.width()));
    for (std::size_t i = 0; i < m.size(); ++i) buf.push_back(static_cast<char>(m[i]));
    return buf;
}

inline Mask decode_mask(const std::string& bytes, const std::string& what) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMskMagic, 8) != 0) {
        throw IoError(what + ": not a MSK1 file");
    }
    const std::uint32_t h = io_detail::get_u32(bytes, 8);
    const std::uint32_t w = io_detail::get_u32(bytes, 12);
    if (h == 0 || w == 0 || bytes.size() != 16 + std::size_t(h) * w) {
        throw IoError(what + ": truncated MSK1 payload");
    }
    Mask m(h, w, MaskStructure::Dense);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto v = static_cast<std::uint8_t>(bytes[16 + i]);
        if (v > 1) throw IoError(what + ": mask entries must be 0 or 1");
        m[i] = v;
    }
    return m;
}

inline void write_mask(const std::filesystem::path& path, const Mask& m) {
    io_detail::atomic_write(path, encode_mask(m));
}

inline Mask read_mask(const std::filesystem::path& path) {
    return decode_mask(io_detail::read_all(path), path.string());
}

// ---- raw f32 grid (variance maps) with JSON shape sidecar -------------------

inline void write_f32_grid(const std::filesystem::path& path, const RealGrid& g) {
    std::string buf;
    buf.reserve(g.size() * 4);
    for (std::size_t i = 0; i < g.size(); ++i) {
        io_detail::put_f32(buf, static_cast<float>(g[i]));
    }
    io_detail::atomic_write(path, buf);
    std::string sidecar = "{\"height\": " + std::to_string(g.height()) +
                          ", \"width\": " + std::to_string(g.width()) +
                          ", \"dtype\": \"f32le\"}\n";
    std::filesystem::path sc = path;
    sc += ".json";
    io_detail::atomic_write(sc, sidecar);
}

inline RealGrid read_f32_grid(const std::filesystem::path& path, std::size_t h, std::size_t w) {
    const std::string bytes = io_detail::read_all(path);
    if (bytes.size() != h * w * 4) throw IoError(path.string() + ": size mismatch");
    RealGrid g(h, w);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = io_detail::get_f32(bytes, i * 4);
    }
    return g;
}

// ---- 8-bit grayscale PNG (non-canonical, human inspection only) -------------
// Uses stored (uncompressed) deflate blocks so no compression library is
// needed; output is a valid PNG, just not a small one.

namespace io_detail {

inline std::uint32_t crc32(const std::string& data) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t n = 0; n < 256; ++n) {
            std::uint32_t c = n;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[n] = c;
        }
        return t;
    }();
    std::uint32_t c = 0xFFFFFFFFu;
    for (unsigned char ch : data) c = table[(c ^ ch) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

inline void put_u32_be(std::string& buf, std::uint32_t v) {
    buf.push_back(static_cast<char>((v >> 24) & 0xFF));
    buf.push_back(static_cast<char>((v >> 16) & 0xFF));
    buf.push_back(static_cast<char>((v >> 8) & 0xFF));
    buf.push_back(static_cast<char>(v & 0xFF));
}

inline void png_chunk(std::string& out, const char* type, const std::string& payload) {
    put_u32_be(out, static_cast<std::uint32_t>(payload.size()));
    std::string body(type, 4);
    body += payload;
    out += body;
    put_u32_be(out, crc32(body));
}

inline std::string zlib_stored(const std::string& raw) {
    std::string z;
    z.push_back('\x78');
    z.push_back('\x01');
    std::size_t off = 0;
    do {
        const std::size_t n = std::min<std::size_t>(raw.size() - off, 65535);
        z.push_back(off + n == raw.size() ? '\x01' : '\x00');
        z.push_back(static_cast<char>(n & 0xFF));
        z.push_back(static_cast<char>((n >> 8) & 0xFF));
        z.push_back(static_cast<char>(~n & 0xFF));
        z.push_back(static_cast<char>((~n >> 8) & 0xFF));
        z.append(raw, off, n);
        off += n;
    } while (off < raw.size());
    std::uint32_t a = 1, b = 0;
    for (unsigned char ch : raw) {
        a = (a + ch) % 65521;
        b = (b + a) % 65521;
    }
    put_u32_be(z, (b << 16) | a);
    return z;
}

} // namespace io_detail

/// Min-max normalized 8-bit magnitude PNG.
inline void write_png_magnitude(const std::filesystem::path& path, const ComplexImage& img) {
    const std::size_t h = img.height(), w = img.width();
    double lo = std::abs(img[0]), hi = lo;
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double m = std::abs(img[i]);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
    std::string raw;
    raw.reserve(h * (w + 1));
    for (std::size_t r = 0; r < h; ++r) {
        raw.push_back('\0'); // filter type: none
        for (std::size_t c = 0; c < w; ++c) {
            const double m = (std::abs(img(r, c)) - lo) * scale;
            raw.push_back(static_cast<char>(static_cast<int>(m + 0.5)));
        }
    }
    std::string png("\x89PNG\r\n\x1a\n", 8);
    std::string ihdr;
    io_detail::put_u32_be(ihdr, static_cast<std::uint32_t>(w));
    io_detail::put_u32_be(ihdr, static_cast<std::uint32_t>(h));
    ihdr += std::string("\x08\x00\x00\x00\x00", 5); // 8-bit grayscale
    io_detail::png_chunk(png, "IHDR", ihdr);
    io_detail::png_chunk(png, "IDAT", io_detail::zlib_stored(raw));
    io_detail::png_chunk(png, "IEND", "");
    io_detail::atomic_write(path, png);
}

} // namespace ksg
