// DNP1 test server speaking the denoiser plugin protocol on stdio.
//
// Modes:
//   echo       reply with the request payload
//   zero       reply with a zero field
//   gaussian   exact Gaussian-prior noise predictor (--mu CIM1, --s2, cosine T)
//   reject     handshake accept = 0
//   bad-magic  wrong handshake magic
//   bad-opcode respond with an unexpected opcode
//   midframe   send half a response frame, then close
//   hang       accept requests but never respond
//   nonfinite  respond with NaN payload

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"

#include "ksgdiffuse/denoiser.hpp"
#include "ksgdiffuse/io.hpp"
#include "ksgdiffuse/schedule.hpp"

using namespace ksg;

namespace {

bool read_exact(void* dst, std::size_t n) {
    auto* p = static_cast<std::uint8_t*>(dst);
    std::size_t got = 0;
    while (got < n) {
        const ssize_t r = ::read(0, p + got, n - got);
        if (r <= 0) return false;
        got += static_cast<std::size_t>(r);
    }
    return true;
}

bool write_exact(const void* src, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(src);
    std::size_t sent = 0;
    while (sent < n) {
        const ssize_t r = ::write(1, p + sent, n - sent);
        if (r <= 0) return false;
        sent += static_cast<std::size_t>(r);
    }
    return true;
}

std::uint32_t get_u32le(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DNP1 protocol test server"};
    std::string mode = "echo";
    std::string mu_path;
    double s2 = 1.0;
    app.add_option("--mode", mode)->capture_default_str();
    app.add_option("--mu", mu_path, "CIM1 prior mean for gaussian mode");
    app.add_option("--s2", s2)->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    std::uint8_t hello[16];
    if (!read_exact(hello, 16) || std::memcmp(hello, "DNP1", 4) != 0) return 1;
    const std::uint32_t h = get_u32le(hello + 4);
    const std::uint32_t w = get_u32le(hello + 8);
    const std::uint32_t T = get_u32le(hello + 12);

    if (mode == "bad-magic") {
        const char reply[5] = {'X', 'X', 'X', 'X', 1};
        write_exact(reply, 5);
        return 0;
    }
    const char accept = mode == "reject" ? 0 : 1;
    const char reply[5] = {'D', 'N', 'P', '1', accept};
    if (!write_exact(reply, 5)) return 1;
    if (mode == "reject") return 0;

    std::unique_ptr<GaussianPriorDenoiser> gauss;
    std::unique_ptr<Schedule> schedule;
    if (mode == "gaussian") {
        if (mu_path.empty()) return 1;
        CimFile mu = read_cim(mu_path);
        if (mu.grid.height() != h || mu.grid.width() != w) return 1;
        gauss = std::make_unique<GaussianPriorDenoiser>(ComplexImage(mu.grid), s2);
        schedule = std::make_unique<Schedule>(Schedule::cosine(T));
    }

    const std::size_t payload_len = std::size_t(h) * w * 8;
    std::vector<std::uint8_t> payload(payload_len);
    for (;;) {
        std::uint8_t opcode;
        if (!read_exact(&opcode, 1)) return 0;
        if (opcode == 0x02) return 0;
        if (opcode != 0x01) return 1;
        std::uint8_t tbuf[4];
        if (!read_exact(tbuf, 4)) return 1;
        const std::uint32_t t = get_u32le(tbuf);
        if (!read_exact(payload.data(), payload_len)) return 1;

        if (mode == "hang") {
            std::this_thread::sleep_for(std::chrono::hours(1));
            return 0;
        }
        if (mode == "bad-opcode") {
            const std::uint8_t op = 0x7F;
            write_exact(&op, 1);
            write_exact(payload.data(), payload_len);
            return 0;
        }
        if (mode == "midframe") {
            const std::uint8_t op = 0x81;
            write_exact(&op, 1);
            write_exact(payload.data(), payload_len / 2);
            return 0;
        }

        const std::uint8_t op = 0x81;
        if (mode == "zero") {
            std::fill(payload.begin(), payload.end(), 0);
        } else if (mode == "nonfinite") {
            const float nan = std::numeric_limits<float>::quiet_NaN();
            for (std::size_t i = 0; i < payload_len / 4; ++i) {
                std::memcpy(payload.data() + i * 4, &nan, 4);
            }
        } else if (mode == "gaussian") {
            ComplexImage y(h, w);
            for (std::size_t i = 0; i < y.size(); ++i) {
                float re, im;
                std::memcpy(&re, payload.data() + i * 8, 4);
                std::memcpy(&im, payload.data() + i * 8 + 4, 4);
                y[i] = Complex(re, im);
            }
            const ComplexImage eps = gauss->predict_noise(y, t, *schedule);
            for (std::size_t i = 0; i < eps.size(); ++i) {
                const auto re = static_cast<float>(eps[i].real());
                const auto im = static_cast<float>(eps[i].imag());
                std::memcpy(payload.data() + i * 8, &re, 4);
                std::memcpy(payload.data() + i * 8 + 4, &im, 4);
            }
        } // echo: payload unchanged
        if (!write_exact(&op, 1) || !write_exact(payload.data(), payload_len)) return 1;
    }
}
