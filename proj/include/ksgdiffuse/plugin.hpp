#pragma once

#include <cerrno>
#include <csignal>
#include <cstdint>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "ksgdiffuse/denoiser.hpp"
#include "ksgdiffuse/grid.hpp"
#include "ksgdiffuse/schedule.hpp"

namespace ksg {

enum class PluginErrorKind { Protocol, ShapeMismatch, Timeout, Transport, NonFinite };

inline const char* plugin_error_kind_name(PluginErrorKind k) {
    switch (k) {
        case PluginErrorKind::Protocol: return "protocol";
        case PluginErrorKind::ShapeMismatch: return "shape-mismatch";
        case PluginErrorKind::Timeout: return "timeout";
        case PluginErrorKind::Transport: return "transport";
        case PluginErrorKind::NonFinite: return "non-finite";
    }
    return "unknown";
}

/// Remote denoiser failure (maps to CLI exit code 4).
struct PluginError : std::runtime_error {
    PluginError(PluginErrorKind kind, const std::string& msg)
        : std::runtime_error(std::string("plugin ") + plugin_error_kind_name(kind) +
                             " error: " + msg),
          kind(kind) {}
    PluginErrorKind kind;
};

namespace plugin_detail {

inline void ignore_sigpipe() {
    static const bool once = [] {
        ::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)once;
}

inline void put_u32(std::string& buf, std::uint32_t v) {
    buf.push_back(static_cast<char>(v & 0xFF));
    buf.push_back(static_cast<char>((v >> 8) & 0xFF));
    buf.push_back(static_cast<char>((v >> 16) & 0xFF));
    buf.push_back(static_cast<char>((v >> 24) & 0xFF));
}

} // namespace plugin_detail

/// One DNP1 connection: handshake at construction, exclusive single
/// request-in-flight use afterwards.
///
/// Wire protocol (all integers little-endian):
///   handshake:  -> "DNP1" u32 H u32 W u32 T   <- "DNP1" u8 accept
///   request:    -> 0x01 u32 t  H*W f32 (re,im) pairs
///   response:   <- 0x81        H*W f32 (re,im) pairs
///   shutdown:   -> 0x02 (server closes)
class PluginConnection {
public:
    PluginConnection(const PluginConnection&) = delete;
    PluginConnection& operator=(const PluginConnection&) = delete;

    PluginConnection(PluginConnection&& other) noexcept { steal(other); }
    PluginConnection& operator=(PluginConnection&& other) noexcept {
        if (this != &other) {
            close_fds();
            steal(other);
        }
        return *this;
    }

    ~PluginConnection() {
        shutdown_quietly();
        close_fds();
        reap_child();
    }

    /// Spawn a child process speaking DNP1 on its stdio.
    static PluginConnection spawn(const std::vector<std::string>& argv, std::size_t h,
                                  std::size_t w, std::size_t T, int timeout_ms = 10000) {
        plugin_detail::ignore_sigpipe();
        if (argv.empty()) throw PluginError(PluginErrorKind::Transport, "empty command");
        int to_child[2], from_child[2];
        if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
            throw PluginError(PluginErrorKind::Transport, "pipe() failed");
        }
        const pid_t pid = ::fork();
        if (pid < 0) throw PluginError(PluginErrorKind::Transport, "fork() failed");
        if (pid == 0) {
            ::dup2(to_child[0], 0);
            ::dup2(from_child[1], 1);
            ::close(to_child[0]);
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::close(from_child[1]);
            std::vector<char*> cargv;
            for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
            cargv.push_back(nullptr);
            ::execvp(cargv[0], cargv.data());
            ::_exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        PluginConnection conn(from_child[0], to_child[1], pid, timeout_ms);
        conn.handshake(h, w, T);
        return conn;
    }

    /// Connect to a DNP1 server over TCP.
    static PluginConnection connect_tcp(const std::string& host, std::uint16_t port,
                                        std::size_t h, std::size_t w, std::size_t T,
                                        int timeout_ms = 10000) {
        plugin_detail::ignore_sigpipe();
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0) {
            throw PluginError(PluginErrorKind::Transport, "cannot resolve " + host);
        }
        int fd = -1;
        for (addrinfo* ai = res; ai; ai = ai->ai_next) {
            fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
            if (fd < 0) continue;
            if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
            ::close(fd);
            fd = -1;
        }
        ::freeaddrinfo(res);
        if (fd < 0) {
            throw PluginError(PluginErrorKind::Transport, "cannot connect to " + host);
        }
        PluginConnection conn(fd, fd, -1, timeout_ms);
        conn.handshake(h, w, T);
        return conn;
    }

    /// Adopt already-open descriptors (tests use socketpair doubles).
    static PluginConnection adopt(int read_fd, int write_fd, std::size_t h, std::size_t w,
                                  std::size_t T, int timeout_ms = 10000) {
        plugin_detail::ignore_sigpipe();
        PluginConnection conn(read_fd, write_fd, -1, timeout_ms);
        conn.handshake(h, w, T);
        return conn;
    }

    std::size_t height() const { return h_; }
    std::size_t width() const { return w_; }

    ComplexImage predict(const ComplexImage& y_t, std::size_t t) const {
        if (y_t.height() != h_ || y_t.width() != w_) {
            throw PluginError(PluginErrorKind::ShapeMismatch,
                              "request image does not match negotiated geometry");
        }
        std::string req;
        req.reserve(5 + y_t.size() * 8);
        req.push_back('\x01');
        plugin_detail::put_u32(req, static_cast<std::uint32_t>(t));
        for (std::size_t i = 0; i < y_t.size(); ++i) {
            const auto re = static_cast<float>(y_t[i].real());
            const auto im = static_cast<float>(y_t[i].imag());
            std::uint32_t bits;
            std::memcpy(&bits, &re, 4);
            plugin_detail::put_u32(req, bits);
            std::memcpy(&bits, &im, 4);
            plugin_detail::put_u32(req, bits);
        }
        write_exact(req.data(), req.size());

        std::uint8_t opcode;
        read_exact(&opcode, 1);
        if (opcode != 0x81) {
            throw PluginError(PluginErrorKind::Protocol,
                              "unexpected response opcode " + std::to_string(opcode));
        }
        std::vector<std::uint8_t> payload(h_ * w_ * 8);
        read_exact(payload.data(), payload.size());
        ComplexImage out(h_, w_);
        for (std::size_t i = 0; i < out.size(); ++i) {
            float re, im;
            std::memcpy(&re, payload.data() + i * 8, 4);
            std::memcpy(&im, payload.data() + i * 8 + 4, 4);
            out[i] = Complex(re, im);
        }
        if (!out.all_finite()) {
            throw PluginError(PluginErrorKind::NonFinite, "response contains non-finite values");
        }
        return out;
    }

    void shutdown() {
        if (wfd_ >= 0) {
            const char op = '\x02';
            write_exact(&op, 1);
        }
        close_fds();
        reap_child();
    }

private:
    PluginConnection(int rfd, int wfd, pid_t child, int timeout_ms)
        : rfd_(rfd), wfd_(wfd), child_(child), timeout_ms_(timeout_ms) {}

    void handshake(std::size_t h, std::size_t w, std::size_t T) {
        std::string hello = "DNP1";
        plugin_detail::put_u32(hello, static_cast<std::uint32_t>(h));
        plugin_detail::put_u32(hello, static_cast<std::uint32_t>(w));
        plugin_detail::put_u32(hello, static_cast<std::uint32_t>(T));
        write_exact(hello.data(), hello.size());
        char reply[5];
        read_exact(reply, 5);
        if (std::memcmp(reply, "DNP1", 4) != 0) {
            throw PluginError(PluginErrorKind::Protocol, "bad handshake magic");
        }
        if (reply[4] != 1) {
            throw PluginError(PluginErrorKind::Protocol, "server rejected geometry");
        }
        h_ = h;
        w_ = w;
    }

    void read_exact(void* dst, std::size_t n) const {
        auto* p = static_cast<std::uint8_t*>(dst);
        std::size_t got = 0;
        while (got < n) {
            pollfd pfd{rfd_, POLLIN, 0};
            const int pr = ::poll(&pfd, 1, timeout_ms_);
            if (pr == 0) throw PluginError(PluginErrorKind::Timeout, "read timed out");
            if (pr < 0) {
                if (errno == EINTR) continue;
                throw PluginError(PluginErrorKind::Transport, "poll() failed");
            }
            const ssize_t r = ::read(rfd_, p + got, n - got);
            if (r == 0) {
                throw PluginError(PluginErrorKind::Transport, "stream closed mid-frame");
            }
            if (r < 0) {
                if (errno == EINTR) continue;
                throw PluginError(PluginErrorKind::Transport,
                                  std::string("read failed: ") + std::strerror(errno));
            }
            got += static_cast<std::size_t>(r);
        }
    }

    void write_exact(const void* src, std::size_t n) const {
        const auto* p = static_cast<const std::uint8_t*>(src);
        std::size_t sent = 0;
        while (sent < n) {
            const ssize_t r = ::write(wfd_, p + sent, n - sent);
            if (r < 0) {
                if (errno == EINTR) continue;
                throw PluginError(PluginErrorKind::Transport,
                                  std::string("write failed: ") + std::strerror(errno));
            }
            sent += static_cast<std::size_t>(r);
        }
    }

    void shutdown_quietly() noexcept {
        if (wfd_ >= 0) {
            const char op = '\x02';
            const ssize_t r = ::write(wfd_, &op, 1);
            static_cast<void>(r);
        }
    }

    void close_fds() noexcept {
        if (rfd_ >= 0) ::close(rfd_);
        if (wfd_ >= 0 && wfd_ != rfd_) ::close(wfd_);
        rfd_ = wfd_ = -1;
    }

    // Give the child a short grace period after EOF/shutdown, then kill it
    // so misbehaving plugins cannot wedge the host.
    void reap_child() noexcept {
        if (child_ <= 0) return;
        int status = 0;
        for (int i = 0; i < 50; ++i) {
            if (::waitpid(child_, &status, WNOHANG) != 0) {
                child_ = -1;
                return;
            }
            ::usleep(10000);
        }
        ::kill(child_, SIGKILL);
        (void)::waitpid(child_, &status, 0);
        child_ = -1;
    }

    void steal(PluginConnection& other) noexcept {
        rfd_ = other.rfd_;
        wfd_ = other.wfd_;
        child_ = other.child_;
        timeout_ms_ = other.timeout_ms_;
        h_ = other.h_;
        w_ = other.w_;
        other.rfd_ = other.wfd_ = -1;
        other.child_ = -1;
    }

    int rfd_ = -1;
    int wfd_ = -1;
    pid_t child_ = -1;
    int timeout_ms_ = 10000;
    std::size_t h_ = 0;
    std::size_t w_ = 0;
};

/// Denoiser adapter over one connection; queries use original timestep labels.
class PluginDenoiser final : public Denoiser {
public:
    explicit PluginDenoiser(std::shared_ptr<PluginConnection> conn) : conn_(std::move(conn)) {}

    ComplexImage predict_noise(const ComplexImage& y_t, std::size_t t,
                               const Schedule& /*schedule*/) const override {
        return conn_->predict(y_t, t);
    }

private:
    std::shared_ptr<PluginConnection> conn_;
};

} // namespace ksg
