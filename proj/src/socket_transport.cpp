// Loopback TCP transport. Each round, every uploading user opens one
// connection, sends its WeightMessage as a length-prefixed frame, and reads
// back one frame: a target byte (0 none, 1 student, 2 teacher) followed by the
// downloaded WeightMessage. The server half runs on its own thread and drives
// the same FederationServer as the in-process transport.

#include "efdls/errors.hpp"
#include "efdls/federation.hpp"
#include "efdls/wire.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <exception>
#include <thread>

namespace efdls {

namespace {

class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    Fd(Fd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    Fd& operator=(Fd&& other) noexcept {
        if (this != &other) {
            reset();
            fd_ = std::exchange(other.fd_, -1);
        }
        return *this;
    }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    ~Fd() { reset(); }

    int get() const { return fd_; }
    void reset() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

[[noreturn]] void fail(const std::string& what) { throw IoError(what + ": " + std::strerror(errno)); }

void write_all(int fd, const std::uint8_t* data, std::size_t n) {
    while (n > 0) {
        const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
        if (w < 0) {
            if (errno == EINTR) continue;
            fail("socket send failed");
        }
        data += w;
        n -= static_cast<std::size_t>(w);
    }
}

void read_all(int fd, std::uint8_t* data, std::size_t n) {
    while (n > 0) {
        const ssize_t r = ::recv(fd, data, n, 0);
        if (r < 0) {
            if (errno == EINTR) continue;
            fail("socket recv failed");
        }
        if (r == 0) throw IoError("connection closed mid-frame");
        data += r;
        n -= static_cast<std::size_t>(r);
    }
}

void send_frame(int fd, std::span<const std::uint8_t> payload) {
    const auto frame = make_frame(payload);
    write_all(fd, frame.data(), frame.size());
}

std::vector<std::uint8_t> recv_frame(int fd) {
    std::uint8_t header[4];
    read_all(fd, header, 4);
    const std::uint32_t len = static_cast<std::uint32_t>(header[0]) | static_cast<std::uint32_t>(header[1]) << 8 |
                              static_cast<std::uint32_t>(header[2]) << 16 |
                              static_cast<std::uint32_t>(header[3]) << 24;
    std::vector<std::uint8_t> payload(len);
    read_all(fd, payload.data(), len);
    return payload;
}

class SocketTransport final : public Transport {
public:
    SocketTransport(StrategyKind kind, std::uint16_t port) : server_(kind) {
        listener_ = Fd(::socket(AF_INET, SOCK_STREAM, 0));
        if (listener_.get() < 0) fail("socket() failed");
        const int one = 1;
        ::setsockopt(listener_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = htons(port);
        if (::bind(listener_.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
            fail("bind to 127.0.0.1:" + std::to_string(port) + " failed");
        }
        if (::listen(listener_.get(), 128) < 0) fail("listen failed");
        socklen_t len = sizeof addr;
        if (::getsockname(listener_.get(), reinterpret_cast<sockaddr*>(&addr), &len) < 0) fail("getsockname failed");
        port_ = ntohs(addr.sin_port);
    }

    std::vector<OutboundMessage> round(std::int64_t epoch, const std::vector<std::uint32_t>& expected,
                                       std::vector<Upload> uploads) override {
        std::exception_ptr server_error;
        std::vector<OutboundMessage> served;
        std::thread server([&] {
            try {
                served = serve_round(epoch, expected, uploads.size());
            } catch (...) {
                server_error = std::current_exception();
            }
        });

        std::vector<OutboundMessage> received;
        std::exception_ptr client_error;
        try {
            std::vector<Fd> conns;
            for (const auto& u : uploads) {
                conns.push_back(connect_loopback());
                send_frame(conns.back().get(), u.message);
            }
            for (std::size_t i = 0; i < conns.size(); ++i) {
                auto payload = recv_frame(conns[i].get());
                if (payload.empty()) throw IoError("empty download frame");
                if (payload[0] == 0) continue;
                OutboundMessage msg;
                msg.user_id = uploads[i].user_id;
                msg.target = static_cast<LoadTarget>(payload[0]);
                msg.message.assign(payload.begin() + 1, payload.end());
                received.push_back(std::move(msg));
            }
        } catch (...) {
            client_error = std::current_exception();
            // Wakes a server thread still blocked in accept().
            ::shutdown(listener_.get(), SHUT_RDWR);
        }
        server.join();
        if (server_error) std::rethrow_exception(server_error);
        if (client_error) std::rethrow_exception(client_error);
        return received;
    }

private:
    Fd connect_loopback() const {
        Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
        if (fd.get() < 0) fail("socket() failed");
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = htons(port_);
        if (::connect(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) fail("connect failed");
        return fd;
    }

    std::vector<OutboundMessage> serve_round(std::int64_t epoch, const std::vector<std::uint32_t>& expected,
                                             std::size_t connections) {
        server_.begin_epoch(epoch, expected);
        std::vector<Fd> conns;
        std::vector<std::uint32_t> senders;
        for (std::size_t i = 0; i < connections; ++i) {
            Fd conn(::accept(listener_.get(), nullptr, nullptr));
            if (conn.get() < 0) fail("accept failed");
            const auto message = recv_frame(conn.get());
            server_.receive(message);
            senders.push_back(server_.table().entries.back().user_id);
            conns.push_back(std::move(conn));
        }
        auto out = server_.close_epoch();
        for (std::size_t i = 0; i < conns.size(); ++i) {
            std::vector<std::uint8_t> payload{0};
            for (const auto& msg : out) {
                if (msg.user_id != senders[i]) continue;
                payload[0] = static_cast<std::uint8_t>(msg.target);
                payload.insert(payload.end(), msg.message.begin(), msg.message.end());
                break;
            }
            send_frame(conns[i].get(), payload);
        }
        return out;
    }

    FederationServer server_;
    Fd listener_;
    std::uint16_t port_ = 0;
};

}  // namespace

std::unique_ptr<Transport> make_socket_transport(StrategyKind strategy, std::uint16_t port) {
    return std::make_unique<SocketTransport>(strategy, port);
}

}  // namespace efdls
