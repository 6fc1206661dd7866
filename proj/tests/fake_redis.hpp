// SPDX-License-Identifier: Apache-2.0
// Just enough of a Redis server (GET, SET, KEYS with a trailing '*', DEL)
// to drive the RESP cache adapter in tests.
#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace agentbug::testing {

class FakeRedis {
public:
    FakeRedis() {
        listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        int one = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = 0;
        if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 4) != 0) {
            throw std::runtime_error("fake redis: cannot listen");
        }
        socklen_t len = sizeof addr;
        ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        port_ = ntohs(addr.sin_port);
        thread_ = std::thread([this] { serve(); });
    }
    ~FakeRedis() {
        stop_ = true;
        thread_.join();
        ::close(listen_fd_);
    }
    FakeRedis(const FakeRedis&) = delete;
    FakeRedis& operator=(const FakeRedis&) = delete;

    std::uint16_t port() const { return port_; }
    std::size_t commands() const { return commands_.load(); }
    std::map<std::string, std::string> data() {
        std::lock_guard lock(mu_);
        return data_;
    }

private:
    void serve() {
        while (!stop_) {
            pollfd p{listen_fd_, POLLIN, 0};
            if (::poll(&p, 1, 50) <= 0) continue;
            int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd < 0) continue;
            handle(fd);
            ::close(fd);
        }
    }

    void handle(int fd) {
        std::string buf;
        while (!stop_) {
            std::vector<std::string> args;
            const auto status = parse_command(buf, args);
            if (status < 0) return;
            if (status == 0) {
                pollfd p{fd, POLLIN, 0};
                if (::poll(&p, 1, 50) <= 0) continue;
                char chunk[4096];
                auto n = ::recv(fd, chunk, sizeof chunk, 0);
                if (n <= 0) return;
                buf.append(chunk, static_cast<std::size_t>(n));
                continue;
            }
            ++commands_;
            const std::string out = execute(args);
            if (::send(fd, out.data(), out.size(), MSG_NOSIGNAL) < 0) return;
        }
    }

    // 1 = parsed a command, 0 = need more bytes, -1 = protocol error.
    static int parse_command(std::string& buf, std::vector<std::string>& args) {
        std::size_t pos = 0;
        auto line = [&](std::string& out) {
            auto end = buf.find("\r\n", pos);
            if (end == std::string::npos) return false;
            out = buf.substr(pos, end - pos);
            pos = end + 2;
            return true;
        };
        std::string header;
        if (!line(header)) return 0;
        if (header.empty() || header[0] != '*') return -1;
        const int n = std::stoi(header.substr(1));
        for (int i = 0; i < n; ++i) {
            std::string len_line;
            if (!line(len_line)) return 0;
            if (len_line.empty() || len_line[0] != '$') return -1;
            const auto len = static_cast<std::size_t>(std::stoul(len_line.substr(1)));
            if (buf.size() < pos + len + 2) return 0;
            args.push_back(buf.substr(pos, len));
            pos += len + 2;
        }
        buf.erase(0, pos);
        return 1;
    }

    static std::string bulk(const std::string& s) { return "$" + std::to_string(s.size()) + "\r\n" + s + "\r\n"; }

    std::string execute(const std::vector<std::string>& args) {
        std::lock_guard lock(mu_);
        const std::string& cmd = args.at(0);
        if (cmd == "GET") {
            auto it = data_.find(args.at(1));
            return it == data_.end() ? "$-1\r\n" : bulk(it->second);
        }
        if (cmd == "SET") {
            data_[args.at(1)] = args.at(2);
            return "+OK\r\n";
        }
        if (cmd == "KEYS") {
            std::string prefix = args.at(1);
            if (!prefix.empty() && prefix.back() == '*') prefix.pop_back();
            std::vector<std::string> keys;
            for (const auto& [k, v] : data_) {
                if (k.rfind(prefix, 0) == 0) keys.push_back(k);
            }
            std::string out = "*" + std::to_string(keys.size()) + "\r\n";
            for (const auto& k : keys) out += bulk(k);
            return out;
        }
        if (cmd == "DEL") {
            int removed = 0;
            for (std::size_t i = 1; i < args.size(); ++i) removed += static_cast<int>(data_.erase(args[i]));
            return ":" + std::to_string(removed) + "\r\n";
        }
        return "-ERR unknown command\r\n";
    }

    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stop_{false};
    std::atomic<std::size_t> commands_{0};
    std::mutex mu_;
    std::map<std::string, std::string> data_;
    std::thread thread_;
};

}  // namespace agentbug::testing
