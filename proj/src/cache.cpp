// SPDX-License-Identifier: Apache-2.0
#include "agentbug/cache.hpp"

#include <fstream>
#include <functional>
#include <stdexcept>
#include <vector>

#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

namespace agentbug {

std::optional<std::string> InMemoryCache::get(const std::string& key) {
    std::lock_guard lock(mu_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    return std::nullopt;
}

void InMemoryCache::put(const std::string& key, const std::string& value) {
    std::lock_guard lock(mu_);
    entries_[key] = value;
}

std::size_t InMemoryCache::size() {
    std::lock_guard lock(mu_);
    return entries_.size();
}

void InMemoryCache::clear() {
    std::lock_guard lock(mu_);
    entries_.clear();
}

std::map<std::string, std::string> InMemoryCache::snapshot() const {
    std::lock_guard lock(mu_);
    return {entries_.begin(), entries_.end()};
}

FileCache::FileCache(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;
    const auto j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
        throw std::runtime_error("cache file " + path_.string() + " is not a JSON object");
    }
    for (const auto& [k, v] : j.items()) entries_[k] = v.get<std::string>();
}

void FileCache::put(const std::string& key, const std::string& value) {
    std::lock_guard lock(mu_);
    entries_[key] = value;
    save_locked();
}

void FileCache::clear() {
    std::lock_guard lock(mu_);
    entries_.clear();
    save_locked();
}

void FileCache::save_locked() {
    const std::map<std::string, std::string> sorted(entries_.begin(), entries_.end());
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    auto tmp = path_;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write cache file " + tmp.string());
        out << nlohmann::json(sorted).dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path_);
}

struct RespCache::Reply {
    char type = '+';
    std::string str;
    std::int64_t integer = 0;
    bool nil = false;
    std::vector<Reply> elements;
};

RespCache::RespCache(std::string host, std::uint16_t port, std::string prefix)
    : host_(std::move(host)), port_(port), prefix_(std::move(prefix)) {
    std::lock_guard lock(mu_);
    connect_locked();
}

RespCache::~RespCache() {
    std::lock_guard lock(mu_);
    close_locked();
}

void RespCache::connect_locked() {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string port = std::to_string(port_);
    if (int rc = ::getaddrinfo(host_.c_str(), port.c_str(), &hints, &res); rc != 0) {
        throw std::runtime_error("cache: cannot resolve " + host_ + ": " + gai_strerror(rc));
    }
    for (auto* ai = res; ai != nullptr; ai = ai->ai_next) {
        int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
            fd_ = fd;
            break;
        }
        ::close(fd);
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) throw std::runtime_error("cache: cannot connect to " + host_ + ":" + port);
}

void RespCache::close_locked() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
    buffer_.clear();
}

namespace {

void send_all(int fd, const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
        auto n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n <= 0) throw std::runtime_error("cache: connection lost while sending");
        off += static_cast<std::size_t>(n);
    }
}

void fill(int fd, std::string& buffer) {
    char chunk[4096];
    auto n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) throw std::runtime_error("cache: connection lost while reading");
    buffer.append(chunk, static_cast<std::size_t>(n));
}

std::string read_line(int fd, std::string& buffer) {
    for (;;) {
        if (auto pos = buffer.find("\r\n"); pos != std::string::npos) {
            std::string line = buffer.substr(0, pos);
            buffer.erase(0, pos + 2);
            return line;
        }
        fill(fd, buffer);
    }
}

std::string read_exact(int fd, std::string& buffer, std::size_t n) {
    while (buffer.size() < n + 2) fill(fd, buffer);
    std::string out = buffer.substr(0, n);
    buffer.erase(0, n + 2);
    return out;
}

}  // namespace

RespCache::Reply RespCache::command(std::initializer_list<std::string> args) {
    std::lock_guard lock(mu_);
    return command_locked(std::vector<std::string>(args));
}

RespCache::Reply RespCache::command_locked(const std::vector<std::string>& args) {
    if (fd_ < 0) connect_locked();
    std::string wire = "*" + std::to_string(args.size()) + "\r\n";
    for (const auto& a : args) wire += "$" + std::to_string(a.size()) + "\r\n" + a + "\r\n";
    try {
        send_all(fd_, wire);
        std::function<Reply()> parse = [&]() -> Reply {
            const std::string line = read_line(fd_, buffer_);
            if (line.empty()) throw std::runtime_error("cache: empty protocol line");
            Reply r;
            r.type = line[0];
            const std::string rest = line.substr(1);
            switch (r.type) {
                case '+': r.str = rest; break;
                case '-': throw std::runtime_error("cache: server error: " + rest);
                case ':': r.integer = std::stoll(rest); break;
                case '$': {
                    const auto len = std::stoll(rest);
                    if (len < 0) {
                        r.nil = true;
                    } else {
                        r.str = read_exact(fd_, buffer_, static_cast<std::size_t>(len));
                    }
                    break;
                }
                case '*': {
                    const auto n = std::stoll(rest);
                    if (n < 0) r.nil = true;
                    for (std::int64_t i = 0; i < n; ++i) r.elements.push_back(parse());
                    break;
                }
                default: throw std::runtime_error("cache: unexpected reply type '" + std::string(1, r.type) + "'");
            }
            return r;
        };
        return parse();
    } catch (...) {
        close_locked();
        throw;
    }
}

std::optional<std::string> RespCache::get(const std::string& key) {
    auto r = command({"GET", prefix_ + key});
    if (r.nil) return std::nullopt;
    return r.str;
}

void RespCache::put(const std::string& key, const std::string& value) {
    command({"SET", prefix_ + key, value});
}

std::size_t RespCache::size() {
    return command({"KEYS", prefix_ + "*"}).elements.size();
}

void RespCache::clear() {
    std::lock_guard lock(mu_);
    auto keys = command_locked({"KEYS", prefix_ + "*"});
    if (keys.elements.empty()) return;
    std::vector<std::string> del{"DEL"};
    for (const auto& k : keys.elements) del.push_back(k.str);
    command_locked(del);
}

}  // namespace agentbug
