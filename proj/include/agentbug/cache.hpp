// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>
#include <unordered_map>

namespace agentbug {

/// Key-value store for tool summaries. Implementations are safe under
/// concurrent get/put; entries never expire.
class CacheStore {
public:
    virtual ~CacheStore() = default;
    virtual std::optional<std::string> get(const std::string& key) = 0;
    virtual void put(const std::string& key, const std::string& value) = 0;
    virtual std::size_t size() = 0;
    virtual void clear() = 0;
};

class InMemoryCache : public CacheStore {
public:
    std::optional<std::string> get(const std::string& key) override;
    void put(const std::string& key, const std::string& value) override;
    std::size_t size() override;
    void clear() override;

    std::map<std::string, std::string> snapshot() const;

protected:
    mutable std::mutex mu_;
    std::unordered_map<std::string, std::string> entries_;
};

/// In-process map persisted as a sorted JSON object; every put rewrites the
/// file (atomic rename), so the cache survives across CLI runs.
class FileCache final : public InMemoryCache {
public:
    explicit FileCache(std::filesystem::path path);
    void put(const std::string& key, const std::string& value) override;
    void clear() override;
    const std::filesystem::path& path() const { return path_; }

private:
    void save_locked();
    std::filesystem::path path_;
};

/// Speaks the Redis serialization protocol (GET/SET/KEYS/DEL) over TCP.
/// Keys are namespaced with `prefix`.
class RespCache final : public CacheStore {
public:
    RespCache(std::string host, std::uint16_t port, std::string prefix = "agentbug:");
    ~RespCache() override;
    RespCache(const RespCache&) = delete;
    RespCache& operator=(const RespCache&) = delete;

    std::optional<std::string> get(const std::string& key) override;
    void put(const std::string& key, const std::string& value) override;
    std::size_t size() override;
    void clear() override;

private:
    struct Reply;
    Reply command(std::initializer_list<std::string> args);
    Reply command_locked(const std::vector<std::string>& args);
    void connect_locked();
    void close_locked();

    std::string host_;
    std::uint16_t port_;
    std::string prefix_;
    std::mutex mu_;
    int fd_ = -1;
    std::string buffer_;
};

}  // namespace agentbug
