// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace agentbug {

/// Where a tool searches: `site` restricts hits to URLs under that
/// host/path prefix; `search_url` is a template whose "{query}" is replaced
/// by the URL-encoded "site:<site> <query>".
struct ToolTarget {
    std::string id;
    std::string site;
    std::string search_url = "https://html.duckduckgo.com/html/?q={query}";
};

struct SearchHit {
    std::string url;
    std::string text;
};

class FetchTimeout : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Supplies search hits for tool queries. `fetch_count` counts page
/// retrievals (network requests or fixture reads).
class PageSource {
public:
    virtual ~PageSource() = default;
    /// Up to `top_k` hits with their extracted main text; empty when nothing
    /// matched. Throws FetchTimeout when the search itself times out.
    virtual std::vector<SearchHit> search(const std::string& tool, const ToolTarget& target,
                                          const std::string& normalized_query, std::size_t top_k) = 0;
    virtual std::size_t fetch_count() const = 0;
};

/// File name (without directory) of the fixture page for a query:
/// hex SHA-256 of the normalized query plus ".html".
std::string fixture_file_name(const std::string& normalized_query);

/// Hermetic source reading <dir>/<tool>/<sha256(normalized query)>.html.
/// A missing file means zero hits. Each search counts as one fetch.
class FixtureSource final : public PageSource {
public:
    explicit FixtureSource(std::filesystem::path dir);
    std::vector<SearchHit> search(const std::string& tool, const ToolTarget& target, const std::string& normalized_query,
                                  std::size_t top_k) override;
    std::size_t fetch_count() const override { return fetches_.load(); }
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::atomic<std::size_t> fetches_{0};
};

/// Enforces a minimum spacing between requests to the same host. Shared by
/// all workers; callers block until their slot arrives.
class HostRateLimiter {
public:
    explicit HostRateLimiter(std::chrono::milliseconds min_spacing = std::chrono::seconds(1));
    void acquire(const std::string& host);

private:
    std::chrono::milliseconds spacing_;
    std::mutex mu_;
    std::map<std::string, std::chrono::steady_clock::time_point> next_slot_;
};

class HttpSource final : public PageSource {
public:
    HttpSource(HostRateLimiter& limiter, std::chrono::seconds timeout = std::chrono::seconds(20));
    std::vector<SearchHit> search(const std::string& tool, const ToolTarget& target, const std::string& normalized_query,
                                  std::size_t top_k) override;
    std::size_t fetch_count() const override { return fetches_.load(); }

private:
    std::string get(const std::string& url);

    HostRateLimiter& limiter_;
    std::chrono::seconds timeout_;
    std::atomic<std::size_t> fetches_{0};
};

std::string url_encode(const std::string& s);
std::string url_decode(const std::string& s);

/// Hit URLs from a search-results page, in order, de-duplicated, restricted
/// to `site`. Unwraps redirector links carrying the target in a "uddg" or
/// "url" query parameter.
std::vector<std::string> result_links(const std::string& results_page, const std::string& site,
                                      const std::string& page_url);

}  // namespace agentbug
