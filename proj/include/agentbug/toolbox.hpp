// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentbug/cache.hpp"
#include "agentbug/gateway.hpp"
#include "agentbug/page_source.hpp"

namespace agentbug {

inline constexpr std::string_view kNoResults = "No results found";

struct ToolSpec {
    std::string name;
    std::string description;
    ToolTarget target;
    bool enabled = true;
};

struct ToolResult {
    std::string tool;
    std::string query;
    std::string summary;
    bool from_cache = false;
    std::vector<std::string> fetched_urls;
    std::int64_t elapsed_ms = 0;
    /// Set when the summarizer failed and a truncated raw extract stands in.
    bool summary_degraded = false;
    Usage summarizer_usage;
};

/// Lowercase, trimmed, internal whitespace collapsed to single spaces.
std::string normalize_query(std::string_view q);

/// Digest of (tool name, normalized query).
std::string cache_key(std::string_view tool, std::string_view query);

/// The ten documentation and forum searchers, all enabled.
std::vector<ToolSpec> default_tool_specs();

class ToolRegistry {
public:
    ToolRegistry() = default;
    explicit ToolRegistry(std::vector<ToolSpec> specs);
    static ToolRegistry defaults() { return ToolRegistry(default_tool_specs()); }

    const ToolSpec* find(std::string_view name) const;
    void set_enabled(std::string_view name, bool enabled);
    /// {"tool_name": {"site": ..., "search_url": ..., "description": ..., "enabled": bool}}
    void apply_overrides(const nlohmann::json& overrides);

    const std::vector<ToolSpec>& all() const { return specs_; }
    std::vector<const ToolSpec*> enabled() const;
    std::vector<ToolSchema> schemas() const;

private:
    std::vector<ToolSpec> specs_;
};

struct ToolboxConfig {
    std::size_t top_k = 5;
    std::size_t budget_chars = 1500;
    RetryPolicy retry;
};

/// Condenses `raw` to at most `budget_chars` bytes. Text already within
/// budget is returned unchanged without a model call. Gateway errors
/// propagate.
std::string summarize(Backend& gateway, std::string_view raw, std::size_t budget_chars, std::string_view query = {},
                      const RetryPolicy& retry = {}, Usage* usage = nullptr);

/// Cache-first evidence lookup. Never throws for fetch or summarizer
/// failures: timeouts and empty searches yield kNoResults, summarizer
/// failures yield a flagged raw extract. Throws std::invalid_argument only
/// for a disabled spec.
ToolResult run_tool(const ToolSpec& spec, std::string_view query, CacheStore& cache, PageSource& source,
                    Backend& summarizer, const ToolboxConfig& cfg = {});

}  // namespace agentbug
