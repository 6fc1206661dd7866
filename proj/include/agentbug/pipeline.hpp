// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentbug/cache.hpp"
#include "agentbug/classifier.hpp"
#include "agentbug/corpus.hpp"
#include "agentbug/gateway.hpp"
#include "agentbug/page_source.hpp"
#include "agentbug/react.hpp"
#include "agentbug/toolbox.hpp"

namespace agentbug {

/// Counts searches that reach the wrapped source.
class CountingSource final : public PageSource {
public:
    explicit CountingSource(PageSource& inner) : inner_(inner) {}
    std::vector<SearchHit> search(const std::string& tool, const ToolTarget& target,
                                  const std::string& normalized_query, std::size_t top_k) override {
        ++searches_;
        return inner_.search(tool, target, normalized_query, top_k);
    }
    std::size_t fetch_count() const override { return searches_; }

private:
    PageSource& inner_;
    std::atomic<std::size_t> searches_{0};
};

using BackendFactory = std::function<std::shared_ptr<Backend>(const PostRecord&)>;

/// Everything one annotation run shares across posts.
struct PipelineContext {
    ToolRegistry registry = ToolRegistry::defaults();
    CacheStore* cache = nullptr;
    PageSource* source = nullptr;
    BackendFactory backend_for;
    PriceTable prices;
    PromptKit kit;
    ReActLimits limits;
    ToolboxConfig toolbox;
    std::optional<std::filesystem::path> trace_dir;
};

struct PostOutcome {
    std::string post_id;
    std::optional<AnnotationRecord> record;
    /// "backend", "schema", "label", "script", "data", or "internal".
    std::string error_kind;
    std::string error;
    std::string model;
    Usage usage;
    double cost_usd = 0.0;
    bool cost_known = false;
    double time_s = 0.0;
    std::size_t searches = 0;
    int tool_calls = 0;
    int cache_hits = 0;
    int repairs = 0;
    bool forced_final = false;

    bool ok() const { return record.has_value(); }
};

/// Runs the configured mode on one post. Never throws for per-post failures;
/// they land in error_kind/error.
PostOutcome annotate_post(const PostRecord& post, PipelineContext& ctx);

/// Annotates every post with `workers` threads and returns outcomes sorted by
/// post id.
std::vector<PostOutcome> annotate_batch(const std::vector<PostRecord>& posts, PipelineContext& ctx, int workers);

/// File-system safe form of a post id for trace file names.
std::string trace_file_stem(const std::string& post_id);

std::string annotations_jsonl(const std::vector<PostOutcome>& outcomes);
std::string failures_jsonl(const std::vector<PostOutcome>& outcomes);
nlohmann::json run_summary(const std::vector<PostOutcome>& outcomes, std::size_t source_fetches);
std::string run_summary_csv(const std::vector<PostOutcome>& outcomes);

}  // namespace agentbug
