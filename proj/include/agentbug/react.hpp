// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentbug/cache.hpp"
#include "agentbug/corpus.hpp"
#include "agentbug/gateway.hpp"
#include "agentbug/page_source.hpp"
#include "agentbug/toolbox.hpp"

namespace agentbug {

enum class StepKind { Thought, Action, Observation, Final };

std::string_view step_kind_name(StepKind k);

struct ActionDetail {
    std::string tool;
    std::string query;

    bool operator==(const ActionDetail&) const = default;
};

/// Action steps carry `action` and their text is "tool[query]".
struct ReActStep {
    StepKind kind = StepKind::Thought;
    std::string text;
    std::optional<ActionDetail> action;
    int step_index = 0;

    bool operator==(const ReActStep&) const = default;
};

struct ReActTrace {
    std::string post_id;
    std::vector<ReActStep> steps;
    std::string explanation;
    std::string reasoning;
    Usage total_usage;
    std::int64_t wall_ms = 0;
    int model_turns = 0;
    int tool_calls = 0;
    int cache_hits = 0;
    bool forced_final = false;
};

/// Answers the agent's tool requests. Implementations never throw for
/// lookup failures; unknown tools get an explanatory observation.
class ToolDispatcher {
public:
    virtual ~ToolDispatcher() = default;
    virtual ToolResult dispatch(const std::string& tool, const std::string& query) = 0;
    virtual std::vector<ToolSchema> schemas() const = 0;
};

class ToolboxDispatcher final : public ToolDispatcher {
public:
    ToolboxDispatcher(const ToolRegistry& registry, CacheStore& cache, PageSource& source, Backend& summarizer,
                      ToolboxConfig cfg = {});
    ToolResult dispatch(const std::string& tool, const std::string& query) override;
    std::vector<ToolSchema> schemas() const override { return registry_.schemas(); }

private:
    const ToolRegistry& registry_;
    CacheStore& cache_;
    PageSource& source_;
    Backend& summarizer_;
    ToolboxConfig cfg_;
};

/// Tool-less baseline: every dispatch observes kNoResults and nothing is
/// fetched.
class NoResultsDispatcher final : public ToolDispatcher {
public:
    explicit NoResultsDispatcher(const ToolRegistry& registry) : registry_(registry) {}
    ToolResult dispatch(const std::string& tool, const std::string& query) override;
    std::vector<ToolSchema> schemas() const override { return registry_.schemas(); }

private:
    const ToolRegistry& registry_;
};

struct ReActLimits {
    int max_iterations = 10;
    bool include_solutions = false;
    std::size_t diff_budget_bytes = 16 * 1024;
};

/// The post as shown to the model: source, title, tags, body, code, commit
/// message and head-biased diff; accepted answer and replies only when
/// `include_solutions`.
std::string render_post(const PostRecord& post, bool include_solutions, std::size_t diff_budget_bytes = 16 * 1024);

std::string react_system_prompt(const std::vector<ToolSchema>& tools, bool native_tools);

inline constexpr std::string_view kForceFinalPrompt =
    "Your tool budget is used up. Answer now with the evidence you have. Do not call any tool. Reply in the final "
    "format:\nExplanation: <what the bug is>\nReasoning: <why it occurs>";

/// Interpretation of one model turn under the text protocol.
struct ParsedTurn {
    std::string thought;
    std::optional<ActionDetail> action;
    std::string explanation;
    std::string reasoning;
};

ParsedTurn parse_text_turn(std::string_view content);

/// Gathers evidence with tools and returns the bug explanation. Performs at
/// most `max_iterations` tool dispatches; when the budget runs out the
/// model is asked once (twice if it keeps acting) to answer from what it
/// has. Gateway errors propagate.
ReActTrace run_react(const PostRecord& post, ToolDispatcher& tools, Backend& gateway, const ReActLimits& limits,
                     const RetryPolicy& retry = {});

/// Structural invariants of a finished trace; empty when all hold.
std::vector<std::string> validate_trace(const ReActTrace& t, int max_iterations);

/// One line per step: "Thought: ...", "Action: tool[query]",
/// "Observation: ...", "Final: ...". Newlines and backslashes inside step
/// text are escaped as \n, \r, and \\.
std::string serialize_trace(const ReActTrace& t);
std::vector<ReActStep> parse_scratchpad(std::string_view text);

nlohmann::json trace_to_json(const ReActTrace& t);

}  // namespace agentbug
