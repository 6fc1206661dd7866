// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentbug/corpus.hpp"
#include "agentbug/gateway.hpp"
#include "agentbug/react.hpp"
#include "agentbug/structured_output.hpp"
#include "agentbug/taxonomy.hpp"

namespace agentbug {

enum class ClassifierMode { TwoStage, ZeroShot, OneShot, ReactNoTools };

std::string_view mode_name(ClassifierMode m);
/// Accepts "two_stage", "zero_shot", "one_shot", "react_no_tools".
ClassifierMode parse_mode(std::string_view name);

/// Every member of every category with its definition, one per line.
std::string definitions_block();

/// JSON schema for the stage-2 answer object.
nlohmann::json label_schema();
std::string label_schema_text();

/// Checks a model answer and, when it is acceptable, fills `out` (labels,
/// language, framework, rationales only). Label text is matched leniently.
std::vector<OutputProblem> check_label_object(const nlohmann::json& j, AnnotationRecord* out = nullptr);

struct Exemplar {
    BugType bug_type = BugType::LogicBug;
    std::string post_id;
    /// Post as rendered for the prompt, or its summary.
    std::string text;
    bool summarized = false;
    AnnotationRecord labels;

    bool operator==(const Exemplar&) const = default;
};

void to_json(nlohmann::json& j, const Exemplar& e);
void from_json(const nlohmann::json& j, Exemplar& e);

std::string render_exemplar(const Exemplar& e);

struct PromptKit {
    ClassifierMode mode = ClassifierMode::TwoStage;
    std::string definitions = definitions_block();
    std::vector<Exemplar> exemplars;
    bool include_solutions = false;
    int max_repairs = 2;
    RetryPolicy retry;
};

struct Classification {
    AnnotationRecord record;
    int repairs = 0;
    std::vector<std::string> repair_log;
    std::vector<Usage> usages;
    std::int64_t latency_ms = 0;
};

/// Assigns the six labels and three rationales. Two-stage (and the
/// tool-less ReAct variant) requires an explanation; the prompting
/// baselines forbid one. Throws SchemaViolation when repairs run out, or
/// UnknownLabel when the last rejection was only about unregistered labels.
Classification classify(const PostRecord& post, const std::optional<std::string>& explanation, const PromptKit& kit,
                        Backend& gateway, int bug_index = 0);

Classification run_zero_shot(const PostRecord& post, const PromptKit& kit, Backend& gateway);
Classification run_one_shot(const PostRecord& post, const PromptKit& kit, Backend& gateway);

class NoExemplar : public std::runtime_error {
public:
    explicit NoExemplar(BugType value);
    BugType value() const noexcept { return value_; }

private:
    BugType value_;
};

struct ExemplarSet {
    std::vector<Exemplar> exemplars;
    /// One entry per bug type without a gold example.
    std::vector<std::string> warnings;
};

/// Picks, per bug type, the gold post with the shortest rendered text (ties
/// by post id). While definitions plus exemplars exceed
/// `context_budget_tokens`, the largest unsummarized exemplar is replaced by
/// a model-written summary.
ExemplarSet build_one_shot_exemplars(const std::vector<std::pair<PostRecord, AnnotationRecord>>& gold,
                                     int context_budget_tokens, Backend& gateway, const RetryPolicy& retry = {});

nlohmann::json exemplars_to_json(const std::vector<Exemplar>& exemplars);
std::vector<Exemplar> exemplars_from_json(const nlohmann::json& j);

struct NoToolsRun {
    ReActTrace trace;
    Classification classification;
};

/// Two-stage pipeline with every tool answer replaced by kNoResults.
NoToolsRun run_react_no_tools(const PostRecord& post, const ToolRegistry& registry, Backend& gateway,
                              const ReActLimits& limits, const PromptKit& kit);

}  // namespace agentbug
