// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentbug/gateway.hpp"

namespace agentbug {

enum class ProblemKind { Syntax, Schema, UnknownLabel, Rule };

struct OutputProblem {
    ProblemKind kind = ProblemKind::Schema;
    std::string message;
};

/// Returns the problems with a candidate object; empty means accepted.
using OutputValidator = std::function<std::vector<OutputProblem>(const nlohmann::json&)>;

class SchemaViolation : public std::runtime_error {
public:
    SchemaViolation(std::string what, std::vector<OutputProblem> problems);
    const std::vector<OutputProblem>& problems() const noexcept { return problems_; }

private:
    std::vector<OutputProblem> problems_;
};

/// Finds the JSON object in a model reply: the whole text, a fenced
/// ```json block, or the outermost {...} span.
std::optional<nlohmann::json> extract_json_object(std::string_view text);

struct StructuredResult {
    nlohmann::json value;
    int repairs = 0;
    std::vector<std::string> repair_log;
    std::vector<Usage> usages;
    std::int64_t latency_ms = 0;
};

/// Asks for a schema-conforming object, re-asking up to `max_repairs` times
/// with the validator's complaints. Throws SchemaViolation carrying the last
/// round's problems once the budget is spent; gateway errors propagate.
StructuredResult complete_structured(Backend& backend, const ChatRequest& req, const OutputValidator& validate,
                                     int max_repairs = 2, const RetryPolicy& retry = {});

}  // namespace agentbug
