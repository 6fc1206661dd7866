// SPDX-License-Identifier: Apache-2.0
#include "agentbug/structured_output.hpp"

#include "agentbug/text_util.hpp"

namespace agentbug {

SchemaViolation::SchemaViolation(std::string what, std::vector<OutputProblem> problems)
    : std::runtime_error(std::move(what)), problems_(std::move(problems)) {}

namespace {

std::optional<nlohmann::json> parse_object(std::string_view s) {
    auto j = nlohmann::json::parse(s.begin(), s.end(), nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
}

std::string describe(const std::vector<OutputProblem>& problems) {
    std::string out;
    for (const auto& p : problems) {
        if (!out.empty()) out += "; ";
        out += p.message;
    }
    return out;
}

}  // namespace

std::optional<nlohmann::json> extract_json_object(std::string_view raw) {
    const auto t = text::trim(raw);
    if (auto j = parse_object(t)) return j;
    if (auto fence = t.find("```"); fence != std::string_view::npos) {
        auto body_start = t.find('\n', fence);
        auto close = body_start == std::string_view::npos ? std::string_view::npos : t.find("```", body_start);
        if (close != std::string_view::npos) {
            if (auto j = parse_object(text::trim(t.substr(body_start + 1, close - body_start - 1)))) return j;
        }
    }
    auto open = t.find('{');
    auto close = t.rfind('}');
    if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
        return parse_object(t.substr(open, close - open + 1));
    }
    return std::nullopt;
}

StructuredResult complete_structured(Backend& backend, const ChatRequest& req, const OutputValidator& validate,
                                     int max_repairs, const RetryPolicy& retry) {
    StructuredResult result;
    ChatRequest conversation = req;
    std::vector<OutputProblem> problems;
    for (int round = 0; round <= max_repairs; ++round) {
        ChatResponse resp = complete(backend, conversation, retry);
        result.usages.push_back(resp.usage);
        result.latency_ms += resp.latency_ms;

        std::string reply_text;
        problems.clear();
        if (!resp.content) {
            reply_text = resp.narration;
            problems.push_back({ProblemKind::Syntax, "expected a JSON object but the reply was a tool call"});
        } else {
            reply_text = *resp.content;
            if (auto obj = extract_json_object(reply_text)) {
                problems = validate(*obj);
                if (problems.empty()) {
                    result.value = std::move(*obj);
                    return result;
                }
            } else {
                problems.push_back({ProblemKind::Syntax, "reply is not a JSON object"});
            }
        }
        if (round == max_repairs) break;
        ++result.repairs;
        result.repair_log.push_back(describe(problems));
        conversation.messages.push_back({Role::Assistant, reply_text.empty() ? "(no text)" : reply_text, std::nullopt});
        conversation.messages.push_back(
            {Role::User,
             "Your previous reply could not be accepted: " + describe(problems) +
                 ". Reply again with only the corrected JSON object, using label names exactly as defined.",
             std::nullopt});
    }
    throw SchemaViolation("structured output rejected after " + std::to_string(max_repairs) +
                              " repair attempts: " + describe(problems),
                          problems);
}

}  // namespace agentbug
