// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace agentbug {

enum class Role { User, Assistant, Tool };

std::string_view role_name(Role r);

struct ToolCall {
    std::string id;
    std::string tool_name;
    std::string arguments_json;

    bool operator==(const ToolCall&) const = default;
};

/// An assistant message may carry the tool call it made; a tool message
/// carries the call it answers.
struct ChatMessage {
    Role role = Role::User;
    std::string content;
    std::optional<ToolCall> tool_call;

    bool operator==(const ChatMessage&) const = default;
};

struct ToolSchema {
    std::string name;
    std::string description;
    nlohmann::json parameters;

    bool operator==(const ToolSchema&) const = default;
};

struct ChatRequest {
    std::string system_prompt;
    std::vector<ChatMessage> messages;
    std::vector<ToolSchema> tool_schemas;
    std::optional<std::string> output_schema;
    double temperature = 0.0;
    int max_output_tokens = 2048;

    bool operator==(const ChatRequest&) const = default;
};

struct Usage {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    bool estimated = false;

    Usage& operator+=(const Usage& o) {
        input_tokens += o.input_tokens;
        output_tokens += o.output_tokens;
        estimated = estimated || o.estimated;
        return *this;
    }
    bool operator==(const Usage&) const = default;
};

/// Exactly one of `content` and `tool_calls` is populated. Text a model emits
/// alongside tool calls is kept in `narration`.
struct ChatResponse {
    std::optional<std::string> content;
    std::vector<ToolCall> tool_calls;
    std::string narration;
    Usage usage;
    std::int64_t latency_ms = 0;

    bool operator==(const ChatResponse&) const = default;
};

class GatewayError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Network failure, authentication failure, or retries exhausted.
class BackendUnavailable : public GatewayError {
public:
    using GatewayError::GatewayError;
};

/// A failure worth retrying (connection reset, 429, 5xx). Converted to
/// BackendUnavailable once the retry budget is spent.
class TransientBackendError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

class EmptyTurn : public GatewayError {
public:
    using GatewayError::GatewayError;
};

class ScriptExhausted : public GatewayError {
public:
    using GatewayError::GatewayError;
};

class UnknownModel : public GatewayError {
public:
    using GatewayError::GatewayError;
};

struct BackendCaps {
    bool native_structured_output = false;
    bool native_tool_calling = false;
};

/// What a backend returns before the gateway normalizes it: usage may be
/// missing and content/tool calls may both be present or both absent.
struct RawResponse {
    std::optional<std::string> content;
    std::vector<ToolCall> tool_calls;
    std::optional<Usage> usage;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string model_id() const = 0;
    virtual BackendCaps capabilities() const = 0;
    /// Throws TransientBackendError for retryable failures and
    /// BackendUnavailable for permanent ones.
    virtual RawResponse send(const ChatRequest& req) = 0;
};

struct RetryPolicy {
    std::vector<std::chrono::milliseconds> backoff{std::chrono::seconds(1), std::chrono::seconds(2),
                                                   std::chrono::seconds(4)};
    std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

/// Schema-in-prompt instruction appended to the system prompt when a backend
/// cannot constrain decoding natively.
std::string strict_prompt_suffix(const std::string& schema);

/// The request a backend actually receives: strict-prompt mode is applied
/// when `output_schema` is set and the backend lacks native support.
ChatRequest adapt_request(const ChatRequest& req, const BackendCaps& caps);

Usage estimate_usage(const ChatRequest& req, const RawResponse& resp);

/// Sends `req` with retry on transient errors and normalizes the result.
/// Throws std::invalid_argument for malformed requests, BackendUnavailable,
/// and EmptyTurn when every attempt produced neither content nor tool calls.
ChatResponse complete(Backend& backend, const ChatRequest& req, const RetryPolicy& retry = {});

enum class ScriptedFault { None, Transient, Unavailable };

struct ScriptedTurn {
    RawResponse response;
    ScriptedFault fault = ScriptedFault::None;
};

/// Replays canned turns in order and records every request it receives.
/// Non-strict scripts repeat their last turn once exhausted.
class ScriptedBackend final : public Backend {
public:
    ScriptedBackend(std::vector<ScriptedTurn> script, bool strict, std::string model = "scripted",
                    BackendCaps caps = {true, true});

    std::string model_id() const override { return model_; }
    BackendCaps capabilities() const override { return caps_; }
    RawResponse send(const ChatRequest& req) override;

    std::vector<ChatRequest> recorded_requests() const;
    std::size_t calls() const;
    std::size_t remaining() const;

private:
    std::vector<ScriptedTurn> script_;
    bool strict_;
    std::string model_;
    BackendCaps caps_;
    mutable std::mutex mu_;
    std::size_t next_ = 0;
    std::vector<ChatRequest> recorded_;
};

std::shared_ptr<ScriptedBackend> scripted_backend(std::vector<ScriptedTurn> script, bool strict);

ScriptedTurn reply(std::string content);
ScriptedTurn tool_call(std::string tool, nlohmann::json arguments, std::string id = {});

/// JSON form: [{"content": "..."} | {"tool_calls": [{"name", "arguments"}]},
/// optional "usage": {"input_tokens", "output_tokens"}, optional
/// "fault": "transient" | "unavailable"].
std::vector<ScriptedTurn> parse_script(const nlohmann::json& j);

struct Price {
    double usd_per_million_input_tokens = 0.0;
    double usd_per_million_output_tokens = 0.0;
};

class PriceTable {
public:
    PriceTable() = default;
    explicit PriceTable(std::map<std::string, Price> prices);

    /// {"model-id": {"usd_per_million_input_tokens": x, "usd_per_million_output_tokens": y}}
    static PriceTable from_json(const nlohmann::json& j);
    static PriceTable load(const std::filesystem::path& path);

    const Price& at(const std::string& model) const;
    bool contains(const std::string& model) const { return prices_.count(model) > 0; }

private:
    std::map<std::string, Price> prices_;
};

double accumulate_cost(std::span<const Usage> usages, const std::string& model, const PriceTable& prices);

}  // namespace agentbug
