// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "agentbug/gateway.hpp"

namespace agentbug {

struct HttpBackendConfig {
    std::string base_url;  // scheme://host[:port]
    std::string path;      // e.g. /v1/chat/completions
    std::string api_key;
    std::string model;
    BackendCaps caps;
    std::chrono::seconds timeout{120};
};

/// OpenAI chat-completions wire format; also serves OpenRouter and the
/// OpenAI-compatible Gemini endpoint.
class OpenAiCompatibleBackend final : public Backend {
public:
    explicit OpenAiCompatibleBackend(HttpBackendConfig cfg);
    std::string model_id() const override { return cfg_.model; }
    BackendCaps capabilities() const override { return cfg_.caps; }
    RawResponse send(const ChatRequest& req) override;

    static nlohmann::json request_body(const ChatRequest& req, const std::string& model);
    static RawResponse parse_response(const nlohmann::json& body);

private:
    HttpBackendConfig cfg_;
};

/// Anthropic messages API. No native schema-constrained output, so
/// structured requests go through strict prompting.
class AnthropicBackend final : public Backend {
public:
    explicit AnthropicBackend(HttpBackendConfig cfg);
    std::string model_id() const override { return cfg_.model; }
    BackendCaps capabilities() const override { return cfg_.caps; }
    RawResponse send(const ChatRequest& req) override;

    static nlohmann::json request_body(const ChatRequest& req, const std::string& model);
    static RawResponse parse_response(const nlohmann::json& body);

private:
    HttpBackendConfig cfg_;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

EnvLookup process_env();

/// vendor: openai | openrouter | gemini | anthropic. Credentials come from
/// OPENAI_API_KEY, OPENROUTER_API_KEY, GEMINI_API_KEY, ANTHROPIC_API_KEY;
/// <VENDOR>_BASE_URL overrides the endpoint host. Throws
/// std::invalid_argument for an unknown vendor or missing credential.
std::unique_ptr<Backend> make_http_backend(const std::string& vendor, const std::string& model, const EnvLookup& env);

}  // namespace agentbug
