// SPDX-License-Identifier: Apache-2.0
#include "agentbug/http_backends.hpp"

#include <cstdlib>

#include <httplib.h>

#include "agentbug/text_util.hpp"

namespace agentbug {

namespace {

using json = nlohmann::json;

json parse_schema(const std::string& schema) {
    try {
        return json::parse(schema);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("output_schema is not valid JSON: ") + e.what());
    }
}

json parse_arguments(const std::string& args) {
    try {
        return json::parse(args.empty() ? "{}" : args);
    } catch (const json::exception&) {
        return json{{"input", args}};
    }
}

bool is_reasoning_model(const std::string& model) {
    auto bare = model.substr(model.find('/') == std::string::npos ? 0 : model.find('/') + 1);
    return bare.rfind("o1", 0) == 0 || bare.rfind("o3", 0) == 0 || bare.rfind("o4", 0) == 0;
}

json post_json(const HttpBackendConfig& cfg, const json& body, const httplib::Headers& headers) {
    httplib::Client client(cfg.base_url);
    client.set_connection_timeout(std::chrono::seconds(20));
    client.set_read_timeout(cfg.timeout);
    client.set_write_timeout(cfg.timeout);
    auto res = client.Post(cfg.path, headers, body.dump(), "application/json");
    if (!res) {
        throw TransientBackendError(cfg.base_url + ": " + httplib::to_string(res.error()));
    }
    const int status = res->status;
    const std::string excerpt(text::utf8_prefix(res->body, 300));
    if (status == 401 || status == 403) {
        throw BackendUnavailable(cfg.base_url + ": authentication failed (HTTP " + std::to_string(status) + ")");
    }
    if (status == 408 || status == 429 || status >= 500) {
        throw TransientBackendError(cfg.base_url + ": HTTP " + std::to_string(status) + ": " + excerpt);
    }
    if (status != 200) {
        throw BackendUnavailable(cfg.base_url + ": HTTP " + std::to_string(status) + ": " + excerpt);
    }
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        throw BackendUnavailable(cfg.base_url + ": malformed response body: " + e.what());
    }
}

}  // namespace

OpenAiCompatibleBackend::OpenAiCompatibleBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {}

json OpenAiCompatibleBackend::request_body(const ChatRequest& req, const std::string& model) {
    json messages = json::array();
    if (!req.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", req.system_prompt}});
    for (const auto& m : req.messages) {
        switch (m.role) {
            case Role::User: messages.push_back({{"role", "user"}, {"content", m.content}}); break;
            case Role::Assistant: {
                json msg{{"role", "assistant"}, {"content", m.content}};
                if (m.tool_call) {
                    if (m.content.empty()) msg["content"] = nullptr;
                    msg["tool_calls"] = json::array({{{"id", m.tool_call->id},
                                                      {"type", "function"},
                                                      {"function",
                                                       {{"name", m.tool_call->tool_name},
                                                        {"arguments", m.tool_call->arguments_json}}}}});
                }
                messages.push_back(std::move(msg));
                break;
            }
            case Role::Tool:
                messages.push_back({{"role", "tool"},
                                    {"tool_call_id", m.tool_call ? m.tool_call->id : std::string{}},
                                    {"content", m.content}});
                break;
        }
    }
    json body{{"model", model}, {"messages", std::move(messages)}};
    if (is_reasoning_model(model)) {
        body["max_completion_tokens"] = req.max_output_tokens;
    } else {
        body["max_tokens"] = req.max_output_tokens;
        body["temperature"] = req.temperature;
    }
    if (!req.tool_schemas.empty()) {
        json tools = json::array();
        for (const auto& t : req.tool_schemas) {
            tools.push_back({{"type", "function"},
                             {"function", {{"name", t.name}, {"description", t.description}, {"parameters", t.parameters}}}});
        }
        body["tools"] = std::move(tools);
    }
    if (req.output_schema) {
        body["response_format"] = {{"type", "json_schema"},
                                   {"json_schema", {{"name", "structured_output"}, {"schema", parse_schema(*req.output_schema)}}}};
    }
    return body;
}

RawResponse OpenAiCompatibleBackend::parse_response(const json& body) {
    RawResponse out;
    const auto& choices = body.at("choices");
    if (choices.empty()) return out;
    const auto& msg = choices.at(0).at("message");
    if (auto it = msg.find("content"); it != msg.end() && it->is_string()) out.content = it->get<std::string>();
    if (auto it = msg.find("tool_calls"); it != msg.end() && it->is_array()) {
        for (const auto& c : *it) {
            const auto& fn = c.at("function");
            const auto& args = fn.contains("arguments") ? fn.at("arguments") : json("{}");
            out.tool_calls.push_back({c.value("id", std::string{}), fn.at("name").get<std::string>(),
                                      args.is_string() ? args.get<std::string>() : args.dump()});
        }
    }
    if (auto it = body.find("usage"); it != body.end() && it->is_object()) {
        out.usage = Usage{it->value("prompt_tokens", std::int64_t{0}), it->value("completion_tokens", std::int64_t{0}),
                          false};
    }
    return out;
}

RawResponse OpenAiCompatibleBackend::send(const ChatRequest& req) {
    httplib::Headers headers{{"Authorization", "Bearer " + cfg_.api_key}};
    const json resp = post_json(cfg_, request_body(req, cfg_.model), headers);
    try {
        return parse_response(resp);
    } catch (const json::exception& e) {
        throw BackendUnavailable(cfg_.base_url + ": unexpected response shape: " + e.what());
    }
}

AnthropicBackend::AnthropicBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {}

json AnthropicBackend::request_body(const ChatRequest& req, const std::string& model) {
    // The messages API wants strictly alternating roles, so consecutive
    // same-role entries are merged into one content-block list.
    json messages = json::array();
    auto append = [&](const std::string& role, json block) {
        if (!messages.empty() && messages.back()["role"] == role) {
            messages.back()["content"].push_back(std::move(block));
        } else {
            messages.push_back({{"role", role}, {"content", json::array({std::move(block)})}});
        }
    };
    for (const auto& m : req.messages) {
        switch (m.role) {
            case Role::User: append("user", {{"type", "text"}, {"text", m.content}}); break;
            case Role::Assistant:
                if (!m.content.empty()) append("assistant", {{"type", "text"}, {"text", m.content}});
                if (m.tool_call) {
                    append("assistant", {{"type", "tool_use"},
                                         {"id", m.tool_call->id},
                                         {"name", m.tool_call->tool_name},
                                         {"input", parse_arguments(m.tool_call->arguments_json)}});
                }
                break;
            case Role::Tool:
                append("user", {{"type", "tool_result"},
                                {"tool_use_id", m.tool_call ? m.tool_call->id : std::string{}},
                                {"content", m.content}});
                break;
        }
    }
    json body{{"model", model},
              {"max_tokens", req.max_output_tokens},
              {"temperature", req.temperature},
              {"messages", std::move(messages)}};
    if (!req.system_prompt.empty()) body["system"] = req.system_prompt;
    if (!req.tool_schemas.empty()) {
        json tools = json::array();
        for (const auto& t : req.tool_schemas) {
            tools.push_back({{"name", t.name}, {"description", t.description}, {"input_schema", t.parameters}});
        }
        body["tools"] = std::move(tools);
    }
    return body;
}

RawResponse AnthropicBackend::parse_response(const json& body) {
    RawResponse out;
    std::string text;
    for (const auto& block : body.at("content")) {
        const std::string type = block.value("type", std::string{});
        if (type == "text") {
            text += block.value("text", std::string{});
        } else if (type == "tool_use") {
            out.tool_calls.push_back({block.value("id", std::string{}), block.at("name").get<std::string>(),
                                      block.contains("input") ? block.at("input").dump() : "{}"});
        }
    }
    if (!text.empty()) out.content = std::move(text);
    if (auto it = body.find("usage"); it != body.end() && it->is_object()) {
        out.usage = Usage{it->value("input_tokens", std::int64_t{0}), it->value("output_tokens", std::int64_t{0}), false};
    }
    return out;
}

RawResponse AnthropicBackend::send(const ChatRequest& req) {
    httplib::Headers headers{{"x-api-key", cfg_.api_key}, {"anthropic-version", "2023-06-01"}};
    const json resp = post_json(cfg_, request_body(req, cfg_.model), headers);
    try {
        return parse_response(resp);
    } catch (const json::exception& e) {
        throw BackendUnavailable(cfg_.base_url + ": unexpected response shape: " + e.what());
    }
}

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    };
}

std::unique_ptr<Backend> make_http_backend(const std::string& vendor, const std::string& model, const EnvLookup& env) {
    struct VendorDefaults {
        const char* name;
        const char* key_var;
        const char* base_var;
        const char* base_url;
        const char* path;
        BackendCaps caps;
    };
    static const VendorDefaults kVendors[] = {
        {"openai", "OPENAI_API_KEY", "OPENAI_BASE_URL", "https://api.openai.com", "/v1/chat/completions", {true, true}},
        {"openrouter", "OPENROUTER_API_KEY", "OPENROUTER_BASE_URL", "https://openrouter.ai", "/api/v1/chat/completions",
         {true, true}},
        {"gemini", "GEMINI_API_KEY", "GEMINI_BASE_URL", "https://generativelanguage.googleapis.com",
         "/v1beta/openai/chat/completions", {true, true}},
        {"anthropic", "ANTHROPIC_API_KEY", "ANTHROPIC_BASE_URL", "https://api.anthropic.com", "/v1/messages",
         {false, true}},
    };
    for (const auto& v : kVendors) {
        if (vendor != v.name) continue;
        auto key = env(v.key_var);
        if (!key || key->empty()) throw std::invalid_argument(std::string(v.key_var) + " is not set");
        HttpBackendConfig cfg{env(v.base_var).value_or(v.base_url), v.path, *key, model, v.caps};
        if (vendor == "anthropic") return std::make_unique<AnthropicBackend>(std::move(cfg));
        return std::make_unique<OpenAiCompatibleBackend>(std::move(cfg));
    }
    throw std::invalid_argument("unknown backend vendor \"" + vendor + "\"");
}

}  // namespace agentbug
