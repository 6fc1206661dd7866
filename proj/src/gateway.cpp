// SPDX-License-Identifier: Apache-2.0
#include "agentbug/gateway.hpp"

#include <cmath>
#include <fstream>
#include <thread>

#include "agentbug/text_util.hpp"

namespace agentbug {

std::string_view role_name(Role r) {
    switch (r) {
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
        case Role::Tool: return "tool";
    }
    return "?";
}

std::string strict_prompt_suffix(const std::string& schema) {
    return "\n\nRespond with a single JSON object and nothing else: no prose, no markdown fences. "
           "The object must validate against this JSON schema:\n" +
           schema;
}

ChatRequest adapt_request(const ChatRequest& req, const BackendCaps& caps) {
    ChatRequest out = req;
    if (out.output_schema && !caps.native_structured_output) {
        out.system_prompt += strict_prompt_suffix(*out.output_schema);
        out.output_schema.reset();
    }
    return out;
}

Usage estimate_usage(const ChatRequest& req, const RawResponse& resp) {
    std::size_t in_chars = req.system_prompt.size();
    for (const auto& m : req.messages) {
        in_chars += m.content.size();
        if (m.tool_call) in_chars += m.tool_call->tool_name.size() + m.tool_call->arguments_json.size();
    }
    for (const auto& t : req.tool_schemas) in_chars += t.name.size() + t.description.size() + t.parameters.dump().size();
    if (req.output_schema) in_chars += req.output_schema->size();

    std::size_t out_chars = resp.content ? resp.content->size() : 0;
    for (const auto& c : resp.tool_calls) out_chars += c.tool_name.size() + c.arguments_json.size();

    return Usage{static_cast<std::int64_t>((in_chars + 3) / 4), static_cast<std::int64_t>((out_chars + 3) / 4), true};
}

namespace {

void validate_request(const ChatRequest& req) {
    if (req.messages.empty()) throw std::invalid_argument("chat request has no messages");
    if (!(req.temperature >= 0.0 && req.temperature <= 2.0)) {
        throw std::invalid_argument("temperature must lie in [0, 2]");
    }
    if (req.max_output_tokens <= 0) throw std::invalid_argument("max_output_tokens must be positive");
}

bool is_blank(const std::optional<std::string>& s) {
    return !s || text::trim(*s).empty();
}

}  // namespace

ChatResponse complete(Backend& backend, const ChatRequest& req, const RetryPolicy& retry) {
    validate_request(req);
    const ChatRequest wire = adapt_request(req, backend.capabilities());
    auto sleep = retry.sleep ? retry.sleep : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };

    const std::size_t attempts = retry.backoff.size() + 1;
    std::string last_error;
    bool saw_empty = false;
    for (std::size_t attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) sleep(retry.backoff[attempt - 1]);
        const auto start = std::chrono::steady_clock::now();
        RawResponse raw;
        try {
            raw = backend.send(wire);
        } catch (const TransientBackendError& e) {
            last_error = e.what();
            continue;
        }
        const auto elapsed = std::chrono::steady_clock::now() - start;

        if (raw.tool_calls.empty() && is_blank(raw.content)) {
            saw_empty = true;
            last_error = "backend returned neither content nor tool calls";
            continue;
        }
        ChatResponse out;
        if (!raw.tool_calls.empty()) {
            out.tool_calls = raw.tool_calls;
            for (std::size_t i = 0; i < out.tool_calls.size(); ++i) {
                if (out.tool_calls[i].id.empty()) out.tool_calls[i].id = "call_" + std::to_string(i);
                if (text::trim(out.tool_calls[i].arguments_json).empty()) out.tool_calls[i].arguments_json = "{}";
            }
            if (raw.content) out.narration = std::string(text::trim(*raw.content));
        } else {
            out.content = raw.content;
        }
        out.usage = raw.usage ? *raw.usage : estimate_usage(wire, raw);
        out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
        return out;
    }
    if (saw_empty) throw EmptyTurn(backend.model_id() + ": " + last_error);
    throw BackendUnavailable(backend.model_id() + ": retries exhausted: " + last_error);
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptedTurn> script, bool strict, std::string model, BackendCaps caps)
    : script_(std::move(script)), strict_(strict), model_(std::move(model)), caps_(caps) {
    if (script_.empty()) throw std::invalid_argument("scripted backend needs a non-empty script");
}

RawResponse ScriptedBackend::send(const ChatRequest& req) {
    std::lock_guard lock(mu_);
    recorded_.push_back(req);
    if (next_ >= script_.size()) {
        if (strict_) {
            throw ScriptExhausted("script of " + std::to_string(script_.size()) + " turns exhausted at call " +
                                  std::to_string(recorded_.size()));
        }
        next_ = script_.size() - 1;
    }
    const ScriptedTurn& turn = script_[next_++];
    switch (turn.fault) {
        case ScriptedFault::Transient: throw TransientBackendError("scripted transient failure");
        case ScriptedFault::Unavailable: throw BackendUnavailable("scripted backend unavailable");
        case ScriptedFault::None: break;
    }
    return turn.response;
}

std::vector<ChatRequest> ScriptedBackend::recorded_requests() const {
    std::lock_guard lock(mu_);
    return recorded_;
}

std::size_t ScriptedBackend::calls() const {
    std::lock_guard lock(mu_);
    return recorded_.size();
}

std::size_t ScriptedBackend::remaining() const {
    std::lock_guard lock(mu_);
    return next_ >= script_.size() ? 0 : script_.size() - next_;
}

std::shared_ptr<ScriptedBackend> scripted_backend(std::vector<ScriptedTurn> script, bool strict) {
    return std::make_shared<ScriptedBackend>(std::move(script), strict);
}

ScriptedTurn reply(std::string content) {
    ScriptedTurn t;
    t.response.content = std::move(content);
    return t;
}

ScriptedTurn tool_call(std::string tool, nlohmann::json arguments, std::string id) {
    ScriptedTurn t;
    t.response.tool_calls.push_back({std::move(id), std::move(tool), arguments.dump()});
    return t;
}

std::vector<ScriptedTurn> parse_script(const nlohmann::json& j) {
    if (!j.is_array()) throw std::invalid_argument("script must be a JSON array of turns");
    std::vector<ScriptedTurn> out;
    for (const auto& item : j) {
        ScriptedTurn t;
        if (auto it = item.find("content"); it != item.end() && !it->is_null()) {
            t.response.content = it->is_string() ? it->get<std::string>() : it->dump();
        }
        if (auto it = item.find("tool_calls"); it != item.end()) {
            for (const auto& c : *it) {
                const auto& args = c.contains("arguments") ? c.at("arguments") : nlohmann::json::object();
                t.response.tool_calls.push_back({c.value("id", std::string{}), c.at("name").get<std::string>(),
                                                 args.is_string() ? args.get<std::string>() : args.dump()});
            }
        }
        if (auto it = item.find("usage"); it != item.end()) {
            t.response.usage = Usage{it->value("input_tokens", std::int64_t{0}),
                                     it->value("output_tokens", std::int64_t{0}), false};
        }
        const std::string fault = item.value("fault", std::string("none"));
        if (fault == "transient") {
            t.fault = ScriptedFault::Transient;
        } else if (fault == "unavailable") {
            t.fault = ScriptedFault::Unavailable;
        } else if (fault != "none") {
            throw std::invalid_argument("unknown scripted fault \"" + fault + "\"");
        }
        out.push_back(std::move(t));
    }
    return out;
}

PriceTable::PriceTable(std::map<std::string, Price> prices) : prices_(std::move(prices)) {
    for (const auto& [model, p] : prices_) {
        if (!std::isfinite(p.usd_per_million_input_tokens) || !std::isfinite(p.usd_per_million_output_tokens) ||
            p.usd_per_million_input_tokens < 0 || p.usd_per_million_output_tokens < 0) {
            throw std::invalid_argument("price for model \"" + model + "\" must be finite and non-negative");
        }
    }
}

PriceTable PriceTable::from_json(const nlohmann::json& j) {
    std::map<std::string, Price> prices;
    for (const auto& [model, entry] : j.items()) {
        prices[model] = Price{entry.at("usd_per_million_input_tokens").get<double>(),
                              entry.at("usd_per_million_output_tokens").get<double>()};
    }
    return PriceTable(std::move(prices));
}

PriceTable PriceTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open price table " + path.string());
    return from_json(nlohmann::json::parse(in));
}

const Price& PriceTable::at(const std::string& model) const {
    auto it = prices_.find(model);
    if (it == prices_.end()) throw UnknownModel("no price entry for model \"" + model + "\"");
    return it->second;
}

double accumulate_cost(std::span<const Usage> usages, const std::string& model, const PriceTable& prices) {
    const Price& p = prices.at(model);
    // Integer token sums keep the result independent of summation order.
    std::int64_t in = 0;
    std::int64_t out = 0;
    for (const auto& u : usages) {
        in += u.input_tokens;
        out += u.output_tokens;
    }
    return (static_cast<double>(in) * p.usd_per_million_input_tokens +
            static_cast<double>(out) * p.usd_per_million_output_tokens) /
           1e6;
}

}  // namespace agentbug
