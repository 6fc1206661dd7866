// SPDX-License-Identifier: Apache-2.0
#include "agentbug/toolbox.hpp"

#include <chrono>

#include "agentbug/text_util.hpp"

namespace agentbug {

std::string normalize_query(std::string_view q) {
    return text::to_lower(text::collapse_whitespace(q));
}

std::string cache_key(std::string_view tool, std::string_view query) {
    return text::sha256_hex(std::string(tool) + '\x1f' + normalize_query(query));
}

std::vector<ToolSpec> default_tool_specs() {
    auto docs = [](std::string name, std::string framework, std::string site) {
        return ToolSpec{std::move(name),
                        "Search the official " + framework +
                            " documentation. Use for API signatures, parameters, import paths, deprecations, and "
                            "version-specific behavior.",
                        ToolTarget{framework, std::move(site)}, true};
    };
    std::vector<ToolSpec> specs{
        docs("search_langchain_docs", "LangChain (Python)", "python.langchain.com"),
        docs("search_langchain_js_docs", "LangChain.js", "js.langchain.com"),
        docs("search_langgraph_docs", "LangGraph", "langchain-ai.github.io/langgraph"),
        docs("search_pydantic_docs", "Pydantic", "docs.pydantic.dev"),
        docs("search_crewai_docs", "CrewAI", "docs.crewai.com"),
        docs("search_llamaindex_docs", "LlamaIndex", "docs.llamaindex.ai"),
        docs("search_semantic_kernel_docs", "Semantic Kernel", "learn.microsoft.com/en-us/semantic-kernel"),
        docs("search_autogen_docs", "AutoGen", "microsoft.github.io/autogen"),
        ToolSpec{"search_openai_community",
                 "Search the OpenAI developer community forum for reports of the same error, model behavior, or API "
                 "limitation.",
                 ToolTarget{"openai-community", "community.openai.com"}, true},
        ToolSpec{"search_github_discussions",
                 "Search GitHub Discussions of the LangChain, LangChain.js, LangGraph, Pydantic, CrewAI, LlamaIndex, "
                 "Semantic Kernel, and AutoGen projects for maintainers' answers and known issues.",
                 ToolTarget{"github-discussions", "github.com",
                            "https://html.duckduckgo.com/html/?q={query}+inurl%3Adiscussions"},
                 true},
    };
    return specs;
}

ToolRegistry::ToolRegistry(std::vector<ToolSpec> specs) : specs_(std::move(specs)) {
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        for (std::size_t j = i + 1; j < specs_.size(); ++j) {
            if (specs_[i].name == specs_[j].name) throw std::invalid_argument("duplicate tool name " + specs_[i].name);
        }
    }
}

const ToolSpec* ToolRegistry::find(std::string_view name) const {
    for (const auto& s : specs_) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

void ToolRegistry::set_enabled(std::string_view name, bool enabled) {
    for (auto& s : specs_) {
        if (s.name == name) {
            s.enabled = enabled;
            return;
        }
    }
    throw std::invalid_argument("unknown tool \"" + std::string(name) + "\"");
}

void ToolRegistry::apply_overrides(const nlohmann::json& overrides) {
    for (const auto& [name, o] : overrides.items()) {
        ToolSpec* spec = nullptr;
        for (auto& s : specs_) {
            if (s.name == name) spec = &s;
        }
        if (!spec) throw std::invalid_argument("unknown tool \"" + name + "\" in tool overrides");
        spec->target.site = o.value("site", spec->target.site);
        spec->target.search_url = o.value("search_url", spec->target.search_url);
        spec->description = o.value("description", spec->description);
        spec->enabled = o.value("enabled", spec->enabled);
    }
}

std::vector<const ToolSpec*> ToolRegistry::enabled() const {
    std::vector<const ToolSpec*> out;
    for (const auto& s : specs_) {
        if (s.enabled) out.push_back(&s);
    }
    return out;
}

std::vector<ToolSchema> ToolRegistry::schemas() const {
    std::vector<ToolSchema> out;
    for (const auto* s : enabled()) {
        out.push_back({s->name, s->description,
                       nlohmann::json{{"type", "object"},
                                      {"properties",
                                       {{"query", {{"type", "string"}, {"description", "Search keywords"}}},
                                        {"thought", {{"type", "string"}, {"description", "Why this search helps"}}}}},
                                      {"required", {"query"}}}});
    }
    return out;
}

std::string summarize(Backend& gateway, std::string_view raw, std::size_t budget_chars, std::string_view query,
                      const RetryPolicy& retry, Usage* usage) {
    if (budget_chars < 200) throw std::invalid_argument("summary budget must be at least 200 characters");
    if (raw.size() <= budget_chars) return std::string(raw);

    ChatRequest req;
    req.system_prompt =
        "You condense documentation and forum search results for a debugging assistant. Keep only what bears on the "
        "query. Preserve exact API and class names, import paths, parameter names, version numbers, and error "
        "messages verbatim. Drop navigation text, marketing, and unrelated sections. Answer in at most " +
        std::to_string(budget_chars) + " characters of plain text.";
    std::string prompt;
    if (!query.empty()) prompt += "Query: " + std::string(query) + "\n\n";
    prompt += "Search results:\n" + std::string(raw);
    req.messages.push_back({Role::User, std::move(prompt), std::nullopt});
    req.max_output_tokens = static_cast<int>(budget_chars / 2 + 64);

    ChatResponse resp = complete(gateway, req, retry);
    if (usage) *usage += resp.usage;
    std::string summary = resp.content ? std::string(text::trim(*resp.content)) : std::string{};
    return std::string(text::utf8_prefix(summary, budget_chars));
}

ToolResult run_tool(const ToolSpec& spec, std::string_view query, CacheStore& cache, PageSource& source,
                    Backend& summarizer, const ToolboxConfig& cfg) {
    if (!spec.enabled) throw std::invalid_argument("tool " + spec.name + " is disabled");
    const auto start = std::chrono::steady_clock::now();
    ToolResult result;
    result.tool = spec.name;
    result.query = std::string(query);
    auto finish = [&]() -> ToolResult {
        result.elapsed_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
        return std::move(result);
    };

    const std::string normalized = normalize_query(query);
    if (normalized.empty()) {
        result.summary = std::string(kNoResults);
        return finish();
    }
    const std::string key = cache_key(spec.name, normalized);
    try {
        if (auto cached = cache.get(key)) {
            result.summary = std::move(*cached);
            result.from_cache = true;
            return finish();
        }
    } catch (const std::exception&) {
        // An unreachable external cache degrades to uncached operation.
    }

    std::vector<SearchHit> hits;
    try {
        hits = source.search(spec.name, spec.target, normalized, cfg.top_k);
    } catch (const std::exception&) {
        result.summary = std::string(kNoResults);
        return finish();
    }
    auto store = [&](const std::string& value) {
        try {
            cache.put(key, value);
        } catch (const std::exception&) {
        }
    };
    if (hits.empty()) {
        result.summary = std::string(kNoResults);
        store(result.summary);
        return finish();
    }

    std::string raw;
    for (const auto& h : hits) {
        result.fetched_urls.push_back(h.url);
        raw += "Source: " + h.url + "\n" + h.text + "\n\n";
    }
    try {
        result.summary = summarize(summarizer, raw, cfg.budget_chars, normalized, cfg.retry, &result.summarizer_usage);
    } catch (const std::exception&) {
        result.summary.clear();
    }
    if (text::trim(result.summary).empty()) {
        result.summary = std::string(text::utf8_prefix(raw, cfg.budget_chars));
        result.summary_degraded = true;
        return finish();
    }
    store(result.summary);
    return finish();
}

}  // namespace agentbug
