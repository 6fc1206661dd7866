// SPDX-License-Identifier: Apache-2.0
#include "agentbug/react.hpp"

#include <chrono>
#include <sstream>

#include "agentbug/structured_output.hpp"
#include "agentbug/text_util.hpp"

namespace agentbug {

std::string_view step_kind_name(StepKind k) {
    switch (k) {
        case StepKind::Thought: return "thought";
        case StepKind::Action: return "action";
        case StepKind::Observation: return "observation";
        case StepKind::Final: return "final";
    }
    return "?";
}

ToolboxDispatcher::ToolboxDispatcher(const ToolRegistry& registry, CacheStore& cache, PageSource& source,
                                     Backend& summarizer, ToolboxConfig cfg)
    : registry_(registry), cache_(cache), source_(source), summarizer_(summarizer), cfg_(std::move(cfg)) {}

namespace {

std::string tool_names(const std::vector<ToolSchema>& schemas) {
    std::string out;
    for (const auto& s : schemas) {
        if (!out.empty()) out += ", ";
        out += s.name;
    }
    return out;
}

}  // namespace

ToolResult ToolboxDispatcher::dispatch(const std::string& tool, const std::string& query) {
    const ToolSpec* spec = registry_.find(tool);
    if (spec == nullptr || !spec->enabled) {
        ToolResult r;
        r.tool = tool;
        r.query = query;
        r.summary = "Tool \"" + tool + "\" is not available. Available tools: " + tool_names(registry_.schemas()) + ".";
        return r;
    }
    return run_tool(*spec, query, cache_, source_, summarizer_, cfg_);
}

ToolResult NoResultsDispatcher::dispatch(const std::string& tool, const std::string& query) {
    ToolResult r;
    r.tool = tool;
    r.query = query;
    r.summary = std::string(kNoResults);
    return r;
}

std::string render_post(const PostRecord& post, bool include_solutions, std::size_t diff_budget_bytes) {
    std::ostringstream out;
    out << "Source: " << source_name(post.source) << "\n";
    out << "Title: " << post.title << "\n";
    if (!post.tags.empty()) {
        out << "Tags:";
        for (const auto& t : post.tags) out << " " << t;
        out << "\n";
    }
    if (post.commit_message) out << "Commit message:\n" << *post.commit_message << "\n";
    if (!post.body.empty()) out << "Body:\n" << post.body << "\n";
    for (std::size_t i = 0; i < post.code_snippets.size(); ++i) {
        out << "Code snippet " << (i + 1) << ":\n```\n" << post.code_snippets[i] << "\n```\n";
    }
    if (post.diff) {
        out << "Diff:\n```diff\n" << text::truncate_head_biased(*post.diff, diff_budget_bytes) << "\n```\n";
    }
    if (include_solutions) {
        if (post.accepted_answer) out << "Accepted answer:\n" << *post.accepted_answer << "\n";
        for (std::size_t i = 0; i < post.replies.size(); ++i) {
            const auto& r = post.replies[i];
            out << "Reply " << (i + 1) << " (" << (r.author_role == AuthorRole::Asker ? "asker" : "responder")
                << (r.is_solution ? ", marked as solution" : "") << "):\n"
                << r.text << "\n";
        }
    }
    return out.str();
}

std::string react_system_prompt(const std::vector<ToolSchema>& tools, bool native_tools) {
    std::ostringstream out;
    out << "You are a debugging assistant analysing a bug report from a developer building an LLM agent. Work out "
           "what the bug is and why it happens. Verify API names, parameters, versions, and error messages against "
           "the documentation and community tools instead of relying on memory. You may call any tool several "
           "times.\n\nTools:\n";
    for (const auto& t : tools) out << "- " << t.name << ": " << t.description << "\n";
    if (native_tools) {
        out << "\nCall tools through the tool-calling interface with a short keyword query. When you have enough "
               "evidence, stop calling tools and reply in plain text:\n";
    } else {
        out << "\nUse exactly this format, one step per reply:\n"
               "Thought: <your reasoning about what to check next>\n"
               "Action: <tool name>[<search query>]\n"
               "You will then receive:\n"
               "Observation: <summarized search result>\n"
               "When you have enough evidence, reply instead with:\n"
               "Thought: <your conclusion>\n"
               "Final Answer:\n";
    }
    out << "Explanation: <what the bug is>\nReasoning: <why it occurs>\n";
    return out.str();
}

namespace {

std::vector<std::string_view> split_lines(std::string_view s) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto nl = s.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(s.substr(start));
            break;
        }
        lines.push_back(s.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

// Rest of the line after `marker` when the trimmed line starts with it.
std::optional<std::string_view> after_marker(std::string_view line, std::string_view marker) {
    auto t = text::trim(line);
    while (!t.empty() && (t.front() == '*' || t.front() == '#')) t.remove_prefix(1);
    t = text::trim(t);
    if (t.size() < marker.size() || !text::iequals(t.substr(0, marker.size()), marker)) return std::nullopt;
    auto rest = t.substr(marker.size());
    while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
    return text::trim(rest);
}

std::string join(const std::vector<std::string_view>& lines, std::size_t from, std::size_t to) {
    std::string out;
    for (std::size_t i = from; i < to && i < lines.size(); ++i) {
        if (!out.empty()) out += '\n';
        out += lines[i];
    }
    return std::string(text::trim(out));
}

std::string strip_thought_prefix(std::string s) {
    if (auto rest = after_marker(s, "Thought:")) {
        const auto pos = s.find(':');
        return std::string(text::trim(std::string_view(s).substr(pos + 1)));
    }
    return s;
}

ActionDetail parse_action(std::string_view rest, const std::vector<std::string_view>& lines, std::size_t idx) {
    ActionDetail a;
    const auto open = rest.find('[');
    const auto close = rest.rfind(']');
    if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
        a.tool = std::string(text::trim(rest.substr(0, open)));
        a.query = std::string(rest.substr(open + 1, close - open - 1));
        return a;
    }
    const auto paren = rest.find('(');
    const auto rparen = rest.rfind(')');
    if (paren != std::string_view::npos && rparen != std::string_view::npos && rparen > paren) {
        a.tool = std::string(text::trim(rest.substr(0, paren)));
        a.query = std::string(text::trim(rest.substr(paren + 1, rparen - paren - 1)));
    } else {
        a.tool = std::string(text::trim(rest));
        if (idx + 1 < lines.size()) {
            if (auto input = after_marker(lines[idx + 1], "Action Input:")) a.query = std::string(*input);
        }
    }
    if (a.query.size() >= 2 && (a.query.front() == '"' || a.query.front() == '\'') && a.query.back() == a.query.front()) {
        a.query = a.query.substr(1, a.query.size() - 2);
    }
    return a;
}

void split_final(std::string_view body, ParsedTurn& out) {
    const auto lines = split_lines(body);
    std::optional<std::size_t> expl_idx;
    std::optional<std::size_t> reason_idx;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!expl_idx && after_marker(lines[i], "Explanation:")) expl_idx = i;
        if (!reason_idx && after_marker(lines[i], "Reasoning:")) reason_idx = i;
    }
    auto section = [&](std::size_t idx, std::string_view marker, std::size_t end) {
        std::string first(*after_marker(lines[idx], marker));
        std::string tail = join(lines, idx + 1, end);
        if (!tail.empty()) first += (first.empty() ? "" : "\n") + tail;
        return first;
    };
    if (reason_idx && (!expl_idx || *reason_idx > *expl_idx)) {
        out.reasoning = section(*reason_idx, "Reasoning:", lines.size());
        out.explanation = expl_idx ? section(*expl_idx, "Explanation:", *reason_idx) : join(lines, 0, *reason_idx);
    } else if (expl_idx) {
        out.explanation = section(*expl_idx, "Explanation:", reason_idx ? *reason_idx : lines.size());
        if (reason_idx) out.reasoning = section(*reason_idx, "Reasoning:", *expl_idx);
    } else {
        out.explanation = join(lines, 0, lines.size());
    }
}

}  // namespace

ParsedTurn parse_text_turn(std::string_view content) {
    ParsedTurn out;
    if (auto j = extract_json_object(content); j && j->contains("explanation")) {
        const auto& e = j->at("explanation");
        out.explanation = e.is_string() ? e.get<std::string>() : e.dump();
        if (auto it = j->find("reasoning"); it != j->end()) out.reasoning = it->is_string() ? it->get<std::string>() : it->dump();
        return out;
    }
    const auto lines = split_lines(content);
    std::optional<std::size_t> action_idx;
    std::optional<std::size_t> final_idx;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!action_idx && after_marker(lines[i], "Action:") && !after_marker(lines[i], "Action Input:")) action_idx = i;
        if (!final_idx && (after_marker(lines[i], "Final Answer:") || after_marker(lines[i], "Final:") ||
                           after_marker(lines[i], "Explanation:"))) {
            final_idx = i;
        }
    }
    if (action_idx && (!final_idx || *action_idx < *final_idx)) {
        out.thought = strip_thought_prefix(join(lines, 0, *action_idx));
        out.action = parse_action(*after_marker(lines[*action_idx], "Action:"), lines, *action_idx);
        return out;
    }
    if (final_idx) {
        out.thought = strip_thought_prefix(join(lines, 0, *final_idx));
        std::string body = join(lines, *final_idx, lines.size());
        for (std::string_view marker : {"Final Answer:", "Final:"}) {
            if (auto rest = after_marker(body, marker)) {
                body = std::string(text::trim(std::string_view(body).substr(body.find(':') + 1)));
                break;
            }
        }
        split_final(body, out);
    } else {
        split_final(strip_thought_prefix(std::string(text::trim(content))), out);
    }
    return out;
}

namespace {

std::string query_from_arguments(const std::string& args_json, std::string* thought) {
    auto j = nlohmann::json::parse(args_json, nullptr, /*allow_exceptions=*/false);
    if (j.is_object()) {
        if (thought != nullptr) {
            if (auto it = j.find("thought"); it != j.end() && it->is_string()) *thought = it->get<std::string>();
        }
        for (const char* key : {"query", "q", "search", "keywords", "input"}) {
            if (auto it = j.find(key); it != j.end()) return it->is_string() ? it->get<std::string>() : it->dump();
        }
        return j.dump();
    }
    if (j.is_string()) return j.get<std::string>();
    return args_json;
}

std::string final_text(const std::string& explanation, const std::string& reasoning) {
    return reasoning.empty() ? explanation : explanation + "\nReasoning: " + reasoning;
}

}  // namespace

ReActTrace run_react(const PostRecord& post, ToolDispatcher& tools, Backend& gateway, const ReActLimits& limits,
                     const RetryPolicy& retry) {
    if (limits.max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
    const auto start = std::chrono::steady_clock::now();
    const bool native = gateway.capabilities().native_tool_calling;
    const auto schemas = tools.schemas();

    ReActTrace trace;
    trace.post_id = post.post_id;
    auto add_step = [&](StepKind kind, std::string text, std::optional<ActionDetail> action = std::nullopt) {
        trace.steps.push_back({kind, std::move(text), std::move(action), static_cast<int>(trace.steps.size())});
    };

    ChatRequest req;
    req.system_prompt = react_system_prompt(schemas, native);
    if (native) req.tool_schemas = schemas;
    req.messages.push_back({Role::User,
                            "Analyse the following bug report and explain the bug.\n\n" +
                                render_post(post, limits.include_solutions, limits.diff_budget_bytes),
                            std::nullopt});

    auto observe = [&](const ActionDetail& action, const std::string& thought) -> std::string {
        add_step(StepKind::Thought, thought.empty() ? "I should consult " + action.tool + " about: " + action.query : thought);
        add_step(StepKind::Action, action.tool + "[" + action.query + "]", action);
        ToolResult r = tools.dispatch(action.tool, action.query);
        ++trace.tool_calls;
        if (r.from_cache) ++trace.cache_hits;
        trace.total_usage += r.summarizer_usage;
        add_step(StepKind::Observation, r.summary);
        return r.summary;
    };

    int actions = 0;
    int forced_attempts = 0;
    bool forcing = false;
    std::string last_thought;
    for (;;) {
        if (actions >= limits.max_iterations && !forcing) {
            forcing = true;
            trace.forced_final = true;
            req.tool_schemas.clear();
            req.messages.push_back({Role::User, std::string(kForceFinalPrompt), std::nullopt});
        }
        ChatResponse resp = complete(gateway, req, retry);
        ++trace.model_turns;
        trace.total_usage += resp.usage;

        ParsedTurn parsed;
        if (resp.content) parsed = parse_text_turn(*resp.content);
        const bool wants_action = !resp.tool_calls.empty() || parsed.action.has_value();

        if (wants_action && forcing) {
            if (++forced_attempts >= 2) {
                std::string thought = !parsed.thought.empty() ? parsed.thought : resp.narration;
                if (thought.empty()) thought = last_thought;
                trace.explanation = thought.empty()
                                        ? "No conclusion was reached within the tool budget."
                                        : thought;
                trace.reasoning = "Tool budget exhausted before the agent produced a final answer.";
                add_step(StepKind::Final, final_text(trace.explanation, trace.reasoning));
                break;
            }
            req.messages.push_back(
                {Role::User, "Do not call tools. " + std::string(kForceFinalPrompt), std::nullopt});
            continue;
        }

        if (!resp.tool_calls.empty()) {
            bool first = true;
            for (const auto& call : resp.tool_calls) {
                if (actions >= limits.max_iterations) break;
                std::string arg_thought;
                ActionDetail action{call.tool_name, query_from_arguments(call.arguments_json, &arg_thought)};
                std::string thought = first && !resp.narration.empty() ? resp.narration : arg_thought;
                if (!thought.empty()) last_thought = thought;
                const std::string observation = observe(action, thought);
                req.messages.push_back({Role::Assistant, first ? resp.narration : std::string{}, call});
                req.messages.push_back({Role::Tool, observation, call});
                ++actions;
                first = false;
            }
            continue;
        }
        if (parsed.action) {
            if (!parsed.thought.empty()) last_thought = parsed.thought;
            const std::string observation = observe(*parsed.action, parsed.thought);
            std::string said = parsed.thought.empty() ? std::string{} : "Thought: " + parsed.thought + "\n";
            said += "Action: " + parsed.action->tool + "[" + parsed.action->query + "]";
            req.messages.push_back({Role::Assistant, said, std::nullopt});
            req.messages.push_back({Role::User, "Observation: " + observation, std::nullopt});
            ++actions;
            continue;
        }

        if (!parsed.thought.empty()) add_step(StepKind::Thought, parsed.thought);
        trace.explanation = parsed.explanation.empty() ? parsed.thought : parsed.explanation;
        trace.reasoning = parsed.reasoning;
        if (text::trim(trace.explanation).empty()) trace.explanation = std::string(text::trim(*resp.content));
        add_step(StepKind::Final, final_text(trace.explanation, trace.reasoning));
        break;
    }
    trace.wall_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    return trace;
}

std::vector<std::string> validate_trace(const ReActTrace& t, int max_iterations) {
    std::vector<std::string> problems;
    int actions = 0;
    int finals = 0;
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        const auto& s = t.steps[i];
        if (s.step_index != static_cast<int>(i)) problems.push_back("step " + std::to_string(i) + " has wrong index");
        if ((s.kind == StepKind::Action) != s.action.has_value()) {
            problems.push_back("step " + std::to_string(i) + ": action detail present iff kind is action");
        }
        if (s.kind == StepKind::Action) {
            ++actions;
            if (i + 1 >= t.steps.size() || t.steps[i + 1].kind != StepKind::Observation) {
                problems.push_back("action at step " + std::to_string(i) + " has no observation");
            }
        }
        if (s.kind == StepKind::Observation && (i == 0 || t.steps[i - 1].kind != StepKind::Action)) {
            problems.push_back("observation at step " + std::to_string(i) + " does not follow an action");
        }
        if (s.kind == StepKind::Final) ++finals;
    }
    if (t.steps.empty() || t.steps.back().kind != StepKind::Final) problems.emplace_back("trace does not end in final");
    if (finals != 1) problems.push_back("trace has " + std::to_string(finals) + " final steps");
    if (text::trim(t.explanation).empty()) problems.emplace_back("explanation is empty");
    if (actions > max_iterations) problems.push_back("trace has " + std::to_string(actions) + " actions, budget is " +
                                                     std::to_string(max_iterations));
    return problems;
}

namespace {

std::string escape_line(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string unescape_line(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            const char n = s[++i];
            out.push_back(n == 'n' ? '\n' : n == 'r' ? '\r' : n);
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

constexpr std::pair<StepKind, std::string_view> kLinePrefixes[] = {
    {StepKind::Thought, "Thought: "},
    {StepKind::Action, "Action: "},
    {StepKind::Observation, "Observation: "},
    {StepKind::Final, "Final: "},
};

}  // namespace

std::string serialize_trace(const ReActTrace& t) {
    std::string out;
    for (const auto& s : t.steps) {
        for (const auto& [kind, prefix] : kLinePrefixes) {
            if (kind != s.kind) continue;
            out += prefix;
            if (s.kind == StepKind::Action && s.action) {
                out += escape_line(s.action->tool + "[" + s.action->query + "]");
            } else {
                out += escape_line(s.text);
            }
            out += '\n';
        }
    }
    return out;
}

std::vector<ReActStep> parse_scratchpad(std::string_view scratchpad) {
    std::vector<ReActStep> steps;
    for (auto line : split_lines(scratchpad)) {
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        bool matched = false;
        for (const auto& [kind, prefix] : kLinePrefixes) {
            // A step with empty text serializes as "Kind: " and may lose its trailing space.
            const auto bare = prefix.substr(0, prefix.size() - 1);
            if (line.rfind(prefix, 0) != 0 && line != bare) continue;
            ReActStep step;
            step.kind = kind;
            step.text = unescape_line(line.size() > prefix.size() ? line.substr(prefix.size()) : std::string_view{});
            step.step_index = static_cast<int>(steps.size());
            if (kind == StepKind::Action) {
                const auto open = step.text.find('[');
                const auto close = step.text.rfind(']');
                if (open == std::string::npos || close == std::string::npos || close < open) {
                    throw std::invalid_argument("malformed action line: " + std::string(line));
                }
                step.action = ActionDetail{step.text.substr(0, open), step.text.substr(open + 1, close - open - 1)};
            }
            steps.push_back(std::move(step));
            matched = true;
            break;
        }
        if (!matched) throw std::invalid_argument("unrecognized scratchpad line: " + std::string(line));
    }
    return steps;
}

nlohmann::json trace_to_json(const ReActTrace& t) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : t.steps) {
        nlohmann::json step{{"index", s.step_index}, {"kind", step_kind_name(s.kind)}, {"text", s.text}};
        if (s.action) {
            step["tool"] = s.action->tool;
            step["query"] = s.action->query;
        }
        steps.push_back(std::move(step));
    }
    return nlohmann::json{
        {"post_id", t.post_id},
        {"steps", std::move(steps)},
        {"explanation", t.explanation},
        {"reasoning", t.reasoning},
        {"model_turns", t.model_turns},
        {"tool_calls", t.tool_calls},
        {"cache_hits", t.cache_hits},
        {"forced_final", t.forced_final},
        {"usage",
         {{"input_tokens", t.total_usage.input_tokens},
          {"output_tokens", t.total_usage.output_tokens},
          {"estimated", t.total_usage.estimated}}},
    };
}

}  // namespace agentbug
