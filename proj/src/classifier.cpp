// SPDX-License-Identifier: Apache-2.0
#include "agentbug/classifier.hpp"

#include <algorithm>
#include <sstream>

#include "agentbug/text_util.hpp"
#include "agentbug/toolbox.hpp"

namespace agentbug {

std::string_view mode_name(ClassifierMode m) {
    switch (m) {
        case ClassifierMode::TwoStage: return "two_stage";
        case ClassifierMode::ZeroShot: return "zero_shot";
        case ClassifierMode::OneShot: return "one_shot";
        case ClassifierMode::ReactNoTools: return "react_no_tools";
    }
    return "?";
}

ClassifierMode parse_mode(std::string_view name) {
    for (auto m : {ClassifierMode::TwoStage, ClassifierMode::ZeroShot, ClassifierMode::OneShot,
                   ClassifierMode::ReactNoTools}) {
        if (text::iequals(name, mode_name(m))) return m;
    }
    throw std::invalid_argument("unknown mode \"" + std::string(name) +
                                "\" (expected two_stage, zero_shot, one_shot, react_no_tools)");
}

namespace {

std::string member_line(const LabelInfo& info) {
    std::string line = "- " + std::string(info.long_name);
    if (info.abbrev != info.long_name) line += " (" + std::string(info.abbrev) + ")";
    return line + ": " + std::string(info.definition);
}

template <class E>
void write_family(std::ostringstream& out, std::string_view heading) {
    out << heading << "\n";
    for (const auto& info : label_table<E>()) out << member_line(info) << "\n";
    out << "\n";
}

template <class E>
nlohmann::json enum_of(LabelStyle style) {
    nlohmann::json values = nlohmann::json::array();
    for (auto m : all_members<E>()) values.push_back(std::string(render_label(m, style)));
    return values;
}

}  // namespace

std::string definitions_block() {
    std::ostringstream out;
    write_family<BugType>(out, "Bug types (what kind of defect occurred):");
    out << "Root causes (why it occurred), with subclasses where they exist:\n";
    for (auto rc : all_members<RootCause>()) {
        out << member_line(label_info(rc)) << "\n";
        for (auto sub : subclasses_of(rc)) out << "  " << member_line(label_info(sub)) << "\n";
    }
    out << "\n";
    write_family<Effect>(out, "Effects (the observable symptom):");
    write_family<AgentComponent>(out, "Agent components (where the bug lives):");
    return out.str();
}

nlohmann::json label_schema() {
    auto subclasses = enum_of<RootCauseSubclass>(LabelStyle::Long);
    subclasses.push_back(nullptr);
    auto text_field = [](const char* description) {
        return nlohmann::json{{"type", "string"}, {"description", description}};
    };
    return nlohmann::json{
        {"type", "object"},
        {"additionalProperties", false},
        {"required",
         {"bug_type", "root_cause", "root_cause_subclass", "effect", "component", "language", "framework",
          "rationale_bug_type", "rationale_root_cause", "rationale_effect"}},
        {"properties",
         {{"bug_type", {{"type", "string"}, {"enum", enum_of<BugType>(LabelStyle::Abbrev)}}},
          {"root_cause", {{"type", "string"}, {"enum", enum_of<RootCause>(LabelStyle::Abbrev)}}},
          {"root_cause_subclass", {{"type", {"string", "null"}}, {"enum", subclasses}}},
          {"effect", {{"type", "string"}, {"enum", enum_of<Effect>(LabelStyle::Abbrev)}}},
          {"component", {{"type", "string"}, {"enum", enum_of<AgentComponent>(LabelStyle::Abbrev)}}},
          {"language", text_field("Programming language of the project, lowercase")},
          {"framework", text_field("Agent framework in use, lowercase, or \"custom\"")},
          {"rationale_bug_type", text_field("Why this bug type applies")},
          {"rationale_root_cause", text_field("Why this root cause applies")},
          {"rationale_effect", text_field("Why this effect applies")}}},
    };
}

std::string label_schema_text() {
    return label_schema().dump();
}

namespace {

bool is_null_subclass(const nlohmann::json& v) {
    if (v.is_null()) return true;
    if (!v.is_string()) return false;
    const auto s = text::to_lower(text::trim(v.get<std::string>()));
    return s.empty() || s == "null" || s == "none" || s == "n/a";
}

template <class E>
std::optional<E> label_field(const nlohmann::json& j, const char* field, std::vector<OutputProblem>& problems) {
    auto it = j.find(field);
    if (it == j.end()) {
        problems.push_back({ProblemKind::Schema, std::string("missing field ") + field});
        return std::nullopt;
    }
    if (!it->is_string()) {
        problems.push_back({ProblemKind::Schema, std::string(field) + " must be a string"});
        return std::nullopt;
    }
    const auto text = it->get<std::string>();
    auto v = parse_label_lenient<E>(text);
    if (!v) problems.push_back({ProblemKind::UnknownLabel, std::string(field) + ": \"" + text + "\" is not a defined label"});
    return v;
}

std::optional<std::string> string_field(const nlohmann::json& j, const char* field,
                                        std::vector<OutputProblem>& problems) {
    auto it = j.find(field);
    if (it == j.end()) {
        problems.push_back({ProblemKind::Schema, std::string("missing field ") + field});
        return std::nullopt;
    }
    if (!it->is_string()) {
        problems.push_back({ProblemKind::Schema, std::string(field) + " must be a string"});
        return std::nullopt;
    }
    return it->get<std::string>();
}

}  // namespace

std::vector<OutputProblem> check_label_object(const nlohmann::json& j, AnnotationRecord* out) {
    std::vector<OutputProblem> problems;
    if (!j.is_object()) return {{ProblemKind::Schema, "answer must be a JSON object"}};

    AnnotationRecord r;
    auto bug_type = label_field<BugType>(j, "bug_type", problems);
    auto root_cause = label_field<RootCause>(j, "root_cause", problems);
    auto effect = label_field<Effect>(j, "effect", problems);
    auto component = label_field<AgentComponent>(j, "component", problems);

    std::optional<RootCauseSubclass> subclass;
    if (auto it = j.find("root_cause_subclass"); it == j.end()) {
        problems.push_back({ProblemKind::Schema, "missing field root_cause_subclass"});
    } else if (!is_null_subclass(*it)) {
        if (!it->is_string()) {
            problems.push_back({ProblemKind::Schema, "root_cause_subclass must be a string or null"});
        } else if (!(subclass = parse_label_lenient<RootCauseSubclass>(it->get<std::string>()))) {
            problems.push_back({ProblemKind::UnknownLabel,
                                "root_cause_subclass: \"" + it->get<std::string>() + "\" is not a defined label"});
        }
    }
    auto language = string_field(j, "language", problems);
    auto framework = string_field(j, "framework", problems);
    auto r_bug = string_field(j, "rationale_bug_type", problems);
    auto r_root = string_field(j, "rationale_root_cause", problems);
    auto r_effect = string_field(j, "rationale_effect", problems);
    if (!problems.empty()) return problems;

    r.bug_type = *bug_type;
    r.root_cause = *root_cause;
    r.root_cause_subclass = subclass;
    r.effect = *effect;
    r.component = *component;
    r.language = normalize_language(*language);
    r.framework = normalize_framework(*framework);
    r.rationale_bug_type = std::string(text::trim(*r_bug));
    r.rationale_root_cause = std::string(text::trim(*r_root));
    r.rationale_effect = std::string(text::trim(*r_effect));
    for (const auto& v : validate_record(r)) problems.push_back({ProblemKind::Rule, v.detail});
    if (problems.empty() && out != nullptr) {
        out->bug_type = r.bug_type;
        out->root_cause = r.root_cause;
        out->root_cause_subclass = r.root_cause_subclass;
        out->effect = r.effect;
        out->component = r.component;
        out->language = r.language;
        out->framework = r.framework;
        out->rationale_bug_type = r.rationale_bug_type;
        out->rationale_root_cause = r.rationale_root_cause;
        out->rationale_effect = r.rationale_effect;
    }
    return problems;
}

void to_json(nlohmann::json& j, const Exemplar& e) {
    j = nlohmann::json{{"bug_type", render_label(e.bug_type, LabelStyle::Abbrev)},
                       {"post_id", e.post_id},
                       {"text", e.text},
                       {"summarized", e.summarized},
                       {"labels", e.labels}};
}

void from_json(const nlohmann::json& j, Exemplar& e) {
    e.bug_type = parse_label<BugType>(j.at("bug_type").get<std::string>());
    e.post_id = j.at("post_id").get<std::string>();
    e.text = j.at("text").get<std::string>();
    e.summarized = j.value("summarized", false);
    e.labels = j.at("labels").get<AnnotationRecord>();
}

std::string render_exemplar(const Exemplar& e) {
    nlohmann::json answer;
    to_json(answer, e.labels);
    for (const char* k : {"post_id", "bug_index", "annotator"}) answer.erase(k);
    return "Example report (" + std::string(render_label(e.bug_type, LabelStyle::Long)) + "):\n" + e.text +
           "\nExample answer:\n" + answer.dump() + "\n";
}

namespace {

std::string system_prompt(const PromptKit& kit) {
    std::ostringstream out;
    out << "You annotate bug reports from developers building LLM agents. Assign exactly one label in each "
           "category, chosen from the definitions below.\n\n"
        << kit.definitions
        << "Rules:\n"
           "- root_cause_subclass names a subclass of the chosen root cause, or is null when that root cause has "
           "none or none fits.\n"
           "- component is Not Applicable only when bug_type is RLB.\n"
           "- language is the programming language of the project and framework the agent framework, or \"custom\" "
           "if none.\n"
           "- Each rationale briefly justifies its label from the report.\n"
           "Reply with a single JSON object with the fields bug_type, root_cause, root_cause_subclass, effect, "
           "component, language, framework, rationale_bug_type, rationale_root_cause, rationale_effect. Use the "
           "abbreviations for labels.\n";
    if (kit.mode == ClassifierMode::OneShot && !kit.exemplars.empty()) {
        out << "\nLabelled examples:\n\n";
        for (const auto& e : kit.exemplars) out << render_exemplar(e) << "\n";
    }
    return out.str();
}

bool needs_explanation(ClassifierMode m) {
    return m == ClassifierMode::TwoStage || m == ClassifierMode::ReactNoTools;
}

}  // namespace

Classification classify(const PostRecord& post, const std::optional<std::string>& explanation, const PromptKit& kit,
                        Backend& gateway, int bug_index) {
    if (needs_explanation(kit.mode) && !explanation) {
        throw std::invalid_argument(std::string(mode_name(kit.mode)) + " classification needs an explanation");
    }
    if (!needs_explanation(kit.mode) && explanation) {
        throw std::invalid_argument(std::string(mode_name(kit.mode)) + " classification takes no explanation");
    }
    ChatRequest req;
    req.system_prompt = system_prompt(kit);
    std::string user = "Bug report:\n" + render_post(post, kit.include_solutions);
    if (explanation) user += "\nBug explanation from a prior analysis:\n" + *explanation + "\n";
    req.messages.push_back({Role::User, std::move(user), std::nullopt});
    req.output_schema = label_schema_text();

    const OutputValidator validator = [&](const nlohmann::json& j) { return check_label_object(j); };

    Classification c;
    StructuredResult sr;
    try {
        sr = complete_structured(gateway, req, validator, kit.max_repairs, kit.retry);
    } catch (const SchemaViolation& e) {
        const auto& ps = e.problems();
        const bool only_labels = !ps.empty() && std::all_of(ps.begin(), ps.end(), [](const OutputProblem& p) {
            return p.kind == ProblemKind::UnknownLabel;
        });
        if (only_labels) {
            const auto& msg = ps.front().message;
            const auto colon = msg.find(':');
            const auto q1 = msg.find('"');
            const auto q2 = msg.rfind('"');
            throw UnknownLabel(msg.substr(0, colon), q2 > q1 ? msg.substr(q1 + 1, q2 - q1 - 1) : msg);
        }
        throw;
    }
    c.record.post_id = post.post_id;
    c.record.bug_index = bug_index;
    c.record.annotator = gateway.model_id();
    check_label_object(sr.value, &c.record);
    c.repairs = sr.repairs;
    c.repair_log = std::move(sr.repair_log);
    c.usages = std::move(sr.usages);
    c.latency_ms = sr.latency_ms;
    return c;
}

Classification run_zero_shot(const PostRecord& post, const PromptKit& kit, Backend& gateway) {
    if (kit.mode != ClassifierMode::ZeroShot) throw std::invalid_argument("run_zero_shot needs a zero_shot kit");
    return classify(post, std::nullopt, kit, gateway);
}

Classification run_one_shot(const PostRecord& post, const PromptKit& kit, Backend& gateway) {
    if (kit.mode != ClassifierMode::OneShot) throw std::invalid_argument("run_one_shot needs a one_shot kit");
    return classify(post, std::nullopt, kit, gateway);
}

NoExemplar::NoExemplar(BugType value)
    : std::runtime_error("no gold example for bug type " + std::string(render_label(value, LabelStyle::Abbrev))),
      value_(value) {}

ExemplarSet build_one_shot_exemplars(const std::vector<std::pair<PostRecord, AnnotationRecord>>& gold,
                                     int context_budget_tokens, Backend& gateway, const RetryPolicy& retry) {
    if (context_budget_tokens <= 0) throw std::invalid_argument("context budget must be positive");
    ExemplarSet set;
    for (auto bt : all_members<BugType>()) {
        const std::pair<PostRecord, AnnotationRecord>* best = nullptr;
        std::string best_text;
        for (const auto& g : gold) {
            if (g.second.bug_type != bt) continue;
            std::string text = render_post(g.first, false);
            if (!best || text.size() < best_text.size() ||
                (text.size() == best_text.size() && g.first.post_id < best->first.post_id)) {
                best = &g;
                best_text = std::move(text);
            }
        }
        if (!best) {
            set.warnings.emplace_back(NoExemplar(bt).what());
            continue;
        }
        set.exemplars.push_back({bt, best->first.post_id, std::move(best_text), false, best->second});
    }
    if (set.exemplars.empty()) return set;

    const std::size_t fixed = text::estimate_tokens(definitions_block());
    auto total = [&] {
        std::size_t t = fixed;
        for (const auto& e : set.exemplars) t += text::estimate_tokens(render_exemplar(e));
        return t;
    };
    const auto budget = static_cast<std::size_t>(context_budget_tokens);
    const std::size_t share_chars =
        std::max<std::size_t>(200, (budget > fixed ? budget - fixed : 0) * 4 / set.exemplars.size());
    while (total() > budget) {
        Exemplar* largest = nullptr;
        for (auto& e : set.exemplars) {
            if (!e.summarized && (!largest || e.text.size() > largest->text.size())) largest = &e;
        }
        if (!largest) {
            set.warnings.push_back("exemplars exceed the context budget even after summarization");
            break;
        }
        const std::size_t target = std::min(share_chars, largest->text.size());
        if (target < largest->text.size()) {
            largest->text = summarize(gateway, largest->text, target, {}, retry);
        }
        largest->summarized = true;
    }
    return set;
}

nlohmann::json exemplars_to_json(const std::vector<Exemplar>& exemplars) {
    return nlohmann::json(exemplars);
}

std::vector<Exemplar> exemplars_from_json(const nlohmann::json& j) {
    return j.get<std::vector<Exemplar>>();
}

NoToolsRun run_react_no_tools(const PostRecord& post, const ToolRegistry& registry, Backend& gateway,
                              const ReActLimits& limits, const PromptKit& kit) {
    NoResultsDispatcher tools(registry);
    NoToolsRun run;
    run.trace = run_react(post, tools, gateway, limits, kit.retry);
    PromptKit stage2 = kit;
    stage2.mode = ClassifierMode::ReactNoTools;
    run.classification = classify(post, run.trace.explanation, stage2, gateway);
    return run;
}

}  // namespace agentbug
