// SPDX-License-Identifier: Apache-2.0
#include "agentbug/taxonomy.hpp"

#include <map>
#include <set>
#include <sstream>

#include "agentbug/text_util.hpp"

namespace agentbug {

const std::array<LabelInfo, 11> LabelTraits<BugType>::table = {{
    {"Logic Bug", "LB",
     "The pipeline's logic is wrong: an unsuitable function for the task, a missing or wrongly written "
     "code segment, or absent guard conditions."},
    {"Configuration Bug", "CB", "A parameter or the environment is misconfigured."},
    {"Initialization Bug", "IB",
     "A variable or function is used before being initialized, or is initialized the wrong way or in the "
     "wrong place."},
    {"Argument Bug", "AB",
     "A call does not match the API signature: wrongly formatted, extra, or missing arguments. A wrong value "
     "that still fits the signature is not this bug."},
    {"Parsing Bug", "PRB",
     "Parsing the LLM's output fails because its format does not match what the parser or the user expects."},
    {"Prompting Bug", "PPB", "The prompt is missing variables or components, or gives the LLM wrong instructions."},
    {"API Bug", "APIB",
     "Caused by the libraries or APIs the agent is built on: dependency conflicts, wrong versions, defects "
     "inside the library, or a library that is not installed."},
    {"Reference Bug", "RB",
     "Code refers to a wrong, deprecated, or missing module of a library, typically at import time."},
    {"Availability Bug", "AVB",
     "A model or service is not available, because of a server-side problem or because the feature is not "
     "released yet."},
    {"Model Bug", "MB",
     "The LLM is asked to do something it cannot do, such as image generation from a chat model or function "
     "calling on a model without that capability."},
    {"Resource Limitation Bug", "RLB",
     "The user's own machine or account runs out of something: memory or compute for a large model, or "
     "usage credits."},
}};

const std::array<LabelInfo, 9> LabelTraits<RootCause>::table = {{
    {"API Misuse", "AM", "An API is used in the wrong context or with invalid arguments."},
    {"Incorrect or Missing Parameter", "IMP", "A parameter has a logically wrong value or is omitted."},
    {"Incorrect Data Format", "IDF",
     "Data flowing into or out of the LLM does not have the expected type, structure, or schema."},
    {"Incorrect or Missing Control Flow", "IMCF", "Required logic is absent or implemented incorrectly."},
    {"Incorrect Instruction", "II", "The prompt is badly specified or badly orchestrated."},
    {"API Limitation", "AL",
     "The API or library cannot do what is needed (unsupported capability, service downtime); outside the "
     "user's control."},
    {"Component Mismatch", "CM",
     "An LLM, tool, or memory module is chosen or combined incorrectly, so integration fails."},
    {"Requirement Violation", "RV",
     "Dependency conflicts or unmet prerequisites, such as incompatible library versions."},
    {"Others", "Others",
     "Not specific to LLM agents: the user's machine, environment, or other external components."},
}};

const std::array<LabelInfo, 10> LabelTraits<RootCauseSubclass>::table = {{
    {"Wrong API Context", "Wrong API Context",
     "The API is applied to a situation it is not meant for, or its purpose is misunderstood."},
    {"Invalid API Arguments", "Invalid API Arguments", "Arguments of the wrong type or count are passed."},
    {"Incorrect Value", "Incorrect Value", "A valid parameter receives a logically wrong value."},
    {"Missing Value", "Missing Value",
     "Optional parameters are left out, so an unexpected default takes effect."},
    {"Input Data Format Error", "Input Data Format Error",
     "External data handed to the LLM has the wrong type, structure, or schema."},
    {"Output Data Format Error", "Output Data Format Error",
     "The LLM's response deviates from the requested format, for example missing required keys."},
    {"Missing Flow", "Missing Flow", "A needed code segment, condition, or call is not implemented."},
    {"Incorrect Flow", "Incorrect Flow", "The logic exists but is wrong, e.g. a condition tests the wrong variable."},
    {"Prompt Specification", "Prompt Specification",
     "The prompt is ambiguous, poorly formatted, lacks context or specification, mixes contexts, or is unclear."},
    {"Prompt Orchestration", "Prompt Orchestration",
     "The prompt is assembled wrongly, e.g. variables not passed or plain text given where JSON is required."},
}};

const std::array<LabelInfo, 14> LabelTraits<Effect>::table = {{
    {"Crash", "Crash", "An error is raised and the program stops."},
    {"Incorrect Output", "IO", "A complete output is produced but it is not the expected one."},
    {"Empty Response", "ER", "No output is produced at all."},
    {"Output Dump", "OD", "The whole output arrives at once instead of being streamed."},
    {"Stateless Interaction", "SI", "Earlier conversation turns are forgotten; only the latest question is answered."},
    {"Partial Output", "PO", "The output is incomplete or cut off."},
    {"Tool Ignored", "TI", "The system never invokes the tools it was given."},
    {"Slow Output", "SO", "The output takes unusually long to produce."},
    {"Warning", "Warning", "The program keeps running but emits a warning."},
    {"Hang", "Hang", "The system stops responding and needs manual intervention."},
    {"Indeterminate Loop", "IL", "The system loops without end."},
    {"Resource Overuse", "RO", "Excessive consumption of resources such as RAM."},
    {"Silent Fail", "SF", "The task fails without any log or error saying so."},
    {"Unknown", "Unknown", "The report does not describe the effect."},
}};

const std::array<LabelInfo, 5> LabelTraits<AgentComponent>::table = {{
    {"Planning", "Planning", "Task decomposition, reasoning strategy, and deciding the next step."},
    {"Agent Core", "Agent Core", "The central LLM invocation, prompt handling, output parsing, and control loop."},
    {"Memory", "Memory", "Conversation history, state, and retrieval stores."},
    {"Tools", "Tools", "External tools and functions the agent calls, and their integration."},
    {"Not Applicable", "Not Applicable",
     "Outside every agent component; only valid for resource limitation bugs."},
}};

UnknownLabel::UnknownLabel(std::string category, std::string text)
    : std::runtime_error("unknown " + category + " label: \"" + text + "\""),
      category_(std::move(category)),
      text_(std::move(text)) {}

std::string_view category_name(Category c) {
    switch (c) {
        case Category::BugType: return "bug_type";
        case Category::RootCause: return "root_cause";
        case Category::Effect: return "effect";
        case Category::Component: return "component";
    }
    return "?";
}

Category parse_category(std::string_view name) {
    for (auto c : {Category::BugType, Category::RootCause, Category::Effect, Category::Component}) {
        if (text::iequals(text::trim(name), category_name(c))) return c;
    }
    throw std::invalid_argument("unknown label category: " + std::string(name));
}

namespace detail {

std::optional<std::size_t> match_label(std::span<const LabelInfo> table, std::string_view text) {
    const auto t = text::trim(text);
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& info = table[i];
        if (text::iequals(t, info.long_name) || text::iequals(t, info.abbrev)) return i;
        const std::string combined = std::string(info.long_name) + " (" + std::string(info.abbrev) + ")";
        if (info.abbrev != info.long_name && text::iequals(t, combined)) return i;
    }
    return std::nullopt;
}

}  // namespace detail

LabelValue parse_label(Category category, std::string_view text) {
    switch (category) {
        case Category::BugType: return parse_label<BugType>(text);
        case Category::RootCause: return parse_label<RootCause>(text);
        case Category::Effect: return parse_label<Effect>(text);
        case Category::Component: return parse_label<AgentComponent>(text);
    }
    throw std::logic_error("unreachable");
}

std::string render_label(const LabelValue& value, LabelStyle style) {
    return std::visit([style](auto v) { return std::string(render_label(v, style)); }, value);
}

namespace {

std::string compact(std::string_view s) {
    std::string out;
    for (char c : text::trim(s)) {
        if (c == ' ' || c == '_' || c == '-' || c == '\t') continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

// Phrasings models commonly emit for labels, keyed by compact() form.
const std::map<std::string, std::string, std::less<>>& label_synonyms() {
    static const std::map<std::string, std::string, std::less<>> table = {
        {"apibug", "API Bug"},
        {"apierror", "API Bug"},
        {"dependencybug", "API Bug"},
        {"logicerror", "Logic Bug"},
        {"configbug", "Configuration Bug"},
        {"misconfiguration", "Configuration Bug"},
        {"promptbug", "Prompting Bug"},
        {"parserbug", "Parsing Bug"},
        {"resourcebug", "Resource Limitation Bug"},
        {"resourcelimitation", "Resource Limitation Bug"},
        {"apimisuse", "API Misuse"},
        {"others", "Others"},
        {"other", "Others"},
        {"incorrectormissingparameters", "Incorrect or Missing Parameter"},
        {"error", "Crash"},
        {"exception", "Crash"},
        {"wrongoutput", "Incorrect Output"},
        {"infiniteloop", "Indeterminate Loop"},
        {"silentfailure", "Silent Fail"},
        {"notapplicable", "Not Applicable"},
        {"n/a", "Not Applicable"},
        {"na", "Not Applicable"},
        {"none", "Not Applicable"},
        {"core", "Agent Core"},
        {"tool", "Tools"},
        {"plan", "Planning"},
    };
    return table;
}

}  // namespace

template <class E>
std::optional<E> parse_label_lenient(std::string_view raw) {
    if (auto v = try_parse_label<E>(raw)) return v;
    std::string_view t = text::trim(raw);
    // "Logic Bug (LB)" with odd spacing, or a trailing description after ':'.
    if (auto colon = t.find(':'); colon != std::string_view::npos) {
        if (auto v = try_parse_label<E>(t.substr(0, colon))) return v;
    }
    const std::string key = compact(t);
    const auto table = label_table<E>();
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (key == compact(table[i].long_name) || key == compact(table[i].abbrev)) return static_cast<E>(i);
        const std::string combined = compact(table[i].long_name) + "(" + compact(table[i].abbrev) + ")";
        if (key == combined) return static_cast<E>(i);
    }
    const auto& syn = label_synonyms();
    if (auto it = syn.find(key); it != syn.end()) return try_parse_label<E>(it->second);
    return std::nullopt;
}

template std::optional<BugType> parse_label_lenient<BugType>(std::string_view);
template std::optional<RootCause> parse_label_lenient<RootCause>(std::string_view);
template std::optional<RootCauseSubclass> parse_label_lenient<RootCauseSubclass>(std::string_view);
template std::optional<Effect> parse_label_lenient<Effect>(std::string_view);
template std::optional<AgentComponent> parse_label_lenient<AgentComponent>(std::string_view);

std::span<const RootCauseSubclass> subclasses_of(RootCause rc) {
    using S = RootCauseSubclass;
    static constexpr std::array<S, 2> am{S::WrongApiContext, S::InvalidApiArguments};
    static constexpr std::array<S, 2> imp{S::IncorrectValue, S::MissingValue};
    static constexpr std::array<S, 2> idf{S::InputDataFormatError, S::OutputDataFormatError};
    static constexpr std::array<S, 2> imcf{S::MissingFlow, S::IncorrectFlow};
    static constexpr std::array<S, 2> ii{S::PromptSpecification, S::PromptOrchestration};
    switch (rc) {
        case RootCause::ApiMisuse: return am;
        case RootCause::IncorrectOrMissingParameter: return imp;
        case RootCause::IncorrectDataFormat: return idf;
        case RootCause::IncorrectOrMissingControlFlow: return imcf;
        case RootCause::IncorrectInstruction: return ii;
        default: return {};
    }
}

std::optional<RootCause> parent_of(RootCauseSubclass sub) {
    for (auto rc : all_members<RootCause>()) {
        for (auto s : subclasses_of(rc)) {
            if (s == sub) return rc;
        }
    }
    return std::nullopt;
}

namespace {

std::string normalize_token(std::string_view raw, const std::map<std::string, std::string, std::less<>>& syn) {
    std::string t = text::to_lower(text::collapse_whitespace(raw));
    if (auto it = syn.find(t); it != syn.end()) return it->second;
    return t;
}

}  // namespace

std::string normalize_language(std::string_view text) {
    static const std::map<std::string, std::string, std::less<>> syn = {
        {"c#", "csharp"},     {"c sharp", "csharp"},  {".net", "csharp"},      {"dotnet", "csharp"},
        {"py", "python"},     {"python3", "python"},  {"python 3", "python"},  {"js", "javascript"},
        {"node", "javascript"}, {"nodejs", "javascript"}, {"node.js", "javascript"}, {"ts", "typescript"},
        {"golang", "go"},     {"c++", "cpp"},
    };
    return normalize_token(text, syn);
}

std::string normalize_framework(std::string_view text) {
    static const std::map<std::string, std::string, std::less<>> syn = {
        {"langchainjs", "langchain-js"},       {"langchain.js", "langchain-js"},
        {"langchain js", "langchain-js"},      {"llama-index", "llamaindex"},
        {"llama index", "llamaindex"},         {"llama_index", "llamaindex"},
        {"semantic kernel", "semantic-kernel"}, {"semantickernel", "semantic-kernel"},
        {"semantic_kernel", "semantic-kernel"}, {"crew ai", "crewai"},
        {"crew-ai", "crewai"},                 {"auto gen", "autogen"},
        {"pyautogen", "autogen"},              {"lang graph", "langgraph"},
        {"none", "custom"},                    {"no framework", "custom"},
    };
    return normalize_token(text, syn);
}

std::string_view violation_name(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::SubclassViolation: return "SubclassViolation";
        case ViolationKind::ComponentRuleViolation: return "ComponentRuleViolation";
        case ViolationKind::EmptyRationale: return "EmptyRationale";
        case ViolationKind::NegativeBugIndex: return "NegativeBugIndex";
    }
    return "?";
}

std::vector<Violation> validate_record(const AnnotationRecord& r) {
    std::vector<Violation> out;
    if (r.bug_index < 0) {
        out.push_back({ViolationKind::NegativeBugIndex, "bug_index must be >= 0"});
    }
    if (r.root_cause_subclass) {
        const auto subs = subclasses_of(r.root_cause);
        if (std::find(subs.begin(), subs.end(), *r.root_cause_subclass) == subs.end()) {
            out.push_back({ViolationKind::SubclassViolation,
                           "subclass \"" + std::string(render_label(*r.root_cause_subclass, LabelStyle::Long)) +
                               "\" does not belong to root cause " +
                               std::string(render_label(r.root_cause, LabelStyle::Abbrev))});
        }
    }
    if (r.component == AgentComponent::NotApplicable && r.bug_type != BugType::ResourceLimitationBug) {
        out.push_back({ViolationKind::ComponentRuleViolation,
                       "component Not Applicable requires bug type RLB, got " +
                           std::string(render_label(r.bug_type, LabelStyle::Abbrev))});
    }
    const std::pair<const char*, const std::string*> rationales[] = {
        {"rationale_bug_type", &r.rationale_bug_type},
        {"rationale_root_cause", &r.rationale_root_cause},
        {"rationale_effect", &r.rationale_effect},
    };
    for (const auto& [name, value] : rationales) {
        if (text::trim(*value).empty()) {
            out.push_back({ViolationKind::EmptyRationale, std::string(name) + " is empty"});
        }
    }
    return out;
}

std::string record_key(const AnnotationRecord& r) {
    return r.post_id + "#" + std::to_string(r.bug_index);
}

std::vector<std::string> duplicate_record_keys(std::span<const AnnotationRecord> records) {
    std::set<std::string> seen;
    std::set<std::string> dups;
    for (const auto& r : records) {
        std::string key = record_key(r) + "@" + r.annotator;
        if (!seen.insert(key).second) dups.insert(std::move(key));
    }
    return {dups.begin(), dups.end()};
}

void to_json(nlohmann::json& j, const AnnotationRecord& r) {
    j = nlohmann::json{
        {"post_id", r.post_id},
        {"bug_index", r.bug_index},
        {"bug_type", render_label(r.bug_type, LabelStyle::Abbrev)},
        {"root_cause", render_label(r.root_cause, LabelStyle::Abbrev)},
        {"root_cause_subclass", nullptr},
        {"effect", render_label(r.effect, LabelStyle::Abbrev)},
        {"component", render_label(r.component, LabelStyle::Abbrev)},
        {"language", r.language},
        {"framework", r.framework},
        {"rationale_bug_type", r.rationale_bug_type},
        {"rationale_root_cause", r.rationale_root_cause},
        {"rationale_effect", r.rationale_effect},
        {"annotator", r.annotator},
    };
    if (r.root_cause_subclass) j["root_cause_subclass"] = render_label(*r.root_cause_subclass, LabelStyle::Long);
}

void from_json(const nlohmann::json& j, AnnotationRecord& r) {
    r.post_id = j.at("post_id").get<std::string>();
    r.bug_index = j.value("bug_index", 0);
    r.bug_type = parse_label<BugType>(j.at("bug_type").get<std::string>());
    r.root_cause = parse_label<RootCause>(j.at("root_cause").get<std::string>());
    r.root_cause_subclass.reset();
    if (auto it = j.find("root_cause_subclass"); it != j.end() && !it->is_null()) {
        r.root_cause_subclass = parse_label<RootCauseSubclass>(it->get<std::string>());
    }
    r.effect = parse_label<Effect>(j.at("effect").get<std::string>());
    r.component = parse_label<AgentComponent>(j.at("component").get<std::string>());
    r.language = normalize_language(j.value("language", std::string{}));
    r.framework = normalize_framework(j.value("framework", std::string{}));
    r.rationale_bug_type = j.value("rationale_bug_type", std::string{});
    r.rationale_root_cause = j.value("rationale_root_cause", std::string{});
    r.rationale_effect = j.value("rationale_effect", std::string{});
    r.annotator = j.value("annotator", std::string{});
}

}  // namespace agentbug
