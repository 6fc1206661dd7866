// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace agentbug {

enum class BugType : std::uint8_t {
    LogicBug,
    ConfigurationBug,
    InitializationBug,
    ArgumentBug,
    ParsingBug,
    PromptingBug,
    ApiBug,
    ReferenceBug,
    AvailabilityBug,
    ModelBug,
    ResourceLimitationBug,
};

enum class RootCause : std::uint8_t {
    ApiMisuse,
    IncorrectOrMissingParameter,
    IncorrectDataFormat,
    IncorrectOrMissingControlFlow,
    IncorrectInstruction,
    ApiLimitation,
    ComponentMismatch,
    RequirementViolation,
    Others,
};

enum class RootCauseSubclass : std::uint8_t {
    WrongApiContext,
    InvalidApiArguments,
    IncorrectValue,
    MissingValue,
    InputDataFormatError,
    OutputDataFormatError,
    MissingFlow,
    IncorrectFlow,
    PromptSpecification,
    PromptOrchestration,
};

enum class Effect : std::uint8_t {
    Crash,
    IncorrectOutput,
    EmptyResponse,
    OutputDump,
    StatelessInteraction,
    PartialOutput,
    ToolIgnored,
    SlowOutput,
    Warning,
    Hang,
    IndeterminateLoop,
    ResourceOveruse,
    SilentFail,
    Unknown,
};

enum class AgentComponent : std::uint8_t {
    Planning,
    AgentCore,
    Memory,
    Tools,
    NotApplicable,
};

/// Text attached to one member of a label enumeration. Members without a
/// published abbreviation use their long name in both styles.
struct LabelInfo {
    std::string_view long_name;
    std::string_view abbrev;
    std::string_view definition;
};

enum class LabelStyle { Long, Abbrev };

enum class Category { BugType, RootCause, Effect, Component };

std::string_view category_name(Category c);
Category parse_category(std::string_view name);

template <class E>
struct LabelTraits;

template <>
struct LabelTraits<BugType> {
    static constexpr Category category = Category::BugType;
    static const std::array<LabelInfo, 11> table;
};
template <>
struct LabelTraits<RootCause> {
    static constexpr Category category = Category::RootCause;
    static const std::array<LabelInfo, 9> table;
};
template <>
struct LabelTraits<RootCauseSubclass> {
    static const std::array<LabelInfo, 10> table;
};
template <>
struct LabelTraits<Effect> {
    static constexpr Category category = Category::Effect;
    static const std::array<LabelInfo, 14> table;
};
template <>
struct LabelTraits<AgentComponent> {
    static constexpr Category category = Category::Component;
    static const std::array<LabelInfo, 5> table;
};

template <class E>
std::span<const LabelInfo> label_table() {
    return LabelTraits<E>::table;
}

template <class E>
std::vector<E> all_members() {
    std::vector<E> out;
    for (std::size_t i = 0; i < LabelTraits<E>::table.size(); ++i) out.push_back(static_cast<E>(i));
    return out;
}

template <class E>
const LabelInfo& label_info(E value) {
    return LabelTraits<E>::table.at(static_cast<std::size_t>(value));
}

template <class E>
std::string_view render_label(E value, LabelStyle style = LabelStyle::Abbrev) {
    const auto& info = label_info(value);
    return style == LabelStyle::Long ? info.long_name : info.abbrev;
}

/// Thrown when text does not name a registered member of a category.
class UnknownLabel : public std::runtime_error {
public:
    UnknownLabel(std::string category, std::string text);
    const std::string& category() const noexcept { return category_; }
    const std::string& text() const noexcept { return text_; }

private:
    std::string category_;
    std::string text_;
};

namespace detail {
// Index of the member matching `text` by long name, abbreviation, or
// "Long Name (ABBR)", case-insensitive after trimming.
std::optional<std::size_t> match_label(std::span<const LabelInfo> table, std::string_view text);
}  // namespace detail

template <class E>
std::optional<E> try_parse_label(std::string_view text) {
    if (auto idx = detail::match_label(label_table<E>(), text)) return static_cast<E>(*idx);
    return std::nullopt;
}

template <class E>
E parse_label(std::string_view text) {
    if (auto v = try_parse_label<E>(text)) return *v;
    if constexpr (requires { LabelTraits<E>::category; }) {
        throw UnknownLabel(std::string(category_name(LabelTraits<E>::category)), std::string(text));
    } else {
        throw UnknownLabel("root_cause_subclass", std::string(text));
    }
}

using LabelValue = std::variant<BugType, RootCause, Effect, AgentComponent>;

LabelValue parse_label(Category category, std::string_view text);
std::string render_label(const LabelValue& value, LabelStyle style);

/// Tolerant parse used on model output: exact parse first, then a small
/// synonym table and separator-insensitive comparison against long names
/// ("logic_bug", "API bug", "IncorrectOutput"). Never matches by edit distance.
template <class E>
std::optional<E> parse_label_lenient(std::string_view text);

std::span<const RootCauseSubclass> subclasses_of(RootCause rc);
std::optional<RootCause> parent_of(RootCauseSubclass sub);

/// Lowercase token with a synonym table applied ("c#" -> "csharp").
/// Unrecognized tokens pass through lowercased and trimmed.
std::string normalize_language(std::string_view text);
std::string normalize_framework(std::string_view text);

struct AnnotationRecord {
    std::string post_id;
    int bug_index = 0;
    BugType bug_type = BugType::LogicBug;
    RootCause root_cause = RootCause::Others;
    std::optional<RootCauseSubclass> root_cause_subclass;
    Effect effect = Effect::Unknown;
    AgentComponent component = AgentComponent::AgentCore;
    std::string language;
    std::string framework;
    std::string rationale_bug_type;
    std::string rationale_root_cause;
    std::string rationale_effect;
    std::string annotator;

    bool operator==(const AnnotationRecord&) const = default;
};

enum class ViolationKind {
    SubclassViolation,
    ComponentRuleViolation,
    EmptyRationale,
    NegativeBugIndex,
};

std::string_view violation_name(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    std::string detail;

    bool operator==(const Violation&) const = default;
};

std::vector<Violation> validate_record(const AnnotationRecord& r);

/// (post_id, bug_index, annotator) keys occurring more than once.
std::vector<std::string> duplicate_record_keys(std::span<const AnnotationRecord> records);

void to_json(nlohmann::json& j, const AnnotationRecord& r);
/// Throws UnknownLabel for unregistered label text and nlohmann::json
/// exceptions for missing or mistyped fields.
void from_json(const nlohmann::json& j, AnnotationRecord& r);

std::string record_key(const AnnotationRecord& r);

}  // namespace agentbug
