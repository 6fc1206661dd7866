// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "agentbug/corpus.hpp"
#include "agentbug/taxonomy.hpp"

namespace agentbug {

class EmptyInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class LengthMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class AlignmentError : public std::invalid_argument {
public:
    AlignmentError(std::string what, std::vector<std::string> orphans);
    const std::vector<std::string>& orphans() const noexcept { return orphans_; }

private:
    std::vector<std::string> orphans_;
};

/// The six annotated fields. Root cause compares at the top level.
enum class Field { BugType, RootCause, Effect, Component, Language, Framework };

inline constexpr std::array<Field, 6> kAllFields = {Field::BugType,   Field::RootCause, Field::Effect,
                                                    Field::Component, Field::Language,  Field::Framework};
inline constexpr std::array<Field, 4> kTaxonomyFields = {Field::BugType, Field::RootCause, Field::Effect,
                                                         Field::Component};

std::string_view field_name(Field f);
Field parse_field(std::string_view name);
std::string field_value(const AnnotationRecord& r, Field f);

struct LabeledPair {
    AnnotationRecord gold;
    AnnotationRecord pred;
};

/// Pairs records on (post_id, bug_index) in gold order. Throws
/// AlignmentError listing every key present on one side only, or
/// duplicated on either side.
std::vector<LabeledPair> align_pairs(std::span<const AnnotationRecord> gold, std::span<const AnnotationRecord> pred);

/// Unweighted mean of per-class F1 over classes seen in gold or pred.
double macro_f1(std::span<const LabeledPair> pairs, Field f);
double accuracy(std::span<const LabeledPair> pairs, Field f);

/// Among pairs whose top-level root cause matches, the fraction whose
/// subclass also matches; nullopt when no pair qualifies.
std::optional<double> subclass_accuracy(std::span<const LabeledPair> pairs);

/// Rows are gold classes, columns predicted classes; `classes` is the sorted
/// union of both.
struct ConfusionMatrix {
    std::vector<std::string> classes;
    std::vector<std::vector<long>> counts;

    long total() const;
    long row_sum(std::size_t i) const;
};

ConfusionMatrix confusion(std::span<const LabeledPair> pairs, Field f);
std::string confusion_csv(const ConfusionMatrix& m);

/// Chance-corrected agreement; 1.0 when chance agreement is already 1.
double cohen_kappa(std::span<const std::string> a, std::span<const std::string> b);

struct KappaRow {
    double fraction = 0.0;
    std::size_t items = 0;
    /// Indexed like kTaxonomyFields.
    std::array<double, 4> kappa{};
};

std::vector<double> default_fractions();

/// Kappa per taxonomy category over the first ceil(f*N) items of each list.
/// Lists must hold the same (post_id, bug_index) keys in the same order.
std::vector<KappaRow> kappa_curve(std::span<const AnnotationRecord> a, std::span<const AnnotationRecord> b,
                                  std::span<const double> fractions);
std::string kappa_curve_csv(std::span<const KappaRow> rows);

struct MatchRates {
    std::map<Field, double> per_field;
    /// All six fields equal.
    double overall = 0.0;
    std::optional<double> subclass;
    std::size_t pairs = 0;
};

MatchRates match_rate(std::span<const LabeledPair> pairs);
std::string match_csv(const MatchRates& m, std::string_view condition = {});

enum class Axis { BugType, RootCause, Effect, Component, Language, Framework, Year };

std::string_view axis_name(Axis a);
Axis parse_axis(std::string_view name);

struct DistributionRow {
    std::string group;
    std::string cross;
    long count = 0;
    /// Share of all records.
    double pct = 0.0;
    /// Share within the group; only meaningful with a cross axis.
    double row_pct = 0.0;
};

/// Counts per group (or per group x cross cell). Taxonomy axes list groups in
/// taxonomy order, free-text axes by descending count then name, years
/// ascending. Year needs `created_at` per post id; unknown posts count as
/// "unknown".
std::vector<DistributionRow> distribution_report(std::span<const AnnotationRecord> records, Axis group_by,
                                                 std::optional<Axis> cross = std::nullopt,
                                                 const std::map<std::string, Date>* created_at = nullptr);
std::string distribution_csv(std::span<const DistributionRow> rows, bool with_cross);
std::string distribution_table(std::span<const DistributionRow> rows, bool with_cross);

struct PostCost {
    std::string post_id;
    double cost_usd = 0.0;
    double time_s = 0.0;
};

struct EvalReport {
    std::map<Field, double> macro_f1;
    std::map<Field, double> accuracy;
    std::optional<double> subclass_accuracy;
    MatchRates match;
    std::map<Field, ConfusionMatrix> confusion;
    std::vector<KappaRow> kappa_curve;
    std::optional<double> cost_usd_mean;
    std::optional<double> time_s_mean;
};

EvalReport evaluate(std::span<const LabeledPair> pairs, std::span<const PostCost> costs = {});
std::string f1_csv(const EvalReport& r);
std::string report_table(const EvalReport& r);

}  // namespace agentbug
