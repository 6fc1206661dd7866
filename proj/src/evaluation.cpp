// SPDX-License-Identifier: Apache-2.0
#include "agentbug/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>

#include "agentbug/text_util.hpp"

namespace agentbug {

AlignmentError::AlignmentError(std::string what, std::vector<std::string> orphans)
    : std::invalid_argument(std::move(what)), orphans_(std::move(orphans)) {}

std::string_view field_name(Field f) {
    switch (f) {
        case Field::BugType: return "bug_type";
        case Field::RootCause: return "root_cause";
        case Field::Effect: return "effect";
        case Field::Component: return "component";
        case Field::Language: return "language";
        case Field::Framework: return "framework";
    }
    return "?";
}

Field parse_field(std::string_view name) {
    for (auto f : kAllFields) {
        if (text::iequals(name, field_name(f))) return f;
    }
    throw std::invalid_argument("unknown field \"" + std::string(name) + "\"");
}

std::string field_value(const AnnotationRecord& r, Field f) {
    switch (f) {
        case Field::BugType: return std::string(render_label(r.bug_type));
        case Field::RootCause: return std::string(render_label(r.root_cause));
        case Field::Effect: return std::string(render_label(r.effect));
        case Field::Component: return std::string(render_label(r.component));
        case Field::Language: return r.language;
        case Field::Framework: return r.framework;
    }
    return {};
}

std::vector<LabeledPair> align_pairs(std::span<const AnnotationRecord> gold, std::span<const AnnotationRecord> pred) {
    std::map<std::string, const AnnotationRecord*> by_key;
    std::set<std::string> problems;
    for (const auto& p : pred) {
        if (!by_key.emplace(record_key(p), &p).second) problems.insert(record_key(p) + " (duplicate in predictions)");
    }
    std::set<std::string> gold_keys;
    std::vector<LabeledPair> pairs;
    for (const auto& g : gold) {
        const auto key = record_key(g);
        if (!gold_keys.insert(key).second) {
            problems.insert(key + " (duplicate in gold)");
            continue;
        }
        auto it = by_key.find(key);
        if (it == by_key.end()) {
            problems.insert(key + " (missing from predictions)");
            continue;
        }
        pairs.push_back({g, *it->second});
    }
    for (const auto& [key, _] : by_key) {
        if (!gold_keys.count(key)) problems.insert(key + " (missing from gold)");
    }
    if (!problems.empty()) {
        std::vector<std::string> list(problems.begin(), problems.end());
        std::string what = "cannot align gold and predictions:";
        for (const auto& p : list) what += " " + p + ";";
        what.pop_back();
        throw AlignmentError(what, std::move(list));
    }
    return pairs;
}

double macro_f1(std::span<const LabeledPair> pairs, Field f) {
    if (pairs.empty()) throw EmptyInput("macro_f1 needs at least one pair");
    std::map<std::string, std::array<long, 3>> tally;  // tp, fp, fn
    for (const auto& p : pairs) {
        const auto g = field_value(p.gold, f);
        const auto q = field_value(p.pred, f);
        if (g == q) {
            ++tally[g][0];
        } else {
            ++tally[q][1];
            ++tally[g][2];
        }
    }
    double sum = 0.0;
    for (const auto& [cls, t] : tally) {
        const double tp = static_cast<double>(t[0]);
        const double precision = t[0] + t[1] > 0 ? tp / static_cast<double>(t[0] + t[1]) : 0.0;
        const double recall = t[0] + t[2] > 0 ? tp / static_cast<double>(t[0] + t[2]) : 0.0;
        sum += precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    }
    return sum / static_cast<double>(tally.size());
}

double accuracy(std::span<const LabeledPair> pairs, Field f) {
    if (pairs.empty()) throw EmptyInput("accuracy needs at least one pair");
    long hits = 0;
    for (const auto& p : pairs) hits += field_value(p.gold, f) == field_value(p.pred, f);
    return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

std::optional<double> subclass_accuracy(std::span<const LabeledPair> pairs) {
    long eligible = 0;
    long hits = 0;
    for (const auto& p : pairs) {
        if (p.gold.root_cause != p.pred.root_cause) continue;
        ++eligible;
        hits += p.gold.root_cause_subclass == p.pred.root_cause_subclass;
    }
    if (eligible == 0) return std::nullopt;
    return static_cast<double>(hits) / static_cast<double>(eligible);
}

long ConfusionMatrix::total() const {
    long t = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) t += row_sum(i);
    return t;
}

long ConfusionMatrix::row_sum(std::size_t i) const {
    long s = 0;
    for (long c : counts.at(i)) s += c;
    return s;
}

ConfusionMatrix confusion(std::span<const LabeledPair> pairs, Field f) {
    std::set<std::string> classes;
    for (const auto& p : pairs) {
        classes.insert(field_value(p.gold, f));
        classes.insert(field_value(p.pred, f));
    }
    ConfusionMatrix m;
    m.classes.assign(classes.begin(), classes.end());
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < m.classes.size(); ++i) index[m.classes[i]] = i;
    m.counts.assign(m.classes.size(), std::vector<long>(m.classes.size(), 0));
    for (const auto& p : pairs) ++m.counts[index[field_value(p.gold, f)]][index[field_value(p.pred, f)]];
    return m;
}

namespace {

std::string csv_cell(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string num(double v, int precision = 6) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(precision) << v;
    return out.str();
}

}  // namespace

std::string confusion_csv(const ConfusionMatrix& m) {
    std::string out = "gold\\pred";
    for (const auto& c : m.classes) out += "," + csv_cell(c);
    out += "\n";
    for (std::size_t i = 0; i < m.classes.size(); ++i) {
        out += csv_cell(m.classes[i]);
        for (long c : m.counts[i]) out += "," + std::to_string(c);
        out += "\n";
    }
    return out;
}

double cohen_kappa(std::span<const std::string> a, std::span<const std::string> b) {
    if (a.size() != b.size()) {
        throw LengthMismatch("kappa needs equal-length label lists, got " + std::to_string(a.size()) + " and " +
                             std::to_string(b.size()));
    }
    if (a.empty()) throw EmptyInput("kappa needs at least one item");
    const double n = static_cast<double>(a.size());
    std::unordered_map<std::string, long> ca;
    std::unordered_map<std::string, long> cb;
    long agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++ca[a[i]];
        ++cb[b[i]];
        agree += a[i] == b[i];
    }
    const double po = static_cast<double>(agree) / n;
    double pe = 0.0;
    for (const auto& [label, count] : ca) {
        if (auto it = cb.find(label); it != cb.end()) {
            pe += (static_cast<double>(count) / n) * (static_cast<double>(it->second) / n);
        }
    }
    if (pe >= 1.0) return 1.0;
    return std::clamp((po - pe) / (1.0 - pe), -1.0, 1.0);
}

std::vector<double> default_fractions() {
    return {0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
}

std::vector<KappaRow> kappa_curve(std::span<const AnnotationRecord> a, std::span<const AnnotationRecord> b,
                                  std::span<const double> fractions) {
    std::vector<std::string> orphans;
    for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
        if (i >= a.size()) {
            orphans.push_back(record_key(b[i]));
        } else if (i >= b.size()) {
            orphans.push_back(record_key(a[i]));
        } else if (record_key(a[i]) != record_key(b[i])) {
            orphans.push_back(record_key(a[i]) + " vs " + record_key(b[i]));
        }
    }
    if (!orphans.empty()) {
        std::string what = "annotation lists are not aligned at:";
        for (const auto& o : orphans) what += " " + o;
        throw AlignmentError(what, std::move(orphans));
    }
    if (a.empty()) throw EmptyInput("kappa curve needs at least one item");
    std::vector<KappaRow> rows;
    for (double f : fractions) {
        if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("fraction " + std::to_string(f) + " outside (0, 1]");
        KappaRow row;
        row.fraction = f;
        // Guard against 0.1*30 evaluating to 3.0000000000000004.
        row.items = static_cast<std::size_t>(std::ceil(f * static_cast<double>(a.size()) - 1e-9));
        row.items = std::clamp<std::size_t>(row.items, 1, a.size());
        for (std::size_t k = 0; k < kTaxonomyFields.size(); ++k) {
            std::vector<std::string> la;
            std::vector<std::string> lb;
            for (std::size_t i = 0; i < row.items; ++i) {
                la.push_back(field_value(a[i], kTaxonomyFields[k]));
                lb.push_back(field_value(b[i], kTaxonomyFields[k]));
            }
            row.kappa[k] = cohen_kappa(la, lb);
        }
        rows.push_back(row);
    }
    return rows;
}

std::string kappa_curve_csv(std::span<const KappaRow> rows) {
    std::string out = "# prefixes follow dataset order: the first ceil(fraction*N) items of the input files\n";
    out += "fraction,items,bug_type,root_cause,effect,component\n";
    for (const auto& r : rows) {
        out += num(r.fraction, 2) + "," + std::to_string(r.items);
        for (double k : r.kappa) out += "," + num(k);
        out += "\n";
    }
    return out;
}

MatchRates match_rate(std::span<const LabeledPair> pairs) {
    if (pairs.empty()) throw EmptyInput("match rate needs at least one pair");
    MatchRates m;
    m.pairs = pairs.size();
    long all = 0;
    std::map<Field, long> hits;
    for (const auto& p : pairs) {
        bool every = true;
        for (auto f : kAllFields) {
            const bool same = field_value(p.gold, f) == field_value(p.pred, f);
            hits[f] += same;
            every = every && same;
        }
        all += every;
    }
    const double n = static_cast<double>(pairs.size());
    for (auto f : kAllFields) m.per_field[f] = static_cast<double>(hits[f]) / n;
    m.overall = static_cast<double>(all) / n;
    m.subclass = subclass_accuracy(pairs);
    return m;
}

std::string match_csv(const MatchRates& m, std::string_view condition) {
    std::string out = "condition,field,match_rate\n";
    const std::string cond = condition.empty() ? "all" : std::string(condition);
    for (auto f : kAllFields) out += cond + "," + std::string(field_name(f)) + "," + num(m.per_field.at(f)) + "\n";
    out += cond + ",overall," + num(m.overall) + "\n";
    if (m.subclass) out += cond + ",root_cause_subclass," + num(*m.subclass) + "\n";
    return out;
}

std::string_view axis_name(Axis a) {
    switch (a) {
        case Axis::BugType: return "bug_type";
        case Axis::RootCause: return "root_cause";
        case Axis::Effect: return "effect";
        case Axis::Component: return "component";
        case Axis::Language: return "language";
        case Axis::Framework: return "framework";
        case Axis::Year: return "year";
    }
    return "?";
}

Axis parse_axis(std::string_view name) {
    for (auto a : {Axis::BugType, Axis::RootCause, Axis::Effect, Axis::Component, Axis::Language, Axis::Framework,
                   Axis::Year}) {
        if (text::iequals(name, axis_name(a))) return a;
    }
    throw std::invalid_argument("unknown axis \"" + std::string(name) +
                                "\" (expected bug_type, root_cause, effect, component, language, framework, year)");
}

namespace {

std::string axis_value(const AnnotationRecord& r, Axis a, const std::map<std::string, Date>* created_at) {
    switch (a) {
        case Axis::BugType: return field_value(r, Field::BugType);
        case Axis::RootCause: return field_value(r, Field::RootCause);
        case Axis::Effect: return field_value(r, Field::Effect);
        case Axis::Component: return field_value(r, Field::Component);
        case Axis::Language: return r.language.empty() ? "unknown" : r.language;
        case Axis::Framework: return r.framework.empty() ? "unknown" : r.framework;
        case Axis::Year:
            if (created_at) {
                if (auto it = created_at->find(r.post_id); it != created_at->end()) {
                    return std::to_string(it->second.year);
                }
            }
            return "unknown";
    }
    return {};
}

template <class E>
std::vector<std::string> taxonomy_order() {
    std::vector<std::string> out;
    for (auto m : all_members<E>()) out.emplace_back(render_label(m));
    return out;
}

// Group order for an axis given the observed counts.
std::vector<std::string> ordered_groups(Axis a, const std::map<std::string, long>& counts) {
    std::vector<std::string> order;
    switch (a) {
        case Axis::BugType: order = taxonomy_order<BugType>(); break;
        case Axis::RootCause: order = taxonomy_order<RootCause>(); break;
        case Axis::Effect: order = taxonomy_order<Effect>(); break;
        case Axis::Component: order = taxonomy_order<AgentComponent>(); break;
        case Axis::Year:
            for (const auto& [k, _] : counts) order.push_back(k);  // map order; "unknown" sorts after digits
            return order;
        case Axis::Language:
        case Axis::Framework:
            for (const auto& [k, _] : counts) order.push_back(k);
            std::stable_sort(order.begin(), order.end(),
                             [&](const std::string& x, const std::string& y) { return counts.at(x) > counts.at(y); });
            return order;
    }
    std::erase_if(order, [&](const std::string& g) { return !counts.count(g); });
    return order;
}

}  // namespace

std::vector<DistributionRow> distribution_report(std::span<const AnnotationRecord> records, Axis group_by,
                                                 std::optional<Axis> cross,
                                                 const std::map<std::string, Date>* created_at) {
    std::vector<DistributionRow> rows;
    if (records.empty()) return rows;
    std::map<std::string, long> group_counts;
    std::map<std::string, long> cross_counts;
    std::map<std::pair<std::string, std::string>, long> cells;
    for (const auto& r : records) {
        const auto g = axis_value(r, group_by, created_at);
        ++group_counts[g];
        if (cross) {
            const auto c = axis_value(r, *cross, created_at);
            ++cross_counts[c];
            ++cells[{g, c}];
        }
    }
    const double total = static_cast<double>(records.size());
    const auto groups = ordered_groups(group_by, group_counts);
    const auto crosses = cross ? ordered_groups(*cross, cross_counts) : std::vector<std::string>{};
    for (const auto& g : groups) {
        const long gc = group_counts.at(g);
        if (!cross) {
            rows.push_back({g, {}, gc, 100.0 * static_cast<double>(gc) / total, 100.0});
            continue;
        }
        for (const auto& c : crosses) {
            auto it = cells.find({g, c});
            if (it == cells.end()) continue;
            rows.push_back({g, c, it->second, 100.0 * static_cast<double>(it->second) / total,
                            100.0 * static_cast<double>(it->second) / static_cast<double>(gc)});
        }
    }
    return rows;
}

std::string distribution_csv(std::span<const DistributionRow> rows, bool with_cross) {
    std::string out = with_cross ? "group,cross,count,pct,row_pct\n" : "group,count,pct\n";
    for (const auto& r : rows) {
        out += csv_cell(r.group);
        if (with_cross) out += "," + csv_cell(r.cross);
        out += "," + std::to_string(r.count) + "," + num(r.pct, 2);
        if (with_cross) out += "," + num(r.row_pct, 2);
        out += "\n";
    }
    return out;
}

std::string distribution_table(std::span<const DistributionRow> rows, bool with_cross) {
    std::size_t gw = 5;
    std::size_t cw = 5;
    for (const auto& r : rows) {
        gw = std::max(gw, r.group.size());
        cw = std::max(cw, r.cross.size());
    }
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(gw)) << "group";
    if (with_cross) out << "  " << std::setw(static_cast<int>(cw)) << "cross";
    out << std::right << std::setw(8) << "count" << std::setw(9) << "pct" << "\n";
    for (const auto& r : rows) {
        out << std::left << std::setw(static_cast<int>(gw)) << r.group;
        if (with_cross) out << "  " << std::setw(static_cast<int>(cw)) << r.cross;
        out << std::right << std::setw(8) << r.count << std::setw(8) << num(r.pct, 2) << "%\n";
    }
    return out.str();
}

EvalReport evaluate(std::span<const LabeledPair> pairs, std::span<const PostCost> costs) {
    EvalReport r;
    for (auto f : kAllFields) {
        r.macro_f1[f] = macro_f1(pairs, f);
        r.accuracy[f] = accuracy(pairs, f);
        r.confusion[f] = confusion(pairs, f);
    }
    r.subclass_accuracy = subclass_accuracy(pairs);
    r.match = match_rate(pairs);
    if (!costs.empty()) {
        double c = 0.0;
        double t = 0.0;
        for (const auto& pc : costs) {
            c += pc.cost_usd;
            t += pc.time_s;
        }
        r.cost_usd_mean = c / static_cast<double>(costs.size());
        r.time_s_mean = t / static_cast<double>(costs.size());
    }
    return r;
}

std::string f1_csv(const EvalReport& r) {
    std::string out = "field,macro_f1,accuracy\n";
    for (auto f : kAllFields) {
        out += std::string(field_name(f)) + "," + num(r.macro_f1.at(f)) + "," + num(r.accuracy.at(f)) + "\n";
    }
    if (r.subclass_accuracy) out += "root_cause_subclass,," + num(*r.subclass_accuracy) + "\n";
    return out;
}

std::string report_table(const EvalReport& r) {
    std::ostringstream out;
    out << std::left << std::setw(22) << "field" << std::right << std::setw(10) << "macro_f1" << std::setw(10)
        << "accuracy" << std::setw(8) << "match" << "\n";
    for (auto f : kAllFields) {
        out << std::left << std::setw(22) << field_name(f) << std::right << std::setw(10) << num(r.macro_f1.at(f), 3)
            << std::setw(10) << num(r.accuracy.at(f), 3) << std::setw(8) << num(r.match.per_field.at(f), 3) << "\n";
    }
    if (r.subclass_accuracy) {
        out << std::left << std::setw(22) << "root_cause_subclass" << std::right << std::setw(10) << "-"
            << std::setw(10) << num(*r.subclass_accuracy, 3) << "\n";
    }
    out << "overall match rate: " << num(r.match.overall, 3) << " over " << r.match.pairs << " records\n";
    if (r.cost_usd_mean) out << "mean cost per post: " << num(*r.cost_usd_mean, 5) << " USD\n";
    if (r.time_s_mean) out << "mean time per post: " << num(*r.time_s_mean, 2) << " s\n";
    return out.str();
}

}  // namespace agentbug
