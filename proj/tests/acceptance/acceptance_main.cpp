// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one line per criterion, nonzero exit when any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "agentbug/classifier.hpp"
#include "agentbug/cli.hpp"
#include "agentbug/corpus.hpp"
#include "agentbug/evaluation.hpp"
#include "agentbug/gateway.hpp"
#include "agentbug/taxonomy.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace agentbug;
namespace fs = std::filesystem;
using agentbug::testing::make_post;
using agentbug::testing::make_record;
using agentbug::testing::no_sleep_retry;
using agentbug::testing::oracle_kappa;
using agentbug::testing::oracle_macro_f1;
using agentbug::testing::slurp;
using agentbug::testing::spit;
using agentbug::testing::TempDir;

namespace {

// Tolerances and time limits.
constexpr double kMetricTolerance = 1e-9;
constexpr double kCostRelTolerance = 1e-12;
constexpr double kPctSumTolerance = 0.01;

const fs::path kData = AGENTBUG_TEST_DATA;
const fs::path kGolden = kData / "golden";

// Collects failed expectations for one criterion.
class Check {
public:
    void expect(bool ok, const std::string& what) {
        ++total_;
        if (!ok && failures_.size() < 5) failures_.push_back(what);
        failed_ += !ok;
    }
    bool ok() const { return failed_ == 0; }
    std::string detail() const {
        std::ostringstream out;
        out << (total_ - failed_) << "/" << total_ << " checks";
        for (const auto& f : failures_) out << "; " << f;
        return out.str();
    }

private:
    int total_ = 0;
    int failed_ = 0;
    std::vector<std::string> failures_;
};

struct Criterion {
    int id;
    std::string name;
    double time_limit_s;
    std::function<void(Check&)> body;
};

std::vector<std::string> random_labels(std::mt19937& rng, std::size_t n, int k) {
    std::vector<std::string> out(n);
    for (auto& s : out) s = std::string(1, static_cast<char>('A' + rng() % k));
    return out;
}

// ---------------------------------------------------------------- 1

template <class E>
void roundtrip_family(Check& c) {
    for (auto m : all_members<E>()) {
        for (auto style : {LabelStyle::Long, LabelStyle::Abbrev}) {
            const auto text = std::string(render_label(m, style));
            c.expect(parse_label<E>(text) == m, "parse(render(" + text + "))");
        }
    }
}

void taxonomy_integrity(Check& c) {
    c.expect(all_members<BugType>().size() == 11, "11 bug types");
    c.expect(all_members<RootCause>().size() == 9, "9 root causes");
    c.expect(all_members<Effect>().size() == 14, "14 effects");
    c.expect(all_members<AgentComponent>().size() == 5, "5 components");
    std::size_t subs = 0;
    int with_subs = 0;
    for (auto rc : all_members<RootCause>()) {
        subs += subclasses_of(rc).size();
        with_subs += !subclasses_of(rc).empty();
    }
    c.expect(subs == 10 && with_subs == 5, "five root causes with two subclasses each");
    roundtrip_family<BugType>(c);
    roundtrip_family<RootCause>(c);
    roundtrip_family<RootCauseSubclass>(c);
    roundtrip_family<Effect>(c);
    roundtrip_family<AgentComponent>(c);

    for (auto rc : all_members<RootCause>()) {
        for (auto sub : all_members<RootCauseSubclass>()) {
            auto r = make_record("p", BugType::LogicBug, rc, sub, Effect::Crash, AgentComponent::AgentCore);
            const auto own = subclasses_of(rc);
            const bool legal = std::find(own.begin(), own.end(), sub) != own.end();
            c.expect(validate_record(r).empty() == legal, "subclass legality");
        }
    }
    for (auto bt : all_members<BugType>()) {
        for (auto comp : all_members<AgentComponent>()) {
            auto r = make_record("p", bt, RootCause::Others, std::nullopt, Effect::Crash, comp);
            const bool legal = comp != AgentComponent::NotApplicable || bt == BugType::ResourceLimitationBug;
            c.expect(validate_record(r).empty() == legal, "Not Applicable only with RLB");
        }
    }
}

// ---------------------------------------------------------------- 2

std::vector<LabeledPair> effect_pairs(const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
    std::vector<LabeledPair> out;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        auto g = make_record("p" + std::to_string(i));
        auto p = g;
        g.framework = gold[i];
        p.framework = pred[i];
        out.push_back({g, p});
    }
    return out;
}

void metric_oracles(Check& c) {
    std::mt19937 rng(500);
    for (int i = 0; i < 500; ++i) {
        const std::size_t n = 1 + rng() % 25;
        const int k = 2 + static_cast<int>(rng() % 5);
        const auto a = random_labels(rng, n, k);
        auto b = random_labels(rng, n, k);
        for (std::size_t j = 0; j < n; ++j) {
            if (rng() % 3 == 0) b[j] = a[j];
        }
        c.expect(std::abs(cohen_kappa(a, b) - oracle_kappa(a, b)) <= kMetricTolerance, "kappa vs reference");
    }
    for (int i = 0; i < 500; ++i) {
        const std::size_t n = 1 + rng() % 25;
        const auto g = random_labels(rng, n, 2 + static_cast<int>(rng() % 5));
        const auto p = random_labels(rng, n, 2 + static_cast<int>(rng() % 5));
        c.expect(std::abs(macro_f1(effect_pairs(g, p), Field::Framework) - oracle_macro_f1(g, p)) <= kMetricTolerance,
                 "macro F1 vs reference");
    }
    // Hand-derived cases.
    const std::vector<std::string> ab{"A", "B"}, ba{"B", "A"};
    c.expect(cohen_kappa(ab, ba) == -1.0, "kappa([A,B],[B,A]) = -1");
    c.expect(cohen_kappa(ab, ab) == 1.0, "kappa of identical lists = 1");
    c.expect(macro_f1(effect_pairs({"A", "A", "B"}, {"A", "B", "B"}), Field::Framework) == 2.0 / 3.0,
             "macro F1 [A,A,B]/[A,B,B] = 2/3");
    c.expect(macro_f1(effect_pairs({"A", "B", "C"}, {"A", "B", "C"}), Field::Framework) == 1.0, "perfect F1 = 1");
    c.expect(macro_f1(effect_pairs({"A", "B"}, {"B", "A"}), Field::Framework) == 0.0, "all wrong F1 = 0");
}

// ---------------------------------------------------------------- 3

void kappa_curve_protocol(Check& c) {
    std::mt19937 rng(200);
    const auto bts = all_members<BugType>();
    const auto rcs = all_members<RootCause>();
    const auto effs = all_members<Effect>();
    const auto comps = all_members<AgentComponent>();
    std::vector<AnnotationRecord> a, b;
    for (int i = 0; i < 200; ++i) {
        auto r = make_record("item-" + std::to_string(i), bts[rng() % bts.size()], rcs[rng() % rcs.size()],
                             std::nullopt, effs[rng() % effs.size()], comps[rng() % 4]);
        a.push_back(r);
        if (rng() % 4 == 0) r.bug_type = bts[rng() % bts.size()];
        if (rng() % 4 == 0) r.root_cause = rcs[rng() % rcs.size()];
        if (rng() % 4 == 0) r.effect = effs[rng() % effs.size()];
        if (rng() % 4 == 0) r.component = comps[rng() % 4];
        b.push_back(r);
    }
    const auto fractions = default_fractions();
    c.expect(fractions.front() == 0.05 && fractions.back() == 1.0, "fractions span 0.05 to 1.0");
    const auto rows = kappa_curve(a, b, fractions);
    c.expect(rows.size() == fractions.size(), "one row per fraction");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto expected_items = static_cast<std::size_t>(std::ceil(fractions[i] * 200 - 1e-9));
        c.expect(rows[i].items == expected_items, "prefix length ceil(f*N)");
        for (std::size_t f = 0; f < kTaxonomyFields.size(); ++f) {
            std::vector<std::string> pa, pb;
            for (std::size_t j = 0; j < rows[i].items; ++j) {
                pa.push_back(field_value(a[j], kTaxonomyFields[f]));
                pb.push_back(field_value(b[j], kTaxonomyFields[f]));
            }
            c.expect(std::abs(rows[i].kappa[f] - oracle_kappa(pa, pb)) <= kMetricTolerance, "prefix kappa");
        }
    }
    for (std::size_t f = 0; f < kTaxonomyFields.size(); ++f) {
        std::vector<std::string> wa, wb;
        for (int j = 0; j < 200; ++j) {
            wa.push_back(field_value(a[j], kTaxonomyFields[f]));
            wb.push_back(field_value(b[j], kTaxonomyFields[f]));
        }
        c.expect(rows.back().kappa[f] == cohen_kappa(wa, wb), "final row equals whole-set kappa");
    }
}

// ---------------------------------------------------------------- 4

std::vector<std::string> annotate_args(const fs::path& out, const std::string& mode) {
    return {"annotate",      (kGolden / "corpus.jsonl").string(),
            "-o",            (out / "run").string(),
            "--script",      (kGolden / "script.json").string(),
            "--mode",        mode,
            "--fixture-dir", (kGolden / "fixtures").string(),
            "--offline",     "--trace-dir",
            (out / "traces").string()};
}

int quiet_cli(const std::vector<std::string>& args) {
    std::ostringstream sink;
    auto* old_out = std::cout.rdbuf(sink.rdbuf());
    auto* old_err = std::cerr.rdbuf(sink.rdbuf());
    const int rc = run_cli(args);
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    return rc;
}

void golden_run(Check& c) {
    TempDir first, second;
    c.expect(quiet_cli(annotate_args(first.path(), "two_stage")) == kExitOk, "first run exits 0");
    c.expect(quiet_cli(annotate_args(second.path(), "two_stage")) == kExitOk, "second run exits 0");
    const auto ann = slurp(first / "run" / "annotations.jsonl");
    c.expect(!ann.empty() && ann == slurp(second / "run" / "annotations.jsonl"), "annotations byte-identical");
    std::size_t traces = 0;
    for (const auto& entry : fs::directory_iterator(first / "traces")) {
        ++traces;
        const auto other = second / "traces" / entry.path().filename();
        c.expect(fs::exists(other) && slurp(entry.path()) == slurp(other),
                 "trace " + entry.path().filename().string() + " byte-identical");
    }
    c.expect(traces == 4, "two trace files per post");
    for (const auto* dir : {&first, &second}) {
        const auto summary = nlohmann::json::parse(slurp(*dir / "run" / "summary.json"));
        c.expect(summary["totals"]["fetches"] == 1, "fetch counter = 1");
        c.expect(summary["totals"]["annotated"] == 2, "both posts annotated");
    }
    const auto trace = nlohmann::json::parse(slurp(first / "traces" / "so-101.json"));
    c.expect(trace["tool_calls"] == 2 && trace["cache_hits"] == 1, "re-query served from cache");
}

// ---------------------------------------------------------------- 5

void baseline_parity(Check& c) {
    TempDir dir;
    const auto golden = nlohmann::json::parse(slurp(kGolden / "script.json"));
    nlohmann::json script;
    // Same turns as the golden script minus the summarizer reply, since no
    // page is ever fetched.
    script["so-101"] = nlohmann::json::array({golden["so-101"][0], golden["so-101"][2], golden["so-101"][3],
                                              golden["so-101"][4]});
    script["gh-202"] = golden["gh-202"];
    spit(dir / "script.json", script.dump(2));
    auto args = annotate_args(dir.path(), "react_no_tools");
    args[5] = (dir / "script.json").string();
    c.expect(quiet_cli(args) == kExitOk, "react_no_tools run exits 0");
    const auto summary = nlohmann::json::parse(slurp(dir / "run" / "summary.json"));
    c.expect(summary["totals"]["fetches"] == 0, "zero fetches");
    int observations = 0;
    for (const auto& entry : fs::directory_iterator(dir / "traces")) {
        if (entry.path().extension() != ".json") continue;
        const auto trace = nlohmann::json::parse(slurp(entry.path()));
        for (const auto& step : trace["steps"]) {
            if (step["kind"] != "observation") continue;
            ++observations;
            c.expect(step["text"] == "No results found", "observation is the sentinel");
        }
    }
    c.expect(observations == 2, "both tool requests observed");
    std::istringstream lines(slurp(dir / "run" / "annotations.jsonl"));
    int records = 0;
    for (std::string line; std::getline(lines, line);) {
        if (line.empty()) continue;
        ++records;
        auto j = nlohmann::json::parse(line);
        for (const char* k : {"post_id", "bug_index", "annotator"}) j.erase(k);
        c.expect(check_label_object(j).empty(), "record is schema-valid");
        c.expect(validate_record(nlohmann::json::parse(line).get<AnnotationRecord>()).empty(), "record passes rules");
    }
    c.expect(records == 2, "two records emitted");
}

// ---------------------------------------------------------------- 6

void structured_ladder(Check& c) {
    const nlohmann::json answer{{"bug_type", "PRB"},
                                {"root_cause", "IDF"},
                                {"root_cause_subclass", "Output Data Format Error"},
                                {"effect", "Crash"},
                                {"component", "Agent Core"},
                                {"language", "python"},
                                {"framework", "langchain"},
                                {"rationale_bug_type", "the output parser fails"},
                                {"rationale_root_cause", "the model reply is not in the expected format"},
                                {"rationale_effect", "an exception stops the run"}};
    PromptKit kit;
    kit.mode = ClassifierMode::ZeroShot;
    kit.retry = no_sleep_retry();
    ScriptedBackend twice({reply("The bug is a parsing bug."), reply("{\"bug_type\": \"PRB\""), reply(answer.dump())},
                          true);
    try {
        const auto result = classify(make_post("p"), std::nullopt, kit, twice);
        c.expect(result.repairs == 2, "exactly 2 repairs");
        c.expect(result.repair_log.size() == 2, "2 logged repairs");
        c.expect(validate_record(result.record).empty(), "record is valid");
        c.expect(result.record.bug_type == BugType::ParsingBug, "labels taken from the valid reply");
    } catch (const std::exception& e) {
        c.expect(false, std::string("unexpected ") + e.what());
    }
    ScriptedBackend thrice({reply("no"), reply("[1]"), reply("{\"bug_type\": 3}")}, true);
    bool violation = false;
    try {
        classify(make_post("p"), std::nullopt, kit, thrice);
    } catch (const SchemaViolation&) {
        violation = true;
    } catch (const std::exception&) {
    }
    c.expect(violation, "three malformed replies raise SchemaViolation");
    c.expect(thrice.calls() == 3, "no fourth request");
}

// ---------------------------------------------------------------- 7

void cost_accounting(Check& c) {
    std::mt19937_64 rng(1000);
    std::uniform_int_distribution<std::int64_t> tokens(0, 2'000'000);
    std::uniform_real_distribution<double> price(0.01, 75.0);
    for (int i = 0; i < 1000; ++i) {
        PriceTable prices({{"m", Price{price(rng), price(rng)}}});
        std::vector<Usage> a(rng() % 12), b(rng() % 12);
        for (auto& u : a) u = {tokens(rng), tokens(rng), false};
        for (auto& u : b) u = {tokens(rng), tokens(rng), false};
        auto ab = a;
        ab.insert(ab.end(), b.begin(), b.end());
        const double whole = accumulate_cost(ab, "m", prices);
        const double parts = accumulate_cost(a, "m", prices) + accumulate_cost(b, "m", prices);
        c.expect(std::abs(whole - parts) <= kCostRelTolerance * std::max(std::abs(whole), 1e-300) || whole == parts,
                 "cost(a++b) = cost(a) + cost(b)");
    }
    PriceTable example({{"m", Price{0.30, 2.50}}});
    c.expect(accumulate_cost(std::vector<Usage>{{1000, 500, false}}, "m", example) == 0.00155,
             "1000 in + 500 out at 0.30/2.50 = 0.00155 USD");
}

// ---------------------------------------------------------------- 8

using Tally = std::vector<std::pair<std::string, long>>;

void distribution_reports(Check& c) {
    std::vector<AnnotationRecord> records;
    std::istringstream lines(slurp(kData / "distribution12.jsonl"));
    for (std::string line; std::getline(lines, line);) {
        if (!line.empty()) records.push_back(nlohmann::json::parse(line).get<AnnotationRecord>());
    }
    c.expect(records.size() == 12, "12 records");
    // Counted by hand from the fixture.
    const std::vector<std::pair<Axis, Tally>> expected{
        {Axis::BugType, {{"LB", 4}, {"CB", 1}, {"PRB", 1}, {"PPB", 2}, {"APIB", 2}, {"MB", 1}, {"RLB", 1}}},
        {Axis::RootCause, {{"AM", 1}, {"IMP", 1}, {"IDF", 1}, {"IMCF", 3}, {"II", 2}, {"AL", 3}, {"RV", 1}}},
        {Axis::Effect, {{"Crash", 6}, {"IO", 3}, {"TI", 1}, {"Hang", 1}, {"IL", 1}}},
        {Axis::Component, {{"Planning", 1}, {"Agent Core", 6}, {"Memory", 1}, {"Tools", 3}, {"Not Applicable", 1}}},
        {Axis::Language, {{"python", 10}, {"typescript", 2}}},
        {Axis::Framework,
         {{"langchain", 4}, {"crewai", 2}, {"langchain-js", 2}, {"langgraph", 2}, {"autogen", 1}, {"llamaindex", 1}}},
    };
    for (const auto& [axis, tally] : expected) {
        const auto rows = distribution_report(records, axis);
        const std::string name(axis_name(axis));
        c.expect(rows.size() == tally.size(), name + ": group count");
        double pct_sum = 0;
        for (std::size_t i = 0; i < rows.size() && i < tally.size(); ++i) {
            c.expect(rows[i].group == tally[i].first, name + ": group " + tally[i].first);
            c.expect(rows[i].count == tally[i].second, name + ": count of " + tally[i].first);
            c.expect(std::abs(rows[i].pct - 100.0 * static_cast<double>(tally[i].second) / 12.0) <= kMetricTolerance,
                     name + ": pct");
            pct_sum += rows[i].pct;
        }
        c.expect(std::abs(pct_sum - 100.0) <= kPctSumTolerance, name + ": pct sums to 100");
        const auto csv = distribution_csv(rows, false);
        c.expect(csv.rfind("group,count,pct\n", 0) == 0, name + ": csv columns");
    }
    const auto bt_csv = distribution_csv(distribution_report(records, Axis::BugType), false);
    c.expect(bt_csv.find("\nLB,4,33.33\n") != std::string::npos, "bug type csv row");
}

// ---------------------------------------------------------------- 9

void corpus_roundtrip(Check& c) {
    const auto path = kData / "corpus50.jsonl";
    const auto posts = load_corpus(path);
    c.expect(posts.size() == 50, "50 records");
    TempDir dir;
    spit(dir / "again.jsonl", serialize_corpus(posts));
    const auto again = load_corpus(dir / "again.jsonl");
    c.expect(again == posts, "load, serialize, load is the identity");
    c.expect(serialize_corpus(again) == serialize_corpus(posts), "serialization is stable");
    for (const auto& p : posts) {
        const auto once = strip_solutions(p);
        c.expect(strip_solutions(once) == once, "strip_solutions is idempotent");
        c.expect(!once.accepted_answer && once.replies.empty(), "solutions removed");
        c.expect(once.title == p.title && once.body == p.body && once.code_snippets == p.code_snippets,
                 "question content kept");
    }
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "taxonomy integrity", 1.0, taxonomy_integrity},
        {2, "metric oracles", 5.0, metric_oracles},
        {3, "kappa curve protocol", 1.0, kappa_curve_protocol},
        {4, "golden pipeline run", 5.0, golden_run},
        {5, "tool-less baseline parity", 5.0, baseline_parity},
        {6, "structured output ladder", 5.0, structured_ladder},
        {7, "cost accounting", 5.0, cost_accounting},
        {8, "distribution reports", 5.0, distribution_reports},
        {9, "corpus round trip", 5.0, corpus_roundtrip},
    };
    int failed = 0;
    for (const auto& cr : criteria) {
        Check check;
        const auto start = std::chrono::steady_clock::now();
        try {
            cr.body(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        check.expect(secs < cr.time_limit_s, "runtime under " + std::to_string(cr.time_limit_s) + " s");
        std::printf("[%s] %d %s (%.3fs) %s\n", check.ok() ? "PASS" : "FAIL", cr.id, cr.name.c_str(), secs,
                    check.detail().c_str());
        failed += !check.ok();
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
