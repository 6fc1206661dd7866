// SPDX-License-Identifier: Apache-2.0
#include "agentbug/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "agentbug/cache.hpp"
#include "agentbug/classifier.hpp"
#include "agentbug/corpus.hpp"
#include "agentbug/evaluation.hpp"
#include "agentbug/gateway.hpp"
#include "agentbug/http_backends.hpp"
#include "agentbug/page_source.hpp"
#include "agentbug/pipeline.hpp"
#include "agentbug/text_util.hpp"

namespace fs = std::filesystem;

namespace agentbug {

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

nlohmann::json read_json(const fs::path& path) {
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
}

std::vector<AnnotationRecord> load_annotations(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::vector<AnnotationRecord> out;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line).get<AnnotationRecord>());
        } catch (const std::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<PostRecord> load_posts(const fs::path& path) {
    try {
        return load_corpus(path);
    } catch (const ParseError& e) {
        throw DataError(path.string() + ": " + e.what());
    } catch (const std::runtime_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (auto t = text::trim(item); !t.empty()) out.emplace_back(t);
    }
    return out;
}

std::unique_ptr<CacheStore> open_cache(const std::string& cache_file, const std::string& redis) {
    if (!redis.empty()) {
        const auto colon = redis.rfind(':');
        if (colon == std::string::npos) throw UsageError("--redis expects host:port");
        int port = 0;
        try {
            port = std::stoi(redis.substr(colon + 1));
        } catch (const std::exception&) {
            port = -1;
        }
        if (port <= 0 || port > 65535) throw UsageError("--redis port is invalid: " + redis);
        return std::make_unique<RespCache>(redis.substr(0, colon), static_cast<std::uint16_t>(port));
    }
    if (!cache_file.empty()) return std::make_unique<FileCache>(cache_file);
    return std::make_unique<InMemoryCache>();
}

// ---------------------------------------------------------------- ingest

struct IngestOptions {
    std::vector<std::string> inputs;
    std::string out;
    std::string keywords;
    std::string keyword_file;
    bool require_code = false;
    bool dedup = false;
    std::string until;
    bool strip = false;
};

int cmd_ingest(const IngestOptions& o) {
    CorpusFilter filter;
    filter.keyword_list = split_list(o.keywords);
    if (!o.keyword_file.empty()) {
        std::istringstream in(read_file(o.keyword_file));
        std::string line;
        while (std::getline(in, line)) {
            if (auto t = text::trim(line); !t.empty() && t.front() != '#') filter.keyword_list.emplace_back(t);
        }
    }
    filter.require_code = o.require_code;
    filter.drop_duplicates = o.dedup;
    if (!o.until.empty()) {
        try {
            filter.date_cutoff = Date::parse(o.until);
        } catch (const std::exception& e) {
            throw UsageError(std::string("--until: ") + e.what());
        }
    }
    std::vector<PostRecord> all;
    for (const auto& in : o.inputs) {
        auto posts = load_posts(in);
        all.insert(all.end(), std::make_move_iterator(posts.begin()), std::make_move_iterator(posts.end()));
    }
    auto kept = apply_filter(all, filter);
    if (o.strip) {
        for (auto& p : kept) p = strip_solutions(p);
    }
    write_file(o.out, serialize_corpus(kept));
    std::cout << "read " << all.size() << " posts, kept " << kept.size() << ", wrote " << o.out << "\n";
    return kExitOk;
}

// -------------------------------------------------------------- annotate

struct AnnotateOptions {
    std::string corpus;
    std::string out_dir;
    std::string backend = "scripted";
    std::string script;
    std::string model;
    std::string mode = "two_stage";
    bool include_solutions = false;
    int max_iterations = 10;
    std::vector<std::string> disabled_tools;
    std::string tool_config;
    std::string fixture_dir;
    bool offline = false;
    std::string price_table;
    int workers = 1;
    std::string trace_dir;
    std::string cache_file;
    std::string redis;
    std::string exemplars;
    std::string gold;
    std::string gold_corpus;
    int context_budget = 8000;
};

struct BackendSetup {
    BackendFactory factory;
    std::shared_ptr<Backend> shared;
    bool serial_script = false;
};

BackendSetup make_backends(const AnnotateOptions& o) {
    BackendSetup s;
    if (o.backend == "scripted") {
        if (o.script.empty()) throw UsageError("--backend scripted requires --script");
        const auto j = read_json(o.script);
        const std::string model = o.model.empty() ? "scripted" : o.model;
        if (j.is_array()) {
            s.shared = std::make_shared<ScriptedBackend>(parse_script(j), true, model);
            s.serial_script = true;
            s.factory = [b = s.shared](const PostRecord&) { return b; };
        } else if (j.is_object()) {
            auto scripts = std::make_shared<std::map<std::string, std::vector<ScriptedTurn>>>();
            for (const auto& [id, turns] : j.items()) (*scripts)[id] = parse_script(turns);
            if (auto it = scripts->find("__exemplars__"); it != scripts->end()) {
                s.shared = std::make_shared<ScriptedBackend>(it->second, true, model);
            }
            s.factory = [scripts, model](const PostRecord& p) -> std::shared_ptr<Backend> {
                auto it = scripts->find(p.post_id);
                if (it == scripts->end()) throw std::invalid_argument("script has no entry for post " + p.post_id);
                return std::make_shared<ScriptedBackend>(it->second, true, model);
            };
        } else {
            throw UsageError("--script must hold a JSON array of turns or an object keyed by post id");
        }
        return s;
    }
    if (o.model.empty()) throw UsageError("--backend " + o.backend + " requires --model");
    try {
        s.shared = make_http_backend(o.backend, o.model, process_env());
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    s.factory = [b = s.shared](const PostRecord&) { return b; };
    return s;
}

std::vector<Exemplar> prepare_exemplars(const AnnotateOptions& o, Backend* summarizer, const RetryPolicy& retry) {
    if (!o.exemplars.empty()) {
        try {
            return exemplars_from_json(read_json(o.exemplars));
        } catch (const DataError&) {
            throw;
        } catch (const std::exception& e) {
            throw DataError(o.exemplars + ": " + e.what());
        }
    }
    const auto gold = load_annotations(o.gold);
    const auto posts = load_posts(o.gold_corpus.empty() ? o.corpus : o.gold_corpus);
    std::map<std::string, const PostRecord*> by_id;
    for (const auto& p : posts) by_id[p.post_id] = &p;
    std::vector<std::pair<PostRecord, AnnotationRecord>> pairs;
    for (const auto& g : gold) {
        auto it = by_id.find(g.post_id);
        if (it == by_id.end()) {
            std::cerr << "warning: gold record " << record_key(g) << " has no post in the corpus\n";
            continue;
        }
        pairs.emplace_back(*it->second, g);
    }
    if (!summarizer) throw UsageError("one_shot exemplar building needs a summarizer backend");
    auto set = build_one_shot_exemplars(pairs, o.context_budget, *summarizer, retry);
    for (const auto& w : set.warnings) std::cerr << "warning: " << w << "\n";
    return set.exemplars;
}

int cmd_annotate(AnnotateOptions o) {
    // Configuration is checked in full before any post is touched.
    if (o.offline && o.fixture_dir.empty()) throw UsageError("--offline requires --fixture-dir");
    if (!o.fixture_dir.empty() && !fs::is_directory(o.fixture_dir)) {
        throw UsageError("--fixture-dir " + o.fixture_dir + " is not a directory");
    }
    ClassifierMode mode;
    try {
        mode = parse_mode(o.mode);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (mode == ClassifierMode::OneShot && o.exemplars.empty() && o.gold.empty()) {
        throw UsageError("--mode one_shot requires --exemplars or --gold");
    }

    PipelineContext ctx;
    try {
        if (!o.tool_config.empty()) ctx.registry.apply_overrides(read_json(o.tool_config));
        for (const auto& t : o.disabled_tools) ctx.registry.set_enabled(t, false);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (!o.price_table.empty()) {
        try {
            ctx.prices = PriceTable::load(o.price_table);
        } catch (const std::exception& e) {
            throw UsageError("--price-table: " + std::string(e.what()));
        }
    }
    BackendSetup backends = make_backends(o);
    if (backends.serial_script && o.workers > 1) {
        std::cerr << "note: a single shared script replays in order; running with 1 worker\n";
        o.workers = 1;
    }

    auto cache = open_cache(o.cache_file, o.redis);
    std::unique_ptr<PageSource> source;
    std::unique_ptr<HostRateLimiter> limiter;
    if (!o.fixture_dir.empty()) {
        source = std::make_unique<FixtureSource>(o.fixture_dir);
    } else {
        limiter = std::make_unique<HostRateLimiter>();
        source = std::make_unique<HttpSource>(*limiter);
    }
    const auto posts = load_posts(o.corpus);

    ctx.cache = cache.get();
    ctx.source = source.get();
    ctx.backend_for = backends.factory;
    ctx.kit.mode = mode;
    ctx.limits.max_iterations = o.max_iterations;
    ctx.limits.include_solutions = o.include_solutions;
    if (!o.trace_dir.empty()) ctx.trace_dir = fs::path(o.trace_dir);

    fs::create_directories(o.out_dir);
    if (mode == ClassifierMode::OneShot) {
        ctx.kit.exemplars = prepare_exemplars(o, backends.shared.get(), ctx.kit.retry);
        write_file(fs::path(o.out_dir) / "exemplars.json", exemplars_to_json(ctx.kit.exemplars).dump(2) + "\n");
    }

    const auto outcomes = annotate_batch(posts, ctx, o.workers);
    const fs::path out(o.out_dir);
    write_file(out / "annotations.jsonl", annotations_jsonl(outcomes));
    write_file(out / "failures.jsonl", failures_jsonl(outcomes));
    const auto summary = run_summary(outcomes, source->fetch_count());
    write_file(out / "summary.json", summary.dump(2) + "\n");
    write_file(out / "summary.csv", run_summary_csv(outcomes));

    std::cout << run_summary_csv(outcomes);
    const auto& totals = summary.at("totals");
    std::cout << "annotated " << totals.at("annotated") << " of " << totals.at("posts") << " posts, "
              << totals.at("failed") << " failed, fetches=" << totals.at("fetches") << ", cost_usd="
              << (totals.at("cost_usd").is_null() ? std::string("n/a") : totals.at("cost_usd").dump())
              << (totals.at("usage_estimated").get<bool>() ? " (estimated)" : "") << "\n";

    bool backend_failure = false;
    bool other_failure = false;
    for (const auto& oc : outcomes) {
        if (oc.ok()) continue;
        std::cerr << "failed " << oc.post_id << " [" << oc.error_kind << "]: " << oc.error << "\n";
        (oc.error_kind == "backend" ? backend_failure : other_failure) = true;
    }
    if (backend_failure) return kExitBackend;
    if (other_failure) return kExitData;
    return kExitOk;
}

// -------------------------------------------------------------- evaluate

struct EvaluateOptions {
    std::string gold;
    std::string pred;
    std::string out_dir;
    std::string summary;
    std::string condition;
};

int cmd_evaluate(const EvaluateOptions& o) {
    const auto gold = load_annotations(o.gold);
    const auto pred = load_annotations(o.pred);
    const auto pairs = align_pairs(gold, pred);
    if (pairs.empty()) throw DataError("no records to evaluate");

    std::vector<PostCost> costs;
    bool costs_complete = true;
    if (!o.summary.empty()) {
        const auto summary = read_json(o.summary);
        for (const auto& p : summary.at("posts")) {
            PostCost pc{p.at("post_id").get<std::string>(), 0.0, p.value("time_s", 0.0)};
            if (p.at("cost_usd").is_null()) {
                costs_complete = false;
            } else {
                pc.cost_usd = p.at("cost_usd").get<double>();
            }
            costs.push_back(std::move(pc));
        }
    }
    auto report = evaluate(pairs, costs);
    if (!costs_complete) report.cost_usd_mean.reset();

    const fs::path out(o.out_dir);
    write_file(out / "f1.csv", f1_csv(report));
    write_file(out / "match.csv", match_csv(report.match, o.condition));
    for (const auto& [field, m] : report.confusion) {
        write_file(out / "confusion" / (std::string(field_name(field)) + ".csv"), confusion_csv(m));
    }
    std::cout << report_table(report);
    return kExitOk;
}

// ----------------------------------------------------------------- agree

struct AgreeOptions {
    std::string a;
    std::string b;
    std::string out_dir;
    std::vector<double> fractions;
};

int cmd_agree(const AgreeOptions& o) {
    const auto a = load_annotations(o.a);
    const auto b = load_annotations(o.b);
    const auto fractions = o.fractions.empty() ? default_fractions() : o.fractions;
    for (double f : fractions) {
        if (!(f > 0.0 && f <= 1.0)) throw UsageError("--fractions values must lie in (0, 1]");
    }
    const auto rows = kappa_curve(a, b, fractions);
    const auto csv = kappa_curve_csv(rows);
    write_file(fs::path(o.out_dir) / "kappa_curve.csv", csv);
    std::cout << csv;
    return kExitOk;
}

// ---------------------------------------------------------------- report

struct ReportOptions {
    std::string annotations;
    std::string by;
    std::string cross;
    std::string corpus;
    std::string out;
};

int cmd_report(const ReportOptions& o) {
    Axis by;
    std::optional<Axis> cross;
    try {
        by = parse_axis(o.by);
        if (!o.cross.empty()) cross = parse_axis(o.cross);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const bool needs_dates = by == Axis::Year || cross == Axis::Year;
    if (needs_dates && o.corpus.empty()) throw UsageError("grouping by year requires --corpus");
    const auto records = load_annotations(o.annotations);
    std::map<std::string, Date> dates;
    if (!o.corpus.empty()) {
        for (const auto& p : load_posts(o.corpus)) dates[p.post_id] = p.created_at;
    }
    const auto rows = distribution_report(records, by, cross, needs_dates ? &dates : nullptr);
    if (!o.out.empty()) write_file(o.out, distribution_csv(rows, cross.has_value()));
    std::cout << distribution_table(rows, cross.has_value());
    return kExitOk;
}

// ----------------------------------------------------------------- cache

struct CacheOptions {
    std::string cache_file;
    std::string redis;
};

std::unique_ptr<CacheStore> open_existing_cache(const CacheOptions& o) {
    if (o.cache_file.empty() == o.redis.empty()) throw UsageError("give exactly one of --cache-file and --redis");
    return open_cache(o.cache_file, o.redis);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"agentbug: bug explanation and taxonomy labelling for LLM agent bug reports"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    IngestOptions ingest_opts;
    auto* ingest = app.add_subcommand("ingest", "Filter and normalize raw posts into a corpus JSONL");
    ingest->add_option("-i,--input", ingest_opts.inputs, "Input post JSONL file(s)")->required()->check(CLI::ExistingFile);
    ingest->add_option("-o,--out", ingest_opts.out, "Output corpus JSONL")->required();
    ingest->add_option("--keywords", ingest_opts.keywords, "Comma-separated keywords (title, body, or tags)");
    ingest->add_option("--keyword-file", ingest_opts.keyword_file, "One keyword per line")->check(CLI::ExistingFile);
    ingest->add_flag("--require-code", ingest_opts.require_code, "Drop posts without code snippets");
    ingest->add_flag("--dedup", ingest_opts.dedup, "Drop posts whose source and title repeat an earlier one");
    ingest->add_option("--until", ingest_opts.until, "Drop posts created after this date (YYYY-MM-DD)");
    ingest->add_flag("--strip-solutions", ingest_opts.strip, "Remove accepted answers and replies");

    AnnotateOptions ann;
    auto* annotate = app.add_subcommand("annotate", "Explain and label every post of a corpus");
    annotate->add_option("corpus,--corpus", ann.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    annotate->add_option("-o,--out-dir", ann.out_dir, "Directory for annotations and summaries")->required();
    annotate->add_option("--backend", ann.backend, "Model backend")
        ->check(CLI::IsMember({"scripted", "openai", "openrouter", "gemini", "anthropic"}))
        ->capture_default_str();
    annotate->add_option("--script", ann.script, "Scripted backend turns (JSON array, or object keyed by post id)");
    annotate->add_option("--model", ann.model, "Model id");
    annotate->add_option("--mode", ann.mode, "two_stage | zero_shot | one_shot | react_no_tools")->capture_default_str();
    annotate->add_flag("--include-solutions", ann.include_solutions, "Show accepted answers and replies to the model");
    annotate->add_option("--max-iterations", ann.max_iterations, "Tool budget per post")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    annotate->add_option("--disable-tool", ann.disabled_tools, "Disable a tool by name (repeatable)");
    annotate->add_option("--tool-config", ann.tool_config, "JSON overrides per tool")->check(CLI::ExistingFile);
    annotate->add_option("--fixture-dir", ann.fixture_dir, "Serve tool searches from saved pages");
    annotate->add_flag("--offline", ann.offline, "Forbid network fetches (requires --fixture-dir)");
    annotate->add_option("--price-table", ann.price_table, "Model prices JSON")->check(CLI::ExistingFile);
    annotate->add_option("--workers", ann.workers, "Concurrent posts")->check(CLI::PositiveNumber)->capture_default_str();
    annotate->add_option("--trace-dir", ann.trace_dir, "Write per-post ReAct traces here");
    annotate->add_option("--cache-file", ann.cache_file, "Persist the tool cache to this JSON file");
    annotate->add_option("--redis", ann.redis, "Use a Redis-compatible cache at host:port");
    annotate->add_option("--exemplars", ann.exemplars, "One-shot exemplars JSON")->check(CLI::ExistingFile);
    annotate->add_option("--gold", ann.gold, "Gold annotations for building one-shot exemplars")->check(CLI::ExistingFile);
    annotate->add_option("--gold-corpus", ann.gold_corpus, "Posts of the gold annotations (default: the corpus)")
        ->check(CLI::ExistingFile);
    annotate->add_option("--context-budget", ann.context_budget, "Token budget for one-shot exemplars")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    EvaluateOptions ev;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Compare predictions against gold annotations");
    evaluate_cmd->add_option("--gold", ev.gold, "Gold annotations JSONL")->required()->check(CLI::ExistingFile);
    evaluate_cmd->add_option("--pred", ev.pred, "Predicted annotations JSONL")->required()->check(CLI::ExistingFile);
    evaluate_cmd->add_option("-o,--out-dir", ev.out_dir, "Directory for f1.csv, match.csv, confusion/")->required();
    evaluate_cmd->add_option("--summary", ev.summary, "Run summary JSON for cost and time means")
        ->check(CLI::ExistingFile);
    evaluate_cmd->add_option("--condition", ev.condition, "Label for match.csv rows, e.g. with_replies");

    AgreeOptions ag;
    auto* agree = app.add_subcommand("agree", "Cohen's kappa curve between two annotators");
    agree->add_option("--a", ag.a, "First annotator JSONL")->required()->check(CLI::ExistingFile);
    agree->add_option("--b", ag.b, "Second annotator JSONL")->required()->check(CLI::ExistingFile);
    agree->add_option("-o,--out-dir", ag.out_dir, "Directory for kappa_curve.csv")->required();
    agree->add_option("--fractions", ag.fractions, "Comma-separated prefix fractions")->delimiter(',');

    ReportOptions rep;
    auto* report = app.add_subcommand("report", "Distribution of labels");
    report->add_option("--annotations", rep.annotations, "Annotations JSONL")->required()->check(CLI::ExistingFile);
    report->add_option("--by", rep.by, "bug_type | root_cause | effect | component | language | framework | year")
        ->required();
    report->add_option("--cross", rep.cross, "Optional second axis");
    report->add_option("--corpus", rep.corpus, "Corpus JSONL (needed for year)")->check(CLI::ExistingFile);
    report->add_option("-o,--out", rep.out, "Write the table as CSV");

    CacheOptions cache_opts;
    auto* cache = app.add_subcommand("cache", "Inspect or clear the tool cache");
    cache->require_subcommand(1);
    auto* stats = cache->add_subcommand("stats", "Print the number of cached entries");
    auto* clear = cache->add_subcommand("clear", "Remove every cached entry");
    for (auto* sub : {stats, clear}) {
        sub->add_option("--cache-file", cache_opts.cache_file, "Cache JSON file");
        sub->add_option("--redis", cache_opts.redis, "Redis-compatible cache at host:port");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*ingest) return cmd_ingest(ingest_opts);
        if (*annotate) return cmd_annotate(ann);
        if (*evaluate_cmd) return cmd_evaluate(ev);
        if (*agree) return cmd_agree(ag);
        if (*report) return cmd_report(rep);
        if (*stats) {
            auto store = open_existing_cache(cache_opts);
            std::cout << "entries: " << store->size() << "\n";
            return kExitOk;
        }
        if (*clear) {
            auto store = open_existing_cache(cache_opts);
            const auto n = store->size();
            store->clear();
            std::cout << "cleared " << n << " entries\n";
            return kExitOk;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const AlignmentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        for (const auto& o : e.orphans()) std::cerr << "  orphan: " << o << "\n";
        return kExitData;
    } catch (const GatewayError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"agentbug"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace agentbug
