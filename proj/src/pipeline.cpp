// SPDX-License-Identifier: Apache-2.0
#include "agentbug/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <mutex>
#include <thread>

#include "agentbug/structured_output.hpp"

namespace agentbug {

std::string trace_file_stem(const std::string& post_id) {
    std::string out;
    for (char c : post_id) {
        const bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
        out.push_back(safe ? c : '_');
    }
    if (out.empty() || out == "." || out == "..") out = "_" + out;
    return out;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

void write_trace(const std::filesystem::path& dir, const ReActTrace& trace) {
    std::filesystem::create_directories(dir);
    const auto stem = trace_file_stem(trace.post_id);
    write_text(dir / (stem + ".json"), trace_to_json(trace).dump(2) + "\n");
    write_text(dir / (stem + ".txt"), serialize_trace(trace));
}

}  // namespace

PostOutcome annotate_post(const PostRecord& post, PipelineContext& ctx) {
    const auto start = std::chrono::steady_clock::now();
    PostOutcome out;
    out.post_id = post.post_id;
    std::vector<Usage> usages;
    try {
        auto backend = ctx.backend_for(post);
        if (!backend) throw std::invalid_argument("no backend configured for post " + post.post_id);
        out.model = backend->model_id();
        Classification c;
        auto take_trace = [&](const ReActTrace& trace) {
            usages.push_back(trace.total_usage);
            out.tool_calls = trace.tool_calls;
            out.cache_hits = trace.cache_hits;
            out.forced_final = trace.forced_final;
            if (ctx.trace_dir) write_trace(*ctx.trace_dir, trace);
        };
        PromptKit kit = ctx.kit;
        kit.include_solutions = ctx.limits.include_solutions;
        switch (kit.mode) {
            case ClassifierMode::TwoStage: {
                if (!ctx.cache || !ctx.source) throw std::invalid_argument("two_stage mode needs a cache and a page source");
                CountingSource counted(*ctx.source);
                ToolboxDispatcher tools(ctx.registry, *ctx.cache, counted, *backend, ctx.toolbox);
                ReActTrace trace = run_react(post, tools, *backend, ctx.limits, kit.retry);
                out.searches = counted.fetch_count();
                take_trace(trace);
                c = classify(post, trace.explanation, kit, *backend);
                break;
            }
            case ClassifierMode::ReactNoTools: {
                NoToolsRun run = run_react_no_tools(post, ctx.registry, *backend, ctx.limits, kit);
                take_trace(run.trace);
                c = std::move(run.classification);
                break;
            }
            case ClassifierMode::ZeroShot: c = run_zero_shot(post, kit, *backend); break;
            case ClassifierMode::OneShot: c = run_one_shot(post, kit, *backend); break;
        }
        usages.insert(usages.end(), c.usages.begin(), c.usages.end());
        out.repairs = c.repairs;
        out.record = std::move(c.record);
    } catch (const ScriptExhausted& e) {
        out.error_kind = "script";
        out.error = e.what();
    } catch (const GatewayError& e) {
        out.error_kind = "backend";
        out.error = e.what();
    } catch (const SchemaViolation& e) {
        out.error_kind = "schema";
        out.error = e.what();
    } catch (const UnknownLabel& e) {
        out.error_kind = "label";
        out.error = e.what();
    } catch (const std::invalid_argument& e) {
        out.error_kind = "data";
        out.error = e.what();
    } catch (const std::exception& e) {
        out.error_kind = "internal";
        out.error = e.what();
    }
    for (const auto& u : usages) out.usage += u;
    if (!out.model.empty() && ctx.prices.contains(out.model)) {
        out.cost_usd = accumulate_cost(usages, out.model, ctx.prices);
        out.cost_known = true;
    }
    out.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

std::vector<PostOutcome> annotate_batch(const std::vector<PostRecord>& posts, PipelineContext& ctx, int workers) {
    if (workers < 1) throw std::invalid_argument("workers must be at least 1");
    std::vector<PostOutcome> outcomes(posts.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < posts.size(); i = next++) outcomes[i] = annotate_post(posts[i], ctx);
    };
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(workers), posts.size());
    if (n <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    std::stable_sort(outcomes.begin(), outcomes.end(),
                     [](const PostOutcome& a, const PostOutcome& b) { return a.post_id < b.post_id; });
    return outcomes;
}

std::string annotations_jsonl(const std::vector<PostOutcome>& outcomes) {
    std::vector<const AnnotationRecord*> records;
    for (const auto& o : outcomes) {
        if (o.record) records.push_back(&*o.record);
    }
    std::stable_sort(records.begin(), records.end(), [](const AnnotationRecord* a, const AnnotationRecord* b) {
        return std::tie(a->post_id, a->bug_index) < std::tie(b->post_id, b->bug_index);
    });
    std::string out;
    for (const auto* r : records) out += nlohmann::json(*r).dump() + "\n";
    return out;
}

std::string failures_jsonl(const std::vector<PostOutcome>& outcomes) {
    std::string out;
    for (const auto& o : outcomes) {
        if (o.ok()) continue;
        out += nlohmann::json{{"post_id", o.post_id}, {"kind", o.error_kind}, {"error", o.error}}.dump() + "\n";
    }
    return out;
}

nlohmann::json run_summary(const std::vector<PostOutcome>& outcomes, std::size_t source_fetches) {
    nlohmann::json posts = nlohmann::json::array();
    double time_total = 0.0;
    double cost_total = 0.0;
    bool any_estimated = false;
    bool all_costed = true;
    std::size_t failed = 0;
    Usage usage;
    for (const auto& o : outcomes) {
        nlohmann::json p{{"post_id", o.post_id},
                         {"status", o.ok() ? "ok" : "failed"},
                         {"time_s", o.time_s},
                         {"cost_usd", o.cost_known ? nlohmann::json(o.cost_usd) : nlohmann::json(nullptr)},
                         {"usage_estimated", o.usage.estimated},
                         {"input_tokens", o.usage.input_tokens},
                         {"output_tokens", o.usage.output_tokens},
                         {"tool_calls", o.tool_calls},
                         {"cache_hits", o.cache_hits},
                         {"fetches", o.searches},
                         {"repairs", o.repairs}};
        if (!o.ok()) p["error"] = o.error;
        posts.push_back(std::move(p));
        time_total += o.time_s;
        cost_total += o.cost_usd;
        any_estimated = any_estimated || o.usage.estimated;
        all_costed = all_costed && o.cost_known;
        failed += !o.ok();
        usage += o.usage;
    }
    const double n = outcomes.empty() ? 1.0 : static_cast<double>(outcomes.size());
    return nlohmann::json{
        {"posts", std::move(posts)},
        {"totals",
         {{"posts", outcomes.size()},
          {"annotated", outcomes.size() - failed},
          {"failed", failed},
          {"time_s", time_total},
          {"time_s_mean", time_total / n},
          {"cost_usd", all_costed ? nlohmann::json(cost_total) : nlohmann::json(nullptr)},
          {"cost_usd_mean", all_costed ? nlohmann::json(cost_total / n) : nlohmann::json(nullptr)},
          {"usage_estimated", any_estimated},
          {"input_tokens", usage.input_tokens},
          {"output_tokens", usage.output_tokens},
          {"fetches", source_fetches}}},
    };
}

std::string run_summary_csv(const std::vector<PostOutcome>& outcomes) {
    std::string out = "post_id,status,time_s,cost_usd,usage_estimated,input_tokens,output_tokens,tool_calls,fetches\n";
    for (const auto& o : outcomes) {
        char time_buf[32];
        std::snprintf(time_buf, sizeof time_buf, "%.3f", o.time_s);
        char cost_buf[32] = "";
        if (o.cost_known) std::snprintf(cost_buf, sizeof cost_buf, "%.6f", o.cost_usd);
        out += o.post_id + "," + (o.ok() ? "ok" : "failed") + "," + time_buf + "," + cost_buf + "," +
               (o.usage.estimated ? "true" : "false") + "," + std::to_string(o.usage.input_tokens) + "," +
               std::to_string(o.usage.output_tokens) + "," + std::to_string(o.tool_calls) + "," +
               std::to_string(o.searches) + "\n";
    }
    return out;
}

}  // namespace agentbug
