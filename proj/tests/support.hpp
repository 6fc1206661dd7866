// SPDX-License-Identifier: Apache-2.0
// Shared fixtures for the unit tests.
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "agentbug/corpus.hpp"
#include "agentbug/gateway.hpp"
#include "agentbug/taxonomy.hpp"

namespace agentbug::testing {

inline AnnotationRecord make_record(std::string post_id, BugType bt = BugType::LogicBug,
                                    RootCause rc = RootCause::IncorrectOrMissingControlFlow,
                                    std::optional<RootCauseSubclass> sub = RootCauseSubclass::IncorrectFlow,
                                    Effect eff = Effect::IncorrectOutput,
                                    AgentComponent comp = AgentComponent::AgentCore) {
    AnnotationRecord r;
    r.post_id = std::move(post_id);
    r.bug_type = bt;
    r.root_cause = rc;
    r.root_cause_subclass = sub;
    r.effect = eff;
    r.component = comp;
    r.language = "python";
    r.framework = "langchain";
    r.rationale_bug_type = "the branch handles the wrong case";
    r.rationale_root_cause = "the condition checks the wrong variable";
    r.rationale_effect = "the answer is wrong but complete";
    r.annotator = "human-a";
    return r;
}

inline PostRecord make_post(std::string id, std::string title = "Agent loops forever",
                            std::string body = "My AgentExecutor never stops calling the search tool.") {
    PostRecord p;
    p.post_id = std::move(id);
    p.source = PostSource::StackOverflow;
    p.title = std::move(title);
    p.body = std::move(body);
    p.code_snippets = {"agent = initialize_agent(tools, llm)\nagent.run(q)"};
    p.tags = {"langchain", "python"};
    p.created_at = Date{2024, 3, 9};
    return p;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("agentbug-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void spit(const std::filesystem::path& p, const std::string& content) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

inline RetryPolicy no_sleep_retry() {
    RetryPolicy r;
    r.sleep = [](std::chrono::milliseconds) {};
    return r;
}

}  // namespace agentbug::testing
