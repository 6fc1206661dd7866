// SPDX-License-Identifier: Apache-2.0
#include <random>

#include "agentbug/corpus.hpp"
#include "agentbug/text_util.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace agentbug;
using agentbug::testing::make_post;
using agentbug::testing::spit;
using agentbug::testing::TempDir;

namespace {

std::vector<std::string> ids(const std::vector<PostRecord>& posts) {
    std::vector<std::string> out;
    for (const auto& p : posts) out.push_back(p.post_id);
    return out;
}

// Five posts whose retained sets were worked out by hand for each filter.
std::vector<PostRecord> hand_corpus() {
    auto p1 = make_post("p1", "LangChain agent loops", "The executor repeats the same tool call.");
    p1.created_at = {2024, 1, 10};
    auto p2 = make_post("p2", "Task hangs forever", "Nothing happens after kickoff.");
    p2.code_snippets.clear();
    p2.tags = {"crewai"};
    p2.created_at = {2024, 2, 1};
    auto p3 = make_post("p3", "langchain   agent LOOPS", "Same symptom, reposted.");
    p3.created_at = {2024, 3, 1};
    auto p4 = make_post("p4", "Pandas merge is slow", "Joining two frames takes minutes.");
    p4.tags = {"pandas"};
    p4.created_at = {2023, 5, 5};
    auto p5 = make_post("p5", "Tool never invoked", "The assistant answers without calling my function.");
    p5.tags = {"autogen"};
    p5.created_at = {2025, 1, 1};
    return {p1, p2, p3, p4, p5};
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("load three valid lines") {
    TempDir dir;
    std::vector<PostRecord> posts{make_post("a"), make_post("b"), make_post("c")};
    spit(dir / "c.jsonl", serialize_corpus(posts));
    const auto loaded = load_corpus_with_lines(dir / "c.jsonl");
    REQUIRE(loaded.size() == 3);
    CHECK(loaded[0].line_no == 1);
    CHECK(loaded[2].line_no == 3);
    CHECK(load_corpus(dir / "c.jsonl") == posts);
}

TEST_CASE("empty file and blank lines") {
    TempDir dir;
    spit(dir / "empty.jsonl", "");
    CHECK(load_corpus(dir / "empty.jsonl").empty());
    CHECK(parse_corpus("\n\n").empty());
}

TEST_CASE("missing source reports the line") {
    nlohmann::json good = make_post("a");
    nlohmann::json bad = make_post("b");
    bad.erase("source");
    const std::string text = good.dump() + "\n\n" + bad.dump() + "\n";
    try {
        parse_corpus(text);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line_no() == 3);
        CHECK(std::string(e.what()).find("source") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_corpus("{not json}\n"), ParseError);
}

TEST_CASE("commit records need diff and message") {
    auto p = make_post("c1");
    p.source = PostSource::GithubCommit;
    CHECK_FALSE(validate_post(p).empty());
    nlohmann::json j = p;
    CHECK_THROWS_AS(parse_corpus(j.dump()), ParseError);
    p.diff = "--- a/x.py\n+++ b/x.py\n@@ -1 +1 @@\n-a\n+b\n";
    p.commit_message = "fix tool schema";
    CHECK(validate_post(p).empty());
    j = p;
    CHECK(parse_corpus(j.dump()).at(0) == p);
}

TEST_CASE("dates accept full timestamps") {
    CHECK(Date::parse("2024-03-09T12:30:00Z") == Date{2024, 3, 9});
    CHECK(Date::parse("2024-03-09").iso() == "2024-03-09");
    CHECK_THROWS(Date::parse("March 9"));
}

TEST_CASE("keyword filter") {
    auto a = make_post("a", "LangChain memory is lost", "x");
    auto b = make_post("b", "React state bug", "y");
    a.tags.clear();
    b.tags.clear();
    CorpusFilter f;
    f.keyword_list = {"langchain"};
    CHECK(ids(apply_filter(std::vector{a, b}, f)) == std::vector<std::string>{"a"});
}

TEST_CASE("duplicates are dropped by source and title") {
    auto a = make_post("a");
    auto b = make_post("b");
    CorpusFilter f;
    f.drop_duplicates = true;
    CHECK(ids(apply_filter(std::vector{a, b}, f)) == std::vector<std::string>{"a"});
    b.source = PostSource::Forum;
    CHECK(apply_filter(std::vector{a, b}, f).size() == 2);
    CHECK(dedup_key(a) != dedup_key(b));
}

TEST_CASE("hand corpus filters") {
    const auto posts = hand_corpus();
    CorpusFilter f;
    f.keyword_list = {"langchain", "crewai", "autogen"};
    CHECK(ids(apply_filter(posts, f)) == std::vector<std::string>{"p1", "p2", "p3", "p5"});

    f.require_code = true;
    CHECK(ids(apply_filter(posts, f)) == std::vector<std::string>{"p1", "p3", "p5"});

    f.drop_duplicates = true;
    CHECK(ids(apply_filter(posts, f)) == std::vector<std::string>{"p1", "p5"});

    f.date_cutoff = Date{2024, 12, 31};
    CHECK(ids(apply_filter(posts, f)) == std::vector<std::string>{"p1"});

    CorpusFilter only_date;
    only_date.date_cutoff = Date{2024, 1, 10};
    CHECK(ids(apply_filter(posts, only_date)) == std::vector<std::string>{"p1", "p4"});
}

TEST_CASE("filter output is an ordered subsequence") {
    std::mt19937 rng(7);
    const std::vector<std::string> words{"langchain", "crewai", "pydantic", "numpy", "agent"};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<PostRecord> posts;
        for (int i = 0; i < 12; ++i) {
            auto p = make_post("t" + std::to_string(trial) + "-" + std::to_string(i),
                               words[rng() % words.size()] + " issue " + std::to_string(rng() % 3), "body");
            if (rng() % 3 == 0) p.code_snippets.clear();
            p.tags.clear();
            posts.push_back(p);
        }
        CorpusFilter f;
        f.keyword_list = {words[rng() % words.size()]};
        f.require_code = rng() % 2;
        f.drop_duplicates = rng() % 2;
        const auto kept = apply_filter(posts, f);
        std::size_t cursor = 0;
        for (const auto& k : kept) {
            while (cursor < posts.size() && !(posts[cursor] == k)) ++cursor;
            REQUIRE(cursor < posts.size());
            ++cursor;
        }
    }
}

TEST_CASE("strip_solutions") {
    auto p = make_post("s");
    p.accepted_answer = "pass handle_parsing_errors=True";
    p.replies = {{AuthorRole::Responder, "try upgrading", false}, {AuthorRole::Asker, "that fixed it", true}};
    const auto original = p;
    const auto s = strip_solutions(p);
    CHECK(p == original);
    CHECK(s.replies.empty());
    CHECK_FALSE(s.accepted_answer.has_value());
    CHECK(s.title == p.title);
    CHECK(s.body == p.body);
    CHECK(s.code_snippets == p.code_snippets);
    CHECK(s.tags == p.tags);
    CHECK(s.created_at == p.created_at);
    CHECK(strip_solutions(s) == s);
}

TEST_CASE("serialize then parse is the identity") {
    auto p = make_post("rt", "Unicode \xC3\xA9 title", "line one\nline \"two\"");
    p.accepted_answer = "answer";
    p.replies = {{AuthorRole::Asker, "thanks", true}};
    p.source = PostSource::GithubIssue;
    const std::vector<PostRecord> posts{p, make_post("other")};
    CHECK(parse_corpus(serialize_corpus(posts)) == posts);
}

TEST_CASE("head-biased diff truncation") {
    const std::string diff(40000, 'x');
    const auto t = text::truncate_head_biased(diff, 16 * 1024);
    CHECK(t.size() <= 16 * 1024);
    CHECK(t.find("middle truncated") != std::string::npos);
    CHECK(text::truncate_head_biased("short", 100) == "short");
}

}  // TEST_SUITE
