// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include "agentbug/react.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace agentbug;
using agentbug::testing::make_post;
using agentbug::testing::no_sleep_retry;
using agentbug::testing::spit;
using agentbug::testing::TempDir;

namespace {

ScriptedTurn narrated_call(std::string narration, std::string tool, std::string query) {
    auto t = tool_call(std::move(tool), {{"query", std::move(query)}});
    t.response.content = std::move(narration);
    return t;
}

struct Rig {
    TempDir dir;
    ToolRegistry registry = ToolRegistry::defaults();
    InMemoryCache cache;
    FixtureSource source{dir.path()};
    ScriptedBackend summarizer{{reply("summary")}, false};
    ToolboxDispatcher dispatcher{registry, cache, source, summarizer};
};

std::vector<StepKind> kinds(const ReActTrace& t) {
    std::vector<StepKind> out;
    for (const auto& s : t.steps) out.push_back(s.kind);
    return out;
}

}  // namespace

TEST_SUITE("react") {

TEST_CASE("golden trace: one search then a final answer") {
    Rig rig;
    ScriptedBackend model({narrated_call("The loop never ends; check max_iterations.", "search_langchain_docs",
                                         "AgentExecutor max_iterations"),
                           reply("Explanation: The agent has no stop condition.\nReasoning: max_iterations is unset.")},
                          true);
    const auto post = make_post("so-1");
    const auto trace = run_react(post, rig.dispatcher, model, {}, no_sleep_retry());

    CHECK(kinds(trace) ==
          std::vector{StepKind::Thought, StepKind::Action, StepKind::Observation, StepKind::Final});
    CHECK(trace.explanation == "The agent has no stop condition.");
    CHECK(trace.reasoning == "max_iterations is unset.");
    CHECK(trace.tool_calls == 1);
    CHECK(trace.model_turns == 2);
    CHECK_FALSE(trace.forced_final);
    CHECK(validate_trace(trace, 10).empty());
    CHECK(serialize_trace(trace) ==
          "Thought: The loop never ends; check max_iterations.\n"
          "Action: search_langchain_docs[AgentExecutor max_iterations]\n"
          "Observation: No results found\n"
          "Final: The agent has no stop condition.\\nReasoning: max_iterations is unset.\n");

    // The second request carries the tool exchange back to the model.
    const auto second = model.recorded_requests().at(1);
    REQUIRE(second.messages.size() == 3);
    CHECK(second.messages[1].role == Role::Assistant);
    CHECK(second.messages[1].tool_call->tool_name == "search_langchain_docs");
    CHECK(second.messages[2].role == Role::Tool);
    CHECK(second.messages[2].content == kNoResults);
    CHECK(second.tool_schemas.size() == 10);
}

TEST_CASE("the post is rendered into the first request") {
    Rig rig;
    ScriptedBackend model({reply("Explanation: x")}, true);
    auto post = make_post("so-2", "Title here", "Body here");
    post.accepted_answer = "the fix is secret";
    run_react(post, rig.dispatcher, model, {});
    const auto first = model.recorded_requests().at(0).messages.at(0).content;
    CHECK(first.find("Title here") != std::string::npos);
    CHECK(first.find("Body here") != std::string::npos);
    CHECK(first.find("initialize_agent") != std::string::npos);
    CHECK(first.find("the fix is secret") == std::string::npos);
    CHECK(render_post(post, true).find("the fix is secret") != std::string::npos);
}

TEST_CASE("budget exhaustion forces a final answer") {
    Rig rig;
    ScriptedBackend model({tool_call("search_langchain_docs", {{"query", "a"}}),
                           tool_call("search_langchain_docs", {{"query", "b"}}),
                           tool_call("search_langchain_docs", {{"query", "c"}}),
                           reply("Explanation: out of budget answer")},
                          true);
    ReActLimits limits;
    limits.max_iterations = 3;
    const auto trace = run_react(make_post("p"), rig.dispatcher, model, limits, no_sleep_retry());
    CHECK(trace.tool_calls == 3);
    CHECK(trace.forced_final);
    CHECK(trace.explanation == "out of budget answer");
    CHECK(validate_trace(trace, 3).empty());
    const auto last = model.recorded_requests().back();
    CHECK(last.tool_schemas.empty());
    CHECK(last.messages.back().content == kForceFinalPrompt);
}

TEST_CASE("a model that never stops acting still terminates") {
    Rig rig;
    ScriptedBackend model({tool_call("search_pydantic_docs", {{"query", "loop"}, {"thought", "keep digging"}})}, false);
    ReActLimits limits;
    limits.max_iterations = 3;
    const auto trace = run_react(make_post("p"), rig.dispatcher, model, limits, no_sleep_retry());
    CHECK(trace.tool_calls == 3);
    CHECK(trace.forced_final);
    CHECK(trace.model_turns <= 2 * limits.max_iterations + 2);
    CHECK(trace.model_turns == 5);
    CHECK(trace.steps.back().kind == StepKind::Final);
    CHECK(trace.explanation == "keep digging");
    CHECK(validate_trace(trace, 3).empty());
    // Repeated identical searches are served from the cache after the first.
    CHECK(trace.cache_hits == 2);
    CHECK(rig.source.fetch_count() == 1);
}

TEST_CASE("tool-less baseline only ever observes the sentinel") {
    const auto registry = ToolRegistry::defaults();
    NoResultsDispatcher dispatcher(registry);
    ScriptedBackend model({narrated_call("look it up", "search_crewai_docs", "crew kickoff"),
                           reply("Explanation: the crew has no tasks")},
                          true);
    const auto trace = run_react(make_post("p"), dispatcher, model, {});
    for (const auto& s : trace.steps) {
        if (s.kind == StepKind::Observation) CHECK(s.text == kNoResults);
    }
    CHECK(trace.tool_calls == 1);
    CHECK(dispatcher.schemas().size() == 10);
}

TEST_CASE("unknown tools get an explanatory observation") {
    Rig rig;
    rig.registry.set_enabled("search_autogen_docs", false);
    const auto r = rig.dispatcher.dispatch("search_autogen_docs", "x");
    CHECK(r.summary.find("not available") != std::string::npos);
    CHECK(rig.dispatcher.dispatch("made_up", "x").summary.find("search_langchain_docs") != std::string::npos);
    CHECK(rig.source.fetch_count() == 0);
}

TEST_CASE("text protocol for backends without native tool calling") {
    Rig rig;
    spit(rig.dir / "search_langchain_docs" / fixture_file_name("output parser"), "<p>OutputParserException docs</p>");
    ScriptedBackend model({reply("Thought: I need the parser docs.\nAction: search_langchain_docs[output parser]"),
                           reply("Thought: Found it.\nFinal Answer: Explanation: The parser rejects prose.\n"
                                 "Reasoning: The model ignored the format instructions.")},
                          true, "text-model", BackendCaps{false, false});
    const auto trace = run_react(make_post("p"), rig.dispatcher, model, {}, no_sleep_retry());
    CHECK(kinds(trace) == std::vector{StepKind::Thought, StepKind::Action, StepKind::Observation, StepKind::Thought,
                                      StepKind::Final});
    CHECK(trace.steps[0].text == "I need the parser docs.");
    CHECK(trace.steps[1].action == ActionDetail{"search_langchain_docs", "output parser"});
    CHECK(trace.steps[2].text.find("OutputParserException docs") != std::string::npos);
    CHECK(trace.explanation == "The parser rejects prose.");
    CHECK(trace.reasoning == "The model ignored the format instructions.");

    const auto first = model.recorded_requests().at(0);
    CHECK(first.tool_schemas.empty());
    CHECK(first.system_prompt.find("search_langchain_docs") != std::string::npos);
    const auto second = model.recorded_requests().at(1);
    CHECK(second.messages.back().role == Role::User);
    CHECK(second.messages.back().content.rfind("Observation: ", 0) == 0);
}

TEST_CASE("parse_text_turn forms") {
    auto a = parse_text_turn("Thought: check\nAction: search_pydantic_docs(\"BaseModel config\")");
    REQUIRE(a.action);
    CHECK(a.action->query == "BaseModel config");
    auto b = parse_text_turn("Action: search_crewai_docs\nAction Input: 'process hierarchical'");
    REQUIRE(b.action);
    CHECK(b.action->tool == "search_crewai_docs");
    CHECK(b.action->query == "process hierarchical");
    auto c = parse_text_turn(R"({"explanation": "E", "reasoning": "R"})");
    CHECK_FALSE(c.action);
    CHECK(c.explanation == "E");
    CHECK(c.reasoning == "R");
    auto d = parse_text_turn("The bug is a missing await.");
    CHECK_FALSE(d.action);
    CHECK(d.explanation == "The bug is a missing await.");
    auto e = parse_text_turn("**Explanation:** wrong key\n**Reasoning:** typo");
    CHECK(e.explanation == "wrong key");
    CHECK(e.reasoning == "typo");
}

TEST_CASE("scratchpad round trip") {
    ReActTrace t;
    t.steps = {{StepKind::Thought, "multi\nline \\ text", std::nullopt, 0},
               {StepKind::Action, "search_langgraph_docs[]", ActionDetail{"search_langgraph_docs", ""}, 1},
               {StepKind::Observation, "No results found", std::nullopt, 2},
               {StepKind::Final, "done\r\n", std::nullopt, 3}};
    const auto text = serialize_trace(t);
    CHECK(text.find("Action: search_langgraph_docs[]\n") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
    CHECK(parse_scratchpad(text) == t.steps);
    CHECK_THROWS_AS(parse_scratchpad("Musing: hmm\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_scratchpad("Action: no brackets\n"), std::invalid_argument);
}

TEST_CASE("validate_trace catches malformed traces") {
    ReActTrace t;
    t.explanation = "x";
    t.steps = {{StepKind::Action, "a[b]", ActionDetail{"a", "b"}, 0}, {StepKind::Final, "x", std::nullopt, 1}};
    CHECK_FALSE(validate_trace(t, 10).empty());

    t.steps = {{StepKind::Thought, "t", std::nullopt, 0}};
    CHECK_FALSE(validate_trace(t, 10).empty());

    t.steps = {{StepKind::Final, "x", std::nullopt, 5}};
    CHECK_FALSE(validate_trace(t, 10).empty());

    t.steps = {{StepKind::Final, "x", std::nullopt, 0}};
    CHECK(validate_trace(t, 10).empty());
    t.explanation = " ";
    CHECK_FALSE(validate_trace(t, 10).empty());
}

TEST_CASE("trace json has no timing fields") {
    Rig rig;
    ScriptedBackend model({reply("Explanation: e")}, true);
    const auto trace = run_react(make_post("p"), rig.dispatcher, model, {});
    const auto j = trace_to_json(trace);
    CHECK(j["post_id"] == "p");
    CHECK(j["explanation"] == "e");
    CHECK_FALSE(j.contains("wall_ms"));
    CHECK(j["steps"].size() == trace.steps.size());
}

TEST_CASE("max_iterations must be positive") {
    Rig rig;
    ScriptedBackend model({reply("x")}, true);
    ReActLimits limits;
    limits.max_iterations = 0;
    CHECK_THROWS_AS(run_react(make_post("p"), rig.dispatcher, model, limits), std::invalid_argument);
}

}  // TEST_SUITE
