// SPDX-License-Identifier: Apache-2.0
#include "agentbug/corpus.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "agentbug/text_util.hpp"

namespace agentbug {

std::string_view source_name(PostSource s) {
    switch (s) {
        case PostSource::StackOverflow: return "stack_overflow";
        case PostSource::GithubCommit: return "github_commit";
        case PostSource::GithubIssue: return "github_issue";
        case PostSource::Forum: return "forum";
    }
    return "?";
}

PostSource parse_source(std::string_view name) {
    for (auto s : {PostSource::StackOverflow, PostSource::GithubCommit, PostSource::GithubIssue, PostSource::Forum}) {
        if (text::iequals(name, source_name(s))) return s;
    }
    throw std::invalid_argument("unknown source \"" + std::string(name) + "\"");
}

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

Date Date::parse(std::string_view iso) {
    auto field = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        if (iso.size() < pos + len) throw std::invalid_argument("bad date \"" + std::string(iso) + "\"");
        auto [ptr, ec] = std::from_chars(iso.data() + pos, iso.data() + pos + len, v);
        if (ec != std::errc{} || ptr != iso.data() + pos + len) {
            throw std::invalid_argument("bad date \"" + std::string(iso) + "\"");
        }
        return v;
    };
    if (iso.size() < 10 || iso[4] != '-' || iso[7] != '-') {
        throw std::invalid_argument("bad date \"" + std::string(iso) + "\"");
    }
    Date d{field(0, 4), field(5, 2), field(8, 2)};
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) {
        throw std::invalid_argument("bad date \"" + std::string(iso) + "\"");
    }
    return d;
}

void to_json(nlohmann::json& j, const PostRecord& p) {
    nlohmann::json replies = nlohmann::json::array();
    for (const auto& r : p.replies) {
        replies.push_back({{"author_role", r.author_role == AuthorRole::Asker ? "asker" : "responder"},
                           {"text", r.text},
                           {"is_solution", r.is_solution}});
    }
    j = nlohmann::json{
        {"post_id", p.post_id},
        {"source", source_name(p.source)},
        {"title", p.title},
        {"body", p.body},
        {"code_snippets", p.code_snippets},
        {"tags", p.tags},
        {"created_at", p.created_at.iso()},
        {"accepted_answer", p.accepted_answer ? nlohmann::json(*p.accepted_answer) : nlohmann::json(nullptr)},
        {"replies", std::move(replies)},
        {"diff", p.diff ? nlohmann::json(*p.diff) : nlohmann::json(nullptr)},
        {"commit_message", p.commit_message ? nlohmann::json(*p.commit_message) : nlohmann::json(nullptr)},
    };
}

namespace {

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) throw std::invalid_argument(std::string("missing field \"") + key + "\"");
    return *it;
}

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return {};
    return it->get<std::vector<std::string>>();
}

}  // namespace

void from_json(const nlohmann::json& j, PostRecord& p) {
    if (!j.is_object()) throw std::invalid_argument("record is not a JSON object");
    try {
        const auto& id = require(j, "post_id");
        p.post_id = id.is_string() ? id.get<std::string>() : id.dump();
        p.source = parse_source(require(j, "source").get<std::string>());
        p.title = j.value("title", std::string{});
        p.body = j.value("body", std::string{});
        p.code_snippets = string_list(j, "code_snippets");
        p.tags = string_list(j, "tags");
        p.created_at = Date::parse(require(j, "created_at").get<std::string>());
        p.accepted_answer = optional_string(j, "accepted_answer");
        p.replies.clear();
        if (auto it = j.find("replies"); it != j.end() && !it->is_null()) {
            for (const auto& r : *it) {
                Reply reply;
                const std::string role = r.value("author_role", std::string("responder"));
                if (role == "asker") {
                    reply.author_role = AuthorRole::Asker;
                } else if (role == "responder") {
                    reply.author_role = AuthorRole::Responder;
                } else {
                    throw std::invalid_argument("unknown author_role \"" + role + "\"");
                }
                reply.text = r.value("text", std::string{});
                reply.is_solution = r.value("is_solution", false);
                p.replies.push_back(std::move(reply));
            }
        }
        p.diff = optional_string(j, "diff");
        p.commit_message = optional_string(j, "commit_message");
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(e.what());
    }
    if (auto problems = validate_post(p); !problems.empty()) throw std::invalid_argument(problems.front());
}

std::vector<std::string> validate_post(const PostRecord& p) {
    std::vector<std::string> out;
    if (p.post_id.empty()) out.emplace_back("post_id is empty");
    if (p.source == PostSource::GithubCommit) {
        if (!p.diff) out.emplace_back("github_commit record without diff");
        if (!p.commit_message) out.emplace_back("github_commit record without commit_message");
    }
    return out;
}

ParseError::ParseError(std::size_t line_no, const std::string& what)
    : std::runtime_error("line " + std::to_string(line_no) + ": " + what), line_no_(line_no) {}

namespace {

std::vector<LoadedPost> parse_lines(std::istream& in) {
    std::vector<LoadedPost> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back({nlohmann::json::parse(line).get<PostRecord>(), line_no});
        } catch (const std::exception& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return out;
}

}  // namespace

std::vector<LoadedPost> load_corpus_with_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open corpus file " + path.string());
    return parse_lines(in);
}

std::vector<PostRecord> load_corpus(const std::filesystem::path& path) {
    std::vector<PostRecord> out;
    for (auto& lp : load_corpus_with_lines(path)) out.push_back(std::move(lp.post));
    return out;
}

std::vector<PostRecord> parse_corpus(std::string_view jsonl) {
    std::istringstream in{std::string(jsonl)};
    std::vector<PostRecord> out;
    for (auto& lp : parse_lines(in)) out.push_back(std::move(lp.post));
    return out;
}

std::string serialize_corpus(std::span<const PostRecord> posts) {
    std::string out;
    for (const auto& p : posts) {
        out += nlohmann::json(p).dump();
        out += '\n';
    }
    return out;
}

void write_corpus(const std::filesystem::path& path, std::span<const PostRecord> posts) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << serialize_corpus(posts);
}

std::string dedup_key(const PostRecord& p) {
    return text::sha256_hex(std::string(source_name(p.source)) + "\x1f" +
                            text::to_lower(text::collapse_whitespace(p.title)));
}

namespace {

bool matches_keyword(const PostRecord& p, const std::vector<std::string>& keywords) {
    for (const auto& kw : keywords) {
        const auto k = text::trim(kw);
        if (k.empty()) continue;
        if (text::icontains(p.title, k) || text::icontains(p.body, k)) return true;
        for (const auto& tag : p.tags) {
            if (text::icontains(tag, k)) return true;
        }
    }
    return false;
}

}  // namespace

std::vector<PostRecord> apply_filter(std::span<const PostRecord> posts, const CorpusFilter& f) {
    std::vector<PostRecord> out;
    std::unordered_set<std::string> seen;
    for (const auto& p : posts) {
        if (!f.keyword_list.empty() && !matches_keyword(p, f.keyword_list)) continue;
        if (f.require_code && p.code_snippets.empty()) continue;
        if (f.date_cutoff && p.created_at > *f.date_cutoff) continue;
        if (f.drop_duplicates && !seen.insert(dedup_key(p)).second) continue;
        out.push_back(p);
    }
    return out;
}

PostRecord strip_solutions(const PostRecord& p) {
    PostRecord out = p;
    out.accepted_answer.reset();
    out.replies.clear();
    return out;
}

}  // namespace agentbug
