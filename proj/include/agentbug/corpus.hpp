// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace agentbug {

enum class PostSource { StackOverflow, GithubCommit, GithubIssue, Forum };

std::string_view source_name(PostSource s);
PostSource parse_source(std::string_view name);

enum class AuthorRole { Asker, Responder };

struct Reply {
    AuthorRole author_role = AuthorRole::Responder;
    std::string text;
    bool is_solution = false;

    bool operator==(const Reply&) const = default;
};

/// Civil date, UTC. Serialized as "YYYY-MM-DD"; full ISO-8601 timestamps are
/// accepted on input and truncated to the date.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;
    std::string iso() const;
    static Date parse(std::string_view iso);
};

struct PostRecord {
    std::string post_id;
    PostSource source = PostSource::StackOverflow;
    std::string title;
    std::string body;
    std::vector<std::string> code_snippets;
    std::vector<std::string> tags;
    Date created_at;
    std::optional<std::string> accepted_answer;
    std::vector<Reply> replies;
    std::optional<std::string> diff;
    std::optional<std::string> commit_message;

    bool operator==(const PostRecord&) const = default;
};

void to_json(nlohmann::json& j, const PostRecord& p);
/// Throws std::invalid_argument naming the offending field.
void from_json(const nlohmann::json& j, PostRecord& p);

/// Invariant violations of a post (commit without diff, etc.); empty when valid.
std::vector<std::string> validate_post(const PostRecord& p);

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line_no, const std::string& what);
    std::size_t line_no() const noexcept { return line_no_; }

private:
    std::size_t line_no_;
};

struct LoadedPost {
    PostRecord post;
    std::size_t line_no = 0;
};

/// One record per non-blank line, in file order. Throws ParseError on the
/// first malformed line and std::runtime_error if the file cannot be opened.
std::vector<LoadedPost> load_corpus_with_lines(const std::filesystem::path& path);
std::vector<PostRecord> load_corpus(const std::filesystem::path& path);
std::vector<PostRecord> parse_corpus(std::string_view jsonl);

std::string serialize_corpus(std::span<const PostRecord> posts);
void write_corpus(const std::filesystem::path& path, std::span<const PostRecord> posts);

struct CorpusFilter {
    std::vector<std::string> keyword_list;
    bool require_code = false;
    bool drop_duplicates = false;
    std::optional<Date> date_cutoff;
};

std::string dedup_key(const PostRecord& p);

/// Stable; output is an order-preserving subsequence of the input. An empty
/// keyword list disables keyword filtering.
std::vector<PostRecord> apply_filter(std::span<const PostRecord> posts, const CorpusFilter& f);

/// Copy without accepted answer and replies.
PostRecord strip_solutions(const PostRecord& p);

}  // namespace agentbug
