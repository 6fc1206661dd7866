// SPDX-License-Identifier: Apache-2.0
#include "agentbug/html_text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <optional>

#include "agentbug/text_util.hpp"

namespace agentbug::html {

namespace {

struct Tag {
    std::string name;  // lowercase, without '/'
    bool closing = false;
    bool self_closing = false;
    std::string_view attrs;
};

// Parses the tag starting at page[pos] == '<'; returns the index one past '>'.
std::optional<std::pair<Tag, std::size_t>> parse_tag(std::string_view page, std::size_t pos) {
    std::size_t i = pos + 1;
    Tag tag;
    if (i < page.size() && page[i] == '/') {
        tag.closing = true;
        ++i;
    }
    const std::size_t name_start = i;
    while (i < page.size() && (std::isalnum(static_cast<unsigned char>(page[i])) || page[i] == '-' || page[i] == ':')) ++i;
    if (i == name_start) return std::nullopt;
    tag.name = text::to_lower(page.substr(name_start, i - name_start));
    const std::size_t attr_start = i;
    char quote = 0;
    for (; i < page.size(); ++i) {
        const char c = page[i];
        if (quote) {
            if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '>') {
            tag.attrs = page.substr(attr_start, i - attr_start);
            tag.self_closing = !tag.attrs.empty() && tag.attrs.back() == '/';
            return std::make_pair(std::move(tag), i + 1);
        }
    }
    return std::nullopt;
}

bool is_one_of(std::string_view name, std::initializer_list<std::string_view> names) {
    return std::find(names.begin(), names.end(), name) != names.end();
}

bool is_skipped(std::string_view name) {
    return is_one_of(name, {"script", "style", "noscript", "nav", "header", "footer", "aside", "svg", "template",
                            "form", "button", "iframe", "head"});
}

bool is_block(std::string_view name) {
    return is_one_of(name, {"p",  "div", "br", "li", "ul", "ol", "h1", "h2", "h3", "h4", "h5", "h6", "pre",
                            "tr", "table", "section", "article", "main", "blockquote", "hr", "dt", "dd", "title"});
}

std::optional<std::string> attribute(std::string_view attrs, std::string_view name) {
    std::size_t i = 0;
    while (i < attrs.size()) {
        while (i < attrs.size() && (std::isspace(static_cast<unsigned char>(attrs[i])) || attrs[i] == '/')) ++i;
        const std::size_t ks = i;
        while (i < attrs.size() && attrs[i] != '=' && !std::isspace(static_cast<unsigned char>(attrs[i]))) ++i;
        const auto key = attrs.substr(ks, i - ks);
        while (i < attrs.size() && std::isspace(static_cast<unsigned char>(attrs[i]))) ++i;
        if (i >= attrs.size() || attrs[i] != '=') {
            if (key.empty()) ++i;
            continue;
        }
        ++i;
        while (i < attrs.size() && std::isspace(static_cast<unsigned char>(attrs[i]))) ++i;
        std::string_view value;
        if (i < attrs.size() && (attrs[i] == '"' || attrs[i] == '\'')) {
            const char q = attrs[i++];
            const auto end = attrs.find(q, i);
            value = attrs.substr(i, end == std::string_view::npos ? std::string_view::npos : end - i);
            i = end == std::string_view::npos ? attrs.size() : end + 1;
        } else {
            const std::size_t vs = i;
            while (i < attrs.size() && !std::isspace(static_cast<unsigned char>(attrs[i]))) ++i;
            value = attrs.substr(vs, i - vs);
        }
        if (text::iequals(key, name)) return decode_entities(value);
    }
    return std::nullopt;
}

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x110000) {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Output accumulator that collapses whitespace outside <pre>.
class TextSink {
public:
    void text(std::string_view s, bool preformatted) {
        for (char c : s) {
            const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f';
            if (preformatted) {
                flush_space();
                out_.push_back(c == '\r' ? '\n' : c);
            } else if (space) {
                pending_space_ = true;
            } else {
                flush_space();
                out_.push_back(c);
            }
        }
    }
    void line_break() {
        pending_space_ = false;
        while (!out_.empty() && out_.back() == ' ') out_.pop_back();
        if (!out_.empty() && out_.back() != '\n') out_.push_back('\n');
    }
    std::string finish() {
        std::string result;
        std::size_t newlines = 0;
        for (char c : out_) {
            if (c == '\n') {
                if (++newlines > 2) continue;
            } else {
                newlines = 0;
            }
            result.push_back(c);
        }
        return std::string(text::trim(result));
    }
    bool empty() const { return text::trim(out_).empty(); }

private:
    void flush_space() {
        if (pending_space_ && !out_.empty() && out_.back() != '\n' && out_.back() != ' ') out_.push_back(' ');
        pending_space_ = false;
    }
    std::string out_;
    bool pending_space_ = false;
};

}  // namespace

std::string decode_entities(std::string_view s) {
    static constexpr std::array<std::pair<std::string_view, std::string_view>, 12> kNamed{{
        {"amp", "&"},
        {"lt", "<"},
        {"gt", ">"},
        {"quot", "\""},
        {"apos", "'"},
        {"nbsp", " "},
        {"ndash", "\xE2\x80\x93"},
        {"mdash", "\xE2\x80\x94"},
        {"hellip", "\xE2\x80\xA6"},
        {"rsquo", "\xE2\x80\x99"},
        {"lsquo", "\xE2\x80\x98"},
        {"copy", "\xC2\xA9"},
    }};
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out.push_back(s[i]);
            continue;
        }
        const auto semi = s.find(';', i);
        if (semi == std::string_view::npos || semi - i > 10) {
            out.push_back('&');
            continue;
        }
        const auto ent = s.substr(i + 1, semi - i - 1);
        bool decoded = false;
        if (!ent.empty() && ent[0] == '#') {
            std::uint32_t cp = 0;
            const bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
            const auto digits = ent.substr(hex ? 2 : 1);
            auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cp, hex ? 16 : 10);
            if (ec == std::errc{} && ptr == digits.data() + digits.size() && !digits.empty()) {
                append_utf8(out, cp);
                decoded = true;
            }
        } else {
            for (const auto& [name, rep] : kNamed) {
                if (ent == name) {
                    out += rep;
                    decoded = true;
                    break;
                }
            }
        }
        if (decoded) {
            i = semi;
        } else {
            out.push_back('&');
        }
    }
    return out;
}

std::string extract_main_text(std::string_view page) {
    TextSink all;
    TextSink main;
    int skip_depth = 0;
    int main_depth = 0;
    int pre_depth = 0;
    std::string skip_tag;
    std::size_t i = 0;
    while (i < page.size()) {
        if (page.compare(i, 4, "<!--") == 0) {
            const auto end = page.find("-->", i + 4);
            i = end == std::string_view::npos ? page.size() : end + 3;
            continue;
        }
        if (page[i] == '<') {
            if (page.compare(i, 2, "<!") == 0 || page.compare(i, 2, "<?") == 0) {
                const auto end = page.find('>', i);
                i = end == std::string_view::npos ? page.size() : end + 1;
                continue;
            }
            if (auto parsed = parse_tag(page, i)) {
                const auto& [tag, next] = *parsed;
                i = next;
                if (skip_depth > 0) {
                    if (tag.name == skip_tag) skip_depth += tag.closing ? -1 : (tag.self_closing ? 0 : 1);
                    continue;
                }
                if (!tag.closing && !tag.self_closing && is_skipped(tag.name)) {
                    skip_tag = tag.name;
                    skip_depth = 1;
                    // Raw-text elements: jump straight to the closing tag.
                    if (tag.name == "script" || tag.name == "style") {
                        const auto close = text::to_lower(page.substr(i)).find("</" + tag.name);
                        i = close == std::string::npos ? page.size() : i + close;
                    }
                    continue;
                }
                if (tag.name == "main" || tag.name == "article") {
                    if (tag.closing) {
                        if (main_depth > 0) --main_depth;
                    } else if (!tag.self_closing) {
                        ++main_depth;
                    }
                }
                if (tag.name == "pre") pre_depth = std::max(0, pre_depth + (tag.closing ? -1 : 1));
                if (is_block(tag.name) || (tag.name == "td" && !tag.closing)) {
                    all.line_break();
                    if (main_depth > 0 || (tag.closing && (tag.name == "main" || tag.name == "article"))) {
                        main.line_break();
                    }
                }
                continue;
            }
        }
        const auto next_tag = page.find('<', i + 1);
        const auto chunk = page.substr(i, next_tag == std::string_view::npos ? std::string_view::npos : next_tag - i);
        i = next_tag == std::string_view::npos ? page.size() : next_tag;
        if (skip_depth > 0) continue;
        const std::string decoded = decode_entities(chunk);
        all.text(decoded, pre_depth > 0);
        if (main_depth > 0) main.text(decoded, pre_depth > 0);
    }
    return main.empty() ? all.finish() : main.finish();
}

std::vector<std::string> extract_links(std::string_view page) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while ((i = page.find('<', i)) != std::string_view::npos) {
        auto parsed = parse_tag(page, i);
        if (!parsed) {
            ++i;
            continue;
        }
        const auto& [tag, next] = *parsed;
        if (!tag.closing && tag.name == "a") {
            if (auto href = attribute(tag.attrs, "href"); href && !href->empty()) out.push_back(*href);
        }
        i = next;
    }
    return out;
}

}  // namespace agentbug::html
