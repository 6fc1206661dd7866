// SPDX-License-Identifier: Apache-2.0
#include "agentbug/page_source.hpp"

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "agentbug/html_text.hpp"
#include "agentbug/text_util.hpp"

namespace agentbug {

namespace {

struct UrlParts {
    std::string origin;  // scheme://host[:port]
    std::string host;    // host[:port]
    std::string target;  // /path?query
};

UrlParts split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("not an absolute URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    UrlParts parts;
    parts.origin = url.substr(0, path_start);
    parts.host = url.substr(scheme_end + 3, path_start == std::string::npos ? std::string::npos : path_start - scheme_end - 3);
    parts.target = path_start == std::string::npos ? "/" : url.substr(path_start);
    return parts;
}

std::string strip_scheme(const std::string& url) {
    const auto p = url.find("://");
    return p == std::string::npos ? url : url.substr(p + 3);
}

std::optional<std::string> query_param(const std::string& url, const std::string& name) {
    const auto q = url.find('?');
    if (q == std::string::npos) return std::nullopt;
    std::istringstream params(url.substr(q + 1));
    std::string kv;
    while (std::getline(params, kv, '&')) {
        const auto eq = kv.find('=');
        if (eq != std::string::npos && kv.substr(0, eq) == name) return url_decode(kv.substr(eq + 1));
    }
    return std::nullopt;
}

}  // namespace

std::string url_encode(const std::string& s) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(kHex[c >> 4]);
            out.push_back(kHex[c & 0xF]);
        }
    }
    return out;
}

std::string url_decode(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '+') {
            out.push_back(' ');
        } else if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
                   std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
            out.push_back(static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16)));
            i += 2;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

std::vector<std::string> result_links(const std::string& results_page, const std::string& site,
                                      const std::string& page_url) {
    const std::string origin = split_url(page_url).origin;
    const std::string scheme = page_url.substr(0, page_url.find("://"));
    const std::string wanted = strip_scheme(site);
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (std::string link : html::extract_links(results_page)) {
        if (link.rfind("//", 0) == 0) {
            link = scheme + ":" + link;
        } else if (link.rfind("/", 0) == 0) {
            link = origin + link;
        }
        for (const char* wrapper : {"uddg", "url"}) {
            if (auto inner = query_param(link, wrapper); inner && inner->find("://") != std::string::npos) {
                link = *inner;
                break;
            }
        }
        if (link.find("://") == std::string::npos) continue;
        if (strip_scheme(link).rfind(wanted, 0) != 0) continue;
        if (auto hash = link.find('#'); hash != std::string::npos) link.erase(hash);
        if (seen.insert(link).second) out.push_back(link);
    }
    return out;
}

std::string fixture_file_name(const std::string& normalized_query) {
    return text::sha256_hex(normalized_query) + ".html";
}

FixtureSource::FixtureSource(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::vector<SearchHit> FixtureSource::search(const std::string& tool, const ToolTarget& /*target*/,
                                             const std::string& normalized_query, std::size_t top_k) {
    ++fetches_;
    if (top_k == 0) return {};
    const auto path = dir_ / tool / fixture_file_name(normalized_query);
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = html::extract_main_text(buf.str());
    if (text::trim(text).empty()) return {};
    return {SearchHit{"fixture://" + tool + "/" + path.filename().string(), std::move(text)}};
}

HostRateLimiter::HostRateLimiter(std::chrono::milliseconds min_spacing) : spacing_(min_spacing) {}

void HostRateLimiter::acquire(const std::string& host) {
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard lock(mu_);
        const auto now = std::chrono::steady_clock::now();
        auto& next = next_slot_[host];
        slot = std::max(now, next);
        next = slot + spacing_;
    }
    std::this_thread::sleep_until(slot);
}

HttpSource::HttpSource(HostRateLimiter& limiter, std::chrono::seconds timeout) : limiter_(limiter), timeout_(timeout) {}

std::string HttpSource::get(const std::string& url) {
    const auto parts = split_url(url);
    limiter_.acquire(parts.host);
    ++fetches_;
    httplib::Client client(parts.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_follow_location(true);
    client.set_default_headers({{"User-Agent", "agentbug/1.0 (documentation lookup)"}});
    auto res = client.Get(parts.target);
    if (!res) {
        if (res.error() == httplib::Error::Read || res.error() == httplib::Error::Connection ||
            res.error() == httplib::Error::ConnectionTimeout) {
            throw FetchTimeout(url + ": " + httplib::to_string(res.error()));
        }
        throw std::runtime_error(url + ": " + httplib::to_string(res.error()));
    }
    if (res->status != 200) throw std::runtime_error(url + ": HTTP " + std::to_string(res->status));
    return res->body;
}

std::vector<SearchHit> HttpSource::search(const std::string& /*tool*/, const ToolTarget& target,
                                          const std::string& normalized_query, std::size_t top_k) {
    std::string search_url = target.search_url;
    const std::string encoded = url_encode("site:" + strip_scheme(target.site) + " " + normalized_query);
    if (auto pos = search_url.find("{query}"); pos != std::string::npos) {
        search_url.replace(pos, 7, encoded);
    } else {
        search_url += encoded;
    }
    std::string results;
    try {
        results = get(search_url);
    } catch (const FetchTimeout&) {
        throw;
    } catch (const std::exception&) {
        return {};
    }
    std::vector<SearchHit> hits;
    for (const auto& link : result_links(results, target.site, search_url)) {
        if (hits.size() >= top_k) break;
        try {
            auto text = html::extract_main_text(get(link));
            if (!text::trim(text).empty()) hits.push_back({link, std::move(text)});
        } catch (const std::exception&) {
            // Unreachable or slow hit pages are skipped; the rest still count.
        }
    }
    return hits;
}

}  // namespace agentbug
