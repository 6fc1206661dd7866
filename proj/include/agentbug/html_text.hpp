// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace agentbug::html {

/// Readable text of a page. Script, style, navigation, header, footer, and
/// aside content is dropped; when the page has <main> or <article> elements
/// only their text is kept. Block elements become line breaks and <pre>
/// keeps its whitespace.
std::string extract_main_text(std::string_view page);

/// href targets of <a> elements in document order, entity-decoded.
std::vector<std::string> extract_links(std::string_view page);

std::string decode_entities(std::string_view s);

}  // namespace agentbug::html
