#include "baitwatch/extract.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>

#include "baitwatch/textcorpus.hpp"

namespace baitwatch {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp == 0 || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) cp = 0xfffd;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto c = static_cast<unsigned char>(s[i]);
    // U+00A0 counts as a space, otherwise it glues words into one token
    const bool nbsp = c == 0xc2 && i + 1 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0xa0;
    if (nbsp) ++i;
    if (nbsp || std::isspace(c)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(c));
    }
  }
  return out;
}

struct Tag {
  std::string name;  // lowercase, without '/'
  bool closing = false;
  std::map<std::string, std::string> attrs;  // lowercase keys, raw values
};

// Parses the tag starting at html[pos] == '<'. Returns the position after '>'.
std::size_t parse_tag(std::string_view html, std::size_t pos, Tag& tag) {
  std::size_t i = pos + 1;
  const auto n = html.size();
  if (i < n && html[i] == '/') {
    tag.closing = true;
    ++i;
  }
  const auto name_start = i;
  while (i < n && !std::isspace(static_cast<unsigned char>(html[i])) && html[i] != '>' && html[i] != '/') ++i;
  tag.name = lower(html.substr(name_start, i - name_start));
  while (i < n && html[i] != '>') {
    if (std::isspace(static_cast<unsigned char>(html[i])) || html[i] == '/') {
      ++i;
      continue;
    }
    const auto key_start = i;
    while (i < n && html[i] != '=' && html[i] != '>' && !std::isspace(static_cast<unsigned char>(html[i]))) ++i;
    auto key = lower(html.substr(key_start, i - key_start));
    while (i < n && std::isspace(static_cast<unsigned char>(html[i]))) ++i;
    std::string value;
    if (i < n && html[i] == '=') {
      ++i;
      while (i < n && std::isspace(static_cast<unsigned char>(html[i]))) ++i;
      if (i < n && (html[i] == '"' || html[i] == '\'')) {
        const char q = html[i++];
        const auto v_start = i;
        while (i < n && html[i] != q) ++i;
        value = std::string(html.substr(v_start, i - v_start));
        if (i < n) ++i;
      } else {
        const auto v_start = i;
        while (i < n && html[i] != '>' && !std::isspace(static_cast<unsigned char>(html[i]))) ++i;
        value = std::string(html.substr(v_start, i - v_start));
      }
    }
    if (!key.empty()) tag.attrs.emplace(std::move(key), std::move(value));
  }
  return i < n ? i + 1 : n;
}

// Position just past the closing tag of a raw-text element, or the end.
std::size_t skip_raw_text(std::string_view html, std::size_t pos, const std::string& name) {
  const auto haystack = lower(html.substr(pos));
  const auto at = haystack.find("</" + name);
  if (at == std::string::npos) return html.size();
  const auto close = html.find('>', pos + at);
  return close == std::string_view::npos ? html.size() : close + 1;
}

}  // namespace

std::string decode_entities(std::string_view text) {
  static const std::map<std::string, std::uint32_t, std::less<>> named = {
      {"amp", '&'}, {"lt", '<'}, {"gt", '>'}, {"quot", '"'}, {"apos", '\''}, {"nbsp", 0xa0}};
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '&') {
      out.push_back(text[i]);
      continue;
    }
    const auto semi = text.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 40) {
      out.push_back('&');
      continue;
    }
    const auto body = text.substr(i + 1, semi - i - 1);
    std::optional<std::uint32_t> cp;
    if (body.size() > 1 && body[0] == '#') {
      const bool hex = body[1] == 'x' || body[1] == 'X';
      const auto digits = body.substr(hex ? 2 : 1);
      if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [&](unsigned char c) {
            return hex ? std::isxdigit(c) != 0 : std::isdigit(c) != 0;
          })) {
        // saturate; anything past U+10FFFF becomes the replacement character
        std::uint32_t v = 0;
        for (unsigned char c : digits) {
          const std::uint32_t d = std::isdigit(c) ? c - '0' : (std::tolower(c) - 'a' + 10);
          v = std::min<std::uint32_t>(v * (hex ? 16 : 10) + d, 0x110000);
        }
        cp = v;
      }
    } else if (auto it = named.find(lower(body)); it != named.end()) {
      cp = it->second;
    }
    if (!cp) {
      out.push_back('&');
      continue;
    }
    append_utf8(out, *cp);
    i = semi;
  }
  return out;
}

ExtractedArticle extract_article(std::string_view html) {
  std::optional<std::string> og_title;
  std::optional<std::string> title;
  std::optional<std::string> h1;
  std::vector<std::string> paragraphs;

  // Text collected for the innermost open capture (title, h1 or p).
  std::string capture_name;
  std::string buffer;
  auto finish_capture = [&] {
    auto text = collapse_whitespace(decode_entities(buffer));
    if (capture_name == "title" && !title) title = text;
    if (capture_name == "h1" && !h1) h1 = text;
    if (capture_name == "p" && tokenize(text).size() >= 5) paragraphs.push_back(text);
    capture_name.clear();
    buffer.clear();
  };

  std::size_t i = 0;
  while (i < html.size()) {
    if (html[i] != '<') {
      const auto next = html.find('<', i);
      const auto end = next == std::string_view::npos ? html.size() : next;
      if (!capture_name.empty()) buffer.append(html.substr(i, end - i));
      i = end;
      continue;
    }
    if (html.substr(i, 4) == "<!--") {
      const auto end = html.find("-->", i + 4);
      i = end == std::string_view::npos ? html.size() : end + 3;
      continue;
    }
    if (i + 1 < html.size() && (html[i + 1] == '!' || html[i + 1] == '?')) {
      const auto end = html.find('>', i);
      i = end == std::string_view::npos ? html.size() : end + 1;
      continue;
    }
    if (i + 1 >= html.size() ||
        !(std::isalpha(static_cast<unsigned char>(html[i + 1])) || html[i + 1] == '/')) {
      if (!capture_name.empty()) buffer.push_back('<');
      ++i;
      continue;
    }
    Tag tag;
    i = parse_tag(html, i, tag);
    if (!tag.closing && (tag.name == "script" || tag.name == "style")) {
      i = skip_raw_text(html, i, tag.name);
      continue;
    }
    if (tag.name == "meta" && !og_title) {
      auto prop = tag.attrs.find("property");
      if (prop == tag.attrs.end()) prop = tag.attrs.find("name");
      auto content = tag.attrs.find("content");
      if (prop != tag.attrs.end() && lower(prop->second) == "og:title" && content != tag.attrs.end()) {
        auto text = collapse_whitespace(decode_entities(content->second));
        if (!text.empty()) og_title = text;
      }
      continue;
    }
    const bool capturable = tag.name == "title" || tag.name == "h1" || tag.name == "p";
    if (!tag.closing && capturable) {
      if (!capture_name.empty()) finish_capture();  // unclosed element
      capture_name = tag.name;
      continue;
    }
    if (tag.closing && tag.name == capture_name) {
      finish_capture();
      continue;
    }
    // Block boundaries end an unclosed paragraph. Inline tags vanish.
    static const std::vector<std::string> blocks = {"div", "section", "article", "body", "html", "li", "ul", "ol",
                                                    "table", "h2", "h3", "h4", "h5", "h6", "header", "footer"};
    if (capture_name == "p" && std::find(blocks.begin(), blocks.end(), tag.name) != blocks.end()) {
      finish_capture();
    } else if (!capture_name.empty() && tag.name == "br") {
      buffer.push_back(' ');
    }
  }
  if (!capture_name.empty()) finish_capture();

  ExtractedArticle out;
  if (og_title) {
    out.headline = *og_title;
  } else if (title && !title->empty()) {
    out.headline = *title;
  } else if (h1 && !h1->empty()) {
    out.headline = *h1;
  }
  if (out.headline.empty()) throw ExtractionError("extraction failed: no headline found");
  if (paragraphs.empty()) throw ExtractionError("extraction failed: no paragraph with at least 5 tokens");
  out.paragraphs = std::move(paragraphs);
  return out;
}

}  // namespace baitwatch
