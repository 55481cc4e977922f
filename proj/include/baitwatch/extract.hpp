#pragma once

// Minimal article extraction from raw page markup.

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace baitwatch {

class ExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExtractedArticle {
  std::string headline;
  std::vector<std::string> paragraphs;
};

// Headline: og:title meta content, else <title>, else the first <h1>.
// Paragraphs: text of <p> elements with at least 5 tokens, in document order.
// Tags are stripped, entities decoded, whitespace collapsed; script and style
// content is ignored. Throws ExtractionError("extraction failed: ...") when
// no headline or no paragraph is found.
ExtractedArticle extract_article(std::string_view html);

// &amp; &lt; &gt; &quot; &apos; &nbsp; and numeric references, to UTF-8.
std::string decode_entities(std::string_view text);

}  // namespace baitwatch
