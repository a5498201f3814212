#include "stylo/preprocess.hpp"

#include <unicode/regex.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include "stylo/error.hpp"
#include "stylo/unicode.hpp"

namespace stylo {

struct TextCleaner::Compiled {
  std::vector<std::unique_ptr<icu::RegexPattern>> patterns;
};

namespace {

std::unique_ptr<icu::RegexPattern> compile(const std::string& source) {
  UErrorCode status = U_ZERO_ERROR;
  UParseError perr;
  std::unique_ptr<icu::RegexPattern> p(icu::RegexPattern::compile(
      icu::UnicodeString::fromUTF8(source), 0, perr, status));
  if (U_FAILURE(status)) {
    throw std::invalid_argument("bad boilerplate pattern '" + source + "': " +
                                u_errorName(status));
  }
  return p;
}

std::string remove_matches(const icu::RegexPattern& pattern, const std::string& text,
                           std::size_t* removed) {
  const icu::UnicodeString input = icu::UnicodeString::fromUTF8(text);
  UErrorCode status = U_ZERO_ERROR;
  std::unique_ptr<icu::RegexMatcher> m(pattern.matcher(input, status));
  if (U_FAILURE(status)) throw std::runtime_error("regex matcher creation failed");
  icu::UnicodeString out;
  std::int32_t last = 0;
  std::size_t count = 0;
  while (m->find(status) && U_SUCCESS(status)) {
    const std::int32_t start = m->start(status);
    const std::int32_t end = m->end(status);
    if (end == start) continue;  // never delete empty matches
    out.append(input, last, start - last);
    last = end;
    ++count;
  }
  if (count == 0) return text;
  out.append(input, last, input.length() - last);
  if (removed) *removed += count;
  std::string result;
  out.toUTF8String(result);
  return result;
}

}  // namespace

const std::vector<std::string>& default_boilerplate_patterns() {
  static const std::vector<std::string> patterns = {
      R"([A-Za-z][A-Za-z0-9+.\-]*://\S+)",
      R"((?i)(?:注文番号|受注番号|order\s*no\.?)[\s:#\-]*\d{6,})",
      R"(\d{10,})",
  };
  return patterns;
}

TextCleaner::TextCleaner() : TextCleaner(default_boilerplate_patterns()) {}

TextCleaner::TextCleaner(const std::vector<std::string>& patterns)
    : sources_(patterns), compiled_(std::make_unique<Compiled>()) {
  for (const auto& p : sources_) compiled_->patterns.push_back(compile(p));
}

TextCleaner::~TextCleaner() = default;
TextCleaner::TextCleaner(TextCleaner&&) noexcept = default;
TextCleaner& TextCleaner::operator=(TextCleaner&&) noexcept = default;

TextCleaner TextCleaner::from_stream(std::istream& in) {
  std::vector<std::string> patterns;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    patterns.push_back(line);
  }
  return TextCleaner(patterns);
}

TextCleaner TextCleaner::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open pattern file " + path.string());
  return from_stream(in);
}

TextCleaner TextCleaner::resolve(const std::filesystem::path& explicit_path) {
  if (!explicit_path.empty()) return from_file(explicit_path);
  if (const char* env = std::getenv("STYLO_PATTERNS"); env && *env) return from_file(env);
  return TextCleaner();
}

std::string collapse_whitespace(std::string_view text, std::size_t* changed_runs) {
  const auto* s = reinterpret_cast<const std::uint8_t*>(text.data());
  const auto n = static_cast<std::int32_t>(text.size());
  std::string out;
  out.reserve(text.size());
  std::int32_t i = 0;
  std::size_t changed = 0;
  while (i < n) {
    const std::int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, n, c);
    if (c < 0 || !unicode::is_white_space(static_cast<char32_t>(c))) {
      out.append(text.substr(start, i - start));
      continue;
    }
    std::int32_t end = i;
    while (end < n) {
      std::int32_t probe = end;
      UChar32 d;
      U8_NEXT(s, probe, n, d);
      if (d < 0 || !unicode::is_white_space(static_cast<char32_t>(d))) break;
      end = probe;
    }
    const std::string_view run = text.substr(start, end - start);
    const bool edge = start == 0 || end == n;
    if (!edge) out += ' ';
    if (edge || run != " ") ++changed;
    i = end;
  }
  if (changed_runs) *changed_runs += changed;
  return out;
}

std::string TextCleaner::clean(std::string_view text, CleaningReport* report) const {
  CleaningReport local;
  std::string cur = unicode::nfkc(text);
  for (int pass = 0; pass < 16; ++pass) {
    std::string next = cur;
    for (const auto& p : compiled_->patterns) {
      next = remove_matches(*p, next, &local.removed_boilerplate_spans);
    }
    next = unicode::nfkc(collapse_whitespace(next, &local.normalized_whitespace_runs));
    if (next == cur) break;
    cur = std::move(next);
  }
  if (report) *report += local;
  return cur;
}

std::string clean_text(std::string_view text) {
  static const TextCleaner cleaner;
  return cleaner.clean(text);
}

Corpus filter_short(const Corpus& corpus, std::size_t min_chars, CleaningReport* report) {
  std::vector<Review> kept;
  kept.reserve(corpus.size());
  std::size_t dropped = 0;
  for (const Review& r : corpus.reviews()) {
    if (unicode::length(r.text) >= min_chars) {
      kept.push_back(r);
    } else {
      ++dropped;
    }
  }
  if (report) report->dropped_short_reviews += dropped;
  return Corpus(std::move(kept));
}

Corpus clean_corpus(const Corpus& corpus, const TextCleaner& cleaner, CleaningReport* report) {
  std::vector<Review> out = corpus.reviews();
  for (Review& r : out) r.text = cleaner.clean(r.text, report);
  return Corpus(std::move(out));
}

Corpus preprocess(const Corpus& corpus, const TextCleaner& cleaner, std::size_t min_chars,
                  CleaningReport* report) {
  return filter_short(clean_corpus(corpus, cleaner, report), min_chars, report);
}

}  // namespace stylo
