#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "stylo/corpus.hpp"

namespace stylo {

struct CleaningReport {
  std::size_t removed_boilerplate_spans = 0;
  std::size_t normalized_whitespace_runs = 0;
  std::size_t dropped_short_reviews = 0;

  CleaningReport& operator+=(const CleaningReport& o) {
    removed_boilerplate_spans += o.removed_boilerplate_spans;
    normalized_whitespace_runs += o.normalized_whitespace_runs;
    dropped_short_reviews += o.dropped_short_reviews;
    return *this;
  }
};

// Compiled boilerplate patterns. Immutable once built; clean() is safe to call
// from several threads.
class TextCleaner {
 public:
  // The bundled pattern set (URLs, order numbers, long digit runs).
  TextCleaner();
  explicit TextCleaner(const std::vector<std::string>& patterns);
  ~TextCleaner();
  TextCleaner(TextCleaner&&) noexcept;
  TextCleaner& operator=(TextCleaner&&) noexcept;

  // Pattern file: UTF-8, one pattern per line, '#' starts a comment line.
  static TextCleaner from_file(const std::filesystem::path& path);
  static TextCleaner from_stream(std::istream& in);
  // Resolution order: explicit path, then $STYLO_PATTERNS, then bundled set.
  static TextCleaner resolve(const std::filesystem::path& explicit_path = {});

  // NFKC, pattern removal, whitespace collapse and trim, repeated to a fixed
  // point so clean(clean(x)) == clean(x).
  std::string clean(std::string_view text, CleaningReport* report = nullptr) const;

  const std::vector<std::string>& patterns() const { return sources_; }

 private:
  struct Compiled;
  std::vector<std::string> sources_;
  std::unique_ptr<Compiled> compiled_;
};

const std::vector<std::string>& default_boilerplate_patterns();

// Collapses every run of Unicode white space to one ASCII space and trims.
std::string collapse_whitespace(std::string_view text, std::size_t* changed_runs = nullptr);

// Convenience wrapper using the bundled patterns.
std::string clean_text(std::string_view text);

inline constexpr std::size_t kDefaultMinChars = 11;

// Drops reviews shorter than min_chars code points; authors left empty vanish.
Corpus filter_short(const Corpus& corpus, std::size_t min_chars = kDefaultMinChars,
                    CleaningReport* report = nullptr);

Corpus clean_corpus(const Corpus& corpus, const TextCleaner& cleaner,
                    CleaningReport* report = nullptr);

// clean_corpus followed by filter_short.
Corpus preprocess(const Corpus& corpus, const TextCleaner& cleaner,
                  std::size_t min_chars = kDefaultMinChars,
                  CleaningReport* report = nullptr);

}  // namespace stylo
