#include "stylo/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "stylo/random.hpp"
#include "stylo/unicode.hpp"

namespace stylo {

namespace {

constexpr std::size_t kCharsPerAuthor = 4;

// Private marker alphabet: Hangul syllables then CJK extension A. Neither
// block is used by the shared text.
constexpr char32_t kHangulFirst = 0xAC00, kHangulLast = 0xD7A3;
constexpr char32_t kExtAFirst = 0x3400, kExtALast = 0x4DBF;
constexpr std::size_t kHangulSize = kHangulLast - kHangulFirst + 1;
constexpr std::size_t kExtASize = kExtALast - kExtAFirst + 1;

char32_t marker_code_point(std::size_t slot) {
  if (slot < kHangulSize) return kHangulFirst + static_cast<char32_t>(slot);
  return kExtAFirst + static_cast<char32_t>(slot - kHangulSize);
}

constexpr std::size_t kEndingPool = 48;
constexpr std::size_t kPreferredEndings = 3;
constexpr double kZ95 = 1.6448536269514722;

// Shared text draws from hiragana, katakana and a slice of common kanji.
char32_t hiragana(Rng& rng) { return 0x3041 + static_cast<char32_t>(rng.below(83)); }
char32_t katakana(Rng& rng) { return 0x30A1 + static_cast<char32_t>(rng.below(86)); }
char32_t kanji(Rng& rng) { return 0x4E00 + static_cast<char32_t>(rng.below(1024)); }

struct SharedText {
  std::vector<std::string> topic_words;
  std::vector<std::string> endings;
};

SharedText build_shared(const SyntheticSpec& spec) {
  Rng rng(mix_seed(spec.seed, 0));
  SharedText s;
  for (std::size_t i = 0; i < spec.shared_topic_vocab_size; ++i) {
    std::string w;
    const std::size_t len = 2 + rng.below(3);
    for (std::size_t c = 0; c < len; ++c) {
      unicode::append(w, rng.bernoulli(0.5) ? kanji(rng) : hiragana(rng));
    }
    s.topic_words.push_back(std::move(w));
  }
  static constexpr char32_t kPunct[] = {U'。', U'!', U'♪', U'…', U'w', U'?'};
  for (std::size_t i = 0; i < kEndingPool; ++i) {
    std::string e;
    unicode::append(e, katakana(rng));
    unicode::append(e, katakana(rng));
    unicode::append(e, kPunct[rng.below(std::size(kPunct))]);
    s.endings.push_back(std::move(e));
  }
  return s;
}

std::string truncate_code_points(const std::string& s, std::size_t n) {
  const auto cuts = unicode::boundaries(s);
  if (cuts.size() - 1 <= n) return s;
  return s.substr(0, cuts[n]);
}

}  // namespace

void SyntheticSpec::validate() const {
  if (U < 1 || k < 1) throw std::invalid_argument("SyntheticSpec: U and k must be >= 1");
  if (U > synthetic_max_authors()) {
    throw std::invalid_argument("SyntheticSpec: U exceeds " +
                                std::to_string(synthetic_max_authors()) + " authors");
  }
  if (!(signature_strength >= 0 && signature_strength <= 1)) {
    throw std::invalid_argument("SyntheticSpec: signature_strength must be in [0,1]");
  }
  if (!(boilerplate_rate >= 0 && boilerplate_rate <= 1)) {
    throw std::invalid_argument("SyntheticSpec: boilerplate_rate must be in [0,1]");
  }
  if (!(length_median >= 1 && length_median <= length_p95)) {
    throw std::invalid_argument("SyntheticSpec: need 1 <= median <= p95");
  }
  if (shared_topic_vocab_size < 1) {
    throw std::invalid_argument("SyntheticSpec: shared_topic_vocab_size must be >= 1");
  }
}

std::size_t synthetic_max_authors() { return (kHangulSize + kExtASize) / kCharsPerAuthor; }

std::vector<std::string> synthetic_markers(std::size_t author) {
  char32_t c[kCharsPerAuthor];
  for (std::size_t i = 0; i < kCharsPerAuthor; ++i) {
    c[i] = marker_code_point(author * kCharsPerAuthor + i);
  }
  std::string a, b;
  for (char32_t cp : {c[0], c[1], c[2]}) unicode::append(a, cp);
  for (char32_t cp : {c[3], c[2], c[1]}) unicode::append(b, cp);
  return {a, b};
}

std::string synthetic_author_id(std::size_t author) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "author%05zu", author);
  return buf;
}

const std::vector<std::string>& synthetic_boilerplate() {
  static const std::vector<std::string> sentences = {
      "迅速な対応ありがとうございました。", "梱包も丁寧でした。",
      "また利用したいと思います。",         "商品が無事に届きました。",
      "注文から発送までスムーズでした。",   "ショップの対応も良かったです。",
  };
  return sentences;
}

Corpus generate(const SyntheticSpec& spec) {
  spec.validate();
  const SharedText shared = build_shared(spec);
  const auto& boilerplate = synthetic_boilerplate();
  const double mu = std::log(spec.length_median);
  const double sigma = (std::log(spec.length_p95) - mu) / kZ95;
  const double s = spec.signature_strength;

  std::vector<Review> reviews;
  reviews.reserve(spec.U * spec.k);
  for (std::size_t a = 0; a < spec.U; ++a) {
    Rng rng(mix_seed(spec.seed, a + 1));
    const auto markers = synthetic_markers(a);
    std::vector<std::size_t> preferred;
    while (preferred.size() < kPreferredEndings) {
      const std::size_t e = rng.below(kEndingPool);
      if (std::find(preferred.begin(), preferred.end(), e) == preferred.end()) {
        preferred.push_back(e);
      }
    }

    for (std::size_t r = 0; r < spec.k; ++r) {
      const double raw = std::exp(mu + sigma * rng.normal());
      const auto target = static_cast<std::size_t>(std::max(11.0, std::round(raw)));
      const bool with_marker = rng.bernoulli(s);
      const bool with_boilerplate = rng.bernoulli(spec.boilerplate_rate);
      const std::string& marker = markers[rng.below(markers.size())];
      const std::string& boiler = boilerplate[rng.below(boilerplate.size())];

      std::size_t reserved = 0;
      if (with_marker) reserved += unicode::length(marker);
      if (with_boilerplate) reserved += unicode::length(boiler);
      const std::size_t body_len = target > reserved ? target - reserved : 0;

      std::string body;
      std::size_t len = 0;
      while (len < body_len) {
        const std::size_t words = 2 + rng.below(4);
        for (std::size_t w = 0; w < words; ++w) {
          body += shared.topic_words[rng.below(shared.topic_words.size())];
        }
        const std::size_t ending = rng.bernoulli(s) ? preferred[rng.below(preferred.size())]
                                                    : rng.below(kEndingPool);
        body += shared.endings[ending];
        len = unicode::length(body);
      }
      body = truncate_code_points(body, body_len);

      if (with_marker) {
        const auto cuts = unicode::boundaries(body);
        const std::size_t at = cuts[rng.below(cuts.size())];
        body.insert(at, marker);
      }
      if (with_boilerplate) {
        body = rng.bernoulli(0.5) ? boiler + body : body + boiler;
      }

      Review rev;
      rev.review_id = std::to_string(reviews.size() + 1);
      rev.author_id = synthetic_author_id(a);
      rev.text = std::move(body);
      rev.rating = static_cast<int>(1 + rng.below(5));
      char date[16];
      std::snprintf(date, sizeof(date), "2019-%02d-%02d", static_cast<int>(1 + rng.below(12)),
                    static_cast<int>(1 + rng.below(28)));
      rev.date = date;
      reviews.push_back(std::move(rev));
    }
  }
  return Corpus(std::move(reviews));
}

}  // namespace stylo
