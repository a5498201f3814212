#include "stylo/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "stylo/error.hpp"
#include "stylo/random.hpp"
#include "stylo/unicode.hpp"

namespace stylo {

namespace {

constexpr std::string_view kCorpusMagic = "STYLO-CORPUS";
constexpr int kCorpusVersion = 1;

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Per-author stream so adding or removing other authors leaves a given
// author's sample untouched.
Rng author_rng(std::uint64_t seed, const std::string& author_id) {
  return Rng(mix_seed(seed, fnv1a64(author_id)));
}

// k positions drawn without replacement, returned in ascending order.
std::vector<std::size_t> draw_sorted(const std::vector<std::size_t>& positions,
                                     std::size_t k, Rng& rng) {
  if (k >= positions.size()) return positions;
  std::vector<std::size_t> pool = positions;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

Corpus keep_positions(const Corpus& corpus, std::vector<std::size_t> keep) {
  std::sort(keep.begin(), keep.end());
  return corpus.subset(keep);
}

}  // namespace

Corpus::Corpus(std::vector<Review> reviews) : reviews_(std::move(reviews)) {
  for (std::size_t i = 0; i < reviews_.size(); ++i) {
    if (reviews_[i].author_id.empty()) throw std::invalid_argument("review with empty author_id");
    index_[reviews_[i].author_id].push_back(i);
  }
}

std::vector<std::string> Corpus::authors() const {
  std::vector<std::string> out;
  out.reserve(index_.size());
  for (const auto& [author, _] : index_) out.push_back(author);
  return out;
}

std::vector<int> Corpus::labels() const {
  std::vector<int> out(reviews_.size());
  int cls = 0;
  for (const auto& [_, positions] : index_) {
    for (std::size_t p : positions) out[p] = cls;
    ++cls;
  }
  return out;
}

Corpus Corpus::subset(std::span<const std::size_t> positions) const {
  std::vector<Review> out;
  out.reserve(positions.size());
  for (std::size_t p : positions) out.push_back(reviews_.at(p));
  return Corpus(std::move(out));
}

std::uint64_t Corpus::digest() const {
  std::ostringstream os;
  write_corpus(*this, os);
  return fnv1a64(os.str());
}

std::string Corpus::digest_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest()));
  return buf;
}

std::string escape_field(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_field(std::string_view escaped) {
  std::string out;
  out.reserve(escaped.size());
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    const char c = escaped[i];
    if (c != '\\' || i + 1 == escaped.size()) {
      out += c;
      continue;
    }
    const char n = escaped[i + 1];
    switch (n) {
      case '\\': out += '\\'; ++i; break;
      case 't': out += '\t'; ++i; break;
      case 'n': out += '\n'; ++i; break;
      case 'r': out += '\r'; ++i; break;
      default: out += c;
    }
  }
  return out;
}

TsvResult parse_tsv(std::istream& in, const TsvOptions& options) {
  TsvResult result;
  std::vector<Review> reviews;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (line_no == 1 && fields[0] == "author_id") continue;  // header row
    if (fields.size() < 2 || fields[0].empty() || fields[1].empty()) {
      ++result.skipped;
      continue;
    }
    Review r;
    r.author_id = std::string(fields[0]);
    r.text = unescape_field(fields[1]);
    if (fields.size() > 2 && !fields[2].empty()) {
      r.rating = parse_int(fields[2]);
      if (!r.rating || *r.rating < 1 || *r.rating > 5) {
        ++result.skipped;
        continue;
      }
    }
    if (fields.size() > 3 && !fields[3].empty()) r.date = std::string(fields[3]);
    if (fields.size() > 4 && !fields[4].empty()) {
      r.review_id = std::string(fields[4]);
    } else {
      r.review_id = std::to_string(line_no);
    }
    if (options.date_prefix) {
      if (!r.date || !r.date->starts_with(*options.date_prefix)) {
        ++result.filtered_out;
        continue;
      }
    }
    reviews.push_back(std::move(r));
  }
  result.corpus = Corpus(std::move(reviews));
  return result;
}

TsvResult parse_tsv(const std::filesystem::path& path, const TsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_tsv(in, options);
}

void write_tsv(const Corpus& corpus, std::ostream& out) {
  for (const Review& r : corpus.reviews()) {
    out << r.author_id << '\t' << escape_field(r.text) << '\t';
    if (r.rating) out << *r.rating;
    out << '\t' << r.date.value_or("") << '\t' << r.review_id << '\n';
  }
}

Corpus select_top_authors(const Corpus& corpus, std::size_t num_authors) {
  const auto& index = corpus.author_index();
  if (index.size() < num_authors) {
    throw DataError("select_top_authors: requested " + std::to_string(num_authors) +
                    " authors but only " + std::to_string(index.size()) + " available");
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  ranked.reserve(index.size());
  for (const auto& [author, positions] : index) ranked.emplace_back(author, positions.size());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < num_authors; ++i) {
    const auto& positions = index.at(ranked[i].first);
    keep.insert(keep.end(), positions.begin(), positions.end());
  }
  return keep_positions(corpus, std::move(keep));
}

Corpus sample_per_author(const Corpus& corpus, std::size_t k, std::uint64_t seed,
                         bool allow_fewer) {
  std::vector<std::size_t> keep;
  for (const auto& [author, positions] : corpus.author_index()) {
    if (positions.size() < k && !allow_fewer) {
      throw DataError("sample_per_author: author '" + author + "' has " +
                      std::to_string(positions.size()) + " reviews, fewer than k=" +
                      std::to_string(k));
    }
    Rng rng = author_rng(seed, author);
    const auto drawn = draw_sorted(positions, k, rng);
    keep.insert(keep.end(), drawn.begin(), drawn.end());
  }
  return keep_positions(corpus, std::move(keep));
}

Corpus cap_per_author(const Corpus& corpus, std::size_t k_max, std::uint64_t seed) {
  if (k_max < 1) throw std::invalid_argument("cap_per_author: K_max must be >= 1");
  return sample_per_author(corpus, k_max, seed, /*allow_fewer=*/true);
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

CorpusStats compute_stats(const Corpus& corpus) {
  if (corpus.empty()) throw DataError("compute_stats: empty corpus");
  CorpusStats s;
  s.num_authors = corpus.num_authors();
  s.total_reviews = corpus.size();

  std::vector<double> posts;
  for (const auto& [_, positions] : corpus.author_index()) {
    posts.push_back(static_cast<double>(positions.size()));
  }
  std::sort(posts.begin(), posts.end());
  s.posts_per_author_min = static_cast<std::size_t>(posts.front());
  s.posts_per_author_max = static_cast<std::size_t>(posts.back());
  s.posts_per_author_median = quantile_sorted(posts, 0.5);
  s.posts_per_author_mean = std::accumulate(posts.begin(), posts.end(), 0.0) /
                            static_cast<double>(posts.size());
  if (posts.size() > 1) {
    double ss = 0;
    for (double p : posts) ss += (p - s.posts_per_author_mean) * (p - s.posts_per_author_mean);
    s.posts_per_author_sd = std::sqrt(ss / static_cast<double>(posts.size() - 1));
  }

  std::vector<double> chars;
  chars.reserve(corpus.size());
  for (const Review& r : corpus.reviews()) {
    chars.push_back(static_cast<double>(unicode::length(r.text)));
  }
  std::sort(chars.begin(), chars.end());
  s.chars_per_review_median = quantile_sorted(chars, 0.5);
  s.chars_per_review_mean = std::accumulate(chars.begin(), chars.end(), 0.0) /
                            static_cast<double>(chars.size());
  s.chars_per_review_p95 = quantile_sorted(chars, 0.95);
  return s;
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  out << kCorpusMagic << '\t' << kCorpusVersion << '\t' << corpus.size() << '\n';
  for (const Review& r : corpus.reviews()) {
    out << escape_field(r.review_id) << '\t' << escape_field(r.author_id) << '\t'
        << escape_field(r.text) << '\t';
    if (r.rating) out << *r.rating;
    out << '\t' << escape_field(r.date.value_or("")) << '\n';
  }
}

Corpus read_corpus(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("corpus file: missing header");
  const auto header = split_tabs(line);
  if (header.size() != 3 || header[0] != kCorpusMagic) {
    throw DataError("corpus file: bad magic");
  }
  if (parse_int(header[1]) != kCorpusVersion) {
    throw DataError("corpus file: unsupported version " + std::string(header[1]));
  }
  std::size_t expected = 0;
  std::from_chars(header[2].data(), header[2].data() + header[2].size(), expected);
  std::vector<Review> reviews;
  reviews.reserve(expected);
  while (std::getline(in, line)) {
    const auto f = split_tabs(line);
    if (f.size() != 5) throw DataError("corpus file: bad record at row " +
                                       std::to_string(reviews.size() + 1));
    Review r;
    r.review_id = unescape_field(f[0]);
    r.author_id = unescape_field(f[1]);
    r.text = unescape_field(f[2]);
    if (!f[3].empty()) r.rating = parse_int(f[3]);
    if (!f[4].empty()) r.date = unescape_field(f[4]);
    reviews.push_back(std::move(r));
  }
  if (reviews.size() != expected) throw DataError("corpus file: truncated");
  return Corpus(std::move(reviews));
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_corpus(corpus, out);
  if (!out) throw DataError("write failed: " + path.string());
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string first(kCorpusMagic.size(), '\0');
  in.read(first.data(), static_cast<std::streamsize>(first.size()));
  in.clear();
  in.seekg(0);
  if (first == kCorpusMagic) return read_corpus(in);
  return parse_tsv(in).corpus;
}

}  // namespace stylo
