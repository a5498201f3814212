#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stylo {

struct Review {
  std::string review_id;
  std::string author_id;
  std::string text;
  std::optional<int> rating;
  std::optional<std::string> date;

  bool operator==(const Review&) const = default;
};

// Ordered, immutable collection of reviews with a per-author index.
// Class labels are positions in the lexicographically sorted author list.
class Corpus {
 public:
  using AuthorIndex = std::map<std::string, std::vector<std::size_t>>;

  Corpus() = default;
  explicit Corpus(std::vector<Review> reviews);

  const std::vector<Review>& reviews() const { return reviews_; }
  const Review& operator[](std::size_t i) const { return reviews_[i]; }
  const AuthorIndex& author_index() const { return index_; }

  std::size_t size() const { return reviews_.size(); }
  bool empty() const { return reviews_.empty(); }
  std::size_t num_authors() const { return index_.size(); }

  std::vector<std::string> authors() const;
  // Class index of every review, aligned with reviews().
  std::vector<int> labels() const;

  // Reviews at the given positions, in the order given.
  Corpus subset(std::span<const std::size_t> positions) const;

  // Content digest over the canonical serialization.
  std::uint64_t digest() const;
  std::string digest_hex() const;

  bool operator==(const Corpus& other) const { return reviews_ == other.reviews_; }

 private:
  std::vector<Review> reviews_;
  AuthorIndex index_;
};

struct CorpusStats {
  std::size_t num_authors = 0;    // U
  std::size_t total_reviews = 0;  // N
  std::size_t posts_per_author_min = 0;
  double posts_per_author_median = 0;
  std::size_t posts_per_author_max = 0;
  double posts_per_author_mean = 0;
  double posts_per_author_sd = 0;  // sample SD (n - 1)
  double chars_per_review_median = 0;
  double chars_per_review_mean = 0;
  double chars_per_review_p95 = 0;
};

struct TsvOptions {
  // Keep only records whose date starts with this prefix (e.g. "2019").
  std::optional<std::string> date_prefix;
};

struct TsvResult {
  Corpus corpus;
  std::size_t skipped = 0;        // malformed records
  std::size_t filtered_out = 0;   // well-formed records rejected by date_prefix
};

// Columns: author_id, text, [rating], [date], [review_id]. The review id
// defaults to the 1-based line number. Text escapes \t \n \r \\ are decoded.
TsvResult parse_tsv(const std::filesystem::path& path, const TsvOptions& options = {});
TsvResult parse_tsv(std::istream& in, const TsvOptions& options = {});

// Writes the same layout parse_tsv reads, review_id in column 5.
void write_tsv(const Corpus& corpus, std::ostream& out);

Corpus select_top_authors(const Corpus& corpus, std::size_t num_authors);
Corpus sample_per_author(const Corpus& corpus, std::size_t k, std::uint64_t seed,
                         bool allow_fewer = false);
Corpus cap_per_author(const Corpus& corpus, std::size_t k_max, std::uint64_t seed);

CorpusStats compute_stats(const Corpus& corpus);

// Versioned, deterministic serialization.
void write_corpus(const Corpus& corpus, std::ostream& out);
Corpus read_corpus(std::istream& in);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
// Accepts either a serialized corpus or a raw TSV file.
Corpus load_corpus(const std::filesystem::path& path);

std::string escape_field(std::string_view raw);
std::string unescape_field(std::string_view escaped);

// Linear-interpolation quantile of a sorted sample, q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace stylo
