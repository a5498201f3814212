#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stylo/corpus.hpp"
#include "stylo/sparse.hpp"

namespace stylo {

struct TfidfConfig {
  std::size_t ngram_min = 2;
  std::size_t ngram_max = 3;
  std::size_t max_features = 10'000;
  bool idf_smoothing = true;
  bool l2_normalize = true;

  void validate() const;
};

// Every character n-gram (by code point) of length ngram_min..ngram_max,
// with repetition, shorter n first.
std::vector<std::string> char_ngrams(std::string_view text, std::size_t ngram_min,
                                     std::size_t ngram_max);

class VectorizerModel {
 public:
  VectorizerModel() = default;
  VectorizerModel(std::vector<std::string> terms, std::vector<double> idf, TfidfConfig config);

  const TfidfConfig& config() const { return config_; }
  std::size_t size() const { return terms_.size(); }
  // Feature index -> n-gram. Indices follow lexicographic byte order.
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<double>& idf() const { return idf_; }
  // -1 if out of vocabulary.
  std::int64_t index_of(const std::string& term) const;

  SparseVector transform(std::string_view text) const;
  SparseMatrix transform(std::span<const std::string> texts) const;
  SparseMatrix transform(const Corpus& corpus) const;

 private:
  std::vector<std::string> terms_;
  std::vector<double> idf_;
  std::unordered_map<std::string, std::uint32_t> vocabulary_;
  TfidfConfig config_;
};

// Vocabulary: the max_features n-grams with highest document frequency,
// ties broken by lexicographic n-gram. idf = ln((1+N)/(1+df)) + 1 when
// smoothing is on, ln(N/df) + 1 otherwise. Raw term counts for tf.
VectorizerModel fit_tfidf(std::span<const std::string> texts, const TfidfConfig& config = {});
VectorizerModel fit_tfidf(const Corpus& corpus, const TfidfConfig& config = {});

inline SparseVector transform(const VectorizerModel& model, std::string_view text) {
  return model.transform(text);
}

// Externally produced embeddings, one row per review id.
struct DenseMatrix {
  std::vector<std::string> ids;
  std::size_t dim = 0;
  std::vector<double> values;  // row-major, ids.size() x dim

  std::size_t rows() const { return ids.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span(values).subspan(i * dim, dim);
  }
};

// EMB1: one JSON header line {"format":"EMB1","dim":D,"count":N,"ids":[...]}\n
// then N*D little-endian float32 values, row-major.
DenseMatrix read_embeddings(std::istream& in);
DenseMatrix load_embeddings(const std::filesystem::path& path);
void write_embeddings(const DenseMatrix& matrix, std::ostream& out);
void save_embeddings(const DenseMatrix& matrix, const std::filesystem::path& path);

// Rows of `matrix` reordered to match the corpus review ids.
SparseMatrix align_embeddings(const DenseMatrix& matrix, const Corpus& corpus);

}  // namespace stylo
