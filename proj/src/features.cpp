#include "stylo/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <json.hpp>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include "stylo/error.hpp"
#include "stylo/unicode.hpp"

namespace stylo {

namespace {

// Appends views into `text` for every n-gram; valid while text lives.
void collect_ngrams(std::string_view text, std::size_t nmin, std::size_t nmax,
                    std::vector<std::string_view>& out) {
  const auto cuts = unicode::boundaries(text);
  const std::size_t len = cuts.size() - 1;
  for (std::size_t n = nmin; n <= nmax; ++n) {
    if (n > len) break;
    for (std::size_t i = 0; i + n <= len; ++i) {
      out.push_back(text.substr(cuts[i], cuts[i + n] - cuts[i]));
    }
  }
}

}  // namespace

void TfidfConfig::validate() const {
  if (ngram_min < 1 || ngram_min > ngram_max) {
    throw std::invalid_argument("TfidfConfig: need 1 <= ngram_min <= ngram_max");
  }
  if (max_features < 1) throw std::invalid_argument("TfidfConfig: max_features must be >= 1");
}

std::vector<std::string> char_ngrams(std::string_view text, std::size_t ngram_min,
                                     std::size_t ngram_max) {
  std::vector<std::string_view> views;
  collect_ngrams(text, ngram_min, ngram_max, views);
  return {views.begin(), views.end()};
}

VectorizerModel::VectorizerModel(std::vector<std::string> terms, std::vector<double> idf,
                                 TfidfConfig config)
    : terms_(std::move(terms)), idf_(std::move(idf)), config_(config) {
  if (terms_.size() != idf_.size()) throw std::invalid_argument("vocabulary/idf size mismatch");
  vocabulary_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (!vocabulary_.emplace(terms_[i], static_cast<std::uint32_t>(i)).second) {
      throw std::invalid_argument("duplicate vocabulary term");
    }
  }
}

std::int64_t VectorizerModel::index_of(const std::string& term) const {
  const auto it = vocabulary_.find(term);
  return it == vocabulary_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

SparseVector VectorizerModel::transform(std::string_view text) const {
  std::vector<std::string_view> grams;
  collect_ngrams(text, config_.ngram_min, config_.ngram_max, grams);
  std::vector<std::uint32_t> hits;
  hits.reserve(grams.size());
  std::string key;
  for (std::string_view g : grams) {
    key.assign(g);
    const auto it = vocabulary_.find(key);
    if (it != vocabulary_.end()) hits.push_back(it->second);
  }
  std::sort(hits.begin(), hits.end());

  SparseVector out;
  for (std::size_t i = 0; i < hits.size();) {
    std::size_t j = i;
    while (j < hits.size() && hits[j] == hits[i]) ++j;
    out.indices.push_back(hits[i]);
    out.values.push_back(static_cast<double>(j - i) * idf_[hits[i]]);
    i = j;
  }
  if (config_.l2_normalize) {
    const double n = out.norm();
    if (n > 0) {
      for (double& v : out.values) v /= n;
    }
  }
  return out;
}

SparseMatrix VectorizerModel::transform(std::span<const std::string> texts) const {
  SparseMatrix m(terms_.size());
  for (const auto& t : texts) m.append(transform(t));
  return m;
}

SparseMatrix VectorizerModel::transform(const Corpus& corpus) const {
  SparseMatrix m(terms_.size());
  for (const Review& r : corpus.reviews()) m.append(transform(r.text));
  return m;
}

VectorizerModel fit_tfidf(std::span<const std::string> texts, const TfidfConfig& config) {
  config.validate();
  if (texts.empty()) throw DataError("fit_tfidf: empty corpus");

  std::unordered_map<std::string, std::uint32_t> df;
  std::vector<std::string_view> grams;
  for (const auto& text : texts) {
    grams.clear();
    collect_ngrams(text, config.ngram_min, config.ngram_max, grams);
    std::sort(grams.begin(), grams.end());
    grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
    for (std::string_view g : grams) ++df[std::string(g)];
  }

  std::vector<std::pair<std::string_view, std::uint32_t>> ranked;
  ranked.reserve(df.size());
  for (const auto& [term, count] : df) ranked.emplace_back(term, count);
  const auto by_df = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };
  const std::size_t keep = std::min(config.max_features, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep),
                    ranked.end(), by_df);
  ranked.resize(keep);
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  const double n_docs = static_cast<double>(texts.size());
  std::vector<std::string> terms;
  std::vector<double> idf;
  terms.reserve(keep);
  idf.reserve(keep);
  for (const auto& [term, count] : ranked) {
    terms.emplace_back(term);
    const double d = static_cast<double>(count);
    idf.push_back(config.idf_smoothing ? std::log((1.0 + n_docs) / (1.0 + d)) + 1.0
                                       : std::log(n_docs / d) + 1.0);
  }
  return VectorizerModel(std::move(terms), std::move(idf), config);
}

VectorizerModel fit_tfidf(const Corpus& corpus, const TfidfConfig& config) {
  std::vector<std::string> texts;
  texts.reserve(corpus.size());
  for (const Review& r : corpus.reviews()) texts.push_back(r.text);
  return fit_tfidf(texts, config);
}

// --- EMB1 -----------------------------------------------------------------

DenseMatrix read_embeddings(std::istream& in) {
  std::string header_line;
  if (!std::getline(in, header_line)) throw DataError("EMB1: missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("EMB1: header is not valid JSON: ") + e.what());
  }
  if (!header.is_object() || header.value("format", "") != "EMB1") {
    throw DataError("EMB1: header format tag must be \"EMB1\"");
  }
  const auto& jdim = header["dim"];
  const auto& jcount = header["count"];
  const auto& jids = header["ids"];
  if (!jdim.is_number_unsigned() || !jcount.is_number_unsigned() || !jids.is_array()) {
    throw DataError("EMB1: header needs unsigned dim, count and an ids array");
  }
  DenseMatrix m;
  m.dim = jdim.get<std::size_t>();
  const auto count = jcount.get<std::size_t>();
  if (m.dim == 0) throw DataError("EMB1: dim must be >= 1");
  if (jids.size() != count) {
    throw DataError("EMB1: header count " + std::to_string(count) + " but " +
                    std::to_string(jids.size()) + " ids");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : jids) {
    if (!id.is_string()) throw DataError("EMB1: ids must be strings");
    auto s = id.get<std::string>();
    if (!seen.insert(s).second) throw DataError("EMB1: duplicate id '" + s + "'");
    m.ids.push_back(std::move(s));
  }

  const std::size_t expected = count * m.dim * 4;
  std::string payload(std::istreambuf_iterator<char>(in), {});
  if (payload.size() != expected) {
    throw DataError("EMB1: payload has " + std::to_string(payload.size()) + " bytes, expected " +
                    std::to_string(expected));
  }
  m.values.resize(count * m.dim);
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    const auto* b = reinterpret_cast<const unsigned char*>(payload.data() + 4 * i);
    const std::uint32_t bits = std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) |
                               (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
    const float f = std::bit_cast<float>(bits);
    if (!std::isfinite(f)) {
      throw DataError("EMB1: non-finite value in row " + std::to_string(i / m.dim));
    }
    m.values[i] = f;
  }
  return m;
}

DenseMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_embeddings(in);
}

void write_embeddings(const DenseMatrix& matrix, std::ostream& out) {
  if (matrix.values.size() != matrix.ids.size() * matrix.dim) {
    throw std::invalid_argument("write_embeddings: values do not match ids x dim");
  }
  nlohmann::ordered_json header;
  header["format"] = "EMB1";
  header["dim"] = matrix.dim;
  header["count"] = matrix.ids.size();
  header["ids"] = matrix.ids;
  out << header.dump() << '\n';
  for (double v : matrix.values) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    const char b[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                       static_cast<char>((bits >> 16) & 0xff),
                       static_cast<char>((bits >> 24) & 0xff)};
    out.write(b, 4);
  }
}

void save_embeddings(const DenseMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_embeddings(matrix, out);
}

SparseMatrix align_embeddings(const DenseMatrix& matrix, const Corpus& corpus) {
  std::unordered_map<std::string, std::size_t> row_of;
  row_of.reserve(matrix.rows());
  for (std::size_t i = 0; i < matrix.rows(); ++i) row_of.emplace(matrix.ids[i], i);
  SparseMatrix out(matrix.dim);
  for (const Review& r : corpus.reviews()) {
    const auto it = row_of.find(r.review_id);
    if (it == row_of.end()) throw DataError("no embedding for review id '" + r.review_id + "'");
    out.append_dense(matrix.row(it->second));
  }
  return out;
}

}  // namespace stylo
