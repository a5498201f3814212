#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "stylo/corpus.hpp"
#include "stylo/features.hpp"
#include "stylo/linear_classifier.hpp"
#include "stylo/metric_knn.hpp"

namespace stylo {

// A model fitted on one training split.
class TrainedModel {
 public:
  virtual ~TrainedModel() = default;
  // For every review, classes ranked best first; at least list_length entries.
  virtual std::vector<std::vector<int>> rank(const Corpus& test, std::size_t list_length) const = 0;
  // The fitted vectorizer, for methods that have one.
  virtual const VectorizerModel* vectorizer() const { return nullptr; }
};

// A trainable attribution method. fit() must only look at `train`.
class Method {
 public:
  virtual ~Method() = default;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<TrainedModel> fit(const Corpus& train, std::span<const int> labels,
                                            std::size_t num_classes) const = 0;
};

class TfidfLogReg : public Method {
 public:
  explicit TfidfLogReg(TfidfConfig tfidf = {}, LogRegConfig logreg = {})
      : tfidf_(tfidf), logreg_(logreg) {}
  std::string name() const override { return "tfidf_lr"; }
  std::unique_ptr<TrainedModel> fit(const Corpus& train, std::span<const int> labels,
                                    std::size_t num_classes) const override;

 private:
  TfidfConfig tfidf_;
  LogRegConfig logreg_;
};

// Logistic regression over imported dense embeddings, matched by review id.
class EmbeddingLogReg : public Method {
 public:
  EmbeddingLogReg(std::shared_ptr<const DenseMatrix> embeddings, LogRegConfig logreg = {});
  std::string name() const override { return "emb_lr"; }
  std::unique_ptr<TrainedModel> fit(const Corpus& train, std::span<const int> labels,
                                    std::size_t num_classes) const override;

 private:
  std::shared_ptr<const DenseMatrix> embeddings_;
  LogRegConfig logreg_;
};

// TF-IDF features, learned triplet projection, cosine kNN.
class TfidfMetricKnn : public Method {
 public:
  explicit TfidfMetricKnn(TfidfConfig tfidf = {}, MetricConfig metric = {})
      : tfidf_(tfidf), metric_(metric) {}
  std::string name() const override { return "metric_knn"; }
  std::unique_ptr<TrainedModel> fit(const Corpus& train, std::span<const int> labels,
                                    std::size_t num_classes) const override;

 private:
  TfidfConfig tfidf_;
  MetricConfig metric_;
};

// Neighbour pool for candidate ranking: max evaluated k times knn_k, at least 30.
std::size_t knn_neighbor_pool(std::size_t knn_k, std::size_t k_eval_max = 10);

}  // namespace stylo
