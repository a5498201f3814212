#include "stylo/methods.hpp"

#include <algorithm>

#include "stylo/error.hpp"

namespace stylo {

namespace {

std::vector<std::string> class_names(std::size_t num_classes) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < num_classes; ++i) out.push_back(std::to_string(i));
  return out;
}

std::vector<std::vector<int>> rank_rows(const LinearClassifier& clf, const SparseMatrix& x,
                                        std::size_t list_length) {
  std::vector<std::vector<int>> out;
  out.reserve(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    out.push_back(rank_top_k(predict_scores(clf, x.row(i)), list_length));
  }
  return out;
}

class TfidfLogRegModel : public TrainedModel {
 public:
  TfidfLogRegModel(VectorizerModel v, LinearClassifier c)
      : vectorizer_(std::move(v)), clf_(std::move(c)) {}
  std::vector<std::vector<int>> rank(const Corpus& test, std::size_t list_length) const override {
    return rank_rows(clf_, vectorizer_.transform(test), list_length);
  }
  const VectorizerModel* vectorizer() const override { return &vectorizer_; }

 private:
  VectorizerModel vectorizer_;
  LinearClassifier clf_;
};

class EmbeddingLogRegModel : public TrainedModel {
 public:
  EmbeddingLogRegModel(std::shared_ptr<const DenseMatrix> e, LinearClassifier c)
      : embeddings_(std::move(e)), clf_(std::move(c)) {}
  std::vector<std::vector<int>> rank(const Corpus& test, std::size_t list_length) const override {
    return rank_rows(clf_, align_embeddings(*embeddings_, test), list_length);
  }

 private:
  std::shared_ptr<const DenseMatrix> embeddings_;
  LinearClassifier clf_;
};

class MetricKnnModel : public TrainedModel {
 public:
  MetricKnnModel(VectorizerModel v, MetricEmbedder e, EmbeddingIndex index)
      : vectorizer_(std::move(v)), embedder_(std::move(e)), index_(std::move(index)) {}

  std::vector<std::vector<int>> rank(const Corpus& test, std::size_t list_length) const override {
    const std::size_t knn_k = embedder_.config().knn_k;
    const std::size_t pool = knn_neighbor_pool(knn_k);
    std::vector<std::vector<int>> out;
    out.reserve(test.size());
    for (const Review& r : test.reviews()) {
      const SparseVector x = vectorizer_.transform(r.text);
      const auto q = embedder_.embed(SparseRow{x.indices, x.values});
      out.push_back(knn_rank(index_, q, knn_k, pool, list_length).authors);
    }
    return out;
  }
  const VectorizerModel* vectorizer() const override { return &vectorizer_; }

 private:
  VectorizerModel vectorizer_;
  MetricEmbedder embedder_;
  EmbeddingIndex index_;
};

}  // namespace

std::size_t knn_neighbor_pool(std::size_t knn_k, std::size_t k_eval_max) {
  return std::max<std::size_t>(30, knn_k * k_eval_max);
}

std::unique_ptr<TrainedModel> TfidfLogReg::fit(const Corpus& train, std::span<const int> labels,
                                               std::size_t num_classes) const {
  VectorizerModel vectorizer = fit_tfidf(train, tfidf_);
  const SparseMatrix x = vectorizer.transform(train);
  LinearClassifier clf = train_logreg(x, labels, logreg_, num_classes, class_names(num_classes));
  return std::make_unique<TfidfLogRegModel>(std::move(vectorizer), std::move(clf));
}

EmbeddingLogReg::EmbeddingLogReg(std::shared_ptr<const DenseMatrix> embeddings, LogRegConfig logreg)
    : embeddings_(std::move(embeddings)), logreg_(logreg) {
  if (!embeddings_) throw std::invalid_argument("EmbeddingLogReg: no embeddings");
}

std::unique_ptr<TrainedModel> EmbeddingLogReg::fit(const Corpus& train,
                                                   std::span<const int> labels,
                                                   std::size_t num_classes) const {
  const SparseMatrix x = align_embeddings(*embeddings_, train);
  LinearClassifier clf = train_logreg(x, labels, logreg_, num_classes, class_names(num_classes));
  return std::make_unique<EmbeddingLogRegModel>(embeddings_, std::move(clf));
}

std::unique_ptr<TrainedModel> TfidfMetricKnn::fit(const Corpus& train, std::span<const int> labels,
                                                  std::size_t /*num_classes*/) const {
  VectorizerModel vectorizer = fit_tfidf(train, tfidf_);
  const SparseMatrix x = vectorizer.transform(train);
  MetricEmbedder embedder = train_metric(x, labels, metric_);
  EmbeddingIndex index;
  index.dim = embedder.embed_dim();
  index.vectors = embedder.embed_all(x);
  index.labels.assign(labels.begin(), labels.end());
  return std::make_unique<MetricKnnModel>(std::move(vectorizer), std::move(embedder),
                                          std::move(index));
}

}  // namespace stylo
