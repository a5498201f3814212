#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "stylo/sparse.hpp"

namespace stylo {

struct MetricConfig {
  std::size_t embed_dim = 256;
  double margin = 0.2;
  std::size_t epochs = 10;
  std::size_t batch_authors = 8;     // P
  std::size_t batch_per_author = 2;  // K
  double learning_rate = 1e-3;
  std::uint64_t seed = 42;
  std::size_t knn_k = 3;

  void validate() const;
};

// Linear projection followed by L2 normalization. The projection is stored
// feature-major: column j (the image of input feature j) is contiguous.
class MetricEmbedder {
 public:
  MetricEmbedder() = default;
  MetricEmbedder(std::size_t input_dim, const MetricConfig& config);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t embed_dim() const { return config_.embed_dim; }
  const MetricConfig& config() const { return config_; }

  double projection(std::size_t out, std::size_t in) const {
    return params_[in * embed_dim() + out];
  }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::vector<double> project(SparseRow x) const;
  // Unit-norm embedding. A zero projection maps to the first basis vector.
  std::vector<double> embed(SparseRow x) const;
  // Row-major rows() x embed_dim() block of embeddings.
  std::vector<double> embed_all(const SparseMatrix& x) const;

  void save(std::ostream& out) const;
  static MetricEmbedder load(std::istream& in);

 private:
  std::size_t input_dim_ = 0;
  MetricConfig config_;
  std::vector<double> params_;
};

struct TripletLoss {
  double loss = 0;
  std::vector<double> grad;  // d loss / d embeddings, same layout as input
};

// Batch-hard triplet loss over row-major embeddings (labels.size() x dim):
// mean over anchors of max(0, max_pos d(a,p) - min_neg d(a,n) + margin),
// d = Euclidean distance. Hardest positive/negative ties go to the lower row.
TripletLoss batch_hard_triplet_loss(std::span<const double> embeddings, std::size_t dim,
                                    std::span<const int> labels, double margin);

// Triplet loss of the batch rows of x pushed through the embedder, and its
// gradient with respect to the projection (parameters() layout).
double triplet_objective(const MetricEmbedder& embedder, const SparseMatrix& x,
                         std::span<const std::size_t> batch, std::span<const int> labels,
                         double margin, std::span<double> grad);

struct MetricTrace {
  std::vector<double> epoch_loss;  // mean batch loss per epoch
  std::size_t steps = 0;
};

// P x K batches, Adam updates restricted to the feature columns present in
// the batch. Deterministic for a fixed seed.
MetricEmbedder train_metric(const SparseMatrix& x, std::span<const int> y,
                            const MetricConfig& config, MetricTrace* trace = nullptr);

// Exact nearest-neighbour search over unit-norm training embeddings.
struct EmbeddingIndex {
  std::size_t dim = 0;
  std::vector<double> vectors;  // row-major
  std::vector<int> labels;
  std::size_t size() const { return labels.size(); }
};

struct KnnRanking {
  std::vector<int> authors;        // Top-1 vote winner first, then by min distance
  std::vector<double> distances;   // each author's minimum cosine distance
};

// Top-1 is the majority label among the knn_k nearest neighbours (ties: smaller
// mean distance, then smaller label). The rest of the list orders authors by
// their nearest neighbour within the neighbor_pool nearest points, extended
// until at least k_eval_max authors are listed (or all authors are).
// Cosine distance 1 - <q, t>; equal distances go to the lower training row.
KnnRanking knn_rank(const EmbeddingIndex& index, std::span<const double> query,
                    std::size_t knn_k, std::size_t neighbor_pool, std::size_t k_eval_max);

}  // namespace stylo
