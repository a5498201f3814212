#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "stylo/sparse.hpp"

namespace stylo {

struct LogRegConfig {
  double inverse_reg_C = 1.0;
  std::size_t max_iter = 1'000;
  // Stop when the largest gradient component of the per-sample objective
  // falls to tol.
  double tol = 1e-6;
  std::size_t history = 10;  // L-BFGS correction pairs

  void validate() const;
};

// Multinomial logistic regression. Parameters are held feature-major
// (weight(c, j) lives at params[j * num_classes + c]) followed by the biases,
// which keeps the per-nonzero inner loops contiguous.
class LinearClassifier {
 public:
  LinearClassifier() = default;
  LinearClassifier(std::size_t num_features, std::vector<std::string> class_labels);

  std::size_t num_classes() const { return labels_.size(); }
  std::size_t num_features() const { return num_features_; }
  const std::vector<std::string>& class_labels() const { return labels_; }

  double weight(std::size_t cls, std::size_t feature) const {
    return params_[feature * num_classes() + cls];
  }
  double bias(std::size_t cls) const { return params_[num_features_ * num_classes() + cls]; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  // Raw logits Wx + b.
  std::vector<double> decision(SparseRow x) const;

  void save(std::ostream& out) const;
  static LinearClassifier load(std::istream& in);

 private:
  std::size_t num_features_ = 0;
  std::vector<std::string> labels_;
  std::vector<double> params_;
};

struct TrainingTrace {
  std::vector<double> objective;  // one entry per accepted iterate, starting at x0
  std::size_t iterations = 0;
  bool converged = false;
};

// (1/C)(1/2)||W||^2 + sum_i CE(softmax(W x_i + b), y_i); biases unregularized.
// Writes the gradient into `grad` (same layout as LinearClassifier params).
double logreg_objective(const SparseMatrix& x, std::span<const int> y, std::size_t num_classes,
                        double inverse_reg_C, std::span<const double> params,
                        std::span<double> grad);

// Deterministic L-BFGS from zero parameters. num_classes = 0 means max(y)+1.
LinearClassifier train_logreg(const SparseMatrix& x, std::span<const int> y,
                              const LogRegConfig& config = {}, std::size_t num_classes = 0,
                              std::vector<std::string> class_labels = {},
                              TrainingTrace* trace = nullptr);

// softmax(Wx + b).
std::vector<double> predict_scores(const LinearClassifier& clf, SparseRow x);
std::vector<double> predict_scores(const LinearClassifier& clf, const SparseVector& x);
// Dense input; throws std::invalid_argument on a dimension mismatch.
std::vector<double> predict_scores(const LinearClassifier& clf, std::span<const double> x);

void softmax_inplace(std::span<double> z);

// The k highest-scoring classes, descending; equal scores go to the lower index.
std::vector<int> rank_top_k(std::span<const double> scores, std::size_t k);

}  // namespace stylo
