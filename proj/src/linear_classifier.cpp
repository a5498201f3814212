#include "stylo/linear_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "stylo/binary_io.hpp"
#include "stylo/error.hpp"
#include "stylo/lbfgs.hpp"

namespace stylo {

namespace {

constexpr char kModelMagic[] = "STYLO-LR";

}  // namespace

void LogRegConfig::validate() const {
  if (!(inverse_reg_C > 0)) throw std::invalid_argument("LogRegConfig: C must be > 0");
  if (max_iter < 1) throw std::invalid_argument("LogRegConfig: max_iter must be >= 1");
  if (!(tol > 0)) throw std::invalid_argument("LogRegConfig: tol must be > 0");
  if (history < 1) throw std::invalid_argument("LogRegConfig: history must be >= 1");
}

LinearClassifier::LinearClassifier(std::size_t num_features, std::vector<std::string> class_labels)
    : num_features_(num_features),
      labels_(std::move(class_labels)),
      params_((num_features + 1) * labels_.size(), 0.0) {}

std::vector<double> LinearClassifier::decision(SparseRow x) const {
  const std::size_t c = num_classes();
  std::vector<double> z(params_.begin() + static_cast<std::ptrdiff_t>(num_features_ * c),
                        params_.end());
  for (std::size_t k = 0; k < x.indices.size(); ++k) {
    const std::size_t j = x.indices[k];
    if (j >= num_features_) throw std::invalid_argument("feature index out of range");
    const double v = x.values[k];
    const double* w = params_.data() + j * c;
    for (std::size_t cls = 0; cls < c; ++cls) z[cls] += v * w[cls];
  }
  return z;
}

void LinearClassifier::save(std::ostream& out) const {
  binary_io::write_magic(out, kModelMagic, 1);
  binary_io::write_u64(out, num_features_);
  binary_io::write_u64(out, labels_.size());
  for (const auto& l : labels_) binary_io::write_string(out, l);
  for (double p : params_) binary_io::write_f64(out, p);
}

LinearClassifier LinearClassifier::load(std::istream& in) {
  binary_io::expect_magic(in, kModelMagic, 1);
  const auto features = binary_io::read_u64(in);
  const auto classes = binary_io::read_u64(in);
  std::vector<std::string> labels;
  for (std::uint64_t i = 0; i < classes; ++i) labels.push_back(binary_io::read_string(in));
  LinearClassifier clf(features, std::move(labels));
  for (double& p : clf.params_) p = binary_io::read_f64(in);
  return clf;
}

void softmax_inplace(std::span<double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

double logreg_objective(const SparseMatrix& x, std::span<const int> y, std::size_t num_classes,
                        double inverse_reg_C, std::span<const double> params,
                        std::span<double> grad) {
  const std::size_t c = num_classes;
  const std::size_t f = x.cols();
  if (params.size() != (f + 1) * c || grad.size() != params.size()) {
    throw std::invalid_argument("logreg_objective: parameter size mismatch");
  }
  const double* w = params.data();
  const double* b = params.data() + f * c;
  double* gw = grad.data();
  double* gb = grad.data() + f * c;

  double reg = 0;
  const double inv_c = 1.0 / inverse_reg_C;
  for (std::size_t i = 0; i < f * c; ++i) {
    reg += w[i] * w[i];
    gw[i] = inv_c * w[i];
  }
  std::fill(gb, gb + c, 0.0);
  double loss = 0.5 * inv_c * reg;

  std::vector<double> z(c);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const SparseRow row = x.row(i);
    std::copy(b, b + c, z.begin());
    for (std::size_t k = 0; k < row.indices.size(); ++k) {
      const double v = row.values[k];
      const double* wj = w + static_cast<std::size_t>(row.indices[k]) * c;
      for (std::size_t cls = 0; cls < c; ++cls) z[cls] += v * wj[cls];
    }
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0;
    for (double zc : z) sum += std::exp(zc - m);
    const double lse = m + std::log(sum);
    const auto target = static_cast<std::size_t>(y[i]);
    loss += lse - z[target];
    for (std::size_t cls = 0; cls < c; ++cls) z[cls] = std::exp(z[cls] - lse);
    z[target] -= 1.0;
    for (std::size_t cls = 0; cls < c; ++cls) gb[cls] += z[cls];
    for (std::size_t k = 0; k < row.indices.size(); ++k) {
      const double v = row.values[k];
      double* gj = gw + static_cast<std::size_t>(row.indices[k]) * c;
      for (std::size_t cls = 0; cls < c; ++cls) gj[cls] += v * z[cls];
    }
  }
  return loss;
}

LinearClassifier train_logreg(const SparseMatrix& x, std::span<const int> y,
                              const LogRegConfig& config, std::size_t num_classes,
                              std::vector<std::string> class_labels, TrainingTrace* trace) {
  config.validate();
  if (x.rows() != y.size()) throw std::invalid_argument("train_logreg: |X| != |y|");
  if (y.size() < 2) throw DataError("train_logreg: need at least 2 samples");
  if (!x.all_finite()) throw DataError("train_logreg: non-finite feature values");
  const int max_label = *std::max_element(y.begin(), y.end());
  if (*std::min_element(y.begin(), y.end()) < 0) {
    throw std::invalid_argument("train_logreg: negative class index");
  }
  if (num_classes == 0) num_classes = static_cast<std::size_t>(max_label) + 1;
  if (static_cast<std::size_t>(max_label) >= num_classes) {
    throw std::invalid_argument("train_logreg: class index beyond num_classes");
  }
  if (std::all_of(y.begin(), y.end(), [&](int v) { return v == y[0]; })) {
    throw DataError("train_logreg: training data has a single class");
  }
  if (class_labels.empty()) {
    for (std::size_t i = 0; i < num_classes; ++i) class_labels.push_back(std::to_string(i));
  }
  if (class_labels.size() != num_classes) {
    throw std::invalid_argument("train_logreg: class label count mismatch");
  }

  LinearClassifier clf(x.cols(), std::move(class_labels));
  // Optimized per sample (divided by N): same minimizer, and the gradient
  // tolerance no longer depends on the training-set size.
  const double scale = 1.0 / static_cast<double>(y.size());
  const auto objective = [&](std::span<const double> p, std::span<double> g) {
    const double v = logreg_objective(x, y, num_classes, config.inverse_reg_C, p, g);
    for (double& gi : g) gi *= scale;
    return v * scale;
  };
  LbfgsOptions opts;
  opts.max_iter = config.max_iter;
  opts.history = config.history;
  opts.gtol = config.tol;
  const LbfgsResult res = minimize_lbfgs(objective, clf.parameters(), opts);

  for (double p : clf.parameters()) {
    if (!std::isfinite(p)) throw DataError("train_logreg: optimizer produced non-finite weights");
  }
  if (trace) {
    trace->objective.clear();
    for (double v : res.history) trace->objective.push_back(v / scale);
    trace->iterations = res.iterations;
    trace->converged = res.converged;
  }
  return clf;
}

std::vector<double> predict_scores(const LinearClassifier& clf, SparseRow x) {
  std::vector<double> z = clf.decision(x);
  softmax_inplace(z);
  return z;
}

std::vector<double> predict_scores(const LinearClassifier& clf, const SparseVector& x) {
  return predict_scores(clf, SparseRow{x.indices, x.values});
}

std::vector<double> predict_scores(const LinearClassifier& clf, std::span<const double> x) {
  if (x.size() != clf.num_features()) {
    throw std::invalid_argument("predict_scores: input has " + std::to_string(x.size()) +
                                " features, model expects " +
                                std::to_string(clf.num_features()));
  }
  std::vector<std::uint32_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0u);
  return predict_scores(clf, SparseRow{idx, x});
}

std::vector<int> rank_top_k(std::span<const double> scores, std::size_t k) {
  if (k < 1 || k > scores.size()) {
    throw std::invalid_argument("rank_top_k: k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(scores.size()) + "]");
  }
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](int a, int b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  order.resize(k);
  return order;
}

}  // namespace stylo
