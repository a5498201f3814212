#include "stylo/metric_knn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "stylo/binary_io.hpp"
#include "stylo/error.hpp"
#include "stylo/random.hpp"

namespace stylo {

namespace {

constexpr char kModelMagic[] = "STYLO-ML";

double euclidean(const double* a, const double* b, std::size_t dim) {
  double s = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// g += w * (a - b) / dist
void add_direction(double* g, const double* a, const double* b, double dist, double w,
                   std::size_t dim) {
  if (dist <= 0) return;
  const double s = w / dist;
  for (std::size_t i = 0; i < dim; ++i) g[i] += s * (a[i] - b[i]);
}

}  // namespace

void MetricConfig::validate() const {
  if (embed_dim < 1) throw std::invalid_argument("MetricConfig: embed_dim must be >= 1");
  if (!(margin > 0)) throw std::invalid_argument("MetricConfig: margin must be > 0");
  if (batch_authors < 2) throw std::invalid_argument("MetricConfig: P (batch_authors) must be >= 2");
  if (batch_per_author < 2) throw std::invalid_argument("MetricConfig: K (batch_per_author) must be >= 2");
  if (!(learning_rate > 0)) throw std::invalid_argument("MetricConfig: learning_rate must be > 0");
  if (knn_k < 1) throw std::invalid_argument("MetricConfig: knn_k must be >= 1");
}

MetricEmbedder::MetricEmbedder(std::size_t input_dim, const MetricConfig& config)
    : input_dim_(input_dim), config_(config), params_(input_dim * config.embed_dim, 0.0) {
  // Glorot-normal initialization from the configured seed.
  Rng rng(mix_seed(config.seed, 0x6d657472696300ULL));
  const double sd = std::sqrt(2.0 / static_cast<double>(input_dim + config.embed_dim));
  for (double& p : params_) p = sd * rng.normal();
}

std::vector<double> MetricEmbedder::project(SparseRow x) const {
  const std::size_t d = embed_dim();
  std::vector<double> z(d, 0.0);
  for (std::size_t k = 0; k < x.indices.size(); ++k) {
    const std::size_t j = x.indices[k];
    if (j >= input_dim_) throw std::invalid_argument("feature index out of range");
    const double v = x.values[k];
    const double* col = params_.data() + j * d;
    for (std::size_t r = 0; r < d; ++r) z[r] += v * col[r];
  }
  return z;
}

std::vector<double> MetricEmbedder::embed(SparseRow x) const {
  std::vector<double> z = project(x);
  double n = 0;
  for (double v : z) n += v * v;
  n = std::sqrt(n);
  if (n > 0) {
    for (double& v : z) v /= n;
  } else {
    z[0] = 1.0;
  }
  return z;
}

std::vector<double> MetricEmbedder::embed_all(const SparseMatrix& x) const {
  std::vector<double> out;
  out.reserve(x.rows() * embed_dim());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto e = embed(x.row(i));
    out.insert(out.end(), e.begin(), e.end());
  }
  return out;
}

void MetricEmbedder::save(std::ostream& out) const {
  binary_io::write_magic(out, kModelMagic, 1);
  binary_io::write_u64(out, input_dim_);
  binary_io::write_u64(out, config_.embed_dim);
  binary_io::write_f64(out, config_.margin);
  binary_io::write_u64(out, config_.epochs);
  binary_io::write_u64(out, config_.batch_authors);
  binary_io::write_u64(out, config_.batch_per_author);
  binary_io::write_f64(out, config_.learning_rate);
  binary_io::write_u64(out, config_.seed);
  binary_io::write_u64(out, config_.knn_k);
  for (double p : params_) binary_io::write_f64(out, p);
}

MetricEmbedder MetricEmbedder::load(std::istream& in) {
  binary_io::expect_magic(in, kModelMagic, 1);
  MetricEmbedder m;
  m.input_dim_ = binary_io::read_u64(in);
  m.config_.embed_dim = binary_io::read_u64(in);
  m.config_.margin = binary_io::read_f64(in);
  m.config_.epochs = binary_io::read_u64(in);
  m.config_.batch_authors = binary_io::read_u64(in);
  m.config_.batch_per_author = binary_io::read_u64(in);
  m.config_.learning_rate = binary_io::read_f64(in);
  m.config_.seed = binary_io::read_u64(in);
  m.config_.knn_k = binary_io::read_u64(in);
  m.params_.resize(m.input_dim_ * m.config_.embed_dim);
  for (double& p : m.params_) p = binary_io::read_f64(in);
  return m;
}

TripletLoss batch_hard_triplet_loss(std::span<const double> embeddings, std::size_t dim,
                                    std::span<const int> labels, double margin) {
  const std::size_t n = labels.size();
  if (dim == 0 || embeddings.size() != n * dim) {
    throw std::invalid_argument("batch_hard_triplet_loss: embeddings do not match labels x dim");
  }
  if (!(margin > 0)) throw std::invalid_argument("batch_hard_triplet_loss: margin must be > 0");
  std::map<int, std::size_t> counts;
  for (int l : labels) ++counts[l];
  if (counts.size() < 2) throw std::invalid_argument("batch_hard_triplet_loss: need >= 2 labels");
  for (const auto& [label, c] : counts) {
    if (c < 2) {
      throw std::invalid_argument("batch_hard_triplet_loss: label " + std::to_string(label) +
                                  " appears once");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t k = 0; k < dim; ++k) s += embeddings[i * dim + k] * embeddings[i * dim + k];
    if (std::abs(std::sqrt(s) - 1.0) > 1e-6) {
      throw std::invalid_argument("batch_hard_triplet_loss: embeddings must be unit-norm");
    }
  }

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = euclidean(&embeddings[i * dim], &embeddings[j * dim], dim);
      dist[i * n + j] = d;
      dist[j * n + i] = d;
    }
  }

  TripletLoss out;
  out.grad.assign(n * dim, 0.0);
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t a = 0; a < n; ++a) {
    std::size_t pos = n, neg = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a) continue;
      const double d = dist[a * n + j];
      if (labels[j] == labels[a]) {
        if (pos == n || d > dist[a * n + pos]) pos = j;
      } else {
        if (neg == n || d < dist[a * n + neg]) neg = j;
      }
    }
    const double d_ap = dist[a * n + pos];
    const double d_an = dist[a * n + neg];
    const double term = d_ap - d_an + margin;
    if (term <= 0) continue;
    out.loss += w * term;
    const double* ea = &embeddings[a * dim];
    const double* ep = &embeddings[pos * dim];
    const double* en = &embeddings[neg * dim];
    add_direction(&out.grad[a * dim], ea, ep, d_ap, w, dim);
    add_direction(&out.grad[pos * dim], ep, ea, d_ap, w, dim);
    add_direction(&out.grad[a * dim], ea, en, d_an, -w, dim);
    add_direction(&out.grad[neg * dim], en, ea, d_an, -w, dim);
  }
  return out;
}

namespace {

// Forward pass for a batch: unit embeddings plus the pre-normalization norms.
struct BatchForward {
  std::vector<double> unit;
  std::vector<double> norms;
};

BatchForward forward(const MetricEmbedder& m, const SparseMatrix& x,
                     std::span<const std::size_t> batch) {
  const std::size_t d = m.embed_dim();
  BatchForward f;
  f.unit.reserve(batch.size() * d);
  for (std::size_t r : batch) {
    std::vector<double> z = m.project(x.row(r));
    double n = 0;
    for (double v : z) n += v * v;
    n = std::sqrt(n);
    if (n > 0) {
      for (double& v : z) v /= n;
    } else {
      std::fill(z.begin(), z.end(), 0.0);
      z[0] = 1.0;
    }
    f.norms.push_back(n);
    f.unit.insert(f.unit.end(), z.begin(), z.end());
  }
  return f;
}

// d loss / d z for every batch row, from d loss / d unit embedding.
std::vector<double> backprop_normalize(const BatchForward& f, const std::vector<double>& g_unit,
                                       std::size_t d) {
  std::vector<double> g(g_unit.size(), 0.0);
  for (std::size_t b = 0; b < f.norms.size(); ++b) {
    if (f.norms[b] <= 0) continue;
    const double* e = &f.unit[b * d];
    const double* ge = &g_unit[b * d];
    double proj = 0;
    for (std::size_t k = 0; k < d; ++k) proj += e[k] * ge[k];
    for (std::size_t k = 0; k < d; ++k) g[b * d + k] = (ge[k] - proj * e[k]) / f.norms[b];
  }
  return g;
}

}  // namespace

double triplet_objective(const MetricEmbedder& embedder, const SparseMatrix& x,
                         std::span<const std::size_t> batch, std::span<const int> labels,
                         double margin, std::span<double> grad) {
  const std::size_t d = embedder.embed_dim();
  if (grad.size() != embedder.parameters().size()) {
    throw std::invalid_argument("triplet_objective: gradient size mismatch");
  }
  const BatchForward f = forward(embedder, x, batch);
  const TripletLoss tl = batch_hard_triplet_loss(f.unit, d, labels, margin);
  const std::vector<double> gz = backprop_normalize(f, tl.grad, d);
  std::fill(grad.begin(), grad.end(), 0.0);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const SparseRow row = x.row(batch[b]);
    for (std::size_t k = 0; k < row.indices.size(); ++k) {
      double* col = grad.data() + static_cast<std::size_t>(row.indices[k]) * d;
      const double v = row.values[k];
      for (std::size_t r = 0; r < d; ++r) col[r] += v * gz[b * d + r];
    }
  }
  return tl.loss;
}

MetricEmbedder train_metric(const SparseMatrix& x, std::span<const int> y,
                            const MetricConfig& config, MetricTrace* trace) {
  config.validate();
  if (x.rows() != y.size()) throw std::invalid_argument("train_metric: |X| != |y|");
  if (!x.all_finite()) throw DataError("train_metric: non-finite feature values");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  const std::size_t k_per = config.batch_per_author;
  for (const auto& [cls, rows] : by_class) {
    if (rows.size() < k_per) {
      throw DataError("train_metric: class " + std::to_string(cls) + " has " +
                      std::to_string(rows.size()) + " samples, fewer than K=" +
                      std::to_string(k_per));
    }
  }
  if (by_class.size() < 2) throw DataError("train_metric: need at least 2 classes");

  std::vector<int> classes;
  for (const auto& [cls, _] : by_class) classes.push_back(cls);
  const std::size_t p_eff = std::min(config.batch_authors, classes.size());
  const std::size_t batch_size = p_eff * k_per;
  const std::size_t batches_per_epoch = std::max<std::size_t>(1, y.size() / batch_size);

  MetricEmbedder model(x.cols(), config);
  const std::size_t d = config.embed_dim;
  auto params = model.parameters();
  std::vector<double> adam_m(params.size(), 0.0), adam_v(params.size(), 0.0);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  Rng rng(mix_seed(config.seed, 0x7472697000ULL));
  std::vector<std::size_t> batch(batch_size);
  std::vector<int> batch_labels(batch_size);
  std::vector<std::uint32_t> touched;
  std::vector<double> gz, col_grad;
  std::size_t step = 0;
  if (trace) trace->epoch_loss.clear();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      // P distinct classes, K distinct rows each.
      for (std::size_t i = 0; i < p_eff; ++i) {
        std::swap(classes[i], classes[i + rng.below(classes.size() - i)]);
        auto& rows = by_class[classes[i]];
        for (std::size_t j = 0; j < k_per; ++j) {
          std::swap(rows[j], rows[j + rng.below(rows.size() - j)]);
          batch[i * k_per + j] = rows[j];
          batch_labels[i * k_per + j] = classes[i];
        }
      }

      const BatchForward f = forward(model, x, batch);
      const TripletLoss tl = batch_hard_triplet_loss(f.unit, d, batch_labels, config.margin);
      epoch_loss += tl.loss;
      ++step;
      if (tl.loss <= 0) continue;
      gz = backprop_normalize(f, tl.grad, d);

      touched.clear();
      for (std::size_t r : batch) {
        const SparseRow row = x.row(r);
        touched.insert(touched.end(), row.indices.begin(), row.indices.end());
      }
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

      col_grad.assign(touched.size() * d, 0.0);
      for (std::size_t bi = 0; bi < batch.size(); ++bi) {
        const SparseRow row = x.row(batch[bi]);
        for (std::size_t k = 0; k < row.indices.size(); ++k) {
          const auto slot = static_cast<std::size_t>(
              std::lower_bound(touched.begin(), touched.end(), row.indices[k]) - touched.begin());
          double* g = &col_grad[slot * d];
          const double v = row.values[k];
          for (std::size_t r = 0; r < d; ++r) g[r] += v * gz[bi * d + r];
        }
      }
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      const double lr = config.learning_rate;
      for (std::size_t slot = 0; slot < touched.size(); ++slot) {
        const std::size_t base = static_cast<std::size_t>(touched[slot]) * d;
        const double* g = &col_grad[slot * d];
        for (std::size_t r = 0; r < d; ++r) {
          double& m = adam_m[base + r];
          double& v = adam_v[base + r];
          m = beta1 * m + (1 - beta1) * g[r];
          v = beta2 * v + (1 - beta2) * g[r] * g[r];
          params[base + r] -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
        }
      }
    }
    if (trace) trace->epoch_loss.push_back(epoch_loss / static_cast<double>(batches_per_epoch));
  }
  if (trace) trace->steps = step;
  return model;
}

KnnRanking knn_rank(const EmbeddingIndex& index, std::span<const double> query,
                    std::size_t knn_k, std::size_t neighbor_pool, std::size_t k_eval_max) {
  if (index.size() == 0) throw DataError("knn_rank: empty training set");
  if (knn_k < 1) throw std::invalid_argument("knn_rank: knn_k must be >= 1");
  if (neighbor_pool < knn_k) throw std::invalid_argument("knn_rank: neighbor_pool < knn_k");
  if (query.size() != index.dim) throw std::invalid_argument("knn_rank: query dimension mismatch");

  const std::size_t n = index.size();
  const std::size_t dim = index.dim;
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* t = &index.vectors[i * dim];
    double dot = 0;
    for (std::size_t k = 0; k < dim; ++k) dot += query[k] * t[k];
    dist[i] = 1.0 - dot;
  }

  const std::size_t pool = std::min(neighbor_pool, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto nearer = [&](std::size_t a, std::size_t b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(pool), order.end(),
                    nearer);

  // Majority vote among the first knn_k.
  const std::size_t voters = std::min(knn_k, n);
  std::map<int, std::pair<std::size_t, double>> votes;  // label -> (count, sum distance)
  for (std::size_t i = 0; i < voters; ++i) {
    auto& v = votes[index.labels[order[i]]];
    ++v.first;
    v.second += dist[order[i]];
  }
  int winner = votes.begin()->first;
  {
    auto best = votes.begin()->second;
    for (const auto& [label, v] : votes) {
      const double mean = v.second / static_cast<double>(v.first);
      const double best_mean = best.second / static_cast<double>(best.first);
      if (v.first > best.first || (v.first == best.first && mean < best_mean)) {
        winner = label;
        best = v;
      }
    }
  }

  // Nearest distance of every author; pool membership decides list length.
  std::map<int, std::pair<double, std::size_t>> nearest;  // label -> (distance, row)
  for (std::size_t i = 0; i < n; ++i) {
    const int l = index.labels[i];
    const auto it = nearest.find(l);
    if (it == nearest.end() || nearer(i, it->second.second)) nearest[l] = {dist[i], i};
  }
  std::map<int, bool> in_pool;
  for (std::size_t i = 0; i < pool; ++i) in_pool[index.labels[order[i]]] = true;
  const std::size_t length =
      std::min(nearest.size(), std::max(in_pool.size(), k_eval_max));

  std::vector<std::pair<std::size_t, int>> by_distance;  // (nearest row, label)
  for (const auto& [label, dr] : nearest) by_distance.emplace_back(dr.second, label);
  std::sort(by_distance.begin(), by_distance.end(),
            [&](const auto& a, const auto& b) { return nearer(a.first, b.first); });

  KnnRanking out;
  out.authors.push_back(winner);
  out.distances.push_back(nearest[winner].first);
  for (const auto& [row, label] : by_distance) {
    if (out.authors.size() >= length) break;
    if (label == winner) continue;
    out.authors.push_back(label);
    out.distances.push_back(dist[row]);
  }
  return out;
}

}  // namespace stylo
