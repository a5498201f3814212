#include "stylo/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <thread>

#include "stylo/error.hpp"
#include "stylo/methods.hpp"
#include "stylo/random.hpp"

namespace stylo {

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (static_cast<std::size_t>(assignments[i]) == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (static_cast<std::size_t>(assignments[i]) != fold) out.push_back(i);
  }
  return out;
}

FoldPlan stratified_kfold(std::span<const int> labels, std::size_t n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw std::invalid_argument("stratified_kfold: need at least 2 folds");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [cls, members] : by_class) {
    if (members.size() < n_folds) {
      throw DataError("stratified_kfold: class " + std::to_string(cls) + " has " +
                      std::to_string(members.size()) + " samples, fewer than " +
                      std::to_string(n_folds) + " folds");
    }
  }
  FoldPlan plan;
  plan.n_folds = n_folds;
  plan.seed = seed;
  plan.assignments.assign(labels.size(), -1);
  Rng rng(seed);
  std::size_t offset = 0;
  for (auto& [cls, members] : by_class) {
    rng.shuffle(std::span(members));
    for (std::size_t j = 0; j < members.size(); ++j) {
      plan.assignments[members[j]] = static_cast<int>((offset + j) % n_folds);
    }
    offset = (offset + members.size()) % n_folds;
  }
  return plan;
}

double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (y_true.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hit += y_true[i] == y_pred[i];
  return static_cast<double>(hit) / static_cast<double>(y_true.size());
}

double macro_f1(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("macro_f1: length mismatch");
  if (y_true.empty()) return 0.0;
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<int, Counts> per_class;
  for (int t : y_true) per_class[t];
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == y_pred[i]) {
      ++per_class[y_true[i]].tp;
    } else {
      ++per_class[y_true[i]].fn;
      if (const auto it = per_class.find(y_pred[i]); it != per_class.end()) ++it->second.fp;
    }
  }
  double sum = 0;
  for (const auto& [_, c] : per_class) {
    const std::size_t denom = 2 * c.tp + c.fp + c.fn;
    sum += denom == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
  }
  return sum / static_cast<double>(per_class.size());
}

double top_k_accuracy(std::span<const int> y_true, const std::vector<std::vector<int>>& rankings,
                      std::size_t k) {
  if (y_true.size() != rankings.size()) throw std::invalid_argument("top_k_accuracy: length mismatch");
  if (k < 1) throw std::invalid_argument("top_k_accuracy: k must be >= 1");
  if (y_true.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const auto& r = rankings[i];
    if (r.size() < k) {
      throw std::invalid_argument("top_k_accuracy: ranking " + std::to_string(i) + " has " +
                                  std::to_string(r.size()) + " entries, fewer than k=" +
                                  std::to_string(k));
    }
    hit += std::find(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(k), y_true[i]) !=
           r.begin() + static_cast<std::ptrdiff_t>(k);
  }
  return static_cast<double>(hit) / static_cast<double>(y_true.size());
}

bool EvalReport::topk_coherent() const {
  for (const FoldResult& f : per_fold) {
    if (f.failed) continue;
    if (f.accuracy != f.top1) return false;
    if (!(f.top1 <= f.top3 && f.top3 <= f.top5 && f.top5 <= f.top10 && f.top10 <= 1.0)) {
      return false;
    }
  }
  return true;
}

void EvalReport::aggregate() {
  std::vector<const FoldResult*> done;
  failed_folds = 0;
  for (const FoldResult& f : per_fold) {
    if (f.failed) {
      ++failed_folds;
    } else {
      done.push_back(&f);
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto mean = [&](double FoldResult::*field) {
    if (done.empty()) return nan;
    double s = 0;
    for (const FoldResult* f : done) s += f->*field;
    return s / static_cast<double>(done.size());
  };
  const auto sd = [&](double FoldResult::*field, double m) {
    if (done.empty()) return nan;
    double s = 0;
    for (const FoldResult* f : done) s += (f->*field - m) * (f->*field - m);
    return std::sqrt(s / static_cast<double>(done.size()));
  };
  accuracy_mean = mean(&FoldResult::accuracy);
  accuracy_sd = sd(&FoldResult::accuracy, accuracy_mean);
  macro_f1_mean = mean(&FoldResult::macro_f1);
  macro_f1_sd = sd(&FoldResult::macro_f1, macro_f1_mean);
  top3_mean = mean(&FoldResult::top3);
  top5_mean = mean(&FoldResult::top5);
  top10_mean = mean(&FoldResult::top10);
  train_seconds_mean = mean(&FoldResult::train_seconds);
  infer_seconds_mean = mean(&FoldResult::infer_seconds);
}

namespace {

// JSON has no NaN; missing aggregates are written as null.
nlohmann::ordered_json num(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json();
}

double get_num(const nlohmann::ordered_json& j, const char* key) {
  const auto& v = j.at(key);
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

}  // namespace

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json folds = nlohmann::ordered_json::array();
  for (const FoldResult& f : r.per_fold) {
    nlohmann::ordered_json jf;
    jf["fold"] = f.fold;
    jf["failed"] = f.failed;
    if (f.failed) jf["error"] = f.error;
    jf["train_size"] = f.train_size;
    jf["test_size"] = f.test_size;
    jf["accuracy"] = num(f.accuracy);
    jf["macro_f1"] = num(f.macro_f1);
    jf["top1"] = num(f.top1);
    jf["top3"] = num(f.top3);
    jf["top5"] = num(f.top5);
    jf["top10"] = num(f.top10);
    jf["train_seconds"] = num(f.train_seconds);
    jf["infer_seconds"] = num(f.infer_seconds);
    folds.push_back(std::move(jf));
  }
  nlohmann::ordered_json j;
  j["accuracy_mean"] = num(r.accuracy_mean);
  j["accuracy_sd"] = num(r.accuracy_sd);
  j["macro_f1_mean"] = num(r.macro_f1_mean);
  j["macro_f1_sd"] = num(r.macro_f1_sd);
  j["top3_mean"] = num(r.top3_mean);
  j["top5_mean"] = num(r.top5_mean);
  j["top10_mean"] = num(r.top10_mean);
  j["train_seconds_mean"] = num(r.train_seconds_mean);
  j["infer_seconds_mean"] = num(r.infer_seconds_mean);
  j["failed_folds"] = r.failed_folds;
  j["per_fold"] = std::move(folds);
  return j;
}

EvalReport eval_report_from_json(const nlohmann::ordered_json& j) {
  EvalReport r;
  for (const auto& jf : j.at("per_fold")) {
    FoldResult f;
    f.fold = jf.at("fold").get<std::size_t>();
    f.failed = jf.at("failed").get<bool>();
    if (f.failed) f.error = jf.value("error", "");
    f.train_size = jf.at("train_size").get<std::size_t>();
    f.test_size = jf.at("test_size").get<std::size_t>();
    f.accuracy = get_num(jf, "accuracy");
    f.macro_f1 = get_num(jf, "macro_f1");
    f.top1 = get_num(jf, "top1");
    f.top3 = get_num(jf, "top3");
    f.top5 = get_num(jf, "top5");
    f.top10 = get_num(jf, "top10");
    f.train_seconds = get_num(jf, "train_seconds");
    f.infer_seconds = get_num(jf, "infer_seconds");
    r.per_fold.push_back(std::move(f));
  }
  r.failed_folds = j.at("failed_folds").get<std::size_t>();
  r.accuracy_mean = get_num(j, "accuracy_mean");
  r.accuracy_sd = get_num(j, "accuracy_sd");
  r.macro_f1_mean = get_num(j, "macro_f1_mean");
  r.macro_f1_sd = get_num(j, "macro_f1_sd");
  r.top3_mean = get_num(j, "top3_mean");
  r.top5_mean = get_num(j, "top5_mean");
  r.top10_mean = get_num(j, "top10_mean");
  r.train_seconds_mean = get_num(j, "train_seconds_mean");
  r.infer_seconds_mean = get_num(j, "infer_seconds_mean");
  return r;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

FoldResult run_fold(const Method& method, const Corpus& corpus, const std::vector<int>& labels,
                    std::size_t num_classes, const FoldPlan& plan, std::size_t fold) {
  FoldResult r;
  r.fold = fold;
  try {
    const auto train_idx = plan.train_indices(fold);
    const auto test_idx = plan.test_indices(fold);
    r.train_size = train_idx.size();
    r.test_size = test_idx.size();
    const Corpus train = corpus.subset(train_idx);
    const Corpus test = corpus.subset(test_idx);
    std::vector<int> y_train, y_test;
    for (std::size_t i : train_idx) y_train.push_back(labels[i]);
    for (std::size_t i : test_idx) y_test.push_back(labels[i]);

    auto t0 = Clock::now();
    const auto model = method.fit(train, y_train, num_classes);
    r.train_seconds = seconds_since(t0);

    // Rankings can never be longer than the candidate set; Top-k with k at
    // or beyond the number of classes is therefore Top-|classes|.
    const std::size_t list_length = std::min<std::size_t>(num_classes, 10);
    t0 = Clock::now();
    const auto rankings = model->rank(test, list_length);
    r.infer_seconds = seconds_since(t0);

    std::vector<int> y_pred;
    y_pred.reserve(rankings.size());
    for (const auto& rk : rankings) y_pred.push_back(rk.at(0));
    r.accuracy = accuracy(y_test, y_pred);
    r.macro_f1 = macro_f1(y_test, y_pred);
    const auto topk = [&](std::size_t k) {
      return top_k_accuracy(y_test, rankings, std::min(k, list_length));
    };
    r.top1 = topk(1);
    r.top3 = topk(3);
    r.top5 = topk(5);
    r.top10 = topk(10);
  } catch (const std::exception& e) {
    r.failed = true;
    r.error = e.what();
  }
  return r;
}

}  // namespace

EvalReport run_cv(const Method& method, const Corpus& corpus, const FoldPlan& plan,
                  const CvOptions& options) {
  if (plan.assignments.size() != corpus.size()) {
    throw std::invalid_argument("run_cv: fold plan does not match corpus size");
  }
  const std::vector<int> labels = corpus.labels();
  const std::size_t num_classes = corpus.num_authors();

  EvalReport report;
  report.per_fold.resize(plan.n_folds);
  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, plan.n_folds);
  if (workers == 1) {
    for (std::size_t f = 0; f < plan.n_folds; ++f) {
      report.per_fold[f] = run_fold(method, corpus, labels, num_classes, plan, f);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t f = next++; f < plan.n_folds; f = next++) {
          report.per_fold[f] = run_fold(method, corpus, labels, num_classes, plan, f);
        }
      });
    }
  }
  report.aggregate();
  return report;
}

}  // namespace stylo
