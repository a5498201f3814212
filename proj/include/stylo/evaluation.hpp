#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stylo/corpus.hpp"

namespace stylo {

class Method;

struct FoldPlan {
  std::size_t n_folds = 5;
  std::uint64_t seed = 42;
  std::vector<int> assignments;  // sample -> fold

  std::vector<std::size_t> test_indices(std::size_t fold) const;
  std::vector<std::size_t> train_indices(std::size_t fold) const;
};

// Each class is shuffled with the seeded RNG and dealt round-robin. The deal
// for class c starts where the previous class stopped, so overall fold sizes
// also stay within one of each other.
FoldPlan stratified_kfold(std::span<const int> labels, std::size_t n_folds = 5,
                          std::uint64_t seed = 42);

// Unweighted mean of per-class F1 over the classes present in y_true.
double macro_f1(std::span<const int> y_true, std::span<const int> y_pred);

double accuracy(std::span<const int> y_true, std::span<const int> y_pred);

// Fraction of samples whose true class is among the first k ranked entries.
double top_k_accuracy(std::span<const int> y_true, const std::vector<std::vector<int>>& rankings,
                      std::size_t k);

inline constexpr std::size_t kTopKs[] = {3, 5, 10};

struct FoldResult {
  std::size_t fold = 0;
  bool failed = false;
  std::string error;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  double accuracy = 0;
  double macro_f1 = 0;
  double top1 = 0;
  double top3 = 0;
  double top5 = 0;
  double top10 = 0;
  double train_seconds = 0;
  double infer_seconds = 0;
};

struct EvalReport {
  std::vector<FoldResult> per_fold;
  std::size_t failed_folds = 0;
  double accuracy_mean = 0;
  double accuracy_sd = 0;  // population SD over completed folds
  double macro_f1_mean = 0;
  double macro_f1_sd = 0;
  double top3_mean = 0;
  double top5_mean = 0;
  double top10_mean = 0;
  double train_seconds_mean = 0;
  double infer_seconds_mean = 0;

  // accuracy == top1 <= top3 <= top5 <= top10 <= 1 in every completed fold.
  bool topk_coherent() const;
  void aggregate();
};

nlohmann::ordered_json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::ordered_json& j);

struct CvOptions {
  std::size_t workers = 1;  // folds run concurrently up to this bound
};

// Fits the method on each fold's training rows only and scores the held-out
// rows. A fold whose training or prediction throws is marked failed.
EvalReport run_cv(const Method& method, const Corpus& corpus, const FoldPlan& plan,
                  const CvOptions& options = {});

}  // namespace stylo
