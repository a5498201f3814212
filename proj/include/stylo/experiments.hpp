#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stylo/corpus.hpp"
#include "stylo/evaluation.hpp"
#include "stylo/features.hpp"
#include "stylo/linear_classifier.hpp"
#include "stylo/methods.hpp"
#include "stylo/metric_knn.hpp"

namespace stylo {

enum class Design { Exp1, Exp2A, Exp2B, Exp3 };

std::string to_string(Design d);
Design parse_design(const std::string& s);

inline constexpr std::size_t kExp3PostsPerAuthor = 186;

struct GridPoint {
  std::size_t U = 100;
  std::optional<std::size_t> k;
  std::optional<std::size_t> k_max;
};

struct ExperimentConfig {
  Design design = Design::Exp1;
  std::vector<std::size_t> u_grid;
  std::vector<std::size_t> k_grid;
  std::vector<std::size_t> k_max_grid;
  std::vector<std::string> methods = {"tfidf_lr"};
  std::uint64_t seed = 42;
  std::size_t folds = 5;
  std::size_t workers = 1;

  // Grid defaults for the design where a grid is empty.
  static ExperimentConfig defaults(Design design);
  void fill_defaults();
  void validate() const;
  // Grid points in ascending config order.
  std::vector<GridPoint> grid() const;
};

// Everything a method needs beyond its name.
struct MethodSettings {
  TfidfConfig tfidf;
  LogRegConfig logreg;
  MetricConfig metric;
  std::shared_ptr<const DenseMatrix> embeddings;
};

std::unique_ptr<Method> make_method(const std::string& name, const MethodSettings& settings);

Corpus build_experiment_corpus(const Corpus& base, Design design, const GridPoint& point,
                               std::uint64_t seed);

struct ResultRow {
  Design design = Design::Exp1;
  GridPoint point;
  std::string method;
  std::uint64_t seed = 42;
  std::size_t folds = 5;
  std::size_t num_reviews = 0;
  std::string corpus_hash;
  std::string error;  // corpus construction or method setup failure
  EvalReport report;
};

using ProgressFn = std::function<void(const ResultRow&, std::size_t done, std::size_t total)>;

std::vector<ResultRow> run_experiment(const ExperimentConfig& config, const Corpus& base,
                                      const MethodSettings& settings = {},
                                      const ProgressFn& progress = {});

nlohmann::ordered_json rows_to_json(const std::vector<ResultRow>& rows);
std::vector<ResultRow> rows_from_json(const nlohmann::ordered_json& j);

std::string csv_header();
std::string to_csv(const std::vector<ResultRow>& rows);

// results.json, results.csv and one plot-data CSV per swept design. Returns
// the written paths.
std::vector<std::filesystem::path> emit_report(const std::vector<ResultRow>& rows,
                                               const std::filesystem::path& out_dir);

}  // namespace stylo
