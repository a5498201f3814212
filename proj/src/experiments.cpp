#include "stylo/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "stylo/error.hpp"

namespace stylo {

std::string to_string(Design d) {
  switch (d) {
    case Design::Exp1: return "exp1";
    case Design::Exp2A: return "exp2a";
    case Design::Exp2B: return "exp2b";
    case Design::Exp3: return "exp3";
  }
  return "?";
}

Design parse_design(const std::string& s) {
  std::string lower = s;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "exp1") return Design::Exp1;
  if (lower == "exp2a") return Design::Exp2A;
  if (lower == "exp2b") return Design::Exp2B;
  if (lower == "exp3") return Design::Exp3;
  throw std::invalid_argument("unknown design '" + s + "' (expected exp1, exp2a, exp2b, exp3)");
}

ExperimentConfig ExperimentConfig::defaults(Design design) {
  ExperimentConfig c;
  c.design = design;
  c.fill_defaults();
  return c;
}

void ExperimentConfig::fill_defaults() {
  switch (design) {
    case Design::Exp1:
      if (u_grid.empty()) u_grid = {100};
      if (k_grid.empty()) k_grid = {100, 200, 300, 400};
      break;
    case Design::Exp2A:
      if (u_grid.empty()) u_grid = {100};
      break;
    case Design::Exp2B:
      if (u_grid.empty()) u_grid = {100};
      if (k_max_grid.empty()) k_max_grid = {500, 1000, 1500};
      break;
    case Design::Exp3:
      if (u_grid.empty()) u_grid = {2, 5, 10, 20, 50, 100, 200, 400, 600, 800, 1000};
      if (k_grid.empty()) k_grid = {kExp3PostsPerAuthor};
      break;
  }
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw std::invalid_argument("experiment: no methods");
  for (const auto& m : methods) {
    if (m != "tfidf_lr" && m != "emb_lr" && m != "metric_knn") {
      throw std::invalid_argument("experiment: unknown method '" + m + "'");
    }
  }
  if (folds < 2) throw std::invalid_argument("experiment: folds must be >= 2");
  if (u_grid.empty()) throw std::invalid_argument("experiment: empty U grid");
  for (std::size_t u : u_grid) {
    if (u < 2) throw std::invalid_argument("experiment: U must be >= 2");
  }
  switch (design) {
    case Design::Exp1:
      if (k_grid.empty()) throw std::invalid_argument("exp1: empty k grid");
      for (std::size_t k : k_grid) {
        if (k != 100 && k != 200 && k != 300 && k != 400) {
          throw std::invalid_argument("exp1: k must be one of 100, 200, 300, 400 (got " +
                                      std::to_string(k) + ")");
        }
      }
      break;
    case Design::Exp2A:
      if (!k_grid.empty() || !k_max_grid.empty()) {
        throw std::invalid_argument("exp2a uses full data: no k or K_max");
      }
      break;
    case Design::Exp2B:
      if (k_max_grid.empty()) throw std::invalid_argument("exp2b requires K_max");
      for (std::size_t k : k_max_grid) {
        if (k < 1) throw std::invalid_argument("exp2b: K_max must be >= 1");
      }
      break;
    case Design::Exp3:
      if (k_grid.size() != 1 || k_grid[0] != kExp3PostsPerAuthor) {
        throw std::invalid_argument("exp3 fixes k = 186");
      }
      break;
  }
}

std::vector<GridPoint> ExperimentConfig::grid() const {
  const auto sorted = [](std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  std::vector<GridPoint> out;
  for (std::size_t u : sorted(u_grid)) {
    switch (design) {
      case Design::Exp1:
      case Design::Exp3:
        for (std::size_t k : sorted(k_grid)) out.push_back({u, k, std::nullopt});
        break;
      case Design::Exp2A:
        out.push_back({u, std::nullopt, std::nullopt});
        break;
      case Design::Exp2B:
        for (std::size_t km : sorted(k_max_grid)) out.push_back({u, std::nullopt, km});
        break;
    }
  }
  return out;
}

std::unique_ptr<Method> make_method(const std::string& name, const MethodSettings& settings) {
  if (name == "tfidf_lr") return std::make_unique<TfidfLogReg>(settings.tfidf, settings.logreg);
  if (name == "metric_knn") return std::make_unique<TfidfMetricKnn>(settings.tfidf, settings.metric);
  if (name == "emb_lr") {
    if (!settings.embeddings) throw DataError("emb_lr needs an embedding file (--embeddings)");
    return std::make_unique<EmbeddingLogReg>(settings.embeddings, settings.logreg);
  }
  throw std::invalid_argument("unknown method '" + name + "'");
}

Corpus build_experiment_corpus(const Corpus& base, Design design, const GridPoint& point,
                               std::uint64_t seed) {
  const Corpus top = select_top_authors(base, point.U);
  switch (design) {
    case Design::Exp1:
    case Design::Exp3:
      if (!point.k) throw std::invalid_argument("sampling design without k");
      return sample_per_author(top, *point.k, seed);
    case Design::Exp2A:
      return top;
    case Design::Exp2B:
      if (!point.k_max) throw std::invalid_argument("exp2b without K_max");
      return cap_per_author(top, *point.k_max, seed);
  }
  return top;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& input, const Corpus& base,
                                      const MethodSettings& settings, const ProgressFn& progress) {
  ExperimentConfig config = input;
  config.fill_defaults();
  config.validate();
  const auto points = config.grid();
  const std::size_t total = points.size() * config.methods.size();

  std::vector<ResultRow> rows;
  rows.reserve(total);
  for (const GridPoint& point : points) {
    std::optional<Corpus> corpus;
    std::optional<FoldPlan> plan;
    std::string corpus_error;
    try {
      corpus = build_experiment_corpus(base, config.design, point, config.seed);
      plan = stratified_kfold(corpus->labels(), config.folds, config.seed);
    } catch (const std::exception& e) {
      corpus_error = e.what();
    }
    for (const auto& method_name : config.methods) {
      ResultRow row;
      row.design = config.design;
      row.point = point;
      row.method = method_name;
      row.seed = config.seed;
      row.folds = config.folds;
      if (corpus) {
        row.num_reviews = corpus->size();
        row.corpus_hash = corpus->digest_hex();
      }
      if (!corpus_error.empty() || !plan) {
        row.error = corpus_error;
      } else {
        try {
          const auto method = make_method(method_name, settings);
          row.report = run_cv(*method, *corpus, *plan, CvOptions{config.workers});
        } catch (const std::exception& e) {
          row.error = e.what();
        }
      }
      if (!row.error.empty()) {
        row.report = EvalReport{};
        row.report.aggregate();
        row.report.failed_folds = config.folds;
      }
      rows.push_back(std::move(row));
      if (progress) progress(rows.back(), rows.size(), total);
    }
  }
  return rows;
}

namespace {

nlohmann::ordered_json opt(const std::optional<std::size_t>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
}

std::optional<std::size_t> get_opt(const nlohmann::ordered_json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::size_t>();
}

std::string fmt6(double v) {
  if (!std::isfinite(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string opt_str(const std::optional<std::size_t>& v) {
  return v ? std::to_string(*v) : std::string();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace

nlohmann::ordered_json rows_to_json(const std::vector<ResultRow>& rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const ResultRow& r : rows) {
    nlohmann::ordered_json j;
    j["design"] = to_string(r.design);
    j["U"] = r.point.U;
    j["k"] = opt(r.point.k);
    j["K_max"] = opt(r.point.k_max);
    j["method"] = r.method;
    j["seed"] = r.seed;
    j["folds"] = r.folds;
    j["num_reviews"] = r.num_reviews;
    j["corpus_hash"] = r.corpus_hash;
    if (!r.error.empty()) j["error"] = r.error;
    const nlohmann::ordered_json report = to_json(r.report);
    for (const auto& [key, value] : report.items()) j[key] = value;
    arr.push_back(std::move(j));
  }
  nlohmann::ordered_json doc;
  doc["format"] = "stylo-results";
  doc["version"] = 1;
  doc["rows"] = std::move(arr);
  return doc;
}

std::vector<ResultRow> rows_from_json(const nlohmann::ordered_json& doc) {
  if (doc.value("format", "") != "stylo-results") throw DataError("not a stylo results file");
  std::vector<ResultRow> rows;
  for (const auto& j : doc.at("rows")) {
    ResultRow r;
    r.design = parse_design(j.at("design").get<std::string>());
    r.point.U = j.at("U").get<std::size_t>();
    r.point.k = get_opt(j, "k");
    r.point.k_max = get_opt(j, "K_max");
    r.method = j.at("method").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.folds = j.at("folds").get<std::size_t>();
    r.num_reviews = j.at("num_reviews").get<std::size_t>();
    r.corpus_hash = j.at("corpus_hash").get<std::string>();
    r.error = j.value("error", "");
    r.report = eval_report_from_json(j);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string csv_header() {
  return "design,U,k,K_max,method,accuracy_mean,accuracy_sd,macro_f1_mean,macro_f1_sd,"
         "top3_mean,top5_mean,top10_mean,train_seconds_mean,infer_seconds_mean,corpus_hash,"
         "failed_folds";
}

std::string to_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << csv_header() << '\n';
  for (const ResultRow& r : rows) {
    const EvalReport& e = r.report;
    os << to_string(r.design) << ',' << r.point.U << ',' << opt_str(r.point.k) << ','
       << opt_str(r.point.k_max) << ',' << r.method << ',' << fmt6(e.accuracy_mean) << ','
       << fmt6(e.accuracy_sd) << ',' << fmt6(e.macro_f1_mean) << ',' << fmt6(e.macro_f1_sd)
       << ',' << fmt6(e.top3_mean) << ',' << fmt6(e.top5_mean) << ',' << fmt6(e.top10_mean)
       << ',' << fmt6(e.train_seconds_mean) << ',' << fmt6(e.infer_seconds_mean) << ','
       << r.corpus_hash << ',' << e.failed_folds << '\n';
  }
  return os.str();
}

std::vector<std::filesystem::path> emit_report(const std::vector<ResultRow>& rows,
                                               const std::filesystem::path& out_dir) {
  if (rows.empty()) throw std::invalid_argument("emit_report: no rows");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> written;
  const auto json_path = out_dir / "results.json";
  write_file(json_path, rows_to_json(rows).dump(2) + "\n");
  written.push_back(json_path);
  const auto csv_path = out_dir / "results.csv";
  write_file(csv_path, to_csv(rows));
  written.push_back(csv_path);

  // Plot data: one file per swept design, one line per (method, x).
  std::map<Design, std::vector<const ResultRow*>> by_design;
  for (const ResultRow& r : rows) by_design[r.design].push_back(&r);
  for (const auto& [design, design_rows] : by_design) {
    std::string axis;
    std::function<std::optional<std::size_t>(const ResultRow&)> x;
    switch (design) {
      case Design::Exp1:
        axis = "k";
        x = [](const ResultRow& r) { return r.point.k; };
        break;
      case Design::Exp2B:
        axis = "K_max";
        x = [](const ResultRow& r) { return r.point.k_max; };
        break;
      case Design::Exp3:
        axis = "U";
        x = [](const ResultRow& r) { return std::optional<std::size_t>(r.point.U); };
        break;
      case Design::Exp2A:
        continue;
    }
    std::vector<const ResultRow*> ordered = design_rows;
    std::stable_sort(ordered.begin(), ordered.end(), [&](const ResultRow* a, const ResultRow* b) {
      if (a->method != b->method) return a->method < b->method;
      return x(*a) < x(*b);
    });
    std::ostringstream os;
    os << "method," << axis
       << ",accuracy_mean,accuracy_sd,macro_f1_mean,macro_f1_sd,top3_mean,top5_mean,"
          "top10_mean,train_seconds_mean,infer_seconds_mean\n";
    for (const ResultRow* r : ordered) {
      const EvalReport& e = r->report;
      os << r->method << ',' << opt_str(x(*r)) << ',' << fmt6(e.accuracy_mean) << ','
         << fmt6(e.accuracy_sd) << ',' << fmt6(e.macro_f1_mean) << ',' << fmt6(e.macro_f1_sd)
         << ',' << fmt6(e.top3_mean) << ',' << fmt6(e.top5_mean) << ',' << fmt6(e.top10_mean)
         << ',' << fmt6(e.train_seconds_mean) << ',' << fmt6(e.infer_seconds_mean) << '\n';
    }
    const auto path = out_dir / ("plot_" + to_string(design) + "_" + axis + ".csv");
    write_file(path, os.str());
    written.push_back(path);
  }
  return written;
}

}  // namespace stylo
