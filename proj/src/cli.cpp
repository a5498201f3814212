#include "stylo/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "stylo/corpus.hpp"
#include "stylo/error.hpp"
#include "stylo/experiments.hpp"
#include "stylo/features.hpp"
#include "stylo/preprocess.hpp"
#include "stylo/synthetic.hpp"

namespace stylo::cli {

namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::vector<std::size_t> parse_list(const std::string& text, const char* flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size()) {
      throw UsageError(std::string(flag) + ": expected a comma-separated list of counts, got '" +
                       text + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void print_stats(const CorpusStats& s, std::ostream& out) {
  out << "num_authors_U=" << s.num_authors << '\n'
      << "total_reviews_N=" << s.total_reviews << '\n'
      << "posts_per_author_min=" << s.posts_per_author_min << '\n'
      << "posts_per_author_median=" << s.posts_per_author_median << '\n'
      << "posts_per_author_max=" << s.posts_per_author_max << '\n'
      << "posts_per_author_mean=" << s.posts_per_author_mean << '\n'
      << "posts_per_author_sd=" << s.posts_per_author_sd << '\n'
      << "chars_per_review_median=" << s.chars_per_review_median << '\n'
      << "chars_per_review_mean=" << s.chars_per_review_mean << '\n'
      << "chars_per_review_p95=" << s.chars_per_review_p95 << '\n';
}

// Flag values left unset fall through to the config file, then to defaults.
struct RunFlags {
  std::string corpus, config, design, methods, u_grid, k_grid, k_max, embeddings, out;
  std::optional<std::size_t> u, k, folds, workers;
  std::optional<std::uint64_t> seed;
};

void apply_config_file(const std::string& path, ExperimentConfig& cfg, MethodSettings& settings,
                       std::string& corpus, std::string& embeddings, std::string& out) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("config file " + path + ": " + e.what());
  }
  if (j.contains("design")) cfg.design = parse_design(j["design"].get<std::string>());
  if (j.contains("methods")) cfg.methods = j["methods"].get<std::vector<std::string>>();
  if (j.contains("u_grid")) cfg.u_grid = j["u_grid"].get<std::vector<std::size_t>>();
  if (j.contains("k_grid")) cfg.k_grid = j["k_grid"].get<std::vector<std::size_t>>();
  if (j.contains("k_max")) cfg.k_max_grid = j["k_max"].get<std::vector<std::size_t>>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("folds")) cfg.folds = j["folds"].get<std::size_t>();
  if (j.contains("workers")) cfg.workers = j["workers"].get<std::size_t>();
  if (j.contains("corpus")) corpus = j["corpus"].get<std::string>();
  if (j.contains("embeddings")) embeddings = j["embeddings"].get<std::string>();
  if (j.contains("out")) out = j["out"].get<std::string>();
  if (j.contains("tfidf")) {
    const auto& t = j["tfidf"];
    settings.tfidf.ngram_min = t.value("ngram_min", settings.tfidf.ngram_min);
    settings.tfidf.ngram_max = t.value("ngram_max", settings.tfidf.ngram_max);
    settings.tfidf.max_features = t.value("max_features", settings.tfidf.max_features);
  }
  if (j.contains("logreg")) {
    const auto& l = j["logreg"];
    settings.logreg.inverse_reg_C = l.value("C", settings.logreg.inverse_reg_C);
    settings.logreg.max_iter = l.value("max_iter", settings.logreg.max_iter);
    settings.logreg.tol = l.value("tol", settings.logreg.tol);
  }
  if (j.contains("metric")) {
    const auto& m = j["metric"];
    settings.metric.embed_dim = m.value("embed_dim", settings.metric.embed_dim);
    settings.metric.margin = m.value("margin", settings.metric.margin);
    settings.metric.epochs = m.value("epochs", settings.metric.epochs);
    settings.metric.batch_authors = m.value("batch_authors", settings.metric.batch_authors);
    settings.metric.batch_per_author = m.value("batch_per_author", settings.metric.batch_per_author);
    settings.metric.learning_rate = m.value("learning_rate", settings.metric.learning_rate);
    settings.metric.knn_k = m.value("knn_k", settings.metric.knn_k);
  }
}

int do_run(const RunFlags& f, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  MethodSettings settings;
  std::string corpus_path, embeddings_path, out_dir;
  if (!f.config.empty()) {
    apply_config_file(f.config, cfg, settings, corpus_path, embeddings_path, out_dir);
  }
  if (!f.design.empty()) cfg.design = parse_design(f.design);
  if (!f.methods.empty()) cfg.methods = split_names(f.methods);
  if (!f.u_grid.empty()) cfg.u_grid = parse_list(f.u_grid, "--u-grid");
  if (f.u) cfg.u_grid = {*f.u};
  if (!f.k_grid.empty()) cfg.k_grid = parse_list(f.k_grid, "--k-grid");
  if (f.k) cfg.k_grid = {*f.k};
  if (!f.k_max.empty()) cfg.k_max_grid = parse_list(f.k_max, "--k-max");
  if (f.seed) cfg.seed = *f.seed;
  if (f.folds) cfg.folds = *f.folds;
  if (f.workers) cfg.workers = *f.workers;
  if (!f.corpus.empty()) corpus_path = f.corpus;
  if (!f.embeddings.empty()) embeddings_path = f.embeddings;
  if (!f.out.empty()) out_dir = f.out;
  settings.metric.seed = cfg.seed;

  if (corpus_path.empty()) throw UsageError("run: --corpus is required");
  if (out_dir.empty()) throw UsageError("run: --out is required");
  cfg.fill_defaults();
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const Corpus base = load_corpus(corpus_path);
  if (!embeddings_path.empty()) {
    settings.embeddings = std::make_shared<const DenseMatrix>(load_embeddings(embeddings_path));
  }
  const auto progress = [&](const ResultRow& r, std::size_t done, std::size_t total) {
    err << "progress design=" << to_string(r.design) << " U=" << r.point.U
        << " k=" << (r.point.k ? std::to_string(*r.point.k) : "")
        << " K_max=" << (r.point.k_max ? std::to_string(*r.point.k_max) : "")
        << " method=" << r.method << " accuracy_mean=" << r.report.accuracy_mean
        << " top5_mean=" << r.report.top5_mean << " failed_folds=" << r.report.failed_folds
        << " done=" << done << " total=" << total << '\n';
  };
  const auto rows = run_experiment(cfg, base, settings, progress);
  for (const auto& p : emit_report(rows, out_dir)) out << p.string() << '\n';
  std::size_t failed_rows = 0;
  for (const auto& r : rows) failed_rows += !r.error.empty();
  if (failed_rows == rows.size()) {
    err << "error: every result row failed: " << rows.front().error << '\n';
    return 2;
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"stylo: stylometric authorship attribution experiments"};
  app.name(args.empty() ? "stylo" : args[0]);
  app.require_subcommand(1, 1);

  // ingest
  std::string in_input, in_year, in_patterns, in_out;
  std::size_t in_min_chars = kDefaultMinChars;
  auto* ingest = app.add_subcommand("ingest", "Parse, clean and filter a review TSV");
  ingest->add_option("--input", in_input, "Review TSV (author_id, text, rating, date)")
      ->required();
  ingest->add_option("--year", in_year, "Keep only reviews whose date starts with this");
  ingest->add_option("--min-chars", in_min_chars, "Minimum review length in code points");
  ingest->add_option("--patterns", in_patterns, "Boilerplate pattern file");
  ingest->add_option("--out", in_out, "Output corpus file")->required();

  // stats
  std::string st_corpus;
  auto* stats = app.add_subcommand("stats", "Print corpus statistics");
  stats->add_option("--corpus", st_corpus, "Corpus file or TSV")->required();

  // synth
  SyntheticSpec spec;
  std::string sy_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic review TSV");
  synth->add_option("--u", spec.U, "Number of authors")->required();
  synth->add_option("--k", spec.k, "Reviews per author")->required();
  synth->add_option("--signature", spec.signature_strength, "Author signal strength in [0,1]");
  synth->add_option("--boilerplate", spec.boilerplate_rate, "Boilerplate rate in [0,1]");
  synth->add_option("--median", spec.length_median, "Median review length (code points)");
  synth->add_option("--p95", spec.length_p95, "95th percentile review length");
  synth->add_option("--topic-vocab", spec.shared_topic_vocab_size, "Shared topic vocabulary size");
  synth->add_option("--seed", spec.seed, "Random seed");
  synth->add_option("--out", sy_out, "Output TSV")->required();

  // run
  RunFlags rf;
  auto* runc = app.add_subcommand("run", "Run an experiment design and write reports");
  runc->add_option("--corpus", rf.corpus, "Corpus file or TSV");
  runc->add_option("--config", rf.config, "JSON config file (flags take precedence)");
  runc->add_option("--design", rf.design, "exp1 | exp2a | exp2b | exp3");
  runc->add_option("--methods", rf.methods, "Comma list of tfidf_lr, emb_lr, metric_knn");
  runc->add_option("--u", rf.u, "Number of authors (single grid point)");
  runc->add_option("--k", rf.k, "Reviews per author (single grid point)");
  runc->add_option("--k-max", rf.k_max, "Per-author cap(s), comma list");
  runc->add_option("--u-grid", rf.u_grid, "Comma list of U values");
  runc->add_option("--k-grid", rf.k_grid, "Comma list of k values");
  runc->add_option("--seed", rf.seed, "Seed for sampling, folds and training");
  runc->add_option("--folds", rf.folds, "Cross-validation folds");
  runc->add_option("--embeddings", rf.embeddings, "EMB1 embedding file for emb_lr");
  runc->add_option("--workers", rf.workers, "Folds evaluated concurrently");
  runc->add_option("--out", rf.out, "Output directory");

  // report
  std::string rp_in, rp_format = "csv";
  auto* report = app.add_subcommand("report", "Re-emit a results.json as CSV or JSON");
  report->add_option("--in", rp_in, "results.json")->required();
  report->add_option("--format", rp_format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*ingest) {
      TsvOptions opts;
      if (!in_year.empty()) opts.date_prefix = in_year;
      const TsvResult parsed = parse_tsv(in_input, opts);
      const TextCleaner cleaner = TextCleaner::resolve(in_patterns);
      CleaningReport rep;
      const Corpus corpus = preprocess(parsed.corpus, cleaner, in_min_chars, &rep);
      save_corpus(corpus, in_out);
      err << "ingest records_kept=" << corpus.size() << " authors=" << corpus.num_authors()
          << " skipped_malformed=" << parsed.skipped << " filtered_by_year=" << parsed.filtered_out
          << " removed_boilerplate_spans=" << rep.removed_boilerplate_spans
          << " normalized_whitespace_runs=" << rep.normalized_whitespace_runs
          << " dropped_short_reviews=" << rep.dropped_short_reviews << '\n';
      return 0;
    }
    if (*stats) {
      print_stats(compute_stats(load_corpus(st_corpus)), out);
      return 0;
    }
    if (*synth) {
      try {
        spec.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const Corpus corpus = generate(spec);
      std::ofstream f(sy_out, std::ios::binary);
      if (!f) throw DataError("cannot write " + sy_out);
      write_tsv(corpus, f);
      err << "synth reviews=" << corpus.size() << " authors=" << corpus.num_authors()
          << " digest=" << corpus.digest_hex() << '\n';
      return 0;
    }
    if (*runc) return do_run(rf, out, err);
    if (*report) {
      std::ifstream f(rp_in);
      if (!f) throw DataError("cannot open " + rp_in);
      nlohmann::ordered_json doc;
      try {
        doc = nlohmann::ordered_json::parse(f);
      } catch (const nlohmann::json::exception& e) {
        throw DataError(rp_in + ": " + e.what());
      }
      const auto rows = rows_from_json(doc);
      if (rp_format == "csv") {
        out << to_csv(rows);
      } else {
        out << rows_to_json(rows).dump(2) << '\n';
      }
      return 0;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace stylo::cli
