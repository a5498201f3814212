#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "helpers.hpp"
#include "stylo/error.hpp"
#include "stylo/evaluation.hpp"
#include "stylo/methods.hpp"
#include "stylo/random.hpp"
#include "stylo/synthetic.hpp"

using namespace stylo;

namespace {

// Per-class F1 from explicit confusion counts, classes taken from y_true.
double f1_oracle(const std::vector<int>& t, const std::vector<int>& p) {
  std::set<int> classes(t.begin(), t.end());
  double sum = 0;
  for (int c : classes) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (p[i] == c && t[i] == c) ++tp;
      if (p[i] == c && t[i] != c) ++fp;
      if (p[i] != c && t[i] == c) ++fn;
    }
    sum += tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
  }
  return sum / classes.size();
}

double topk_oracle(const std::vector<int>& t, const std::vector<std::vector<int>>& r, std::size_t k) {
  double hits = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (r[i][j] == t[i]) {
        ++hits;
        break;
      }
    }
  }
  return hits / t.size();
}

// Fails whenever the training split contains the given review id.
class PoisonedMethod : public Method {
 public:
  explicit PoisonedMethod(std::string poison) : poison_(std::move(poison)) {}
  std::string name() const override { return "poisoned"; }
  std::unique_ptr<TrainedModel> fit(const Corpus& train, std::span<const int> labels,
                                    std::size_t num_classes) const override {
    for (const auto& r : train.reviews()) {
      if (r.review_id == poison_) throw std::runtime_error("poisoned training split");
    }
    return inner_.fit(train, labels, num_classes);
  }

 private:
  std::string poison_;
  TfidfLogReg inner_;
};

Corpus separable_corpus(std::size_t authors, std::size_t per_author) {
  std::vector<Review> reviews;
  const std::vector<std::string> vocab = {"ぁあぃいぅ", "かがきぎく", "さざしじす", "たちつてと",
                                          "なにぬねの", "はばぱひび", "まみむめも", "やゆよらり"};
  for (std::size_t a = 0; a < authors; ++a) {
    for (std::size_t i = 0; i < per_author; ++i) {
      reviews.push_back(test::review(std::to_string(reviews.size()), "auth" + std::to_string(a),
                                     vocab[a] + " " + vocab[a] + std::to_string(i)));
    }
  }
  return Corpus(std::move(reviews));
}

}  // namespace

TEST_CASE("stratified_kfold examples") {
  SUBCASE("two classes of five, five folds") {
    const std::vector<int> y = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    const auto plan = stratified_kfold(y, 5, 42);
    for (std::size_t f = 0; f < 5; ++f) {
      const auto idx = plan.test_indices(f);
      REQUIRE(idx.size() == 2);
      CHECK(y[idx[0]] != y[idx[1]]);
    }
    CHECK(stratified_kfold(y, 5, 42).assignments == plan.assignments);
  }
  SUBCASE("103 samples of one class") {
    const std::vector<int> y(103, 0);
    const auto plan = stratified_kfold(y, 5, 42);
    std::vector<std::size_t> sizes(5, 0);
    for (int a : plan.assignments) ++sizes[a];
    std::sort(sizes.rbegin(), sizes.rend());
    CHECK(sizes == std::vector<std::size_t>{21, 21, 21, 20, 20});
  }
  SUBCASE("class smaller than the fold count names the class") {
    const std::vector<int> y = {0, 0, 0, 0, 0, 7, 7};
    try {
      stratified_kfold(y, 5, 1);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("class 7") != std::string::npos);
    }
  }
}

TEST_CASE("stratified_kfold partitions and balances random label vectors") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t classes = 2 + rng.below(49);
    const std::size_t folds = 2 + rng.below(9);
    std::vector<int> y;
    for (std::size_t c = 0; c < classes; ++c) {
      const std::size_t n = folds + rng.below(30);
      for (std::size_t i = 0; i < n; ++i) y.push_back(static_cast<int>(c));
    }
    rng.shuffle(std::span(y));
    const auto plan = stratified_kfold(y, folds, rng.next());
    std::vector<int> seen(y.size(), 0);
    std::map<int, std::vector<std::size_t>> per_class;
    for (std::size_t f = 0; f < folds; ++f) {
      for (std::size_t i : plan.test_indices(f)) {
        ++seen[i];
        auto& counts = per_class[y[i]];
        counts.resize(folds, 0);
        ++counts[f];
      }
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    for (const auto& [c, counts] : per_class) {
      CHECK(*std::max_element(counts.begin(), counts.end()) -
                *std::min_element(counts.begin(), counts.end()) <=
            1);
    }
  }
}

TEST_CASE("macro_f1 examples") {
  const std::vector<int> t = {0, 0, 1, 1}, p = {0, 1, 1, 1};
  CHECK(macro_f1(t, p) == doctest::Approx((2.0 / 3 + 4.0 / 5) / 2).epsilon(1e-15));
  CHECK(macro_f1(t, t) == 1.0);
  const std::vector<int> relabelled_t = {5, 5, 2, 2}, relabelled_p = {5, 2, 2, 2};
  CHECK(macro_f1(relabelled_t, relabelled_p) == doctest::Approx(macro_f1(t, p)).epsilon(1e-15));
  const std::vector<int> short_p = {0};
  CHECK_THROWS_AS(macro_f1(t, short_p), std::invalid_argument);
  // A class never predicted and never right scores 0.
  const std::vector<int> t2 = {0, 1}, p2 = {0, 0};
  CHECK(macro_f1(t2, p2) == doctest::Approx((2.0 / 3 + 0) / 2));
}

TEST_CASE("top_k_accuracy examples") {
  const std::vector<int> t = {2};
  const std::vector<std::vector<int>> r = {{1, 2, 0}};
  CHECK(top_k_accuracy(t, r, 1) == 0.0);
  CHECK(top_k_accuracy(t, r, 2) == 1.0);
  CHECK(top_k_accuracy(t, r, 3) == 1.0);
  CHECK_THROWS_AS(top_k_accuracy(t, r, 4), std::invalid_argument);
}

TEST_CASE("metrics match brute-force oracles and top-k is monotone") {
  Rng rng(22);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t classes = 2 + rng.below(11);
    const std::size_t n = 1 + rng.below(100);
    std::vector<int> t(n), p(n);
    std::vector<std::vector<int>> rankings(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = static_cast<int>(rng.below(classes));
      std::vector<double> scores(classes);
      for (double& s : scores) s = rng.uniform();
      std::vector<int> order(classes);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });
      rankings[i] = order;
      p[i] = order[0];
    }
    CHECK(std::abs(macro_f1(t, p) - f1_oracle(t, p)) < 1e-9);
    double prev = 0;
    for (std::size_t k : {1ul, 3ul, 5ul, 10ul}) {
      const std::size_t kk = std::min(k, classes);
      const double v = top_k_accuracy(t, rankings, kk);
      CHECK(std::abs(v - topk_oracle(t, rankings, kk)) < 1e-9);
      CHECK(v >= prev);
      prev = v;
    }
    CHECK(top_k_accuracy(t, rankings, 1) == accuracy(t, p));
    CHECK(top_k_accuracy(t, rankings, classes) == 1.0);
  }
}

TEST_CASE("aggregate uses population SD over completed folds") {
  EvalReport r;
  for (double a : {0.5, 0.7}) {
    FoldResult f;
    f.accuracy = f.top1 = a;
    f.top3 = f.top5 = f.top10 = 1;
    r.per_fold.push_back(f);
  }
  FoldResult failed;
  failed.failed = true;
  r.per_fold.push_back(failed);
  r.aggregate();
  CHECK(r.failed_folds == 1);
  CHECK(r.accuracy_mean == doctest::Approx(0.6));
  CHECK(r.accuracy_sd == doctest::Approx(0.1));
  CHECK(r.topk_coherent());
  r.per_fold[0].top3 = 0.4;
  CHECK_FALSE(r.topk_coherent());
}

TEST_CASE("report JSON round-trip") {
  EvalReport r;
  FoldResult f;
  f.fold = 0;
  f.accuracy = f.top1 = 0.25;
  f.macro_f1 = 0.125;
  f.top3 = 0.5;
  f.top5 = f.top10 = 0.75;
  f.train_seconds = 1.5;
  r.per_fold.push_back(f);
  FoldResult bad;
  bad.fold = 1;
  bad.failed = true;
  bad.error = "boom";
  r.per_fold.push_back(bad);
  r.aggregate();
  const auto back = eval_report_from_json(to_json(r));
  CHECK(back.failed_folds == 1);
  CHECK(back.per_fold[1].error == "boom");
  CHECK(back.per_fold[0].macro_f1 == 0.125);
  CHECK(back.accuracy_mean == r.accuracy_mean);
  CHECK(to_json(back) == to_json(r));
}

TEST_CASE("run_cv on a separable corpus") {
  const Corpus c = separable_corpus(4, 10);
  const auto plan = stratified_kfold(c.labels(), 5, 42);
  const auto report = run_cv(TfidfLogReg{}, c, plan);
  CHECK(report.failed_folds == 0);
  CHECK(report.accuracy_mean == 1.0);
  CHECK(report.accuracy_sd == 0.0);
  CHECK(report.topk_coherent());
  for (const auto& f : report.per_fold) {
    CHECK(f.top1 == f.accuracy);
    CHECK(f.train_size + f.test_size == c.size());
  }
  const auto knn = run_cv(TfidfMetricKnn{}, c, plan);
  CHECK(knn.topk_coherent());
  CHECK(knn.failed_folds == 0);
}

TEST_CASE("run_cv records failed folds and aggregates the rest") {
  const Corpus c = separable_corpus(3, 10);
  const auto plan = stratified_kfold(c.labels(), 5, 42);
  const std::size_t poisoned_fold = static_cast<std::size_t>(plan.assignments[0]);
  // Review "0" is in the training split of every fold except its own.
  const auto report = run_cv(PoisonedMethod("0"), c, plan);
  CHECK(report.failed_folds == 4);
  for (const auto& f : report.per_fold) {
    CHECK(f.failed == (f.fold != poisoned_fold));
    if (f.failed) CHECK(f.error.find("poisoned") != std::string::npos);
  }
  CHECK(report.accuracy_mean == report.per_fold[poisoned_fold].accuracy);
  CHECK_THROWS(run_cv(TfidfLogReg{}, c, stratified_kfold(std::vector<int>(10, 0), 5, 1)));
}

TEST_CASE("parallel folds reproduce serial metrics") {
  const Corpus c = generate(SyntheticSpec{4, 20});
  const auto plan = stratified_kfold(c.labels(), 5, 3);
  const auto serial = run_cv(TfidfLogReg{}, c, plan);
  const auto parallel = run_cv(TfidfLogReg{}, c, plan, CvOptions{3});
  for (std::size_t f = 0; f < 5; ++f) {
    CHECK(serial.per_fold[f].accuracy == parallel.per_fold[f].accuracy);
    CHECK(serial.per_fold[f].top3 == parallel.per_fold[f].top3);
  }
}

TEST_CASE("fold vectorizers never see test-only n-grams") {
  Rng rng(23);
  const std::vector<std::string> alphabet = {"a", "b", "c", "d", "e", "x", "y", "日", "本", " "};
  std::vector<Review> reviews;
  for (int i = 0; i < 30; ++i) {
    std::string text;
    const std::size_t len = 3 + rng.below(10);
    for (std::size_t j = 0; j < len; ++j) text += alphabet[rng.below(alphabet.size())];
    reviews.push_back(test::review(std::to_string(i), "a" + std::to_string(i % 3), text));
  }
  const Corpus c(reviews);
  const auto plan = stratified_kfold(c.labels(), 5, 9);
  const TfidfLogReg method;
  const auto labels = c.labels();
  for (std::size_t f = 0; f < 5; ++f) {
    const auto train_idx = plan.train_indices(f);
    const Corpus train = c.subset(train_idx);
    std::vector<int> y;
    for (std::size_t i : train_idx) y.push_back(labels[i]);
    const auto model = method.fit(train, y, c.num_authors());
    REQUIRE(model->vectorizer() != nullptr);
    std::set<std::string> train_grams;
    for (const auto& r : train.reviews()) {
      for (const auto& g : char_ngrams(r.text, 2, 3)) train_grams.insert(g);
    }
    for (const auto& term : model->vectorizer()->terms()) CHECK(train_grams.count(term) == 1);
  }
}
