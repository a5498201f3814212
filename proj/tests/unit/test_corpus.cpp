#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "stylo/corpus.hpp"
#include "stylo/error.hpp"
#include "stylo/random.hpp"

using namespace stylo;

namespace {

TsvResult parse(const std::string& text, TsvOptions opts = {}) {
  std::istringstream in(text);
  return parse_tsv(in, opts);
}

std::set<std::string> author_set(const Corpus& c) {
  const auto a = c.authors();
  return {a.begin(), a.end()};
}

}  // namespace

TEST_CASE("parse_tsv reads two well-formed rows") {
  const auto r = parse("a1\tgreat\t5\t2019-01-02\na2\tok\t4\t2019-03-04\n");
  CHECK(r.corpus.size() == 2);
  CHECK(r.corpus.num_authors() == 2);
  CHECK(r.skipped == 0);
  CHECK(r.corpus[0].author_id == "a1");
  CHECK(r.corpus[0].text == "great");
  CHECK(r.corpus[0].rating == 5);
  CHECK(r.corpus[1].date == "2019-03-04");
}

TEST_CASE("parse_tsv on an empty file") {
  const auto r = parse("");
  CHECK(r.corpus.size() == 0);
  CHECK(r.corpus.num_authors() == 0);
  CHECK(r.skipped == 0);
}

TEST_CASE("parse_tsv skips malformed records and counts them") {
  SUBCASE("missing text field") {
    const auto r = parse("a1\tgreat\t5\t2019-01-02\na3\n");
    CHECK(r.corpus.size() == 1);
    CHECK(r.skipped == 1);
  }
  SUBCASE("empty author or text") {
    const auto r = parse("\tno author\t5\t2019-01-01\na1\t\t3\t2019-01-01\na2\tfine\t\t\n");
    CHECK(r.corpus.size() == 1);
    CHECK(r.skipped == 2);
  }
  SUBCASE("rating outside 1..5") {
    const auto r = parse("a1\tx\t9\t2019\na1\ty\tfive\t2019\n");
    CHECK(r.corpus.size() == 0);
    CHECK(r.skipped == 2);
  }
}

TEST_CASE("parse_tsv keeps order, decodes escapes and optional columns") {
  const auto r = parse("author_id\ttext\trating\tdate\n"
                       "b\tline1\\nline2\\tend\n"
                       "a\tback\\\\slash\t\t\tR7\n");
  REQUIRE(r.corpus.size() == 2);
  CHECK(r.corpus[0].author_id == "b");
  CHECK(r.corpus[0].text == "line1\nline2\tend");
  CHECK_FALSE(r.corpus[0].rating.has_value());
  CHECK_FALSE(r.corpus[0].date.has_value());
  CHECK(r.corpus[0].review_id == "2");
  CHECK(r.corpus[1].text == "back\\slash");
  CHECK(r.corpus[1].review_id == "R7");
}

TEST_CASE("parse_tsv date prefix filter") {
  const auto r = parse("a\tx\t5\t2019-01-02\na\ty\t5\t2018-12-31\nb\tz\t5\n",
                       TsvOptions{std::string("2019")});
  CHECK(r.corpus.size() == 1);
  CHECK(r.filtered_out == 2);
  CHECK(r.skipped == 0);
}

TEST_CASE("parse_tsv on a missing file is a data error") {
  CHECK_THROWS_AS(parse_tsv(std::filesystem::path("/nonexistent/reviews.tsv")), DataError);
}

TEST_CASE("write_tsv output parses back to the same corpus") {
  std::vector<Review> rs = {test::review("r1", "x", "tab\there"), test::review("r2", "y", "nl\nx\\")};
  rs[0].rating = 3;
  rs[0].date = "2019-05-05";
  const Corpus c(rs);
  std::ostringstream out;
  write_tsv(c, out);
  std::istringstream in(out.str());
  CHECK(parse_tsv(in).corpus == c);
}

TEST_CASE("author index covers every position exactly once") {
  const Corpus c = test::counted_corpus({{"b", 3}, {"a", 2}, {"c", 4}});
  std::vector<int> seen(c.size(), 0);
  for (const auto& [author, positions] : c.author_index()) {
    for (std::size_t p : positions) {
      CHECK(c[p].author_id == author);
      ++seen[p];
    }
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
  CHECK(c.authors() == std::vector<std::string>{"a", "b", "c"});
  const auto labels = c.labels();
  CHECK(labels[0] == 1);
  CHECK(labels[3] == 0);
}

TEST_CASE("select_top_authors") {
  SUBCASE("ranking by count") {
    const Corpus c = test::counted_corpus({{"a", 5}, {"b", 3}, {"c", 9}});
    CHECK(author_set(select_top_authors(c, 2)) == std::set<std::string>{"a", "c"});
  }
  SUBCASE("lexicographic tie-break") {
    const Corpus c = test::counted_corpus({{"b", 4}, {"a", 4}});
    CHECK(author_set(select_top_authors(c, 1)) == std::set<std::string>{"a"});
  }
  SUBCASE("too few authors names the available count") {
    const Corpus c = test::counted_corpus({{"a", 1}, {"b", 1}});
    try {
      select_top_authors(c, 3);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find('2') != std::string::npos);
    }
  }
  SUBCASE("stats after selection report U authors") {
    const Corpus c = test::counted_corpus({{"a", 5}, {"b", 3}, {"c", 9}, {"d", 1}});
    CHECK(compute_stats(select_top_authors(c, 3)).num_authors == 3);
  }
}

TEST_CASE("sample_per_author") {
  SUBCASE("k equal to the count keeps everything") {
    const Corpus c = test::counted_corpus({{"a", 5}});
    CHECK(sample_per_author(c, 5, 42) == c);
  }
  SUBCASE("too few reviews names the author") {
    const Corpus c = test::counted_corpus({{"a", 300}, {"shorty", 100}});
    try {
      sample_per_author(c, 200, 42);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("shorty") != std::string::npos);
    }
    CHECK(test::author_counts(sample_per_author(c, 200, 42, true)) ==
          std::vector<std::size_t>{200, 100});
  }
  SUBCASE("exact counts, determinism, idempotence") {
    const Corpus c = test::counted_corpus({{"a", 30}, {"b", 12}, {"c", 50}});
    const Corpus s1 = sample_per_author(c, 10, 7);
    const Corpus s2 = sample_per_author(c, 10, 7);
    CHECK(s1 == s2);
    CHECK(test::author_counts(s1) == std::vector<std::size_t>{10, 10, 10});
    CHECK(sample_per_author(s1, 10, 7) == s1);
    CHECK_FALSE(sample_per_author(c, 10, 8) == s1);
  }
  SUBCASE("an author's sample does not depend on other authors") {
    const Corpus with = test::counted_corpus({{"a", 30}, {"b", 40}});
    const Corpus without = test::counted_corpus({{"a", 30}});
    const auto texts_of_a = [](const Corpus& c) {
      std::vector<std::string> t;
      for (const auto& r : c.reviews()) {
        if (r.author_id == "a") t.push_back(r.text);
      }
      return t;
    };
    CHECK(texts_of_a(sample_per_author(with, 10, 3)) == texts_of_a(sample_per_author(without, 10, 3)));
  }
}

TEST_CASE("cap_per_author") {
  SUBCASE("min rule") {
    const Corpus c = test::counted_corpus({{"a", 500}, {"b", 1200}, {"c", 2489}});
    CHECK(test::author_counts(cap_per_author(c, 1000, 42)) ==
          std::vector<std::size_t>{500, 1000, 1000});
  }
  SUBCASE("cap above every count is the identity") {
    const Corpus c = test::counted_corpus({{"a", 5}, {"b", 12}});
    CHECK(cap_per_author(c, 12, 42) == c);
    CHECK(cap_per_author(c, 1000, 42) == c);
  }
  SUBCASE("brute-force recount over 100 authors") {
    Rng rng(99);
    std::vector<std::pair<std::string, std::size_t>> counts;
    for (int i = 0; i < 100; ++i) {
      counts.emplace_back("u" + std::to_string(i), 419 + rng.below(2489 - 419 + 1));
    }
    const Corpus c = test::counted_corpus(counts);
    const Corpus capped = cap_per_author(c, 500, 42);
    std::map<std::string, std::size_t> recount;
    for (const auto& r : capped.reviews()) ++recount[r.author_id];
    for (const auto& [author, n] : counts) CHECK(recount[author] == std::min<std::size_t>(n, 500));
    CHECK(capped.size() <= c.size());
    CHECK(cap_per_author(capped, 400, 42).size() <= capped.size());
  }
  CHECK_THROWS(cap_per_author(test::counted_corpus({{"a", 1}}), 0, 1));
}

TEST_CASE("compute_stats") {
  SUBCASE("single review") {
    const Corpus c({test::review("1", "a", "abcde")});
    const auto s = compute_stats(c);
    CHECK(s.posts_per_author_min == 1);
    CHECK(s.posts_per_author_median == 1);
    CHECK(s.posts_per_author_max == 1);
    CHECK(s.chars_per_review_median == 5);
    CHECK(s.chars_per_review_mean == 5);
  }
  SUBCASE("two authors with 2 and 4 posts") {
    const auto s = compute_stats(test::counted_corpus({{"a", 2}, {"b", 4}}));
    CHECK(s.posts_per_author_mean == 3);
    CHECK(s.posts_per_author_min == 2);
    CHECK(s.posts_per_author_max == 4);
    CHECK(s.total_reviews == 6);
    CHECK(s.num_authors == 2);
  }
  SUBCASE("characters are code points") {
    const Corpus c({test::review("1", "a", "日本語"), test::review("2", "a", "ab")});
    const auto s = compute_stats(c);
    CHECK(s.chars_per_review_mean == doctest::Approx(2.5));
  }
  SUBCASE("ordering invariant") {
    Rng rng(5);
    std::vector<std::pair<std::string, std::size_t>> counts;
    for (int i = 0; i < 17; ++i) counts.emplace_back("u" + std::to_string(i), 1 + rng.below(40));
    const auto s = compute_stats(test::counted_corpus(counts));
    CHECK(s.posts_per_author_min <= s.posts_per_author_median);
    CHECK(s.posts_per_author_median <= s.posts_per_author_max);
    std::size_t total = 0;
    for (const auto& [a, n] : counts) total += n;
    CHECK(s.total_reviews == total);
  }
  CHECK_THROWS_AS(compute_stats(Corpus{}), DataError);
}

TEST_CASE("corpus serialization round-trips and is deterministic") {
  test::TempDir dir;
  std::vector<Review> rs = {test::review("9", "z", "tab\tnew\nline\\"), test::review("1", "a", "日本")};
  rs[1].rating = 4;
  rs[1].date = "2019-02-03";
  const Corpus c(rs);
  save_corpus(c, dir / "a.bin");
  save_corpus(load_corpus(dir / "a.bin"), dir / "b.bin");
  CHECK(load_corpus(dir / "a.bin") == c);
  CHECK(test::read_text(dir / "a.bin") == test::read_text(dir / "b.bin"));

  // Raw TSV is also accepted.
  test::write_text(dir / "raw.tsv", "a\thello there\t5\t2019-01-01\n");
  CHECK(load_corpus(dir / "raw.tsv").size() == 1);
}

TEST_CASE("byte-identical TSV input gives a byte-identical serialized corpus") {
  test::TempDir dir;
  std::string tsv;
  for (int i = 0; i < 40; ++i) {
    tsv += "auth" + std::to_string(i % 4) + "\treview text " + std::to_string(i) + "\t3\t2019-01-01\n";
  }
  test::write_text(dir / "in.tsv", tsv);
  for (const char* name : {"x.bin", "y.bin"}) {
    save_corpus(sample_per_author(parse_tsv(dir / "in.tsv").corpus, 5, 11), dir / name);
  }
  CHECK(test::read_text(dir / "x.bin") == test::read_text(dir / "y.bin"));
}

TEST_CASE("digest tracks content") {
  const Corpus a = test::counted_corpus({{"a", 3}});
  const Corpus b = test::counted_corpus({{"a", 3}});
  const Corpus c = test::counted_corpus({{"a", 4}});
  CHECK(a.digest() == b.digest());
  CHECK(a.digest() != c.digest());
  CHECK(a.digest_hex().size() == 16);
}

TEST_CASE("escape_field round-trip") {
  for (const std::string s : {"", "plain", "a\tb", "x\ny\r", "\\t literal", "trailing\\"}) {
    CHECK(unescape_field(escape_field(s)) == s);
    CHECK(escape_field(s).find('\t') == std::string::npos);
  }
}

TEST_CASE("quantile_sorted interpolates linearly") {
  const std::vector<double> v = {1, 2, 3, 4};
  CHECK(quantile_sorted(v, 0.0) == 1);
  CHECK(quantile_sorted(v, 1.0) == 4);
  CHECK(quantile_sorted(v, 0.5) == doctest::Approx(2.5));
  CHECK(quantile_sorted(v, 0.95) == doctest::Approx(3.85));
}
