#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "stylo/corpus.hpp"

namespace test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("stylo_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline stylo::Review review(std::string id, std::string author, std::string text) {
  stylo::Review r;
  r.review_id = std::move(id);
  r.author_id = std::move(author);
  r.text = std::move(text);
  return r;
}

// Corpus where author a_i has counts[i] reviews with distinct texts.
inline stylo::Corpus counted_corpus(const std::vector<std::pair<std::string, std::size_t>>& counts) {
  std::vector<stylo::Review> reviews;
  std::size_t id = 0;
  for (const auto& [author, n] : counts) {
    for (std::size_t i = 0; i < n; ++i) {
      reviews.push_back(review(std::to_string(++id), author,
                               author + " review number " + std::to_string(i)));
    }
  }
  return stylo::Corpus(std::move(reviews));
}

inline std::vector<std::size_t> author_counts(const stylo::Corpus& c) {
  std::vector<std::size_t> out;
  for (const auto& [a, pos] : c.author_index()) out.push_back(pos.size());
  return out;
}

}  // namespace test
