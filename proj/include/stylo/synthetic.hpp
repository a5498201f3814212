#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "stylo/corpus.hpp"

namespace stylo {

// Knobs of the synthetic review generator. Author signal comes from two
// sources, both scaled by signature_strength: a per-review marker sequence
// built from code points private to the author, and a preference for a few
// sentence endings out of a shared pool. At strength 0 the labels carry no
// textual signal.
struct SyntheticSpec {
  std::size_t U = 10;
  std::size_t k = 100;
  double signature_strength = 0.9;
  double boilerplate_rate = 0.3;
  double length_median = 60;  // code points
  double length_p95 = 432;
  std::size_t shared_topic_vocab_size = 2'000;
  std::uint64_t seed = 42;

  void validate() const;
};

// Largest U the private marker alphabet supports.
std::size_t synthetic_max_authors();

// Marker sequences injected for author i (0-based, generation order).
std::vector<std::string> synthetic_markers(std::size_t author);

std::string synthetic_author_id(std::size_t author);

// Shared sentences injected at boilerplate_rate.
const std::vector<std::string>& synthetic_boilerplate();

Corpus generate(const SyntheticSpec& spec);

}  // namespace stylo
