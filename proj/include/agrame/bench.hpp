#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agrame/core.hpp"
#include "agrame/propcite.hpp"

namespace agrame {

// Synthetic citation benchmark. Every fact is a random direction with a few
// unique words; a context holds a few facts, one sentence each. Answer
// propositions restate one fact each. Some are backed by a context that also
// competes with a paraphrase (nearby direction, different words) placed in
// another context; some are hallucinated and match nothing. Sentence
// encodings perturb the fact direction mildly, isolated proposition
// encodings more strongly.
struct SynthCitationConfig {
  std::size_t queries = 100;
  std::size_t contexts = 5;
  std::size_t facts_per_context = 3;
  std::size_t sentences = 3;
  std::size_t max_propositions = 2;
  std::size_t words_per_fact = 4;
  // Chance that all propositions of a sentence come from one context.
  double same_source_rate = 0.7;
  std::size_t dim = 16;
  double paraphrase_rate = 0.5;
  double hallucination_rate = 0.15;
  double context_noise = 0.3;
  double sentence_noise = 0.35;
  double isolated_noise = 0.8;
  std::uint64_t seed = 11;
};

struct SynthCitationQuery {
  GeneratedAnswer answer;
  std::vector<PassageRecord> contexts;  // K, in citation order
};

// Context ids are "<qid>-c<k>"; answer sentence texts are the proposition
// words joined by "and" with a closing period.
std::vector<SynthCitationQuery> synth_citations(const SynthCitationConfig& cfg);

}  // namespace agrame
