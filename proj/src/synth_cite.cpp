#include "agrame/bench.hpp"

#include <cmath>
#include <cstdio>

#include "rng.hpp"

namespace agrame {
namespace {

struct Fact {
  std::vector<double> dir;
  std::vector<std::string> words;
};

class Builder {
 public:
  Builder(const SynthCitationConfig& cfg, std::uint64_t seed, std::size_t& word_counter)
      : cfg_(cfg), rng_(seed), words_(word_counter) {}

  std::vector<double> direction() {
    std::vector<double> v(cfg_.dim);
    double n = 0.0;
    do {
      n = 0.0;
      for (auto& x : v) {
        x = rng_.normal();
        n += x * x;
      }
    } while (n == 0.0);
    for (auto& x : v) x /= std::sqrt(n);
    return v;
  }

  // dir + sigma * noise with per-coordinate variance 1/dim, left unnormalized.
  std::vector<double> perturb(const std::vector<double>& dir, double sigma) {
    std::vector<double> out(dir.size());
    const double s = sigma / std::sqrt(static_cast<double>(dir.size()));
    for (std::size_t a = 0; a < dir.size(); ++a) out[a] = dir[a] + s * rng_.normal();
    return out;
  }

  Fact fact() { return fact_near(direction()); }

  Fact fact_near(std::vector<double> dir) {
    Fact f;
    f.dir = std::move(dir);
    for (std::size_t k = 0; k < cfg_.words_per_fact; ++k) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "w%06zu", words_++);
      f.words.push_back(buf);
    }
    return f;
  }

  Fact paraphrase(const Fact& of) {
    const double tau = rng_.uniform(0.2, 1.5);
    auto v = perturb(of.dir, tau);
    std::vector<double> d(v.begin(), v.end());
    double n = 0.0;
    for (double x : d) n += x * x;
    for (auto& x : d) x /= std::sqrt(n);
    return fact_near(std::move(d));
  }

  PassageRecord context(const std::string& id, const std::vector<Fact>& facts) {
    PassageRecord r;
    r.id = id;
    std::vector<double> rows;
    std::string text;
    std::uint32_t tok = 0;
    for (const auto& f : facts) {
      std::string sentence;
      for (const auto& w : f.words) {
        auto row = perturb(f.dir, cfg_.context_noise);
        rows.insert(rows.end(), row.begin(), row.end());
        if (!sentence.empty()) sentence += ' ';
        sentence += w;
      }
      sentence += '.';
      const auto n = static_cast<std::uint32_t>(f.words.size());
      r.sentences.push_back({tok, tok + n});
      tok += n;
      if (!text.empty()) text += ' ';
      text += sentence;
      r.sentence_texts.push_back(std::move(sentence));
    }
    r.text = std::move(text);
    r.embeddings = EmbeddingMatrix::normalized(tok, cfg_.dim, std::move(rows));
    return r;
  }

  AnswerSentence sentence(const std::vector<const Fact*>& props) {
    AnswerSentence s;
    std::vector<double> rows;
    std::uint32_t tok = 0;
    for (std::size_t k = 0; k < props.size(); ++k) {
      if (k > 0) {
        auto filler = direction();
        rows.insert(rows.end(), filler.begin(), filler.end());
        s.text += " and";
        ++tok;
      }
      PropositionMask mask;
      std::vector<double> iso;
      for (const auto& w : props[k]->words) {
        auto row = perturb(props[k]->dir, cfg_.sentence_noise);
        rows.insert(rows.end(), row.begin(), row.end());
        auto irow = perturb(props[k]->dir, cfg_.isolated_noise);
        iso.insert(iso.end(), irow.begin(), irow.end());
        mask.tokens.push_back(tok++);
        if (!s.text.empty()) s.text += ' ';
        s.text += w;
      }
      s.propositions.push_back(std::move(mask));
      s.isolated_encodings.push_back(EmbeddingMatrix::normalized(props[k]->words.size(), cfg_.dim, std::move(iso)));
    }
    s.text += '.';
    s.encoding = EmbeddingMatrix::normalized(tok, cfg_.dim, std::move(rows));
    return s;
  }

  detail::Rng& rng() { return rng_; }

 private:
  const SynthCitationConfig& cfg_;
  detail::Rng rng_;
  std::size_t& words_;
};

}  // namespace

std::vector<SynthCitationQuery> synth_citations(const SynthCitationConfig& cfg) {
  if (cfg.contexts == 0 || cfg.facts_per_context == 0 || cfg.dim == 0 || cfg.max_propositions == 0)
    throw Error(ErrorKind::InvalidArgument, "citation benchmark sizes must be positive");
  if (cfg.sentences * cfg.max_propositions > cfg.contexts * cfg.facts_per_context)
    throw Error(ErrorKind::InvalidArgument, "not enough context facts for the requested answer size");

  std::vector<SynthCitationQuery> out;
  std::size_t word_counter = 0;
  for (std::size_t q = 0; q < cfg.queries; ++q) {
    Builder b(cfg, detail::mix_seed(cfg.seed, q), word_counter);
    char qid[16];
    std::snprintf(qid, sizeof qid, "c%03zu", q);

    std::vector<std::vector<Fact>> held(cfg.contexts);
    std::vector<std::vector<std::size_t>> unused(cfg.contexts);
    for (std::size_t k = 0; k < cfg.contexts; ++k) {
      for (std::size_t f = 0; f < cfg.facts_per_context; ++f) {
        held[k].push_back(b.fact());
        unused[k].push_back(f);
      }
      b.rng().shuffle(unused[k]);
    }
    auto take_from = [&](std::size_t ctx) {
      std::size_t f = unused[ctx].back();
      unused[ctx].pop_back();
      return f;
    };
    auto pick_context = [&](std::size_t need) {
      std::vector<std::size_t> eligible;
      for (std::size_t k = 0; k < cfg.contexts; ++k)
        if (unused[k].size() >= need) eligible.push_back(k);
      return eligible.empty() ? cfg.contexts : eligible[b.rng().below(eligible.size())];
    };

    struct Planned {
      bool invented;
      std::size_t ctx, fact;
    };
    std::vector<Fact> invented;
    invented.reserve(cfg.sentences * cfg.max_propositions);
    std::vector<std::vector<Planned>> plan(cfg.sentences);
    std::vector<std::pair<std::size_t, Fact>> paraphrases;
    for (std::size_t s = 0; s < cfg.sentences; ++s) {
      const std::size_t n_props = 1 + b.rng().below(cfg.max_propositions);
      std::size_t source = cfg.contexts;
      if (b.rng().uniform() < cfg.same_source_rate) source = pick_context(n_props);
      for (std::size_t k = 0; k < n_props; ++k) {
        if (b.rng().uniform() < cfg.hallucination_rate) {
          invented.push_back(b.fact());
          plan[s].push_back({true, 0, invented.size() - 1});
          continue;
        }
        std::size_t ctx = source < cfg.contexts ? source : pick_context(1);
        std::size_t f = take_from(ctx);
        plan[s].push_back({false, ctx, f});
        if (cfg.contexts > 1 && b.rng().uniform() < cfg.paraphrase_rate) {
          std::size_t other = b.rng().below(cfg.contexts - 1);
          if (other >= ctx) ++other;
          paraphrases.emplace_back(other, b.paraphrase(held[ctx][f]));
        }
      }
    }
    // Paraphrases are appended after planning so slot indices stay stable.
    std::vector<std::vector<Fact>> facts = held;
    for (auto& [ctx, f] : paraphrases) {
      auto& v = facts[ctx];
      v.insert(v.begin() + static_cast<std::ptrdiff_t>(b.rng().below(v.size() + 1)), std::move(f));
    }

    SynthCitationQuery sq;
    sq.answer.query_id = qid;
    for (std::size_t k = 0; k < cfg.contexts; ++k)
      sq.contexts.push_back(b.context(std::string(qid) + "-c" + std::to_string(k), facts[k]));
    for (std::size_t s = 0; s < cfg.sentences; ++s) {
      std::vector<const Fact*> props;
      for (const auto& p : plan[s]) props.push_back(p.invented ? &invented[p.fact] : &held[p.ctx][p.fact]);
      sq.answer.sentences.push_back(b.sentence(props));
    }
    out.push_back(std::move(sq));
  }
  return out;
}

}  // namespace agrame
