#include "opinionxf/corpus.hpp"

#include <algorithm>

namespace opinionxf {

CorpusContext CorpusContext::build(
    const std::vector<SurveyRecord>& all_records, std::vector<DeckText> decks,
    std::size_t embed_dim,
    const std::map<std::string, std::vector<double>>* precomputed) {
  return with_vocab(build_vocabulary(all_records), std::move(decks), embed_dim,
                    precomputed);
}

CorpusContext CorpusContext::with_vocab(
    AnswerVocabulary vocab, std::vector<DeckText> decks, std::size_t embed_dim,
    const std::map<std::string, std::vector<double>>* precomputed) {
  CorpusContext ctx;
  ctx.vocab = std::move(vocab);
  ctx.embed_dim = embed_dim;
  ctx.decks = std::move(decks);
  for (const auto& deck : ctx.decks) {
    if (precomputed != nullptr) {
      auto it = precomputed->find(deck.deck_id);
      if (it != precomputed->end()) {
        if (it->second.size() != embed_dim)
          throw FormatError("precomputed vector for deck \"" + deck.deck_id +
                            "\" has wrong dimension");
        ctx.deck_vectors[deck.deck_id] = it->second;
        ctx.deck_sources[deck.deck_id] = VectorSource::kPrecomputed;
        continue;
      }
    }
    auto pv = hashed_presentation_vector(deck, embed_dim);
    ctx.deck_vectors[deck.deck_id] = std::move(pv.vec);
    ctx.deck_sources[deck.deck_id] = VectorSource::kHashed;
  }
  return ctx;
}

std::vector<EncodedItem> CorpusContext::encode(
    const std::vector<SurveyRecord>& records) const {
  std::vector<EncodedItem> items;
  items.reserve(records.size());
  for (const auto& r : records) {
    EncodedItem item;
    auto [pre, post] = encode_record(r, vocab);
    item.pre_ids = std::move(pre);
    item.post_ids = std::move(post);
    item.topic = r.topic;
    std::string deck_id = r.deck_id;
    if (deck_id.empty() || !deck_vectors.count(deck_id))
      deck_id = assign_deck(r, decks);
    item.deck_vec = deck_vectors.at(deck_id);
    items.push_back(std::move(item));
  }
  return items;
}

AnswerEmbeddingTable CorpusContext::answer_table(
    const std::map<std::string, std::vector<double>>* precomputed) const {
  EmbedFn fallback = [this](const std::string& text) {
    return hash_embed(text, embed_dim);
  };
  AnswerEmbeddingTable table;
  table.embed_dim = embed_dim;
  table.per_question.reserve(vocab.question_count());
  for (std::size_t q = 0; q < vocab.question_count(); ++q) {
    Tensor m(vocab.size(q), embed_dim);
    for (std::size_t id = 0; id < vocab.size(q); ++id) {
      const std::string& answer = vocab.answer_of(q, id);
      std::vector<double> vec;
      if (precomputed != nullptr) {
        auto it = precomputed->find("q" + std::to_string(q) + ":" + answer);
        if (it != precomputed->end()) {
          if (it->second.size() != embed_dim)
            throw FormatError("precomputed answer vector has wrong dimension");
          vec = it->second;
        }
      }
      if (vec.empty()) vec = fallback(answer);
      std::copy(vec.begin(), vec.end(), m.row_ptr(id));
    }
    table.per_question.push_back(std::move(m));
  }
  return table;
}

}  // namespace opinionxf
