#pragma once

#include <map>
#include <string>
#include <vector>

#include "opinionxf/dataset.hpp"
#include "opinionxf/embeddings.hpp"

namespace opinionxf {

// One record, encoded and paired with its deck vector.
struct EncodedItem {
  std::vector<std::size_t> pre_ids;
  std::vector<std::size_t> post_ids;
  std::vector<double> deck_vec;
  std::string topic;
};

// Vocabulary plus resolved deck vectors for one corpus. Precomputed vectors
// (when provided) win over the hashed fallback; answer vectors are looked
// up under "q<index>:<answer>".
struct CorpusContext {
  AnswerVocabulary vocab;
  std::size_t embed_dim = 0;
  std::vector<DeckText> decks;
  std::map<std::string, std::vector<double>> deck_vectors;
  std::map<std::string, VectorSource> deck_sources;

  static CorpusContext build(
      const std::vector<SurveyRecord>& all_records,
      std::vector<DeckText> decks, std::size_t embed_dim,
      const std::map<std::string, std::vector<double>>* precomputed = nullptr);

  // Same deck resolution but with an existing vocabulary (checkpoint eval).
  static CorpusContext with_vocab(
      AnswerVocabulary vocab, std::vector<DeckText> decks,
      std::size_t embed_dim,
      const std::map<std::string, std::vector<double>>* precomputed = nullptr);

  std::vector<EncodedItem> encode(const std::vector<SurveyRecord>& records) const;

  AnswerEmbeddingTable answer_table(
      const std::map<std::string, std::vector<double>>* precomputed = nullptr) const;
};

}  // namespace opinionxf
