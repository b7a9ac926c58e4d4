#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "opinionxf/dataset.hpp"
#include "opinionxf/tensor.hpp"

namespace opinionxf {

struct DeckText {
  std::string deck_id;
  std::vector<std::string> slides;
  std::vector<std::string> topic_keywords;
};

enum class VectorSource { kPrecomputed, kHashed };

// Unit-length embedding of one slide deck.
struct PresentationVector {
  std::string deck_id;
  std::vector<double> vec;
  VectorSource source = VectorSource::kHashed;
};

// Per-question V_q x E matrices of unit-normalized answer embeddings.
struct AnswerEmbeddingTable {
  std::vector<Tensor> per_question;
  std::size_t embed_dim = 0;
};

using EmbedFn = std::function<std::vector<double>(const std::string&)>;

// Deterministic stand-in for a sentence embedder: lowercase, split on
// whitespace, hash every token to an (index, sign) pair, accumulate and
// L2-normalize. dim must be >= 8.
std::vector<double> hash_embed(const std::string& text, std::size_t dim);

// Precomputed-vector file: a "dim <E>" header line, then one
// "key,v1,v2,..." record per line. Vectors are renormalized on load.
std::map<std::string, std::vector<double>> load_precomputed(
    const std::filesystem::path& path);
void write_precomputed(const std::filesystem::path& path,
                       const std::map<std::string, std::vector<double>>& entries,
                       std::size_t dim);

// Mean of unit-normalized slide vectors, renormalized. A zero-norm mean
// (antipodal slides) is a degenerate deck.
PresentationVector pool_deck(const std::string& deck_id,
                             const std::vector<std::vector<double>>& slide_vectors);

// Deck file: line-delimited {deck_id, topic_keywords, slides} objects.
std::vector<DeckText> load_decks(const std::filesystem::path& path);
void write_decks(const std::filesystem::path& path,
                 const std::vector<DeckText>& decks);

// An explicit known deck_id on the record wins; otherwise the deck whose
// keywords share the most (case-insensitive) tokens with the record's
// topic, ties to the lexicographically smaller deck_id.
std::string assign_deck(const SurveyRecord& record,
                        const std::vector<DeckText>& decks);

AnswerEmbeddingTable init_answer_table(const AnswerVocabulary& vocab,
                                       const EmbedFn& embed, std::size_t dim);

// Fixed slide text for a synthetic topic; used by the generator and by
// datagen so both sides agree on each topic's deck.
DeckText synthesize_topic_deck(const std::string& topic);

// Pools hash-embedded slides of a deck into its presentation vector.
PresentationVector hashed_presentation_vector(const DeckText& deck,
                                              std::size_t dim);

// Sign (+1/-1) of component 0 of the topic's presentation vector; an exact
// zero maps to +1.
int topic_valence(const std::string& topic, std::size_t dim);

}  // namespace opinionxf
