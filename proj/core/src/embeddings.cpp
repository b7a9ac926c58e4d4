#include "opinionxf/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace opinionxf {

namespace {

using ordered_json = nlohmann::ordered_json;

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// splitmix64 finalizer for avalanche on top of FNV.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<std::string> whitespace_tokens_lower(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> alnum_tokens_lower(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      current.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(ch))));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

void normalize_in_place(std::vector<double>& v, const std::string& what) {
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 < 1e-24)
    throw NumericError(what + ": zero-norm vector cannot be normalized");
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
}

}  // namespace

std::vector<double> hash_embed(const std::string& text, std::size_t dim) {
  if (dim < 8) throw ConfigError("hash_embed: dim must be >= 8");
  const auto tokens = whitespace_tokens_lower(text);
  if (tokens.empty())
    throw EmptyInputError("hash_embed: empty or whitespace-only text");
  std::vector<double> v(dim, 0.0);
  for (const auto& token : tokens) {
    const std::uint64_t h = mix64(fnv1a64(token));
    const auto index = static_cast<std::size_t>(h % dim);
    const double sign = (h >> 63) ? -1.0 : 1.0;
    v[index] += sign;
  }
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 < 1e-24) {
    // Tokens cancelled exactly; fall back to a deterministic one-hot so the
    // result is still unit length.
    const std::uint64_t h = mix64(fnv1a64(tokens.front()));
    v[h % dim] = 1.0;
    return v;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

std::map<std::string, std::vector<double>> load_precomputed(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file: " + path.string());
  std::string header;
  if (!std::getline(in, header))
    throw FormatError("embedding file is empty: " + path.string());
  std::istringstream hs(header);
  std::string tag;
  std::size_t dim = 0;
  hs >> tag >> dim;
  if (tag != "dim" || dim == 0)
    throw FormatError("embedding file: bad header \"" + header +
                      "\" (expected \"dim <n>\")");
  std::map<std::string, std::vector<double>> out;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto where = "line " + std::to_string(line_no);
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= line.size()) {
      const auto comma = line.find(',', start);
      if (comma == std::string::npos) {
        parts.push_back(line.substr(start));
        break;
      }
      parts.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (parts.size() != dim + 1)
      throw FormatError(where + ": expected key plus " + std::to_string(dim) +
                        " values, got " + std::to_string(parts.size() - 1));
    const std::string& key = parts[0];
    if (key.empty()) throw FormatError(where + ": empty key");
    if (out.count(key)) throw FormatError(where + ": duplicate key \"" + key + "\"");
    std::vector<double> vec(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      try {
        vec[i] = std::stod(parts[i + 1]);
      } catch (const std::exception&) {
        throw FormatError(where + ": bad float \"" + parts[i + 1] + "\"");
      }
      if (!std::isfinite(vec[i]))
        throw FormatError(where + ": non-finite value");
    }
    normalize_in_place(vec, "load_precomputed " + where);
    out.emplace(key, std::move(vec));
  }
  return out;
}

void write_precomputed(const std::filesystem::path& path,
                       const std::map<std::string, std::vector<double>>& entries,
                       std::size_t dim) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write embedding file: " + path.string());
  out << "dim " << dim << '\n';
  char buf[32];
  for (const auto& [key, vec] : entries) {
    if (vec.size() != dim)
      throw FormatError("write_precomputed: vector for \"" + key +
                        "\" has wrong dimension");
    out << key;
    for (double v : vec) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

PresentationVector pool_deck(
    const std::string& deck_id,
    const std::vector<std::vector<double>>& slide_vectors) {
  if (slide_vectors.empty())
    throw EmptyInputError("pool_deck: no slide vectors");
  const std::size_t dim = slide_vectors.front().size();
  std::vector<double> mean(dim, 0.0);
  for (const auto& v : slide_vectors) {
    if (v.size() != dim) throw FormatError("pool_deck: dimension mismatch");
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    if (std::fabs(norm2 - 1.0) > 1e-6)
      throw NumericError("pool_deck: slide vector is not unit length");
    for (std::size_t i = 0; i < dim; ++i) mean[i] += v[i];
  }
  const double inv_n = 1.0 / static_cast<double>(slide_vectors.size());
  double norm2 = 0.0;
  for (double& x : mean) {
    x *= inv_n;
    norm2 += x * x;
  }
  if (norm2 < 1e-20)
    throw DegenerateDeckError("pool_deck: slide vectors cancel to zero mean for deck \"" +
                              deck_id + "\"");
  const double inv = 1.0 / std::sqrt(norm2);
  PresentationVector out;
  out.deck_id = deck_id;
  out.vec = std::move(mean);
  for (double& x : out.vec) x *= inv;
  out.source = VectorSource::kHashed;
  return out;
}

std::vector<DeckText> load_decks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open deck file: " + path.string());
  std::vector<DeckText> decks;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto where = "line " + std::to_string(line_no);
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    DeckText d;
    try {
      d.deck_id = j.at("deck_id").get<std::string>();
      d.topic_keywords = j.at("topic_keywords").get<std::vector<std::string>>();
      d.slides = j.at("slides").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(where + ": " + e.what());
    }
    if (d.slides.empty()) throw SchemaError(where + ": deck has no slides");
    for (const auto& s : d.slides)
      if (s.empty()) throw SchemaError(where + ": empty slide text");
    if (!seen.insert(d.deck_id).second)
      throw SchemaError(where + ": duplicate deck_id \"" + d.deck_id + "\"");
    decks.push_back(std::move(d));
  }
  return decks;
}

void write_decks(const std::filesystem::path& path,
                 const std::vector<DeckText>& decks) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write deck file: " + path.string());
  for (const auto& d : decks) {
    ordered_json j;
    j["deck_id"] = d.deck_id;
    j["topic_keywords"] = d.topic_keywords;
    j["slides"] = d.slides;
    out << j.dump() << '\n';
  }
}

std::string assign_deck(const SurveyRecord& record,
                        const std::vector<DeckText>& decks) {
  if (decks.empty()) throw ConfigError("assign_deck: no decks");
  if (!record.deck_id.empty()) {
    for (const auto& d : decks)
      if (d.deck_id == record.deck_id) return record.deck_id;
    // Fall through to keyword matching when the explicit id is unknown.
  }
  const auto topic_tokens = alnum_tokens_lower(record.topic);
  std::string best;
  std::size_t best_overlap = 0;
  for (const auto& d : decks) {
    std::set<std::string> keywords;
    for (const auto& k : d.topic_keywords)
      for (const auto& t : alnum_tokens_lower(k)) keywords.insert(t);
    std::set<std::string> seen;
    std::size_t overlap = 0;
    for (const auto& t : topic_tokens)
      if (keywords.count(t) && seen.insert(t).second) ++overlap;
    if (overlap > best_overlap ||
        (overlap == best_overlap && overlap > 0 && d.deck_id < best)) {
      best_overlap = overlap;
      best = d.deck_id;
    }
  }
  if (best_overlap == 0)
    throw UnassignedRecordError(
        "assign_deck: no deck matches topic \"" + record.topic +
        "\" for participant " + record.participant_id);
  return best;
}

AnswerEmbeddingTable init_answer_table(const AnswerVocabulary& vocab,
                                       const EmbedFn& embed, std::size_t dim) {
  AnswerEmbeddingTable table;
  table.embed_dim = dim;
  table.per_question.reserve(vocab.question_count());
  for (std::size_t q = 0; q < vocab.question_count(); ++q) {
    Tensor m(vocab.size(q), dim);
    for (std::size_t id = 0; id < vocab.size(q); ++id) {
      const auto vec = embed(vocab.answer_of(q, id));
      if (vec.size() != dim)
        throw FormatError("init_answer_table: embedder returned wrong dimension");
      std::copy(vec.begin(), vec.end(), m.row_ptr(id));
    }
    table.per_question.push_back(std::move(m));
  }
  return table;
}

DeckText synthesize_topic_deck(const std::string& topic) {
  DeckText deck;
  deck.deck_id = "deck_" + topic;
  deck.slides = {
      topic + " overview: scope, background, and key definitions",
      "evidence for " + topic + ": benefits, supporting studies, expert findings",
      "evidence against " + topic + ": risks, costs, unresolved concerns",
      "summary: weighing " + topic + " arguments before an informed decision",
  };
  deck.topic_keywords = alnum_tokens_lower(topic);
  if (deck.topic_keywords.empty()) deck.topic_keywords.push_back(topic);
  return deck;
}

PresentationVector hashed_presentation_vector(const DeckText& deck,
                                              std::size_t dim) {
  std::vector<std::vector<double>> slide_vectors;
  slide_vectors.reserve(deck.slides.size());
  for (const auto& slide : deck.slides)
    slide_vectors.push_back(hash_embed(slide, dim));
  return pool_deck(deck.deck_id, slide_vectors);
}

int topic_valence(const std::string& topic, std::size_t dim) {
  const auto pv = hashed_presentation_vector(synthesize_topic_deck(topic), dim);
  return pv.vec[0] < 0.0 ? -1 : 1;
}

}  // namespace opinionxf
