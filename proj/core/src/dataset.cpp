#include "opinionxf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "opinionxf/embeddings.hpp"
#include "opinionxf/rng.hpp"

namespace opinionxf {

namespace {

using ordered_json = nlohmann::ordered_json;

void validate_record(const SurveyRecord& r, std::size_t line_no,
                     const std::set<std::string>* allowed_topics) {
  const auto where = "line " + std::to_string(line_no);
  if (r.pre_answers.size() != r.post_answers.size())
    throw SchemaError(where + ": pre_answers and post_answers lengths differ (" +
                      std::to_string(r.pre_answers.size()) + " vs " +
                      std::to_string(r.post_answers.size()) + ")");
  if (r.pre_answers.empty())
    throw SchemaError(where + ": record has no answers");
  for (const auto& a : r.pre_answers)
    if (a.empty()) throw SchemaError(where + ": empty pre answer string");
  for (const auto& a : r.post_answers)
    if (a.empty()) throw SchemaError(where + ": empty post answer string");
  if (r.topic.empty()) throw SchemaError(where + ": empty topic");
  if (allowed_topics != nullptr && !allowed_topics->count(r.topic))
    throw SchemaError(where + ": unknown topic \"" + r.topic + "\"");
}

std::vector<SurveyRecord> load_records_impl(
    const std::filesystem::path& path,
    const std::set<std::string>* allowed_topics) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path.string());
  std::vector<SurveyRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    SurveyRecord r;
    try {
      r.participant_id = j.at("participant_id").get<std::string>();
      r.topic = j.at("topic").get<std::string>();
      if (j.contains("deck_id") && !j["deck_id"].is_null())
        r.deck_id = j["deck_id"].get<std::string>();
      r.pre_answers = j.at("pre_answers").get<std::vector<std::string>>();
      r.post_answers = j.at("post_answers").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
    validate_record(r, line_no, allowed_topics);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace

std::vector<SurveyRecord> load_records(const std::filesystem::path& path) {
  return load_records_impl(path, nullptr);
}

std::vector<SurveyRecord> load_records(
    const std::filesystem::path& path,
    const std::set<std::string>& allowed_topics) {
  return load_records_impl(path, &allowed_topics);
}

void write_records(const std::filesystem::path& path,
                   const std::vector<SurveyRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset file: " + path.string());
  for (const auto& r : records) {
    ordered_json j;
    j["participant_id"] = r.participant_id;
    j["topic"] = r.topic;
    if (r.deck_id.empty())
      j["deck_id"] = nullptr;
    else
      j["deck_id"] = r.deck_id;
    j["pre_answers"] = r.pre_answers;
    j["post_answers"] = r.post_answers;
    out << j.dump() << '\n';
  }
}

AnswerVocabulary AnswerVocabulary::build(
    const std::vector<SurveyRecord>& records) {
  if (records.empty())
    throw SchemaError("build_vocabulary: empty record list");
  const std::size_t q_count = records.front().pre_answers.size();
  AnswerVocabulary vocab;
  vocab.per_question_.resize(q_count);
  vocab.id_to_answer_.resize(q_count);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.pre_answers.size() != q_count)
      throw SchemaError("build_vocabulary: record " + std::to_string(i) +
                        " has " + std::to_string(r.pre_answers.size()) +
                        " questions, expected " + std::to_string(q_count));
    for (std::size_t q = 0; q < q_count; ++q) {
      vocab.per_question_[q].emplace(r.pre_answers[q], 0);
      vocab.per_question_[q].emplace(r.post_answers[q], 0);
    }
  }
  // std::map iterates lexicographically; assign dense ids in that order.
  for (std::size_t q = 0; q < q_count; ++q) {
    std::size_t next = 0;
    for (auto& [answer, id] : vocab.per_question_[q]) {
      id = next++;
      vocab.id_to_answer_[q].push_back(answer);
    }
  }
  return vocab;
}

AnswerVocabulary AnswerVocabulary::from_lists(
    std::vector<std::vector<std::string>> lists) {
  AnswerVocabulary vocab;
  vocab.id_to_answer_ = std::move(lists);
  vocab.per_question_.resize(vocab.id_to_answer_.size());
  for (std::size_t q = 0; q < vocab.id_to_answer_.size(); ++q) {
    for (std::size_t id = 0; id < vocab.id_to_answer_[q].size(); ++id) {
      if (!vocab.per_question_[q].emplace(vocab.id_to_answer_[q][id], id).second)
        throw SchemaError("vocabulary: duplicate answer in question " +
                          std::to_string(q));
    }
  }
  return vocab;
}

std::vector<std::size_t> AnswerVocabulary::sizes() const {
  std::vector<std::size_t> out(question_count());
  for (std::size_t q = 0; q < out.size(); ++q) out[q] = size(q);
  return out;
}

std::size_t AnswerVocabulary::id_of(std::size_t q,
                                    const std::string& answer) const {
  const auto& m = per_question_.at(q);
  auto it = m.find(answer);
  if (it == m.end())
    throw OovError("question " + std::to_string(q) +
                   ": answer not in vocabulary: \"" + answer + "\"");
  return it->second;
}

const std::string& AnswerVocabulary::answer_of(std::size_t q,
                                               std::size_t id) const {
  return id_to_answer_.at(q).at(id);
}

bool AnswerVocabulary::contains(std::size_t q, const std::string& answer) const {
  return per_question_.at(q).count(answer) > 0;
}

AnswerVocabulary build_vocabulary(const std::vector<SurveyRecord>& records) {
  return AnswerVocabulary::build(records);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> encode_record(
    const SurveyRecord& record, const AnswerVocabulary& vocab) {
  const std::size_t q_count = vocab.question_count();
  if (record.pre_answers.size() != q_count)
    throw SchemaError("encode_record: question count mismatch");
  std::vector<std::size_t> pre(q_count), post(q_count);
  for (std::size_t q = 0; q < q_count; ++q) {
    pre[q] = vocab.id_of(q, record.pre_answers[q]);
    post[q] = vocab.id_of(q, record.post_answers[q]);
  }
  return {std::move(pre), std::move(post)};
}

DatasetSplit split(const std::vector<SurveyRecord>& records, double ratio,
                   std::uint64_t seed) {
  if (records.size() < 5)
    throw ConfigError("split: need at least 5 records, got " +
                      std::to_string(records.size()));
  if (!(ratio > 0.0 && ratio < 1.0))
    throw ConfigError("split: ratio must be in (0, 1)");
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Pcg32 rng(seed);
  shuffle(order, rng);
  const auto n_train = static_cast<std::size_t>(
      std::lround(ratio * static_cast<double>(records.size())));
  DatasetSplit out;
  out.seed = seed;
  out.train.reserve(n_train);
  out.validation.reserve(records.size() - n_train);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i < n_train)
      out.train.push_back(records[order[i]]);
    else
      out.validation.push_back(records[order[i]]);
  }
  return out;
}

void GeneratorConfig::validate() const {
  if (topics.empty()) throw ConfigError("generator: no topics");
  if (n_participants == 0) throw ConfigError("generator: n_participants == 0");
  if (question_count == 0) throw ConfigError("generator: question_count == 0");
  if (answers_per_question.size() != question_count)
    throw ConfigError("generator: answers_per_question must have one entry per question");
  for (std::size_t v : answers_per_question)
    if (v < 2) throw ConfigError("generator: answers_per_question entries must be >= 2");
  if (noise_prob < 0.0 || noise_prob > 1.0)
    throw ConfigError("generator: noise_prob must be in [0, 1]");
  if (embed_dim < 8) throw ConfigError("generator: embed_dim must be >= 8");
  for (const auto& t : topics) {
    if (t.name.empty()) throw ConfigError("generator: topic with empty name");
    if (t.shift_prob.size() != question_count ||
        t.convergence_prob.size() != question_count)
      throw ConfigError("generator: topic \"" + t.name +
                        "\": per-question probability lists must have length " +
                        std::to_string(question_count));
    for (std::size_t q = 0; q < question_count; ++q) {
      const double p = t.shift_prob[q];
      const double c = t.convergence_prob[q];
      if (p < 0.0 || p > 1.0 || c < 0.0 || c > 1.0)
        throw ConfigError("generator: topic \"" + t.name +
                          "\": probabilities must be in [0, 1]");
      if (p + c > 1.0)
        throw ConfigError("generator: topic \"" + t.name +
                          "\": shift_prob + convergence_prob > 1 at question " +
                          std::to_string(q));
      if (t.consensus_option >= answers_per_question[q])
        throw ConfigError("generator: topic \"" + t.name +
                          "\": consensus_option out of range at question " +
                          std::to_string(q));
    }
  }
}

GeneratorConfig GeneratorConfig::defaults() {
  GeneratorConfig cfg;
  cfg.n_participants = 1000;
  cfg.question_count = 8;
  cfg.answers_per_question = {3, 4, 5, 3, 4, 5, 3, 4};
  cfg.noise_prob = 0.05;
  cfg.embed_dim = 384;
  cfg.seed = 42;
  auto uniform = [&](double v) {
    return std::vector<double>(cfg.question_count, v);
  };
  cfg.topics = {
      TopicSpec{"skincare", uniform(0.35), uniform(0.10), 0},
      TopicSpec{"ketchup", uniform(0.20), uniform(0.15), 0},
      TopicSpec{"dna_storage", uniform(0.45), uniform(0.05), 0},
  };
  return cfg;
}

std::size_t shifted_answer(std::size_t pre, int valence,
                           std::size_t n_answers) {
  if (valence >= 0) return std::min(pre + 1, n_answers - 1);
  return pre == 0 ? 0 : pre - 1;
}

std::vector<SurveyRecord> generate_synthetic(const GeneratorConfig& config) {
  config.validate();
  // One valence per topic, from the sign of the hashed deck vector.
  std::vector<int> valence(config.topics.size());
  for (std::size_t t = 0; t < config.topics.size(); ++t)
    valence[t] = topic_valence(config.topics[t].name, config.embed_dim);

  Pcg32 rng(config.seed);
  std::vector<SurveyRecord> records;
  records.reserve(config.n_participants);
  char id_buf[24];
  for (std::size_t i = 0; i < config.n_participants; ++i) {
    const std::size_t t = i % config.topics.size();
    const TopicSpec& topic = config.topics[t];
    SurveyRecord r;
    std::snprintf(id_buf, sizeof(id_buf), "p%05zu", i);
    r.participant_id = id_buf;
    r.topic = topic.name;
    r.deck_id = "deck_" + topic.name;
    r.pre_answers.resize(config.question_count);
    r.post_answers.resize(config.question_count);
    std::vector<std::size_t> pre(config.question_count);
    for (std::size_t q = 0; q < config.question_count; ++q) {
      const auto v = static_cast<std::uint32_t>(config.answers_per_question[q]);
      pre[q] = rng.bounded(v);
    }
    for (std::size_t q = 0; q < config.question_count; ++q) {
      const auto v = static_cast<std::uint32_t>(config.answers_per_question[q]);
      const double c = topic.convergence_prob[q];
      const double p = topic.shift_prob[q];
      std::size_t post;
      const double u = rng.next_double();
      if (u < c)
        post = topic.consensus_option;
      else if (u < c + p)
        post = shifted_answer(pre[q], valence[t], v);
      else
        post = pre[q];
      const double u_noise = rng.next_double();
      if (u_noise < config.noise_prob) post = rng.bounded(v);
      r.pre_answers[q] = "opt_" + std::to_string(pre[q]);
      r.post_answers[q] = "opt_" + std::to_string(post);
    }
    records.push_back(std::move(r));
  }
  return records;
}

ShiftRates measure_shift_rate(const std::vector<SurveyRecord>& records) {
  if (records.empty()) throw EmptyInputError("measure_shift_rate: no records");
  const std::size_t q_count = records.front().pre_answers.size();
  std::map<std::string, std::pair<std::vector<double>, std::size_t>> acc;
  for (const auto& r : records) {
    if (r.pre_answers.size() != q_count)
      throw SchemaError("measure_shift_rate: ragged question counts");
    auto& [counts, n] = acc[r.topic];
    counts.resize(q_count, 0.0);
    for (std::size_t q = 0; q < q_count; ++q)
      if (r.pre_answers[q] != r.post_answers[q]) counts[q] += 1.0;
    ++n;
  }
  ShiftRates out;
  for (auto& [topic, data] : acc) {
    auto& [counts, n] = data;
    for (double& c : counts) c /= static_cast<double>(n);
    out[topic] = std::move(counts);
  }
  return out;
}

BayesOracle BayesOracle::from_config(const GeneratorConfig& config) {
  config.validate();
  BayesOracle oracle;
  oracle.vocab_sizes_ = config.answers_per_question;
  oracle.tables_.resize(config.topics.size());
  for (std::size_t t = 0; t < config.topics.size(); ++t) {
    const TopicSpec& topic = config.topics[t];
    oracle.topic_names_.push_back(topic.name);
    const int valence = topic_valence(topic.name, config.embed_dim);
    oracle.tables_[t].resize(config.question_count);
    for (std::size_t q = 0; q < config.question_count; ++q) {
      const std::size_t v = config.answers_per_question[q];
      const double c = topic.convergence_prob[q];
      const double p = topic.shift_prob[q];
      std::vector<double> table(v * v, 0.0);
      for (std::size_t pre = 0; pre < v; ++pre) {
        double* row = table.data() + pre * v;
        row[topic.consensus_option] += c;
        row[shifted_answer(pre, valence, v)] += p;
        row[pre] += 1.0 - c - p;
        // Uniform resampling with prob noise replaces the base outcome.
        for (std::size_t y = 0; y < v; ++y)
          row[y] = config.noise_prob / static_cast<double>(v) +
                   (1.0 - config.noise_prob) * row[y];
      }
      oracle.tables_[t][q] = std::move(table);
    }
  }
  return oracle;
}

std::size_t BayesOracle::topic_index(const std::string& topic) const {
  for (std::size_t t = 0; t < topic_names_.size(); ++t)
    if (topic_names_[t] == topic) return t;
  throw SchemaError("BayesOracle: unknown topic \"" + topic + "\"");
}

std::vector<double> BayesOracle::posterior(std::size_t topic_idx,
                                           std::size_t q,
                                           std::size_t pre) const {
  const auto& table = tables_.at(topic_idx).at(q);
  const std::size_t v = vocab_sizes_.at(q);
  return std::vector<double>(table.begin() + pre * v,
                             table.begin() + (pre + 1) * v);
}

std::size_t BayesOracle::predict(std::size_t topic_idx, std::size_t q,
                                 std::size_t pre) const {
  const auto& table = tables_.at(topic_idx).at(q);
  const std::size_t v = vocab_sizes_.at(q);
  const double* row = table.data() + pre * v;
  std::size_t best = 0;
  for (std::size_t y = 1; y < v; ++y)
    if (row[y] > row[best]) best = y;
  return best;
}

double BayesOracle::expected_shift_rate(std::size_t topic_idx,
                                        std::size_t q) const {
  const auto& table = tables_.at(topic_idx).at(q);
  const std::size_t v = vocab_sizes_.at(q);
  double stay = 0.0;
  for (std::size_t pre = 0; pre < v; ++pre) stay += table[pre * v + pre];
  return 1.0 - stay / static_cast<double>(v);
}

std::vector<double> BayesOracle::post_marginal(std::size_t topic_idx,
                                               std::size_t q) const {
  const auto& table = tables_.at(topic_idx).at(q);
  const std::size_t v = vocab_sizes_.at(q);
  std::vector<double> marginal(v, 0.0);
  for (std::size_t pre = 0; pre < v; ++pre)
    for (std::size_t y = 0; y < v; ++y)
      marginal[y] += table[pre * v + y] / static_cast<double>(v);
  return marginal;
}

}  // namespace opinionxf
