#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "opinionxf/errors.hpp"

namespace opinionxf {

// One participant's matched pre/post answers for one topic.
struct SurveyRecord {
  std::string participant_id;
  std::string topic;
  std::vector<std::string> pre_answers;
  std::vector<std::string> post_answers;
  std::string deck_id;  // empty means "not set"

  bool operator==(const SurveyRecord&) const = default;
};

// Per-question answer -> dense id maps. Ids are assigned in sorted
// (bytewise lexicographic) order of the answer strings, so the mapping is
// identical across runs and platforms.
class AnswerVocabulary {
 public:
  static AnswerVocabulary build(const std::vector<SurveyRecord>& records);

  // Rebuild from per-question answer lists (already in id order), as stored
  // in checkpoints.
  static AnswerVocabulary from_lists(std::vector<std::vector<std::string>> lists);
  const std::vector<std::string>& answers(std::size_t q) const {
    return id_to_answer_.at(q);
  }

  std::size_t question_count() const { return per_question_.size(); }
  std::size_t size(std::size_t q) const { return id_to_answer_[q].size(); }
  std::vector<std::size_t> sizes() const;

  // Throws OovError naming the question index and the unseen string.
  std::size_t id_of(std::size_t q, const std::string& answer) const;
  const std::string& answer_of(std::size_t q, std::size_t id) const;
  bool contains(std::size_t q, const std::string& answer) const;

 private:
  std::vector<std::map<std::string, std::size_t>> per_question_;
  std::vector<std::vector<std::string>> id_to_answer_;
};

struct DatasetSplit {
  std::vector<SurveyRecord> train;
  std::vector<SurveyRecord> validation;
  std::uint64_t seed = 0;
};

struct TopicSpec {
  std::string name;
  std::vector<double> shift_prob;        // p, one entry per question
  std::vector<double> convergence_prob;  // c, one entry per question
  std::size_t consensus_option = 0;
};

struct GeneratorConfig {
  std::vector<TopicSpec> topics;
  std::size_t n_participants = 1000;
  std::size_t question_count = 8;
  std::vector<std::size_t> answers_per_question;  // V_q, one entry per question
  double noise_prob = 0.05;
  // Dimension of the hashed deck vectors that decide each topic's shift
  // direction (the sign of component 0).
  std::size_t embed_dim = 384;
  std::uint64_t seed = 42;

  void validate() const;  // throws ConfigError
  static GeneratorConfig defaults();
};

// ---- file I/O ------------------------------------------------------------

// Line-delimited records; one JSON object per line with keys
// participant_id, topic, deck_id, pre_answers, post_answers. Order is
// preserved. With `allowed_topics`, any other topic is a schema error.
std::vector<SurveyRecord> load_records(const std::filesystem::path& path);
std::vector<SurveyRecord> load_records(const std::filesystem::path& path,
                                       const std::set<std::string>& allowed_topics);
void write_records(const std::filesystem::path& path,
                   const std::vector<SurveyRecord>& records);

// ---- encoding and splitting ----------------------------------------------

AnswerVocabulary build_vocabulary(const std::vector<SurveyRecord>& records);

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> encode_record(
    const SurveyRecord& record, const AnswerVocabulary& vocab);

// Seeded shuffle (pcg32 + Fisher-Yates, see docs/rng.md), first
// round(ratio*N) records become the training partition. N >= 5 required.
DatasetSplit split(const std::vector<SurveyRecord>& records, double ratio,
                   std::uint64_t seed);

// ---- synthetic generation -------------------------------------------------

// Per participant and question: pre ~ uniform; with prob c the post answer
// is the consensus option, with prob p it moves one index toward the
// topic's shift direction (saturating), otherwise it stays; afterwards it
// is resampled uniformly with prob noise_prob. The shift direction is the
// sign of component 0 of the topic's hashed presentation vector.
std::vector<SurveyRecord> generate_synthetic(const GeneratorConfig& config);

// Direction an answer index moves under a shift, saturating at the ends.
std::size_t shifted_answer(std::size_t pre, int valence, std::size_t n_answers);

// Fraction of (record, question) cells with post != pre, per topic.
using ShiftRates = std::map<std::string, std::vector<double>>;
ShiftRates measure_shift_rate(const std::vector<SurveyRecord>& records);

// ---- exact oracle ----------------------------------------------------------

// Closed-form posterior over post-answers given (topic, question, pre),
// computed from GeneratorConfig alone; independent of the sampling code.
class BayesOracle {
 public:
  static BayesOracle from_config(const GeneratorConfig& config);

  std::size_t topic_index(const std::string& topic) const;
  // P(post | topic, question, pre) as a dense V_q vector.
  std::vector<double> posterior(std::size_t topic_idx, std::size_t q,
                                std::size_t pre) const;
  // argmax of the posterior; ties resolve to the smallest id.
  std::size_t predict(std::size_t topic_idx, std::size_t q,
                      std::size_t pre) const;
  // Analytic E[post != pre] under a uniform pre distribution.
  double expected_shift_rate(std::size_t topic_idx, std::size_t q) const;
  // Analytic marginal P(post = y) under a uniform pre distribution.
  std::vector<double> post_marginal(std::size_t topic_idx, std::size_t q) const;

 private:
  std::vector<std::string> topic_names_;
  // tables_[t][q] is a V_q x V_q row-major matrix, rows indexed by pre.
  std::vector<std::vector<std::vector<double>>> tables_;
  std::vector<std::size_t> vocab_sizes_;
};

}  // namespace opinionxf
