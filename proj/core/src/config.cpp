#include "opinionxf/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <vector>

namespace opinionxf {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line_no;
};

struct Section {
  std::string name;
  std::vector<KeyValue> entries;
  std::size_t line_no;
};

std::vector<Section> tokenize(const std::string& text) {
  std::vector<Section> sections;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": unterminated section header");
      sections.push_back({trim(t.substr(1, t.size() - 2)), {}, line_no});
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    if (sections.empty())
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": key outside any [section]");
    sections.back().entries.push_back(
        {trim(t.substr(0, eq)), trim(t.substr(eq + 1)), line_no});
  }
  return sections;
}

double to_double(const KeyValue& kv) {
  try {
    std::size_t used = 0;
    const double v = std::stod(kv.value, &used);
    if (used != kv.value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config line " + std::to_string(kv.line_no) +
                      ": bad number for " + kv.key);
  }
}

std::uint64_t to_u64(const KeyValue& kv) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(kv.value, &used);
    if (used != kv.value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config line " + std::to_string(kv.line_no) +
                      ": bad integer for " + kv.key);
  }
}

std::size_t to_size(const KeyValue& kv) {
  return static_cast<std::size_t>(to_u64(kv));
}

bool to_bool(const KeyValue& kv) {
  if (kv.value == "true" || kv.value == "1") return true;
  if (kv.value == "false" || kv.value == "0") return false;
  throw ConfigError("config line " + std::to_string(kv.line_no) +
                    ": bad boolean for " + kv.key + " (use true/false)");
}

std::vector<double> to_double_list(const KeyValue& kv) {
  std::vector<double> out;
  std::istringstream in(kv.value);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    KeyValue item{kv.key, trim(tok), kv.line_no};
    out.push_back(to_double(item));
  }
  if (out.empty())
    throw ConfigError("config line " + std::to_string(kv.line_no) +
                      ": empty list for " + kv.key);
  return out;
}

std::vector<std::size_t> to_size_list(const KeyValue& kv) {
  std::vector<std::size_t> out;
  std::istringstream in(kv.value);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    KeyValue item{kv.key, trim(tok), kv.line_no};
    out.push_back(to_size(item));
  }
  if (out.empty())
    throw ConfigError("config line " + std::to_string(kv.line_no) +
                      ": empty list for " + kv.key);
  return out;
}

// Accepts a single value (broadcast) or a Q-length list.
std::vector<double> per_question(const KeyValue& kv, std::size_t q_count) {
  auto list = to_double_list(kv);
  if (list.size() == 1) return std::vector<double>(q_count, list[0]);
  if (list.size() != q_count)
    throw ConfigError("config line " + std::to_string(kv.line_no) + ": " +
                      kv.key + " needs 1 or " + std::to_string(q_count) +
                      " values");
  return list;
}

}  // namespace

void RunConfig::override_seed(std::uint64_t seed) {
  generator.seed = seed;
  model.seed = seed;
  training.seed = seed;
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  cfg.generator = GeneratorConfig::defaults();
  cfg.generator.topics.clear();  // topics come from [topic] sections
  bool saw_topic = false;

  struct PendingTopic {
    std::string name;
    std::optional<KeyValue> shift, convergence;
    std::size_t consensus = 0;
  };
  std::vector<PendingTopic> topics;

  for (const auto& section : tokenize(text)) {
    if (section.name == "paths") {
      for (const auto& kv : section.entries) {
        if (kv.key == "dataset") cfg.paths.dataset = kv.value;
        else if (kv.key == "decks") cfg.paths.decks = kv.value;
        else if (kv.key == "embeddings") cfg.paths.embeddings = kv.value;
        else if (kv.key == "out_dir") cfg.paths.out_dir = kv.value;
        else
          throw ConfigError("config line " + std::to_string(kv.line_no) +
                            ": unknown [paths] key " + kv.key);
      }
    } else if (section.name == "generator") {
      for (const auto& kv : section.entries) {
        if (kv.key == "n_participants") cfg.generator.n_participants = to_size(kv);
        else if (kv.key == "questions") cfg.generator.question_count = to_size(kv);
        else if (kv.key == "answers_per_question") {
          auto list = to_size_list(kv);
          cfg.generator.answers_per_question = std::move(list);
        } else if (kv.key == "noise_prob") cfg.generator.noise_prob = to_double(kv);
        else if (kv.key == "embed_dim") cfg.generator.embed_dim = to_size(kv);
        else if (kv.key == "seed") cfg.generator.seed = to_u64(kv);
        else if (kv.key == "split_ratio") cfg.split_ratio = to_double(kv);
        else
          throw ConfigError("config line " + std::to_string(kv.line_no) +
                            ": unknown [generator] key " + kv.key);
      }
    } else if (section.name == "topic") {
      saw_topic = true;
      PendingTopic topic;
      for (const auto& kv : section.entries) {
        if (kv.key == "name") topic.name = kv.value;
        else if (kv.key == "shift_prob") topic.shift = kv;
        else if (kv.key == "convergence_prob") topic.convergence = kv;
        else if (kv.key == "consensus_option") topic.consensus = to_size(kv);
        else
          throw ConfigError("config line " + std::to_string(kv.line_no) +
                            ": unknown [topic] key " + kv.key);
      }
      if (topic.name.empty())
        throw ConfigError("config line " + std::to_string(section.line_no) +
                          ": [topic] needs a name");
      topics.push_back(std::move(topic));
    } else if (section.name == "model") {
      for (const auto& kv : section.entries) {
        if (kv.key == "d_model") cfg.model.d_model = to_size(kv);
        else if (kv.key == "n_layers") cfg.model.n_layers = to_size(kv);
        else if (kv.key == "n_heads") cfg.model.n_heads = to_size(kv);
        else if (kv.key == "ff_width") cfg.model.ff_width = to_size(kv);
        else if (kv.key == "embed_dim") cfg.model.embed_dim = to_size(kv);
        else if (kv.key == "use_fusion") cfg.model.use_fusion = to_bool(kv);
        else if (kv.key == "use_quantum") cfg.model.use_quantum = to_bool(kv);
        else if (kv.key == "use_contrastive") cfg.model.use_contrastive = to_bool(kv);
        else if (kv.key == "fusion_bands") cfg.model.fusion_bands = to_size(kv);
        else if (kv.key == "quantum_feature_i") cfg.model.quantum_feature_i = to_size(kv);
        else if (kv.key == "quantum_feature_j") cfg.model.quantum_feature_j = to_size(kv);
        else if (kv.key == "dropout") cfg.model.dropout = to_double(kv);
        else if (kv.key == "freeze_answer_embeddings")
          cfg.model.freeze_answer_embeddings = to_bool(kv);
        else if (kv.key == "seed") cfg.model.seed = to_u64(kv);
        else
          throw ConfigError("config line " + std::to_string(kv.line_no) +
                            ": unknown [model] key " + kv.key);
      }
    } else if (section.name == "training") {
      for (const auto& kv : section.entries) {
        if (kv.key == "lr_max") cfg.training.lr_max = to_double(kv);
        else if (kv.key == "lr_min") cfg.training.lr_min = to_double(kv);
        else if (kv.key == "weight_decay") cfg.training.weight_decay = to_double(kv);
        else if (kv.key == "clip_norm") cfg.training.clip_norm = to_double(kv);
        else if (kv.key == "batch_size") cfg.training.batch_size = to_size(kv);
        else if (kv.key == "epochs") cfg.training.epochs = to_size(kv);
        else if (kv.key == "lambda_contrastive")
          cfg.training.lambda_contrastive = to_double(kv);
        else if (kv.key == "beta1") cfg.training.beta1 = to_double(kv);
        else if (kv.key == "beta2") cfg.training.beta2 = to_double(kv);
        else if (kv.key == "eps_adam") cfg.training.eps_adam = to_double(kv);
        else if (kv.key == "inbatch_negatives")
          cfg.training.inbatch_negatives = to_bool(kv);
        else if (kv.key == "seed") cfg.training.seed = to_u64(kv);
        else if (kv.key == "threads") cfg.training.threads = to_size(kv);
        else
          throw ConfigError("config line " + std::to_string(kv.line_no) +
                            ": unknown [training] key " + kv.key);
      }
    } else {
      throw ConfigError("config line " + std::to_string(section.line_no) +
                        ": unknown section [" + section.name + "]");
    }
  }

  if (cfg.generator.answers_per_question.empty()) {
    cfg.generator.answers_per_question.resize(cfg.generator.question_count);
    const std::size_t pattern[3] = {3, 4, 5};
    for (std::size_t q = 0; q < cfg.generator.question_count; ++q)
      cfg.generator.answers_per_question[q] = pattern[q % 3];
  } else if (cfg.generator.answers_per_question.size() == 1) {
    cfg.generator.answers_per_question.assign(
        cfg.generator.question_count, cfg.generator.answers_per_question[0]);
  }

  if (saw_topic) {
    for (const auto& t : topics) {
      TopicSpec spec;
      spec.name = t.name;
      spec.consensus_option = t.consensus;
      spec.shift_prob =
          t.shift ? per_question(*t.shift, cfg.generator.question_count)
                  : std::vector<double>(cfg.generator.question_count, 0.0);
      spec.convergence_prob =
          t.convergence
              ? per_question(*t.convergence, cfg.generator.question_count)
              : std::vector<double>(cfg.generator.question_count, 0.0);
      cfg.generator.topics.push_back(std::move(spec));
    }
  } else {
    cfg.generator.topics = GeneratorConfig::defaults().topics;
    if (cfg.generator.question_count != 8) {
      // Defaults carry 8 per-question entries; rebroadcast to Q.
      for (auto& t : cfg.generator.topics) {
        t.shift_prob.assign(cfg.generator.question_count, t.shift_prob[0]);
        t.convergence_prob.assign(cfg.generator.question_count,
                                  t.convergence_prob[0]);
      }
    }
  }

  if (!(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0))
    throw ConfigError("config: split_ratio must be in (0, 1)");
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file_bytes(path));
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string default_config_text() {
  return
      "# opinionxf run configuration\n"
      "\n"
      "[paths]\n"
      "dataset = out/dataset.jsonl\n"
      "decks = out/decks.jsonl\n"
      "embeddings = out/embeddings.txt\n"
      "out_dir = out\n"
      "\n"
      "[generator]\n"
      "n_participants = 1000\n"
      "questions = 8\n"
      "answers_per_question = 3,4,5,3,4,5,3,4\n"
      "noise_prob = 0.05\n"
      "embed_dim = 384\n"
      "seed = 42\n"
      "split_ratio = 0.8\n"
      "\n"
      "[topic]\n"
      "name = skincare\n"
      "shift_prob = 0.35\n"
      "convergence_prob = 0.10\n"
      "consensus_option = 0\n"
      "\n"
      "[topic]\n"
      "name = ketchup\n"
      "shift_prob = 0.20\n"
      "convergence_prob = 0.15\n"
      "consensus_option = 0\n"
      "\n"
      "[topic]\n"
      "name = dna_storage\n"
      "shift_prob = 0.45\n"
      "convergence_prob = 0.05\n"
      "consensus_option = 0\n"
      "\n"
      "[model]\n"
      "d_model = 128\n"
      "n_layers = 4\n"
      "n_heads = 4\n"
      "embed_dim = 384\n"
      "use_fusion = false\n"
      "use_quantum = false\n"
      "use_contrastive = false\n"
      "seed = 7\n"
      "\n"
      "[training]\n"
      "lr_max = 2e-3\n"
      "lr_min = 0\n"
      "weight_decay = 1e-4\n"
      "clip_norm = 1.0\n"
      "epochs = 40\n"
      "lambda_contrastive = 0.1\n"
      "seed = 1234\n";
}

}  // namespace opinionxf
