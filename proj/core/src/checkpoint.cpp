#include "opinionxf/checkpoint.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace opinionxf {

namespace {

constexpr const char* kMagic = "opinionxf-checkpoint v1";

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoull(tok));
  }
  return out;
}

}  // namespace

std::string fnv1a_hex(const std::string& payload) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : payload) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

std::string serialize_model_config(const ModelConfig& c) {
  std::ostringstream out;
  out << "d_model=" << c.d_model << " n_layers=" << c.n_layers
      << " n_heads=" << c.n_heads << " ff_width=" << c.ff_width
      << " embed_dim=" << c.embed_dim << " vocab_sizes=" << join_sizes(c.vocab_sizes)
      << " use_fusion=" << (c.use_fusion ? 1 : 0)
      << " use_quantum=" << (c.use_quantum ? 1 : 0)
      << " use_contrastive=" << (c.use_contrastive ? 1 : 0)
      << " fusion_bands=" << c.fusion_bands
      << " quantum_feature_i=" << c.quantum_feature_i
      << " quantum_feature_j=" << c.quantum_feature_j
      << " dropout=" << fmt17(c.dropout)
      << " freeze_answer_embeddings=" << (c.freeze_answer_embeddings ? 1 : 0)
      << " seed=" << c.seed;
  return out.str();
}

ModelConfig parse_model_config(const std::string& line) {
  ModelConfig c;
  std::istringstream in(line);
  std::string pair;
  while (in >> pair) {
    const auto eq = pair.find('=');
    if (eq == std::string::npos)
      throw FormatError("checkpoint: bad config token \"" + pair + "\"");
    const std::string key = pair.substr(0, eq);
    const std::string value = pair.substr(eq + 1);
    try {
      if (key == "d_model") c.d_model = std::stoull(value);
      else if (key == "n_layers") c.n_layers = std::stoull(value);
      else if (key == "n_heads") c.n_heads = std::stoull(value);
      else if (key == "ff_width") c.ff_width = std::stoull(value);
      else if (key == "embed_dim") c.embed_dim = std::stoull(value);
      else if (key == "vocab_sizes") c.vocab_sizes = parse_sizes(value);
      else if (key == "use_fusion") c.use_fusion = value == "1";
      else if (key == "use_quantum") c.use_quantum = value == "1";
      else if (key == "use_contrastive") c.use_contrastive = value == "1";
      else if (key == "fusion_bands") c.fusion_bands = std::stoull(value);
      else if (key == "quantum_feature_i") c.quantum_feature_i = std::stoull(value);
      else if (key == "quantum_feature_j") c.quantum_feature_j = std::stoull(value);
      else if (key == "dropout") c.dropout = std::stod(value);
      else if (key == "freeze_answer_embeddings") c.freeze_answer_embeddings = value == "1";
      else if (key == "seed") c.seed = std::stoull(value);
      else throw FormatError("checkpoint: unknown config key \"" + key + "\"");
    } catch (const std::invalid_argument&) {
      throw FormatError("checkpoint: bad value for \"" + key + "\"");
    }
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out << kMagic << '\n';
  out << "model " << serialize_model_config(ckpt.model_config) << '\n';
  out << "meta epoch=" << ckpt.epoch << " val_loss=" << fmt17(ckpt.val_loss)
      << " val_macro_f1=" << fmt17(ckpt.val_macro_f1)
      << " config_hash=" << ckpt.config_hash << '\n';
  out << "vocab " << ckpt.vocab.question_count() << '\n';
  for (std::size_t q = 0; q < ckpt.vocab.question_count(); ++q) {
    nlohmann::json answers = ckpt.vocab.answers(q);
    out << answers.dump() << '\n';
  }
  out << "tensors " << ckpt.params.size() << '\n';
  for (std::size_t p = 0; p < ckpt.params.size(); ++p) {
    const auto& entry = ckpt.params.entry(p);
    out << "tensor " << entry.name << ' ' << entry.value.rows << ' '
        << entry.value.cols << ' ' << (entry.trainable ? 1 : 0) << '\n';
    for (std::size_t r = 0; r < entry.value.rows; ++r) {
      const double* row = entry.value.row_ptr(r);
      for (std::size_t c = 0; c < entry.value.cols; ++c) {
        if (c) out << ' ';
        out << fmt17(row[c]);
      }
      out << '\n';
    }
  }
  out << "end\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw FormatError("checkpoint: bad magic line");
  Checkpoint ckpt;

  if (!std::getline(in, line) || line.rfind("model ", 0) != 0)
    throw FormatError("checkpoint: missing model line");
  ckpt.model_config = parse_model_config(line.substr(6));

  if (!std::getline(in, line) || line.rfind("meta ", 0) != 0)
    throw FormatError("checkpoint: missing meta line");
  {
    std::istringstream ms(line.substr(5));
    std::string pair;
    while (ms >> pair) {
      const auto eq = pair.find('=');
      if (eq == std::string::npos)
        throw FormatError("checkpoint: bad meta token");
      const std::string key = pair.substr(0, eq);
      const std::string value = pair.substr(eq + 1);
      if (key == "epoch") ckpt.epoch = std::stoull(value);
      else if (key == "val_loss") ckpt.val_loss = std::stod(value);
      else if (key == "val_macro_f1") ckpt.val_macro_f1 = std::stod(value);
      else if (key == "config_hash") ckpt.config_hash = value;
      else throw FormatError("checkpoint: unknown meta key \"" + key + "\"");
    }
  }

  if (!std::getline(in, line) || line.rfind("vocab ", 0) != 0)
    throw FormatError("checkpoint: missing vocab line");
  const std::size_t q_count = std::stoull(line.substr(6));
  std::vector<std::vector<std::string>> lists(q_count);
  for (std::size_t q = 0; q < q_count; ++q) {
    if (!std::getline(in, line))
      throw FormatError("checkpoint: truncated vocabulary");
    try {
      lists[q] = nlohmann::json::parse(line).get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("checkpoint: bad vocab line: ") + e.what());
    }
  }
  ckpt.vocab = AnswerVocabulary::from_lists(std::move(lists));

  if (!std::getline(in, line) || line.rfind("tensors ", 0) != 0)
    throw FormatError("checkpoint: missing tensors line");
  const std::size_t n_tensors = std::stoull(line.substr(8));
  for (std::size_t p = 0; p < n_tensors; ++p) {
    if (!std::getline(in, line) || line.rfind("tensor ", 0) != 0)
      throw FormatError("checkpoint: missing tensor header");
    std::istringstream hs(line.substr(7));
    std::string name;
    std::size_t rows = 0, cols = 0;
    int trainable = 1;
    hs >> name >> rows >> cols >> trainable;
    if (name.empty() || rows == 0 || cols == 0)
      throw FormatError("checkpoint: bad tensor header \"" + line + "\"");
    Tensor t(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      if (!std::getline(in, line))
        throw FormatError("checkpoint: truncated tensor " + name);
      std::istringstream rs(line);
      for (std::size_t c = 0; c < cols; ++c) {
        if (!(rs >> t(r, c)))
          throw FormatError("checkpoint: bad tensor row in " + name);
      }
    }
    ckpt.params.add(name, std::move(t), trainable != 0);
  }
  if (!std::getline(in, line) || line != "end")
    throw FormatError("checkpoint: missing end marker");
  return ckpt;
}

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<TrainHistoryRow>& history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write history: " + path.string());
  out << "epoch,train_loss,val_loss,val_macro_f1,lr\n";
  for (const auto& row : history)
    out << row.epoch << ',' << fmt17(row.train_loss) << ','
        << fmt17(row.val_loss) << ',' << fmt17(row.val_macro_f1) << ','
        << fmt17(row.lr) << '\n';
}

void write_eval_report_csv(const std::filesystem::path& path,
                           const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write eval report: " + path.string());
  char buf[32];
  out << "metric,value\n";
  std::snprintf(buf, sizeof(buf), "%.6f", report.macro_f1);
  out << "macro_f1," << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.6f", report.micro_accuracy);
  out << "micro_accuracy," << buf << '\n';
  out << "n_eval," << report.n_eval << '\n';
  for (std::size_t q = 0; q < report.per_question_f1.size(); ++q) {
    std::snprintf(buf, sizeof(buf), "%.6f", report.per_question_f1[q]);
    out << "per_question_f1.q" << q << ',' << buf << '\n';
  }
}

void write_per_topic_csv(const std::filesystem::path& path,
                         const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write per-topic report: " + path.string());
  out << "topic,macro_f1,micro_accuracy,shift_agreement,shift_rate\n";
  char buf[96];
  for (const auto& [topic, tm] : report.per_topic) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f", tm.macro_f1,
                  tm.micro_accuracy, tm.shift_agreement, tm.shift_rate);
    out << topic << ',' << buf << '\n';
  }
}

std::string describe_config_hash(const ModelConfig& model_config,
                                 const TrainConfig& train_config) {
  std::ostringstream payload;
  payload << serialize_model_config(model_config) << '|'
          << "lr_max=" << fmt17(train_config.lr_max)
          << " lr_min=" << fmt17(train_config.lr_min)
          << " weight_decay=" << fmt17(train_config.weight_decay)
          << " clip_norm=" << fmt17(train_config.clip_norm)
          << " batch_size=" << train_config.batch_size
          << " epochs=" << train_config.epochs
          << " lambda=" << fmt17(train_config.lambda_contrastive)
          << " beta1=" << fmt17(train_config.beta1)
          << " beta2=" << fmt17(train_config.beta2)
          << " eps=" << fmt17(train_config.eps_adam)
          << " inbatch_negatives=" << (train_config.inbatch_negatives ? 1 : 0)
          << " seed=" << train_config.seed;
  return fnv1a_hex(payload.str());
}

}  // namespace opinionxf
