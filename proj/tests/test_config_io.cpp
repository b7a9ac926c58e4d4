#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "opinionxf/checkpoint.hpp"
#include "opinionxf/config.hpp"

using namespace opinionxf;

namespace {
namespace fs = std::filesystem;
}

TEST_CASE("default config text parses back to the default run config") {
  const auto cfg = parse_run_config(default_config_text());
  CHECK(cfg.generator.n_participants == 1000);
  CHECK(cfg.generator.question_count == 8);
  CHECK(cfg.generator.answers_per_question ==
        std::vector<std::size_t>{3, 4, 5, 3, 4, 5, 3, 4});
  CHECK(cfg.generator.noise_prob == doctest::Approx(0.05));
  REQUIRE(cfg.generator.topics.size() == 3);
  CHECK(cfg.generator.topics[0].name == "skincare");
  CHECK(cfg.generator.topics[2].shift_prob[5] == doctest::Approx(0.45));
  CHECK(cfg.model.d_model == 128);
  CHECK(cfg.model.n_layers == 4);
  CHECK(cfg.model.n_heads == 4);
  CHECK(cfg.training.lr_max == doctest::Approx(2e-3));
  CHECK(cfg.training.weight_decay == doctest::Approx(1e-4));
  CHECK(cfg.training.clip_norm == doctest::Approx(1.0));
  CHECK(cfg.split_ratio == doctest::Approx(0.8));
  CHECK_NOTHROW(cfg.generator.validate());
}

TEST_CASE("per-question broadcast and explicit lists") {
  const std::string text =
      "[generator]\n"
      "questions = 3\n"
      "answers_per_question = 4\n"
      "[topic]\n"
      "name = solo\n"
      "shift_prob = 0.1,0.2,0.3\n"
      "convergence_prob = 0.05\n";
  const auto cfg = parse_run_config(text);
  CHECK(cfg.generator.answers_per_question ==
        std::vector<std::size_t>{4, 4, 4});
  CHECK(cfg.generator.topics[0].shift_prob ==
        std::vector<double>{0.1, 0.2, 0.3});
  CHECK(cfg.generator.topics[0].convergence_prob ==
        std::vector<double>{0.05, 0.05, 0.05});
}

TEST_CASE("config errors carry line numbers") {
  try {
    parse_run_config("[generator]\nnot_a_key = 3\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_run_config("key_outside = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[generator]\nseed = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[mystery]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(
      parse_run_config("[generator]\nquestions = 2\n[topic]\nname = a\n"
                       "shift_prob = 0.1,0.2,0.3\n"),
      ConfigError);
  CHECK_THROWS_AS(parse_run_config("[model]\nuse_fusion = maybe\n"),
                  ConfigError);
}

TEST_CASE("comments and blank lines are ignored") {
  const auto cfg = parse_run_config(
      "# leading comment\n"
      "\n"
      "[model]\n"
      "; another comment\n"
      "d_model = 32\n");
  CHECK(cfg.model.d_model == 32);
}

TEST_CASE("seed override reseeds all three components") {
  auto cfg = parse_run_config(default_config_text());
  cfg.override_seed(777);
  CHECK(cfg.generator.seed == 777);
  CHECK(cfg.model.seed == 777);
  CHECK(cfg.training.seed == 777);
}

TEST_CASE("fnv1a matches published test vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("a") == fnv1a_hex("a"));
  CHECK(fnv1a_hex("ab") != fnv1a_hex("ba"));
}

TEST_CASE("model config serialization round trip") {
  ModelConfig cfg;
  cfg.d_model = 64;
  cfg.n_layers = 2;
  cfg.n_heads = 4;
  cfg.vocab_sizes = {3, 4, 5};
  cfg.use_fusion = true;
  cfg.fusion_bands = 8;
  cfg.dropout = 0.125;
  cfg.seed = 31337;
  const auto line = serialize_model_config(cfg);
  const auto back = parse_model_config(line);
  CHECK(back.d_model == 64);
  CHECK(back.vocab_sizes == cfg.vocab_sizes);
  CHECK(back.use_fusion);
  CHECK(back.fusion_bands == 8);
  CHECK(back.dropout == 0.125);
  CHECK(back.seed == 31337);
  CHECK_THROWS_AS(parse_model_config("nonsense"), FormatError);
}

TEST_CASE("history CSV layout") {
  const fs::path dir = fs::temp_directory_path() / "opinionxf_test_config";
  fs::create_directories(dir);
  std::vector<TrainHistoryRow> history{
      {1, 1.5, 1.25, 0.5, 2e-3},
      {2, 1.0, 0.75, 0.625, 1e-3},
  };
  write_history_csv(dir / "history.csv", history);
  std::ifstream in(dir / "history.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,train_loss,val_loss,val_macro_f1,lr");
  std::getline(in, line);
  CHECK(line.rfind("1,1.5,1.25,0.5,", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("2,1,0.75,0.625,", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("eval report CSV layout") {
  const fs::path dir = fs::temp_directory_path() / "opinionxf_test_config2";
  fs::create_directories(dir);
  EvalReport report;
  report.macro_f1 = 0.5;
  report.micro_accuracy = 0.625;
  report.per_question_f1 = {0.25, 0.75};
  report.n_eval = 10;
  report.per_topic["alpha"] = {0.5, 0.625, 0.3, 0.2, 10};
  write_eval_report_csv(dir / "report.csv", report);
  write_per_topic_csv(dir / "topics.csv", report);

  std::ifstream in(dir / "report.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "metric,value");
  std::getline(in, line);
  CHECK(line == "macro_f1,0.500000");

  std::ifstream tin(dir / "topics.csv");
  std::getline(tin, line);
  CHECK(line == "topic,macro_f1,micro_accuracy,shift_agreement,shift_rate");
  std::getline(tin, line);
  CHECK(line == "alpha,0.500000,0.625000,0.300000,0.200000");
  fs::remove_all(dir);
}
