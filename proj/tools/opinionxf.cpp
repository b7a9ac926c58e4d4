#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "opinionxf/commands.hpp"
#include "opinionxf/config.hpp"
#include "opinionxf/errors.hpp"

namespace {

// Exit codes: 0 success, 1 usage/config error, 2 runtime/numeric failure.
int dispatch(const std::string& command,
             const opinionxf::CommandOptions& options) {
  if (command == "datagen") {
    opinionxf::run_datagen(options, std::cout);
  } else if (command == "train") {
    opinionxf::run_train(options, std::cout);
  } else if (command == "eval") {
    opinionxf::run_eval(options, std::cout);
  } else if (command == "compare") {
    opinionxf::run_compare(options, std::cout);
  } else if (command == "verify") {
    return opinionxf::run_verify(std::cout) == 0 ? 0 : 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"opinionxf: pre/post deliberation survey modeling toolkit"};
  app.require_subcommand(1);

  opinionxf::CommandOptions options;
  std::string config_path;
  std::string out_dir;
  std::string checkpoint_path;
  std::string dataset_path;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  bool seed_set = false;
  bool emit_default_config = false;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", config_path, "run configuration file");
    if (needs_config) opt->required();
    cmd->add_option("--out", out_dir, "output directory (overrides [paths] out_dir)");
    cmd->add_option("--seed", seed, "seed override (beats OPINIONXF_SEED and the config)")
        ->each([&seed_set](const std::string&) { seed_set = true; });
    cmd->add_option("--threads", threads, "worker threads for batched training");
  };

  auto* datagen = app.add_subcommand("datagen", "generate a synthetic corpus");
  add_common(datagen, false);
  datagen->add_flag("--emit-default-config", emit_default_config,
                    "print the default configuration file and exit");
  auto* train = app.add_subcommand("train", "train a model from a config");
  add_common(train, true);
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint over a dataset");
  add_common(eval, true);
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("--dataset", dataset_path, "dataset override");
  auto* compare = app.add_subcommand(
      "compare", "train all variants and baselines on one split");
  add_common(compare, true);
  auto* verify = app.add_subcommand("verify", "run the numeric oracle suite");
  (void)verify;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (emit_default_config) {
    std::cout << opinionxf::default_config_text();
    return 0;
  }
  if (app.got_subcommand(datagen) && config_path.empty()) {
    std::cerr << "datagen: --config is required\n";
    return 1;
  }

  options.config_path = config_path;
  if (!out_dir.empty()) options.out_dir = out_dir;
  if (seed_set) options.seed = seed;
  options.threads = threads;
  options.checkpoint_path = checkpoint_path;
  options.dataset_path = dataset_path;

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return dispatch(command, options);
  } catch (const opinionxf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const opinionxf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
