#include "app.hpp"

#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "commands.hpp"
#include "covex/error.hpp"

namespace covex::cli {

namespace {

enum Exit { kOk = 0, kUnexpected = 1, kConfig = 2, kData = 3, kModel = 4 };

void setup_logging(const std::string& level) {
  // stdout carries command output; logs go to stderr.
  static auto logger = [] {
    auto l = spdlog::stderr_color_mt("covex");
    spdlog::set_default_logger(l);
    return l;
  }();
  const auto lvl = spdlog::level::from_str(level);
  if (lvl == spdlog::level::off && level != "off") {
    throw ConfigError("log.level: unknown level '" + level + "'");
  }
  logger->set_level(lvl);
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Event extraction for COVID-19 tweets", "covex"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "run configuration file (key = value)");
  app.add_option("--set", overrides, "override a config key, key=value (repeatable)");

  auto* prepare = app.add_subcommand("prepare", "hydrate, filter and split the annotations");
  prepare->fallthrough();

  std::string family_name;
  std::string event_name;
  auto* train = app.add_subcommand("train", "train one model family for one event");
  std::vector<std::string> event_names;
  for (EventType e : kAllEvents) event_names.emplace_back(to_string(e));
  train->add_option("--family", family_name, "slot or sentence")
      ->required()
      ->check(CLI::IsMember({"slot", "sentence"}));
  train->add_option("--event", event_name, "event type")->required()->check(CLI::IsMember(event_names));
  train->fallthrough();

  auto* tune = app.add_subcommand("tune-thresholds", "pick slot thresholds on the validation split");
  tune->fallthrough();

  std::string split_name = "valid";
  std::string eval_corpus;
  auto* evaluate = app.add_subcommand("evaluate", "score the trained checkpoints");
  evaluate->add_option("--split", split_name, "valid or train")->check(CLI::IsMember({"valid", "train"}));
  evaluate->add_option("--corpus", eval_corpus, "evaluate this annotated JSONL instead");
  evaluate->fallthrough();

  std::string input;
  std::string output;
  auto* predict = app.add_subcommand("predict", "run both model families over raw tweets");
  predict->add_option("--input", input, "JSONL {tweet_id, event, text}")->required();
  predict->add_option("--output", output, "prediction JSONL")->required();
  predict->fallthrough();

  std::string ablation_name;
  auto* ablation = app.add_subcommand("ablation", "train, tune and evaluate a named ablation");
  ablation->add_option("--name", ablation_name, "ablation name")
      ->required()
      ->check(CLI::IsMember(ablation_names()));
  ablation->fallthrough();

  std::string synth_out;
  std::size_t synth_examples = 64;
  std::string synth_events = "tested_positive,tested_negative,can_not_test,death,cure";
  std::uint64_t synth_seed = 13;
  auto* synth = app.add_subcommand("synth", "write a template-generated annotated corpus");
  synth->add_option("--out", synth_out, "output JSONL")->required();
  synth->add_option("--examples", synth_examples, "examples per event");
  synth->add_option("--events", synth_events, "comma-separated events");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig::defaults() : RunConfig::load(config_path);
    config.apply_overrides(overrides);
    setup_logging(config.get("log.level"));

    if (*prepare) {
      cmd_prepare(config);
    } else if (*train) {
      cmd_train(config, parse_model_family(family_name), parse_event(event_name));
    } else if (*tune) {
      cmd_tune_thresholds(config);
    } else if (*evaluate) {
      cmd_evaluate(config, split_name, eval_corpus.empty() ? std::filesystem::path{} : config.resolve(eval_corpus));
    } else if (*predict) {
      cmd_predict(config, input, output);
    } else if (*ablation) {
      cmd_ablation(config, ablation_name);
    } else if (*synth) {
      RunConfig ev = config;
      ev.set("events", synth_events);
      cmd_synth(synth_out, synth_examples, ev.events(), synth_seed);
    }
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "covex: config error: " << e.what() << "\n";
    return kConfig;
  } catch (const DataError& e) {
    std::cerr << "covex: data error: " << e.what() << "\n";
    return kData;
  } catch (const PreconditionError& e) {
    std::cerr << "covex: data error: " << e.what() << "\n";
    return kData;
  } catch (const ModelError& e) {
    std::cerr << "covex: model error: " << e.what() << "\n";
    return kModel;
  } catch (const std::exception& e) {
    std::cerr << "covex: " << e.what() << "\n";
    return kUnexpected;
  }
}

}  // namespace covex::cli
