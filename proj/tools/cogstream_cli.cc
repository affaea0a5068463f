/*
 * Copyright 2024 The Cogstream Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end: batch runs, synthetic corpora, the HTTP service
// and event-log replay.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <csignal>

#include "CLI11.hpp"
#include "cogstream/pipeline.h"
#include "cogstream/service/config.h"
#include "cogstream/service/http_server.h"
#include "cogstream/service/replay.h"
#include "cogstream/service/screening_service.h"
#include "cogstream/synthdata.h"

namespace fs = std::filesystem;
using namespace cogstream;

namespace {

struct RunArgs {
  int scenario = 1;
  std::string model = "arfc";
  std::string selector = "variance";
  std::optional<double> threshold;
  std::size_t block_size = 100;
  std::string input;
  std::string fixtures;
  std::uint64_t seed = 42;
  std::string out;
};

void print_report(std::ostream& os, const RunConfig& config,
                  const RunResult& result) {
  const auto& m = result.metrics;
  os << "scenario:           " << config.scenario << '\n'
     << "model:              " << learners::model_kind_name(config.model) << '\n'
     << "selector:           " << selector_mode_name(config.selector_mode) << '\n'
     << "samples:            " << m.samples << '\n'
     << "quarantined:        " << result.quarantined.size() << '\n'
     << "accuracy:           " << m.accuracy << '\n'
     << "precision macro:    " << m.precision_macro << '\n'
     << "precision present:  " << m.precision_present << '\n'
     << "precision absent:   " << m.precision_absent << '\n'
     << "recall macro:       " << m.recall_macro << '\n'
     << "recall present:     " << m.recall_present << '\n'
     << "recall absent:      " << m.recall_absent << '\n'
     << "time (s):           " << m.elapsed_seconds << '\n'
     << "extraction time (s): " << m.extraction_seconds << '\n';
}

int do_run(const RunArgs& args) {
  RunConfig config;
  config.scenario = args.scenario;
  config.model = learners::parse_model_kind(args.model);
  config.selector_mode = parse_selector_mode(args.selector);
  config.selector_threshold = args.threshold;
  config.block_size = args.block_size;
  config.seed = args.seed;
  config.validate();

  const Corpus corpus = read_corpus_file(args.input);
  std::unique_ptr<FixtureReplayTransport> transport;
  if (args.fixtures.empty()) {
    transport = make_fixture_transport(corpus);
  } else {
    transport = std::make_unique<FixtureReplayTransport>();
    transport->load(args.fixtures);
  }
  const RunResult result = run_stream(corpus.dialogue_sessions(), config, *transport);

  print_report(std::cout, config, result);
  if (!args.out.empty()) {
    fs::create_directories(args.out);
    std::ofstream metrics(fs::path(args.out) / "metrics.json");
    nlohmann::json report = result.metrics.to_json();
    report["config"] = config.to_json();
    report["quarantined"] = result.quarantined;
    metrics << report.dump(2) << '\n';
    std::ofstream records(fs::path(args.out) / "records.jsonl");
    for (const auto& r : result.records) records << to_json(r).dump() << '\n';
  }
  return 0;
}

int do_synth(std::uint64_t seed, const std::string& out, bool stats_only,
             std::optional<double> shift_scale) {
  CorpusSpec spec;
  spec.seed = seed;
  auto profile = GenerationProfile::standard();
  if (shift_scale) profile.shift_scale = *shift_scale;
  const Corpus corpus = generate_corpus(spec, profile);
  const CorpusStats stats = corpus_stats(corpus);
  if (!stats_only) {
    fs::create_directories(out);
    std::ofstream c(fs::path(out) / "corpus.jsonl");
    write_corpus(c, corpus);
    std::ofstream f(fs::path(out) / "fixtures.jsonl");
    write_fixtures(f, corpus);
  }
  std::cout << stats.to_json().dump(2) << '\n';
  return 0;
}

service::HttpServer* g_server = nullptr;

extern "C" void handle_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int do_serve(const std::string& config_path) {
  auto config = config_path.empty() ? service::ServiceConfig{}
                                    : service::ServiceConfig::from_file(config_path);
  config.apply_environment();
  service::ScreeningService screening(config, service::make_transport(config));
  screening.start_sweeper();
  service::HttpServer server(screening, config.bearer_token);
  g_server = &server;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::clog << "cogstream: serving on " << config.host << ':' << config.port
            << " (data in " << config.data_dir << ")\n";
  const bool ok = server.listen(config.host, config.port);
  g_server = nullptr;
  screening.drain();
  screening.stop();
  if (!ok) {
    std::cerr << "cogstream: cannot listen on " << config.host << ':' << config.port << '\n';
    return 1;
  }
  return 0;
}

int do_replay(const std::string& log_path, const std::string& config_path) {
  RunConfig run;
  const fs::path snapshot = fs::path(log_path).parent_path() / "snapshot.json";
  if (!config_path.empty()) {
    run = service::ServiceConfig::from_file(config_path).run;
  } else if (fs::exists(snapshot)) {
    std::ifstream in(snapshot);
    run = RunConfig::from_json(nlohmann::json::parse(in).at("pipeline").at("config"));
  }
  const auto report = service::replay_log(log_path, run);
  std::cout << report.to_json().dump(2) << '\n';
  return report.mismatches.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cogstream: streaming cognitive-decline screening"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Evaluate a model prequentially over a corpus");
  run_cmd->add_option("--scenario", run.scenario, "1 = test-then-train, 2 = block training")
      ->check(CLI::IsMember({1, 2}));
  run_cmd->add_option("--model", run.model, "gnb | alma | hatc | arfc")
      ->check(CLI::IsMember({"gnb", "alma", "hatc", "arfc"}));
  run_cmd->add_option("--selector", run.selector, "correlation | variance")
      ->check(CLI::IsMember({"correlation", "variance"}));
  run_cmd->add_option("--threshold", run.threshold, "Selector threshold override");
  run_cmd->add_option("--block-size", run.block_size, "Scenario 2 block size")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--input", run.input, "Corpus file (JSON lines)")->required();
  run_cmd->add_option("--fixtures", run.fixtures,
                      "Extraction fixtures; defaults to the corpus stub scores");
  run_cmd->add_option("--seed", run.seed, "Model seed");
  run_cmd->add_option("--out", run.out, "Output directory for metrics and records");

  std::uint64_t synth_seed = 7;
  std::string synth_out;
  bool synth_stats = false;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus and fixtures");
  synth_cmd->add_option("--seed", synth_seed, "Generator seed");
  synth_cmd->add_option("--out", synth_out, "Output directory");
  synth_cmd->add_flag("--stats-only", synth_stats, "Print statistics without writing files");
  std::optional<double> shift_scale;
  synth_cmd->add_option("--shift-scale", shift_scale,
                        "Multiplier on the label-dependent score shifts");

  std::string serve_config;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP screening service");
  serve_cmd->add_option("--config", serve_config, "Service configuration file (JSON)");

  std::string replay_log_path;
  std::string replay_config;
  auto* replay_cmd = app.add_subcommand("replay", "Recompute predictions from an event log");
  replay_cmd->add_option("--log", replay_log_path, "Event log (events.jsonl)")->required();
  replay_cmd->add_option("--config", replay_config,
                         "Service configuration; defaults to the snapshot's run config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return do_run(run);
    if (*synth_cmd) {
      if (synth_out.empty() && !synth_stats) {
        throw CLI::RequiredError("--out");
      }
      return do_synth(synth_seed, synth_out, synth_stats, shift_scale);
    }
    if (*serve_cmd) return do_serve(serve_config);
    if (*replay_cmd) return do_replay(replay_log_path, replay_config);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "cogstream: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
