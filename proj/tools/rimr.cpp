#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "httplib.h"
#include "rimr/cli/commands.h"
#include "rimr/cli/service.h"
#include "rimr/serialize.h"

namespace {

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace rimr::cli;
  CLI::App app{"Resistant-client simulation, training and evaluation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "Seed recorded in artifact headers (overrides config and RIMR_SEED)");
  std::optional<int> workers;
  app.add_option("--workers", workers, "Concurrent sessions or training workers")->check(CLI::PositiveNumber);

  MakeFixturesOptions fx;
  auto* make_fixtures = app.add_subcommand("make-fixtures", "Write the synthetic fixture files");
  make_fixtures->add_option("--out-dir", fx.out_dir, "Output directory")->required();

  CorpusBuildOptions cb;
  auto* corpus = app.add_subcommand("corpus-build", "Annotate source sessions into a labeled corpus");
  corpus->add_option("--input", cb.input, "Source sessions JSONL")->required()->check(CLI::ExistingFile);
  corpus->add_option("--out", cb.output, "Corpus JSONL")->required();
  corpus->add_option("--stats", cb.stats, "Stats table (.tsv; a .json twin is written)")->required();

  TrainOptions tr;
  std::string train_mode = "mrrl";
  auto* train = app.add_subcommand("train", "Train the toy policy (sft or mrrl)");
  train->add_option("--mode", train_mode, "sft or mrrl")->check(CLI::IsMember({"sft", "mrrl"}));
  train->add_option("--data", tr.data, "SFT examples or scored groups JSONL")->required()->check(CLI::ExistingFile);
  std::string init_path;
  train->add_option("--init", init_path, "Initial policy (default: uniform)")->check(CLI::ExistingFile);
  train->add_option("--out", tr.output, "Trained policy JSON")->required();
  train->add_option("--history", tr.history, "History table (.tsv)")->required();
  train->add_option("--vocab-size", tr.vocab_size, "Vocabulary size (0: infer)");
  train->add_option("--context-order", tr.context_order, "Policy context order");
  train->add_option("--lr", tr.learning_rate, "Learning rate");
  train->add_option("--epochs", tr.epochs, "Epochs")->check(CLI::NonNegativeNumber);
  train->add_option("--batch-size", tr.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
  train->add_option("--clip-epsilon", tr.clip_epsilon, "Ratio clip epsilon (mrrl)");
  train->add_option("--kl-beta", tr.kl_beta, "KL penalty weight (mrrl)");
  train->add_option("--group-size", tr.group_size, "Outputs per group (0: infer)");

  GradCheckCliOptions gc;
  auto* grad = app.add_subcommand("grad-check", "Finite-difference check of the training objectives");
  grad->add_option("--instances", gc.instances, "Random instances per objective");
  grad->add_option("--group-size", gc.group_size, "Outputs per group");
  grad->add_option("--vocab-size", gc.vocab_size, "Vocabulary size");
  grad->add_option("--seq-len", gc.seq_len, "Sequence length");
  grad->add_option("--tolerance", gc.tolerance, "Maximum relative error");
  grad->add_flag("--inject-corruption", gc.inject_corruption, "Double one gradient coordinate (must fail)");

  SimulateOptions sm;
  std::string sim_mode = "full";
  std::string sim_input;
  auto* simulate = app.add_subcommand("simulate", "Run full sessions or replay a corpus");
  simulate->add_option("--mode", sim_mode, "full or replay")->check(CLI::IsMember({"full", "replay"}));
  simulate->add_option("--input", sim_input, "Profiles/corpus JSONL (full) or corpus JSONL (replay)")
      ->check(CLI::ExistingFile);
  simulate->add_option("--out", sm.output, "Output JSONL")->required();
  std::optional<int> repeats, max_turns;
  simulate->add_option("--repeats", repeats, "Sessions per profile (full)")->check(CLI::PositiveNumber);
  simulate->add_option("--max-turns", max_turns, "Conversational turn cap")->check(CLI::PositiveNumber);
  simulate->add_flag("--gold-client", sm.gold_client, "Replay with the gold client turns");

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Compute the metric report");
  evaluate->add_option("--input", ev.input, "Transcript or replay JSONL, or a directory of them")->required();
  evaluate->add_option("--out-dir", ev.out_dir, "Report directory")->required();
  evaluate->add_flag("--macro", ev.macro, "Macro-average P/R/F1 over sessions");
  evaluate->add_flag("--all-turn-coherence", ev.all_turn_coherence, "Coherence over all utterances");

  auto* serve = app.add_subcommand("serve", "Serve live training sessions over HTTP");
  std::optional<int> port;
  std::optional<std::string> host;
  serve->add_option("--port", port, "Listen port");
  serve->add_option("--host", host, "Listen address");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig config = load_run_config(config_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_path));
    if (seed) config.seed = *seed;
    if (workers) config.workers = *workers;
    if (repeats) config.repeats = *repeats;
    if (max_turns) config.limits.max_turns = *max_turns;
    if (port) config.port = *port;
    if (host) config.host = *host;
    validate_run_config(config);

    if (*make_fixtures) return cmd_make_fixtures(fx, config, std::cout, std::cerr);
    if (*corpus) return cmd_corpus_build(cb, config, std::cout, std::cerr);
    if (*train) {
      tr.mode = train_mode == "sft" ? TrainMode::kSft : TrainMode::kMrrl;
      if (!init_path.empty()) tr.init = init_path;
      return cmd_train(tr, config, std::cout, std::cerr);
    }
    if (*grad) return cmd_grad_check(gc, config, std::cout, std::cerr);
    if (*simulate) {
      sm.mode = sim_mode == "replay" ? SimulateMode::kReplay : SimulateMode::kFull;
      if (!sim_input.empty()) sm.input = sim_input;
      return cmd_simulate(sm, config, std::cout, std::cerr);
    }
    if (*evaluate) return cmd_evaluate(ev, config, std::cout, std::cerr);
    if (*serve) {
      std::vector<rimr::FivePProfile> profiles;
      if (config.profiles_path.empty()) {
        profiles = fixture_profiles();
      } else {
        for (const auto& r : read_records(config.profiles_path)) profiles.push_back(rimr::validate_profile(r));
      }
      SessionService service(config, std::move(profiles));
      httplib::Server server;
      install_routes(server, service);
      g_server = &server;
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      std::cerr << "listening on " << config.host << ":" << config.port << "\n";
      if (!server.listen(config.host, config.port)) {
        std::cerr << "error: cannot listen on " << config.host << ":" << config.port << "\n";
        return kExitFailed;
      }
      return kExitOk;
    }
  } catch (const rimr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  }
  return kExitOk;
}
