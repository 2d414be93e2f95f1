// rba: synth -> speak -> train -> eval -> report pipeline driver.
//
// Every subcommand takes one JSON config (strictly parsed; unknown keys are
// rejected) plus a few overriding flags. All artifacts embed the resolved
// config digest and contain no timestamps, so the same config + seed always
// reproduces byte-identical files. Exit codes: 0 success, 1 validation
// error, 2 I/O error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>

#include "CLI11.hpp"

#include "rba/artifacts.hpp"
#include "rba/config.hpp"
#include "rba/eval.hpp"
#include "rba/io.hpp"
#include "rba/policy.hpp"
#include "rba/reward.hpp"
#include "rba/speech.hpp"
#include "rba/textgen.hpp"
#include "rba/trainer.hpp"

namespace fs = std::filesystem;
using rba::io::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string seed_override;  // string so "no override" is representable
};

rba::config::RunConfig load(const CommonArgs& args) {
  if (!fs::exists(args.config_path)) {
    throw rba::ValidationError("MissingInput", "config not found: " + args.config_path);
  }
  auto cfg = rba::config::load_config(args.config_path);
  if (!args.seed_override.empty()) {
    cfg.seed = std::stoull(args.seed_override);
    cfg.training.seed = cfg.seed;
  }
  return cfg;
}

void require_input(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) {
    throw rba::ValidationError("MissingInput", what + " not found: " + path);
  }
}

rba::textgen::TaskWorld world_from(const rba::config::RunConfig& cfg) {
  auto world = rba::textgen::make_default_world(cfg.world.kind);
  if (!cfg.world.topic_weights.empty()) {
    world.topic_weights = cfg.world.topic_weights;
    world.validate();
  }
  return world;
}

int cmd_synth(const CommonArgs& common, int n_override, const std::string& out_override) {
  auto cfg = load(common);
  const int n = n_override > 0 ? n_override : cfg.corpus_n;
  const std::string out = out_override.empty() ? cfg.paths.corpus : out_override;

  const auto world = world_from(cfg);
  const auto corpus = rba::textgen::build_corpus(world, n, cfg.filter, cfg.seed);
  rba::artifacts::write_corpus(out, cfg, world, corpus);
  std::cout << "wrote " << corpus.size() << " instructions to " << out << "\n";
  return 0;
}

int cmd_speak(const CommonArgs& common, const std::string& corpus_override,
              const std::string& out_override) {
  auto cfg = load(common);
  const std::string corpus_path =
      corpus_override.empty() ? cfg.paths.corpus : corpus_override;
  const std::string out = out_override.empty() ? cfg.paths.spoken : out_override;
  require_input(corpus_path, "corpus");

  const auto corpus = rba::artifacts::read_corpus(corpus_path);
  rba::Vocab vocab{static_cast<int>(corpus.lexicon.size()),
                   static_cast<int>(corpus.lexicon.size()) + cfg.speakers.n_filler_tokens};

  const auto bank = rba::speech::build_speaker_bank(
      cfg.speakers.n_speakers, cfg.seed, cfg.speakers.filler_rate,
      cfg.speakers.substitution_rate);
  rba::artifacts::write_speaker_bank(cfg.paths.speaker_bank, cfg, bank);

  std::map<std::string, std::vector<rba::speech::SpokenInstruction>> by_id;
  std::vector<std::string> order;
  order.reserve(corpus.items.size());
  for (const auto& instr : corpus.items) {
    by_id[instr.id] =
        rba::speech::speak_group(instr, bank, vocab, cfg.training.group_size, cfg.seed);
    order.push_back(instr.id);
  }
  rba::artifacts::write_spoken(out, cfg, order, vocab.acoustic_size,
                               cfg.training.group_size, by_id);
  std::cout << "wrote " << corpus.items.size() << " spoken groups to " << out
            << " (bank: " << cfg.paths.speaker_bank << ")\n";
  return 0;
}

int cmd_train(const CommonArgs& common, const std::string& mode_override,
              const std::string& out_dir_override) {
  auto cfg = load(common);
  if (!mode_override.empty()) {
    cfg.training.mode = rba::trainer::mode_from_string(mode_override);
  }
  const std::string out_dir =
      out_dir_override.empty() ? cfg.paths.checkpoint_dir : out_dir_override;
  require_input(cfg.paths.corpus, "corpus");
  require_input(cfg.paths.spoken, "spoken corpus");
  if (!cfg.training.init_from.empty()) {
    require_input(cfg.training.init_from, "initial checkpoint");
  }

  const auto corpus = rba::artifacts::read_corpus(cfg.paths.corpus);
  const auto spoken = rba::artifacts::read_spoken(cfg.paths.spoken);
  rba::Vocab vocab{static_cast<int>(corpus.lexicon.size()), spoken.acoustic_size};

  auto training = cfg.training;
  training.judge = cfg.resolved_judge(training.judge);

  const auto result = rba::trainer::run_training(training, vocab, corpus.lexicon,
                                                 corpus.items, spoken.by_id,
                                                 rba::config::config_digest(cfg));

  fs::create_directories(out_dir);
  rba::policy::save_checkpoint(result.best, out_dir + "/best.json");
  rba::policy::save_checkpoint(result.final_, out_dir + "/final.json");
  rba::artifacts::write_metrics(cfg.paths.metrics, cfg, result.metrics);

  std::cout << "ran " << result.steps_run << " steps (" +
                   std::string(rba::trainer::to_string(training.mode)) +
                   ", judge=" + training.judge + "); best validation score "
            << result.best_score << " at step " << result.best.step << "\n"
            << "checkpoints: " << out_dir << "/best.json, " << out_dir
            << "/final.json; metrics: " << cfg.paths.metrics << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& common, const std::string& suite_override,
             const std::string& ckpt_a, const std::string& ckpt_b,
             const std::string& out_override) {
  auto cfg = load(common);
  const std::string suite = suite_override.empty() ? cfg.eval.suite : suite_override;
  const std::string out = out_override.empty() ? cfg.paths.report : out_override;
  require_input(cfg.paths.corpus, "corpus");
  require_input(cfg.paths.spoken, "spoken corpus");
  require_input(ckpt_a, "checkpoint A");
  if (!ckpt_b.empty()) require_input(ckpt_b, "checkpoint B");

  const auto corpus = rba::artifacts::read_corpus(cfg.paths.corpus);
  const auto spoken = rba::artifacts::read_spoken(cfg.paths.spoken);
  rba::Vocab vocab{static_cast<int>(corpus.lexicon.size()), spoken.acoustic_size};

  const auto a = rba::policy::load_checkpoint(ckpt_a, vocab, cfg.training.d);
  std::optional<rba::policy::Checkpoint> b;
  if (!ckpt_b.empty()) b = rba::policy::load_checkpoint(ckpt_b, vocab, cfg.training.d);

  std::vector<rba::textgen::Instruction> items = corpus.items;
  if (cfg.eval.n_items > 0 && cfg.eval.n_items < static_cast<int>(items.size())) {
    items.resize(static_cast<std::size_t>(cfg.eval.n_items));
  }

  std::set<std::string> train_ids(a.train_ids.begin(), a.train_ids.end());
  if (b) train_ids.insert(b->train_ids.begin(), b->train_ids.end());

  const auto judge = rba::reward::make_judge(cfg.resolved_judge(cfg.eval.judge));

  rba::eval::SuiteInput in;
  in.model_a = &a.params;
  in.model_b = b ? &b->params : nullptr;
  in.id_a = ckpt_a;
  in.id_b = ckpt_b;
  in.corpus = &items;
  in.spoken = &spoken.by_id;
  in.lexicon = &corpus.lexicon;
  in.suite = suite;
  in.judge = judge.get();
  in.seed = cfg.seed;
  in.max_response_len = cfg.training.max_response_len;
  in.config_digest = rba::config::config_digest(cfg);
  in.train_ids = &train_ids;

  std::vector<json> per_item;
  const auto report = rba::eval::evaluate_suite(in, &per_item);

  rba::io::atomic_write_file(out, report.to_json().dump() + "\n");
  rba::io::ArtifactMeta meta;
  meta.kind = "eval_items";
  meta.config_digest = in.config_digest;
  meta.extra["suite"] = suite;
  rba::io::write_artifact(out + ".items.jsonl", meta, per_item);

  std::cout << "suite " << suite << " over " << report.sample_count << " items:";
  for (const auto& [k, v] : report.metrics) std::cout << " " << k << "=" << v;
  std::cout << "\nreport: " << out << " (+ per-item dump " << out << ".items.jsonl)\n";
  return 0;
}

int cmd_report(const std::string& in_path, const std::string& format,
               const std::string& out_path) {
  require_input(in_path, "report");
  const auto report =
      rba::eval::EvalReport::from_json(rba::io::parse_json(rba::io::read_file(in_path), in_path));

  std::string body;
  if (format == "csv") {
    body = "section,name,value,count\n";
    for (const auto& [k, v] : report.metrics) {
      body += "metric," + k + "," + std::to_string(v) + ",\n";
    }
    for (const auto& [topic, stat] : report.per_topic) {
      body += "topic," + topic + "," + std::to_string(stat.value) + "," +
              std::to_string(stat.count) + "\n";
    }
  } else if (format == "table") {
    std::size_t width = 12;
    for (const auto& [k, v] : report.metrics) width = std::max(width, k.size());
    for (const auto& [t, s] : report.per_topic) width = std::max(width, t.size());
    char line[256];
    body += "suite: " + report.suite + "   models: " + report.model_a;
    if (!report.model_b.empty()) body += " vs " + report.model_b;
    body += "   n=" + std::to_string(report.sample_count) + "\n";
    for (const auto& [k, v] : report.metrics) {
      std::snprintf(line, sizeof(line), "  %-*s %10.4f\n", static_cast<int>(width),
                    k.c_str(), v);
      body += line;
    }
    if (!report.per_topic.empty()) {
      std::snprintf(line, sizeof(line), "  %-*s %10s %7s\n", static_cast<int>(width),
                    "topic", "value", "count");
      body += line;
      for (const auto& [topic, stat] : report.per_topic) {
        std::snprintf(line, sizeof(line), "  %-*s %10.4f %7d\n", static_cast<int>(width),
                      topic.c_str(), stat.value, stat.count);
        body += line;
      }
    }
  } else {
    throw rba::ValidationError("ParseError", "format must be 'table' or 'csv'");
  }

  if (out_path.empty()) {
    std::cout << body;
  } else {
    rba::io::atomic_write_file(out_path, body);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reinforced behavior alignment, desk scale"};
  app.require_subcommand(1);

  CommonArgs common;
  int synth_n = 0;
  std::string synth_out, speak_corpus, speak_out, train_mode, train_out_dir;
  std::string eval_suite, eval_a, eval_b, eval_out;
  std::string report_in, report_format = "table", report_out;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON config path")->required();
    sub->add_option("--seed", common.seed_override, "override config seed");
  };

  auto* synth = app.add_subcommand("synth", "synthesize an instruction corpus");
  add_common(synth);
  synth->add_option("--n", synth_n, "override corpus size");
  synth->add_option("--out", synth_out, "override corpus output path");

  auto* speak = app.add_subcommand("speak", "render the corpus through the speaker bank");
  add_common(speak);
  speak->add_option("--corpus", speak_corpus, "override corpus input path");
  speak->add_option("--out", speak_out, "override spoken output path");

  auto* train = app.add_subcommand("train", "run sft / rba_group / rba_single training");
  add_common(train);
  train->add_option("--mode", train_mode, "override mode (sft|rba-g|rba-s)");
  train->add_option("--out-dir", train_out_dir, "override checkpoint directory");

  auto* eval = app.add_subcommand("eval", "evaluate checkpoints on a held-out corpus");
  add_common(eval);
  eval->add_option("--suite", eval_suite, "wr|lc|qa|s2tt|consistency");
  eval->add_option("--ckpt-a", eval_a, "checkpoint under evaluation")->required();
  eval->add_option("--ckpt-b", eval_b, "comparison checkpoint (wr/lc)");
  eval->add_option("--out", eval_out, "override report output path");

  auto* report = app.add_subcommand("report", "render a report JSON");
  report->add_option("--in", report_in, "report JSON path")->required();
  report->add_option("--format", report_format, "table|csv");
  report->add_option("--out", report_out, "write to file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }

  try {
    if (synth->parsed()) return cmd_synth(common, synth_n, synth_out);
    if (speak->parsed()) return cmd_speak(common, speak_corpus, speak_out);
    if (train->parsed()) return cmd_train(common, train_mode, train_out_dir);
    if (eval->parsed()) return cmd_eval(common, eval_suite, eval_a, eval_b, eval_out);
    if (report->parsed()) return cmd_report(report_in, report_format, report_out);
  } catch (const rba::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const rba::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
