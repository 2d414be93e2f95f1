#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rba/io.hpp"
#include "rba/objective.hpp"
#include "rba/policy.hpp"
#include "rba/reward.hpp"
#include "rba/speech.hpp"
#include "rba/textgen.hpp"

namespace rba::trainer {

enum class Mode { sft, rba_group, rba_single };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view s);  // accepts sft / rba_group / rba-g / ...

struct TrainingConfig {
  Mode mode = Mode::sft;
  double lambda = 0.2;  // CE weight in the combined loss
  double beta = 0.1;    // preference temperature
  double max_lr = 1e-4;
  int warmup_steps = 300;  // linear ramp to max_lr, flat afterwards
  int max_steps = 2000;
  int batch_size = 8;
  int group_size = 4;  // S
  double temperature = 1.0;
  std::uint64_t seed = 0;
  bool reference_free = false;
  int validation_size = 128;
  int patience = 10;       // evaluations without improvement before stopping
  int eval_interval = 100; // steps between validation passes
  std::string judge = "token_f1";
  int d = 16;
  double init_scale = 0.1;
  std::string init_from;  // checkpoint path; empty = random init
  double weight_decay = 0.0;
  int max_response_len = 16;

  void validate() const;
};

struct MetricsRecord {
  long step = 0;
  double lr = 0.0;
  std::string mode;
  double loss_total = 0.0;
  double loss_pref = 0.0;
  double loss_ce = 0.0;
  double margin = 0.0;
  double mean_reward = 0.0;
  int no_signal_count = 0;

  io::json to_json() const;
};

struct TrainState {
  policy::PolicyParams params;
  policy::PolicyParams ref;  // frozen after initialization
  long step = 0;
  std::vector<MetricsRecord> metrics;
};

struct GroupedExample {
  const textgen::Instruction* instr = nullptr;
  std::vector<speech::SpokenInstruction> group;  // exactly S renderings
};

// Everything one optimizer step produced, before the parameters move. Pure
// given (state, batch, cfg), so tests can replay the sampled responses and
// verify the gradient against finite differences of the replayed loss.
struct ItemOutcome {
  std::vector<std::vector<int>> samples;         // rba modes
  std::vector<double> rewards;                   // rba modes
  std::optional<std::pair<int, int>> selection;  // rba_group
  std::vector<objective::PreferencePair> pairs;  // pairs that carried gradient
  objective::LossBreakdown bd;
};

struct StepOutcome {
  policy::Gradients grad;  // mean over batch items, of the per-item totals
  double loss_total = 0.0;
  double loss_pref = 0.0;
  double loss_ce = 0.0;
  double margin = 0.0;
  double mean_reward = 0.0;
  int no_signal_count = 0;
  std::vector<ItemOutcome> items;

  explicit StepOutcome(const policy::PolicyParams& p) : grad(p) {}
};

double lr_at_step(const TrainingConfig& cfg, long step);

// Deterministic per-(step, instruction, speaker) sampling seed.
std::uint64_t sample_seed(std::uint64_t run_seed, long step, const std::string& instr_id,
                          int speaker_index);

StepOutcome compute_step(const TrainState& state, const std::vector<GroupedExample>& batch,
                         const TrainingConfig& cfg, const reward::Judge& judge,
                         const std::vector<std::string>& lexicon);

// compute_step + gradient-descent update at lr_at_step(step+1); appends one
// metrics record.
void train_step(TrainState& state, const std::vector<GroupedExample>& batch,
                const TrainingConfig& cfg, const reward::Judge& judge,
                const std::vector<std::string>& lexicon);

struct TrainResult {
  policy::Checkpoint best;    // best-validation parameters
  policy::Checkpoint final_;  // parameters at the last executed step
  double best_score = 0.0;
  long steps_run = 0;
  std::vector<MetricsRecord> metrics;
};

// Full loop: deterministic batching from cfg.seed, validation every
// eval_interval steps using the configured judge over greedy decodes, keeps
// the best checkpoint, stops on patience or max_steps.
TrainResult run_training(
    const TrainingConfig& cfg, const Vocab& vocab,
    const std::vector<std::string>& lexicon,
    const std::vector<textgen::Instruction>& corpus,
    const std::map<std::string, std::vector<speech::SpokenInstruction>>& spoken,
    const std::string& config_digest);

}  // namespace rba::trainer
