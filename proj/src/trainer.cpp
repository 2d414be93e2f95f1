#include "rba/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rba/kernels.hpp"
#include "rba/rng.hpp"

namespace rba::trainer {

using io::json;

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::sft: return "sft";
    case Mode::rba_group: return "rba_group";
    case Mode::rba_single: return "rba_single";
  }
  return "sft";
}

Mode mode_from_string(std::string_view s) {
  if (s == "sft") return Mode::sft;
  if (s == "rba_group" || s == "rba-g") return Mode::rba_group;
  if (s == "rba_single" || s == "rba-s") return Mode::rba_single;
  throw ValidationError("ParseError", "unknown training mode '" + std::string(s) + "'");
}

void TrainingConfig::validate() const {
  if (lambda < 0.0) throw ValidationError("PreconditionViolation", "lambda must be >= 0");
  if (beta < 0.0) throw ValidationError("PreconditionViolation", "beta must be >= 0");
  if (warmup_steps < 0) throw ValidationError("PreconditionViolation", "warmup_steps must be >= 0");
  if (max_steps < 0) throw ValidationError("PreconditionViolation", "max_steps must be >= 0");
  if (batch_size < 1) throw ValidationError("PreconditionViolation", "batch_size must be >= 1");
  if (group_size < 2) throw ValidationError("PreconditionViolation", "group_size must be >= 2");
  if (temperature <= 0.0) throw ValidationError("PreconditionViolation", "temperature must be > 0");
  if (validation_size < 0) throw ValidationError("PreconditionViolation", "validation_size must be >= 0");
  if (patience < 1) throw ValidationError("PreconditionViolation", "patience must be >= 1");
  if (eval_interval < 1) throw ValidationError("PreconditionViolation", "eval_interval must be >= 1");
  if (d < 1) throw ValidationError("PreconditionViolation", "d must be >= 1");
  if (max_response_len < 1) throw ValidationError("PreconditionViolation", "max_response_len must be >= 1");
  if (weight_decay < 0.0) throw ValidationError("PreconditionViolation", "weight_decay must be >= 0");
  if (reference_free && lambda <= 0.0) {
    throw ValidationError("PreconditionViolation",
                          "reference-free mode requires lambda > 0 (the CE anchor)");
  }
}

json MetricsRecord::to_json() const {
  json j;
  j["step"] = step;
  j["lr"] = lr;
  j["mode"] = mode;
  j["loss_total"] = loss_total;
  j["loss_pref"] = loss_pref;
  j["loss_ce"] = loss_ce;
  j["margin"] = margin;
  j["mean_reward"] = mean_reward;
  j["no_signal_count"] = no_signal_count;
  return j;
}

double lr_at_step(const TrainingConfig& cfg, long step) {
  if (step < 0) throw ValidationError("PreconditionViolation", "step must be >= 0");
  if (cfg.warmup_steps == 0 || step >= cfg.warmup_steps) return cfg.max_lr;
  return cfg.max_lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
}

std::uint64_t sample_seed(std::uint64_t run_seed, long step, const std::string& instr_id,
                          int speaker_index) {
  std::uint64_t h = hash_combine(run_seed, 0x53454c46ULL);  // "SELF"
  h = hash_combine(h, static_cast<std::uint64_t>(step));
  h = hash_combine(h, hash_str(instr_id));
  return hash_combine(h, static_cast<std::uint64_t>(speaker_index));
}

StepOutcome compute_step(const TrainState& state, const std::vector<GroupedExample>& batch,
                         const TrainingConfig& cfg, const reward::Judge& judge,
                         const std::vector<std::string>& lexicon) {
  if (batch.empty()) throw ValidationError("EmptyBatch", "train_step on empty batch");
  cfg.validate();

  const policy::PolicyParams* ref = cfg.reference_free ? nullptr : &state.ref;
  StepOutcome out(state.params);
  policy::Gradients item_grad(state.params);
  int margin_items = 0;
  int reward_groups = 0;

  for (const GroupedExample& ex : batch) {
    if (static_cast<int>(ex.group.size()) != cfg.group_size) {
      throw ValidationError("GroupSizeMismatch",
                            "instruction " + ex.instr->id + " has " +
                                std::to_string(ex.group.size()) + " renderings, need " +
                                std::to_string(cfg.group_size));
    }
    item_grad.zero();
    ItemOutcome item;
    const std::vector<int>& y_ref = ex.instr->reference_response_tokens;

    if (cfg.mode == Mode::sft) {
      item.bd.ce = policy::ce_group_backward(state.params, ex.group, y_ref, 1.0,
                                             &item_grad, cfg.group_size);
      item.bd.total = item.bd.ce;
    } else {
      const auto reference = detokenize(lexicon, y_ref);
      item.samples.reserve(ex.group.size());
      item.rewards.reserve(ex.group.size());
      for (std::size_t s = 0; s < ex.group.size(); ++s) {
        auto y = policy::sample_response(
            state.params, ex.group[s], cfg.temperature, cfg.max_response_len,
            sample_seed(cfg.seed, state.step, ex.instr->id, static_cast<int>(s)));
        item.rewards.push_back(
            judge.score(ex.instr->text(), detokenize(lexicon, y), reference));
        item.samples.push_back(std::move(y));
      }
      for (double r : item.rewards) out.mean_reward += r;
      ++reward_groups;

      if (cfg.mode == Mode::rba_group) {
        item.selection = objective::select_group_pair(item.rewards);
        if (item.selection) {
          const auto [sp, sm] = *item.selection;
          objective::PreferencePair pair;
          pair.x_plus = ex.group[static_cast<std::size_t>(sp)];
          pair.y_plus = item.samples[static_cast<std::size_t>(sp)];
          pair.x_minus = ex.group[static_cast<std::size_t>(sm)];
          pair.y_minus = item.samples[static_cast<std::size_t>(sm)];
          pair.provenance = objective::Provenance::group_selected;
          item.bd = objective::combined_backward(state.params, ref, pair, ex.group,
                                                 y_ref, cfg.beta, cfg.lambda, &item_grad);
          item.pairs.push_back(std::move(pair));
          ++margin_items;
        } else {
          // All rewards equal: preference signal vanishes, CE anchor remains.
          ++out.no_signal_count;
          item.bd.ce = policy::ce_group_backward(state.params, ex.group, y_ref,
                                                 cfg.lambda, &item_grad, cfg.group_size);
          item.bd.total = cfg.lambda * item.bd.ce;
        }
      } else {  // rba_single
        item.pairs = objective::make_single_pairs(ex.group, item.samples, y_ref);
        if (!item.pairs.empty()) {
          const double share = 1.0 / static_cast<double>(item.pairs.size());
          for (const auto& pair : item.pairs) {
            const auto bd =
                objective::pref_backward(state.params, ref, pair, cfg.beta, share, &item_grad);
            item.bd.pref += share * bd.pref;
            item.bd.margin += share * bd.margin;
            item.bd.log_v_plus += share * bd.log_v_plus;
            item.bd.log_v_minus += share * bd.log_v_minus;
          }
          ++margin_items;
        } else {
          ++out.no_signal_count;  // every sample already equals the reference
        }
        item.bd.ce = policy::ce_group_backward(state.params, ex.group, y_ref, cfg.lambda,
                                               &item_grad, cfg.group_size);
        item.bd.total = item.bd.pref + cfg.lambda * item.bd.ce;
      }
    }

    out.grad.scaled_add(item_grad, 1.0 / static_cast<double>(batch.size()));
    out.loss_total += item.bd.total;
    out.loss_pref += item.bd.pref;
    out.loss_ce += item.bd.ce;
    out.margin += item.bd.margin;
    out.items.push_back(std::move(item));
  }

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  out.loss_total *= inv_b;
  out.loss_pref *= inv_b;
  out.loss_ce *= inv_b;
  out.margin = margin_items ? out.margin / margin_items : 0.0;
  out.mean_reward =
      reward_groups ? out.mean_reward / (reward_groups * cfg.group_size) : 0.0;
  return out;
}

void train_step(TrainState& state, const std::vector<GroupedExample>& batch,
                const TrainingConfig& cfg, const reward::Judge& judge,
                const std::vector<std::string>& lexicon) {
  StepOutcome out = compute_step(state, batch, cfg, judge, lexicon);

  state.step += 1;
  const double lr = lr_at_step(cfg, state.step);
  const auto& ops = kernels::active();
  if (cfg.weight_decay > 0.0) {
    const double keep = 1.0 - lr * cfg.weight_decay;
    ops.scale(keep, state.params.E.data.data(), state.params.E.data.size());
    ops.scale(keep, state.params.W.data.data(), state.params.W.data.size());
  }
  ops.axpy(-lr, out.grad.dE.data.data(), state.params.E.data.data(),
           state.params.E.data.size());
  ops.axpy(-lr, out.grad.dW.data.data(), state.params.W.data.data(),
           state.params.W.data.size());

  MetricsRecord rec;
  rec.step = state.step;
  rec.lr = lr;
  rec.mode = std::string(to_string(cfg.mode));
  rec.loss_total = out.loss_total;
  rec.loss_pref = out.loss_pref;
  rec.loss_ce = out.loss_ce;
  rec.margin = out.margin;
  rec.mean_reward = out.mean_reward;
  rec.no_signal_count = out.no_signal_count;
  state.metrics.push_back(rec);
}

namespace {

double validation_score(const policy::PolicyParams& params,
                        const std::vector<const textgen::Instruction*>& val,
                        const std::map<std::string, std::vector<speech::SpokenInstruction>>& spoken,
                        const reward::Judge& judge, const std::vector<std::string>& lexicon,
                        int max_response_len) {
  if (val.empty()) return 0.0;
  double sum = 0.0;
  for (const auto* instr : val) {
    const auto& renderings = spoken.at(instr->id);
    const auto resp = policy::greedy_response(params, renderings[0], max_response_len);
    sum += judge.score(instr->text(), detokenize(lexicon, resp),
                       detokenize(lexicon, instr->reference_response_tokens));
  }
  return sum / static_cast<double>(val.size());
}

}  // namespace

TrainResult run_training(
    const TrainingConfig& cfg, const Vocab& vocab,
    const std::vector<std::string>& lexicon,
    const std::vector<textgen::Instruction>& corpus,
    const std::map<std::string, std::vector<speech::SpokenInstruction>>& spoken,
    const std::string& config_digest) {
  cfg.validate();
  if (corpus.empty()) throw ValidationError("EmptyCorpus", "empty instruction corpus");

  for (const auto& instr : corpus) {
    auto it = spoken.find(instr.id);
    if (it == spoken.end() || static_cast<int>(it->second.size()) < cfg.group_size) {
      throw ValidationError("CorpusMismatch",
                            "instruction " + instr.id + " lacks " +
                                std::to_string(cfg.group_size) + " spoken renderings");
    }
  }

  const int val_n = std::min<int>(cfg.validation_size, static_cast<int>(corpus.size()) - 1);
  const int train_n = static_cast<int>(corpus.size()) - std::max(val_n, 0);
  if (train_n < 1) throw ValidationError("EmptyCorpus", "no training items after split");

  std::vector<const textgen::Instruction*> train_items, val_items;
  for (int i = 0; i < train_n; ++i) train_items.push_back(&corpus[static_cast<std::size_t>(i)]);
  for (int i = train_n; i < static_cast<int>(corpus.size()); ++i) {
    val_items.push_back(&corpus[static_cast<std::size_t>(i)]);
  }

  const auto judge = reward::make_judge(cfg.judge);

  TrainState state;
  if (cfg.init_from.empty()) {
    state.params = policy::init_params(vocab, cfg.d, hash_combine(cfg.seed, 0x504152ULL),
                                       cfg.init_scale);
  } else {
    state.params = policy::load_checkpoint(cfg.init_from, vocab, cfg.d).params;
  }
  state.ref = state.params;

  std::vector<std::string> train_ids;
  train_ids.reserve(train_items.size());
  for (const auto* instr : train_items) train_ids.push_back(instr->id);

  policy::Checkpoint best;
  best.params = state.params;
  best.step = 0;
  best.config_digest = config_digest;
  best.train_ids = train_ids;
  double best_score = -1.0;
  bool evaluated = false;
  int evals_without_improvement = 0;

  // Deterministic epoch order; batches are consecutive slices.
  std::vector<int> order(train_items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::size_t cursor = 0;
  long epoch = 0;
  auto reshuffle = [&] {
    Rng rng(hash_combine(hash_combine(cfg.seed, 0x4f524452ULL), static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.next_below(i))]);
    }
    cursor = 0;
  };
  reshuffle();

  bool stopped = false;
  while (state.step < cfg.max_steps && !stopped) {
    std::vector<GroupedExample> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch_size));
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor >= order.size()) {
        ++epoch;
        reshuffle();
      }
      const auto* instr = train_items[static_cast<std::size_t>(order[cursor++])];
      GroupedExample ex;
      ex.instr = instr;
      const auto& renderings = spoken.at(instr->id);
      ex.group.assign(renderings.begin(),
                      renderings.begin() + cfg.group_size);
      batch.push_back(std::move(ex));
    }
    train_step(state, batch, cfg, *judge, lexicon);

    const bool at_interval = (state.step % cfg.eval_interval) == 0;
    const bool at_end = state.step >= cfg.max_steps;
    if ((at_interval || at_end) && !val_items.empty()) {
      const double score = validation_score(state.params, val_items, spoken, *judge,
                                            lexicon, cfg.max_response_len);
      if (!evaluated || score > best_score) {
        best_score = score;
        best.params = state.params;
        best.step = state.step;
        evals_without_improvement = 0;
      } else {
        ++evals_without_improvement;
        if (evals_without_improvement >= cfg.patience) stopped = true;
      }
      evaluated = true;
    }
  }

  if (!evaluated) {
    best.params = state.params;
    best.step = state.step;
    best_score = val_items.empty()
                     ? 0.0
                     : validation_score(state.params, val_items, spoken, *judge, lexicon,
                                        cfg.max_response_len);
  }

  TrainResult result;
  result.best = std::move(best);
  result.final_.params = state.params;
  result.final_.step = state.step;
  result.final_.config_digest = config_digest;
  result.final_.train_ids = train_ids;
  result.best_score = best_score;
  result.steps_run = state.step;
  result.metrics = std::move(state.metrics);
  return result;
}

}  // namespace rba::trainer
