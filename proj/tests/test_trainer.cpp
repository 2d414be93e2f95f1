#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "rba/eval.hpp"
#include "rba/kernels.hpp"
#include "rba/objective.hpp"
#include "rba/policy.hpp"
#include "rba/reward.hpp"
#include "rba/rng.hpp"
#include "rba/speech.hpp"
#include "rba/textgen.hpp"
#include "rba/trainer.hpp"

using namespace rba;
using namespace rba::trainer;
using doctest::Approx;

namespace {

// Minimal two-word world: lexicon {a, b}, Vt = 2, EOS = 2, BOS = 3,
// acoustic block [4, 6). Instructions are hand-built so the fixture is
// independent of the synthesis pipeline.
struct TinyWorld {
  Vocab vocab{2, 2};
  std::vector<std::string> lexicon{"a", "b"};
  std::vector<textgen::Instruction> corpus;
  std::map<std::string, std::vector<speech::SpokenInstruction>> spoken;

  explicit TinyWorld(int n_items = 2, std::uint64_t seed = 11) {
    const auto bank = speech::build_speaker_bank(4, seed);
    for (int i = 0; i < n_items; ++i) {
      textgen::Instruction instr;
      instr.id = "tiny-" + std::to_string(i);
      instr.words = {i % 2 ? "b" : "a", i % 2 ? "a" : "b"};
      instr.text_tokens = {i % 2, 1 - i % 2};
      instr.reference_response_tokens = {1 - i % 2, vocab.eos()};
      corpus.push_back(instr);
      spoken[instr.id] = speech::speak_group(instr, bank, vocab, 4, seed);
    }
  }

  std::vector<GroupedExample> batch() const {
    std::vector<GroupedExample> b;
    for (const auto& instr : corpus) {
      GroupedExample ex;
      ex.instr = &instr;
      ex.group = spoken.at(instr.id);
      b.push_back(std::move(ex));
    }
    return b;
  }
};

TrainingConfig tiny_cfg(Mode mode) {
  TrainingConfig cfg;
  cfg.mode = mode;
  cfg.beta = 0.1;
  cfg.lambda = 0.2;
  cfg.group_size = 4;
  cfg.temperature = 1.0;
  cfg.max_response_len = 4;
  cfg.d = 3;
  cfg.seed = 11;
  cfg.max_lr = 0.5;
  cfg.warmup_steps = 2;
  return cfg;
}

TrainState tiny_state(const TinyWorld& w, const TrainingConfig& cfg, std::uint64_t seed) {
  TrainState state;
  state.params = policy::init_params(w.vocab, cfg.d, seed, 1.0);
  state.ref = state.params;
  return state;
}

// Recomputes the batch loss from the sampled responses and pair selections
// that compute_step recorded, at arbitrary parameters. The sampling is
// frozen, so this function is differentiable in `params` and its finite
// differences must match StepOutcome::grad.
double replay_loss(const policy::PolicyParams& params, const policy::PolicyParams& ref,
                   const StepOutcome& out, const std::vector<GroupedExample>& batch,
                   const TrainingConfig& cfg) {
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& item = out.items[i];
    const auto& group = batch[i].group;
    const auto& y_ref = batch[i].instr->reference_response_tokens;
    if (cfg.mode == Mode::sft) {
      total += policy::ce_group_loss(params, group, y_ref, cfg.group_size);
    } else if (cfg.mode == Mode::rba_group) {
      if (item.selection) {
        total += objective::combined_loss(params, &ref, item.pairs[0], group, y_ref,
                                          cfg.beta, cfg.lambda)
                     .total;
      } else {
        total += cfg.lambda * policy::ce_group_loss(params, group, y_ref, cfg.group_size);
      }
    } else {  // rba_single
      double pref = 0.0;
      if (!item.pairs.empty()) {
        const double share = 1.0 / static_cast<double>(item.pairs.size());
        for (const auto& pair : item.pairs) {
          pref += share * objective::dpo_loss(params, &ref, pair, cfg.beta).pref;
        }
      }
      total += pref + cfg.lambda * policy::ce_group_loss(params, group, y_ref, cfg.group_size);
    }
  }
  return total / static_cast<double>(batch.size());
}

// Central finite differences of the replayed loss against the analytic
// gradient, entry by entry.
void check_grad_fd(const TinyWorld& w, TrainState& state, const TrainingConfig& cfg) {
  const auto judge = reward::make_judge("token_f1");
  const auto batch = w.batch();
  const auto out = compute_step(state, batch, cfg, *judge, w.lexicon);
  REQUIRE(out.items.size() == batch.size());
  CHECK(replay_loss(state.params, state.ref, out, batch, cfg) ==
        Approx(out.loss_total).epsilon(1e-9));

  const double h = 1e-5;
  auto fd_at = [&](double* slot, const double analytic) {
    const double saved = *slot;
    *slot = saved + h;
    const double up = replay_loss(state.params, state.ref, out, batch, cfg);
    *slot = saved - h;
    const double dn = replay_loss(state.params, state.ref, out, batch, cfg);
    *slot = saved;
    const double fd = (up - dn) / (2.0 * h);
    const double denom = std::max({std::fabs(fd), std::fabs(analytic), 1e-4});
    CHECK(std::fabs(fd - analytic) / denom < 1e-4);
  };
  for (std::size_t k = 0; k < state.params.E.data.size(); ++k) {
    CAPTURE(k);
    fd_at(&state.params.E.data[k], out.grad.dE.data[k]);
  }
  for (std::size_t k = 0; k < state.params.W.data.size(); ++k) {
    CAPTURE(k);
    fd_at(&state.params.W.data[k], out.grad.dW.data[k]);
  }
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("learning-rate schedule: linear warmup, then flat") {
  TrainingConfig cfg;
  cfg.max_lr = 1e-4;
  cfg.warmup_steps = 300;
  CHECK(lr_at_step(cfg, 0) == 0.0);
  CHECK(lr_at_step(cfg, 150) == Approx(5e-5));
  CHECK(lr_at_step(cfg, 300) == Approx(1e-4));
  CHECK(lr_at_step(cfg, 100000) == Approx(1e-4));

  cfg.warmup_steps = 0;
  CHECK(lr_at_step(cfg, 0) == Approx(1e-4));

  CHECK_THROWS_AS(lr_at_step(cfg, -1), ValidationError);
}

TEST_CASE("mode names round-trip; aliases accepted") {
  CHECK(mode_from_string("sft") == Mode::sft);
  CHECK(mode_from_string("rba_group") == Mode::rba_group);
  CHECK(mode_from_string("rba-g") == Mode::rba_group);
  CHECK(mode_from_string("rba_single") == Mode::rba_single);
  CHECK(mode_from_string("rba-s") == Mode::rba_single);
  for (Mode m : {Mode::sft, Mode::rba_group, Mode::rba_single}) {
    CHECK(mode_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_WITH_AS(mode_from_string("grpo"),
                       doctest::Contains("unknown training mode"), ValidationError);
}

TEST_CASE("config validation rejects out-of-range fields") {
  auto bad = [](auto&& tweak) {
    TrainingConfig cfg;
    tweak(cfg);
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  };
  bad([](TrainingConfig& c) { c.lambda = -0.1; });
  bad([](TrainingConfig& c) { c.beta = -1.0; });
  bad([](TrainingConfig& c) { c.group_size = 1; });
  bad([](TrainingConfig& c) { c.batch_size = 0; });
  bad([](TrainingConfig& c) { c.temperature = 0.0; });
  bad([](TrainingConfig& c) { c.patience = 0; });
  bad([](TrainingConfig& c) { c.eval_interval = 0; });
  bad([](TrainingConfig& c) { c.max_response_len = 0; });
  bad([](TrainingConfig& c) { c.weight_decay = -1e-9; });
  bad([](TrainingConfig& c) {
    c.reference_free = true;
    c.lambda = 0.0;
  });
  TrainingConfig ok;
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("compute_step is pure: same state and batch give identical output") {
  const TinyWorld w;
  const auto cfg = tiny_cfg(Mode::rba_group);
  auto state = tiny_state(w, cfg, 7);
  const auto judge = reward::make_judge("token_f1");
  const auto batch = w.batch();

  const auto a = compute_step(state, batch, cfg, *judge, w.lexicon);
  const auto b = compute_step(state, batch, cfg, *judge, w.lexicon);
  CHECK(a.grad.dE.data == b.grad.dE.data);
  CHECK(a.grad.dW.data == b.grad.dW.data);
  CHECK(a.loss_total == b.loss_total);
  CHECK(a.mean_reward == b.mean_reward);
  REQUIRE(a.items.size() == b.items.size());
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    CHECK(a.items[i].samples == b.items[i].samples);
    CHECK(a.items[i].rewards == b.items[i].rewards);
    CHECK(a.items[i].selection == b.items[i].selection);
  }
}

TEST_CASE("train_step applies params -= lr * grad and logs one metrics record") {
  const TinyWorld w;
  auto cfg = tiny_cfg(Mode::rba_group);
  auto state = tiny_state(w, cfg, 7);
  const auto judge = reward::make_judge("token_f1");
  const auto batch = w.batch();

  const auto before = state.params;
  const auto out = compute_step(state, batch, cfg, *judge, w.lexicon);
  train_step(state, batch, cfg, *judge, w.lexicon);

  CHECK(state.step == 1);
  const double lr = lr_at_step(cfg, 1);
  auto expected = before;
  const auto& ops = kernels::active();
  ops.axpy(-lr, out.grad.dE.data.data(), expected.E.data.data(), expected.E.data.size());
  ops.axpy(-lr, out.grad.dW.data.data(), expected.W.data.data(), expected.W.data.size());
  CHECK(state.params.E.data == expected.E.data);
  CHECK(state.params.W.data == expected.W.data);

  REQUIRE(state.metrics.size() == 1);
  CHECK(state.metrics[0].step == 1);
  CHECK(state.metrics[0].lr == Approx(lr));
  CHECK(state.metrics[0].mode == "rba_group");
  CHECK(state.metrics[0].loss_total == Approx(out.loss_total));
  CHECK(state.metrics[0].no_signal_count == out.no_signal_count);
}

TEST_CASE("weight decay shrinks parameters before the gradient step") {
  const TinyWorld w;
  auto cfg = tiny_cfg(Mode::sft);
  cfg.weight_decay = 0.1;
  auto state = tiny_state(w, cfg, 7);
  const auto judge = reward::make_judge("token_f1");
  const auto batch = w.batch();

  const auto before = state.params;
  const auto out = compute_step(state, batch, cfg, *judge, w.lexicon);
  train_step(state, batch, cfg, *judge, w.lexicon);

  const double lr = lr_at_step(cfg, 1);
  auto expected = before;
  const auto& ops = kernels::active();
  ops.scale(1.0 - lr * cfg.weight_decay, expected.E.data.data(), expected.E.data.size());
  ops.scale(1.0 - lr * cfg.weight_decay, expected.W.data.data(), expected.W.data.size());
  ops.axpy(-lr, out.grad.dE.data.data(), expected.E.data.data(), expected.E.data.size());
  ops.axpy(-lr, out.grad.dW.data.data(), expected.W.data.data(), expected.W.data.size());
  CHECK(state.params.E.data == expected.E.data);
  CHECK(state.params.W.data == expected.W.data);
}

TEST_CASE("step gradient matches finite differences of the replayed loss") {
  const TinyWorld w;

  SUBCASE("rba_group") {
    auto cfg = tiny_cfg(Mode::rba_group);
    auto state = tiny_state(w, cfg, 7);
    check_grad_fd(w, state, cfg);
  }
  SUBCASE("rba_single") {
    auto cfg = tiny_cfg(Mode::rba_single);
    auto state = tiny_state(w, cfg, 19);
    check_grad_fd(w, state, cfg);
  }
  SUBCASE("sft") {
    auto cfg = tiny_cfg(Mode::sft);
    auto state = tiny_state(w, cfg, 23);
    check_grad_fd(w, state, cfg);
  }
}

TEST_CASE("group selection feeds the preference pair it recorded") {
  const TinyWorld w;
  const auto cfg = tiny_cfg(Mode::rba_group);
  auto state = tiny_state(w, cfg, 7);
  const auto judge = reward::make_judge("token_f1");
  const auto out = compute_step(state, w.batch(), cfg, *judge, w.lexicon);

  for (const auto& item : out.items) {
    REQUIRE(item.rewards.size() == 4);
    if (!item.selection) {
      CHECK(item.pairs.empty());
      continue;
    }
    const auto [sp, sm] = *item.selection;
    REQUIRE(item.pairs.size() == 1);
    CHECK(item.pairs[0].y_plus == item.samples[static_cast<std::size_t>(sp)]);
    CHECK(item.pairs[0].y_minus == item.samples[static_cast<std::size_t>(sm)]);
    CHECK(item.rewards[static_cast<std::size_t>(sp)] >
          item.rewards[static_cast<std::size_t>(sm)]);
  }
}

TEST_CASE("rba_single breakdown: total = pref + lambda * ce per item") {
  const TinyWorld w;
  const auto cfg = tiny_cfg(Mode::rba_single);
  auto state = tiny_state(w, cfg, 19);
  const auto judge = reward::make_judge("token_f1");
  const auto out = compute_step(state, w.batch(), cfg, *judge, w.lexicon);
  for (const auto& item : out.items) {
    CHECK(item.bd.total == Approx(item.bd.pref + cfg.lambda * item.bd.ce).epsilon(1e-12));
  }
}

TEST_CASE("compute_step argument errors") {
  const TinyWorld w;
  const auto cfg = tiny_cfg(Mode::sft);
  auto state = tiny_state(w, cfg, 7);
  const auto judge = reward::make_judge("token_f1");

  try {
    compute_step(state, {}, cfg, *judge, w.lexicon);
    FAIL("expected EmptyBatch");
  } catch (const ValidationError& e) {
    CHECK(e.code() == "EmptyBatch");
  }

  auto batch = w.batch();
  batch[0].group.pop_back();
  try {
    compute_step(state, batch, cfg, *judge, w.lexicon);
    FAIL("expected GroupSizeMismatch");
  } catch (const ValidationError& e) {
    CHECK(e.code() == "GroupSizeMismatch");
  }
}

TEST_CASE("run_training with max_steps = 0 returns the untouched initialization") {
  const TinyWorld w(4, 5);
  auto cfg = tiny_cfg(Mode::sft);
  cfg.max_steps = 0;
  cfg.validation_size = 1;
  cfg.seed = 5;
  const auto result = run_training(cfg, w.vocab, w.lexicon, w.corpus, w.spoken, "digest");

  const auto init =
      policy::init_params(w.vocab, cfg.d, hash_combine(5, 0x504152ULL), cfg.init_scale);
  CHECK(result.final_.params == init);
  CHECK(result.best.params == init);
  CHECK(result.steps_run == 0);
  CHECK(result.best.step == 0);
  CHECK(result.metrics.empty());
  CHECK(result.best_score >= 0.0);  // scored once so resumption has a baseline
}

TEST_CASE("patience stops the run at the second non-improving evaluation") {
  // Zero learning rate freezes the parameters, so every validation score is
  // identical: the first pass sets the best, the second exhausts patience = 1.
  const TinyWorld w(6, 9);
  auto cfg = tiny_cfg(Mode::sft);
  cfg.max_lr = 0.0;
  cfg.warmup_steps = 0;
  cfg.batch_size = 2;
  cfg.eval_interval = 3;
  cfg.patience = 1;
  cfg.max_steps = 50;
  cfg.validation_size = 2;
  cfg.seed = 9;
  const auto result = run_training(cfg, w.vocab, w.lexicon, w.corpus, w.spoken, "digest");
  CHECK(result.steps_run == 6);
  CHECK(result.metrics.size() == 6);
  CHECK(result.best.step == 3);
}

TEST_CASE("run_training is deterministic end to end") {
  const TinyWorld w(5, 13);
  auto cfg = tiny_cfg(Mode::rba_group);
  cfg.batch_size = 2;
  cfg.max_steps = 8;
  cfg.eval_interval = 4;
  cfg.validation_size = 1;
  cfg.judge = "token_f1";
  cfg.seed = 13;

  const auto a = run_training(cfg, w.vocab, w.lexicon, w.corpus, w.spoken, "digest");
  const auto b = run_training(cfg, w.vocab, w.lexicon, w.corpus, w.spoken, "digest");
  CHECK(a.final_.params == b.final_.params);
  CHECK(a.best.params == b.best.params);
  CHECK(a.best_score == b.best_score);
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    CHECK(a.metrics[i].to_json() == b.metrics[i].to_json());
  }
}

TEST_CASE("run_training records the train split in both checkpoints") {
  const TinyWorld w(6, 3);
  auto cfg = tiny_cfg(Mode::sft);
  cfg.max_steps = 2;
  cfg.batch_size = 2;
  cfg.validation_size = 2;
  cfg.seed = 3;
  const auto result = run_training(cfg, w.vocab, w.lexicon, w.corpus, w.spoken, "cfgd");
  REQUIRE(result.best.train_ids.size() == 4);  // 6 items minus 2 validation
  CHECK(result.best.train_ids == result.final_.train_ids);
  CHECK(result.best.config_digest == "cfgd");
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(result.best.train_ids[i] == w.corpus[i].id);
  }
}

TEST_CASE("run_training input errors") {
  const TinyWorld w(2, 11);
  auto cfg = tiny_cfg(Mode::sft);
  cfg.max_steps = 1;

  try {
    run_training(cfg, w.vocab, w.lexicon, {}, w.spoken, "d");
    FAIL("expected EmptyCorpus");
  } catch (const ValidationError& e) {
    CHECK(e.code() == "EmptyCorpus");
  }

  auto missing = w.spoken;
  missing.erase(w.corpus[1].id);
  try {
    run_training(cfg, w.vocab, w.lexicon, w.corpus, missing, "d");
    FAIL("expected CorpusMismatch");
  } catch (const ValidationError& e) {
    CHECK(e.code() == "CorpusMismatch");
  }
}

TEST_CASE("sft on the copy world beats the untrained baseline") {
  const auto world = textgen::make_default_world(textgen::WorldKind::copy_transform);
  const auto corpus = textgen::build_corpus(world, 260, {}, 21);
  const Vocab vocab{32, 40};
  const auto bank = speech::build_speaker_bank(4, 21);
  std::map<std::string, std::vector<speech::SpokenInstruction>> spoken;
  for (const auto& instr : corpus) {
    spoken[instr.id] = speech::speak_group(instr, bank, vocab, 4, 21);
  }

  TrainingConfig cfg;
  cfg.mode = Mode::sft;
  cfg.d = 24;
  cfg.batch_size = 4;
  cfg.max_lr = 1.0;
  cfg.warmup_steps = 100;
  cfg.max_steps = 2000;
  cfg.eval_interval = 250;
  cfg.patience = 50;
  cfg.validation_size = 40;
  cfg.judge = "exact_match";
  cfg.seed = 21;

  auto baseline_cfg = cfg;
  baseline_cfg.max_steps = 0;
  const auto baseline =
      run_training(baseline_cfg, vocab, world.lexicon, corpus, spoken, "d");
  const auto trained = run_training(cfg, vocab, world.lexicon, corpus, spoken, "d");

  CHECK(trained.best_score > baseline.best_score);
  CHECK(trained.steps_run == 2000);
}

}  // TEST_SUITE
