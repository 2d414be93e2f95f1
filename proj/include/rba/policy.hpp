#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rba/errors.hpp"
#include "rba/matrix.hpp"
#include "rba/speech.hpp"
#include "rba/vocab.hpp"

namespace rba::policy {

// Context-conditioned bigram softmax:
//
//   c            = mean over E rows of the instruction's acoustic tokens
//   logits_t     = W * (E[y_{t-1}] + c)        (y_0 = BOS)
//   p(y_t | ...) = softmax(logits_t)
//
// E is (V x d) over the full vocab; W is (Vt+1 x d) — text tokens plus EOS
// are the only emittable ids, and an emittable id indexes its own W row.
// Exact log-probs and analytic gradients everywhere; no autograd.
struct PolicyParams {
  Vocab vocab;
  int d = 0;
  Matrix E;  // vocab.total() x d
  Matrix W;  // vocab.emittable() x d
  std::uint64_t init_seed = 0;
  double init_scale = 0.1;

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

// Entries i.i.d. uniform in [-scale, scale], fully determined by seed.
PolicyParams init_params(const Vocab& vocab, int d, std::uint64_t seed,
                         double scale = 0.1);

// Mean acoustic-token embedding. EmptyInput on empty token list.
std::vector<double> context_vector(const PolicyParams& params,
                                   const speech::SpokenInstruction& x);

// Log-softmax of W*(E[prev]+c) over emittable tokens. prev must be BOS or
// emittable.
std::vector<double> step_logprobs(const PolicyParams& params,
                                  const std::vector<double>& c, int prev);

// Teacher-forced sum of step log-probs of y given x; y must end with EOS.
double sequence_logprob(const PolicyParams& params,
                        const speech::SpokenInstruction& x,
                        const std::vector<int>& y);

// Autoregressive categorical sampling from temperature-scaled step
// distributions. Stops at EOS or after max_len draws (EOS then appended), so
// the result always ends with EOS.
std::vector<int> sample_response(const PolicyParams& params,
                                 const speech::SpokenInstruction& x,
                                 double temperature, int max_len,
                                 std::uint64_t seed);

// Deterministic argmax decode (ties to the lowest token id).
std::vector<int> greedy_response(const PolicyParams& params,
                                 const speech::SpokenInstruction& x, int max_len);

// -(1/S) * sum_s sequence_logprob(params, x^(s), y_ref). Throws
// GroupSizeMismatch unless the group has expected_size entries.
double ce_group_loss(const PolicyParams& params,
                     const std::vector<speech::SpokenInstruction>& x_group,
                     const std::vector<int>& y_ref, int expected_size = 4);

// Gradient accumulator shaped like the parameters.
struct Gradients {
  Matrix dE;
  Matrix dW;

  explicit Gradients(const PolicyParams& p)
      : dE(p.E.rows, p.E.cols), dW(p.W.rows, p.W.cols) {}
  void zero() { dE.fill(0.0); dW.fill(0.0); }
  void scaled_add(const Gradients& other, double alpha);
};

// Accumulates coeff * d(sequence_logprob)/d(params) into g and returns the
// log-prob. Pass g = nullptr for forward only.
double sequence_logprob_backward(const PolicyParams& params,
                                 const speech::SpokenInstruction& x,
                                 const std::vector<int>& y, double coeff,
                                 Gradients* g);

// Accumulates coeff * d(ce_group_loss)/d(params) into g and returns the loss.
double ce_group_backward(const PolicyParams& params,
                         const std::vector<speech::SpokenInstruction>& x_group,
                         const std::vector<int>& y_ref, double coeff, Gradients* g,
                         int expected_size = 4);

// Versioned-JSON checkpoint with exact decimal round-trip of every entry.
// Writes are atomic (temp file + rename); abort_after_bytes is the crash-test
// hook from io::atomic_write_file.
struct Checkpoint {
  PolicyParams params;
  long step = 0;
  std::string config_digest;
  std::vector<std::string> train_ids;  // instruction ids seen in training
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path,
                     long abort_after_bytes = -1);

// FormatVersionMismatch on version/shape-spec mismatch, CorruptFile on
// anything unparsable or truncated.
Checkpoint load_checkpoint(const std::string& path);

// Same, but also requires the stored vocab/d to match an expected spec.
Checkpoint load_checkpoint(const std::string& path, const Vocab& expected_vocab,
                           int expected_d);

}  // namespace rba::policy
