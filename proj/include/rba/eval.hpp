#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rba/io.hpp"
#include "rba/policy.hpp"
#include "rba/reward.hpp"
#include "rba/speech.hpp"
#include "rba/textgen.hpp"

namespace rba::eval {

using reward::Words;

// A wins on judge score; ties count half. Returns 100 * wins / n.
double win_rate(const reward::Judge& judge, const std::vector<Words>& responses_a,
                const std::vector<Words>& responses_b,
                const std::vector<Words>& references);

// Length-debiased win rate: maximum-likelihood fit of
// P(A wins) = sigmoid(b0 + b1 * (len_A - len_B)) over items, then
// LC = 100 * sigmoid(b0) — the predicted win probability at zero length
// difference. Identical outcomes (no variation to fit) fall back to WR, as
// does an all-zero length column, which makes LC = WR exact in that case.
double length_controlled_wr(const reward::Judge& judge,
                            const std::vector<Words>& responses_a,
                            const std::vector<Words>& responses_b,
                            const std::vector<Words>& references);

// Exposed for oracle tests: (b0, b1) of the logistic fit above.
std::pair<double, double> fit_win_logistic(const std::vector<double>& outcomes,
                                           const std::vector<double>& dlen);

// Mean exact-match over aligned lists.
double accuracy(const std::vector<Words>& responses, const std::vector<Words>& references);

// Mean over groups of the mean pairwise cosine between bag-of-token count
// vectors. Tokens equal to eos are stripped first (pass eos = -1 to keep
// everything). An empty response is the zero vector: similarity 0 against
// anything nonempty and 1 against another empty response.
double consistency_score(const std::vector<std::vector<std::vector<int>>>& response_groups,
                         int eos = -1);

struct TopicStat {
  double value = 0.0;
  int count = 0;
};

struct EvalReport {
  std::string suite;
  std::map<std::string, double> metrics;
  std::map<std::string, TopicStat> per_topic;  // topic name -> primary metric
  int sample_count = 0;
  std::string config_digest;
  std::string model_a;
  std::string model_b;  // empty for single-model suites

  io::json to_json() const;
  static EvalReport from_json(const io::json& j);
};

struct SuiteInput {
  const policy::PolicyParams* model_a = nullptr;
  const policy::PolicyParams* model_b = nullptr;  // wr/lc suites only
  std::string id_a = "A";
  std::string id_b = "B";
  const std::vector<textgen::Instruction>* corpus = nullptr;
  // instruction id -> its spoken renderings, speaker order
  const std::map<std::string, std::vector<speech::SpokenInstruction>>* spoken = nullptr;
  const std::vector<std::string>* lexicon = nullptr;
  std::string suite;  // "wr" | "lc" | "qa" | "s2tt" | "consistency"
  const reward::Judge* judge = nullptr;
  std::uint64_t seed = 0;
  int max_response_len = 16;
  std::string config_digest;
  const std::set<std::string>* train_ids = nullptr;  // overlap guard
};

// Greedy-decodes the model(s) over the held-out corpus and assembles the
// report. per_item, when given, receives one record per instruction with
// enough fields to recompute every reported total.
EvalReport evaluate_suite(const SuiteInput& in, std::vector<io::json>* per_item = nullptr);

}  // namespace rba::eval
