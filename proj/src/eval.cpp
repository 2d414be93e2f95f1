#include "rba/eval.hpp"

#include <algorithm>
#include <cmath>

namespace rba::eval {

using io::json;

namespace {

void check_aligned(std::size_t a, std::size_t b, std::size_t r) {
  if (a != b || a != r) {
    throw ValidationError("LengthMismatch", "response/reference lists not aligned");
  }
}

double outcome(double sa, double sb) {
  if (sa > sb) return 1.0;
  if (sa < sb) return 0.0;
  return 0.5;
}

}  // namespace

double win_rate(const reward::Judge& judge, const std::vector<Words>& responses_a,
                const std::vector<Words>& responses_b,
                const std::vector<Words>& references) {
  check_aligned(responses_a.size(), responses_b.size(), references.size());
  if (responses_a.empty()) {
    throw ValidationError("PreconditionViolation", "win_rate over empty lists");
  }
  double wins = 0.0;
  for (std::size_t i = 0; i < responses_a.size(); ++i) {
    wins += outcome(judge.score("", responses_a[i], references[i]),
                    judge.score("", responses_b[i], references[i]));
  }
  return 100.0 * wins / static_cast<double>(responses_a.size());
}

std::pair<double, double> fit_win_logistic(const std::vector<double>& outcomes,
                                           const std::vector<double>& dlen) {
  // Newton iteration on the 2-parameter Bernoulli log-likelihood, with a tiny
  // ridge so separable data degrades into clamped coefficients instead of a
  // singular system.
  const double clamp = 30.0;
  double b0 = 0.0, b1 = 0.0;
  for (int it = 0; it < 100; ++it) {
    double g0 = 0.0, g1 = 0.0, h00 = 1e-9, h01 = 0.0, h11 = 1e-9;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      const double z = b0 + b1 * dlen[i];
      const double p = 1.0 / (1.0 + std::exp(-z));
      const double w = p * (1.0 - p);
      g0 += outcomes[i] - p;
      g1 += (outcomes[i] - p) * dlen[i];
      h00 += w;
      h01 += w * dlen[i];
      h11 += w * dlen[i] * dlen[i];
    }
    const double det = h00 * h11 - h01 * h01;
    const double d0 = (h11 * g0 - h01 * g1) / det;
    const double d1 = (h00 * g1 - h01 * g0) / det;
    b0 = std::clamp(b0 + d0, -clamp, clamp);
    b1 = std::clamp(b1 + d1, -clamp, clamp);
    if (std::abs(d0) < 1e-12 && std::abs(d1) < 1e-12) break;
  }
  return {b0, b1};
}

double length_controlled_wr(const reward::Judge& judge,
                            const std::vector<Words>& responses_a,
                            const std::vector<Words>& responses_b,
                            const std::vector<Words>& references) {
  check_aligned(responses_a.size(), responses_b.size(), references.size());
  const std::size_t n = responses_a.size();
  if (n < 10) {
    throw ValidationError("PreconditionViolation", "length_controlled_wr needs n >= 10");
  }
  std::vector<double> o(n), dl(n);
  for (std::size_t i = 0; i < n; ++i) {
    o[i] = outcome(judge.score("", responses_a[i], references[i]),
                   judge.score("", responses_b[i], references[i]));
    dl[i] = static_cast<double>(responses_a[i].size()) -
            static_cast<double>(responses_b[i].size());
  }
  const double wr = win_rate(judge, responses_a, responses_b, references);

  const bool outcomes_vary =
      std::any_of(o.begin(), o.end(), [&](double v) { return v != o[0]; });
  const bool lengths_vary =
      std::any_of(dl.begin(), dl.end(), [](double v) { return v != 0.0; });
  if (!outcomes_vary || !lengths_vary) return wr;  // degenerate / intercept-only fit

  const auto [b0, b1] = fit_win_logistic(o, dl);
  (void)b1;
  return 100.0 / (1.0 + std::exp(-b0));
}

double accuracy(const std::vector<Words>& responses, const std::vector<Words>& references) {
  if (responses.size() != references.size()) {
    throw ValidationError("LengthMismatch", "response/reference lists not aligned");
  }
  if (responses.empty()) {
    throw ValidationError("PreconditionViolation", "accuracy over empty lists");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    sum += reward::judge_exact_match(responses[i], references[i]);
  }
  return sum / static_cast<double>(responses.size());
}

namespace {

std::map<int, int> bag(const std::vector<int>& response, int eos) {
  std::map<int, int> m;
  for (int t : response) {
    if (t != eos) ++m[t];
  }
  return m;
}

double cosine(const std::map<int, int>& u, const std::map<int, int>& v) {
  if (u.empty() && v.empty()) return 1.0;
  if (u.empty() || v.empty()) return 0.0;
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (const auto& [t, c] : u) {
    nu += static_cast<double>(c) * c;
    auto it = v.find(t);
    if (it != v.end()) dot += static_cast<double>(c) * it->second;
  }
  for (const auto& [t, c] : v) nv += static_cast<double>(c) * c;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

}  // namespace

double consistency_score(const std::vector<std::vector<std::vector<int>>>& response_groups,
                         int eos) {
  if (response_groups.empty()) {
    throw ValidationError("EmptyGroup", "no response groups");
  }
  double total = 0.0;
  for (const auto& group : response_groups) {
    if (group.size() < 2) {
      throw ValidationError("EmptyGroup", "consistency needs >= 2 responses per group");
    }
    std::vector<std::map<int, int>> bags;
    bags.reserve(group.size());
    for (const auto& r : group) bags.push_back(bag(r, eos));
    double sum = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < bags.size(); ++i) {
      for (std::size_t j = i + 1; j < bags.size(); ++j) {
        sum += cosine(bags[i], bags[j]);
        ++pairs;
      }
    }
    total += sum / pairs;
  }
  return total / static_cast<double>(response_groups.size());
}

json EvalReport::to_json() const {
  json j;
  j["suite"] = suite;
  j["metrics"] = metrics;
  json topics = json::object();
  for (const auto& [name, stat] : per_topic) {
    topics[name] = {{"value", stat.value}, {"count", stat.count}};
  }
  j["per_topic"] = topics;
  j["sample_count"] = sample_count;
  j["config_digest"] = config_digest;
  j["model_a"] = model_a;
  j["model_b"] = model_b;
  return j;
}

EvalReport EvalReport::from_json(const json& j) {
  EvalReport r;
  r.suite = j.at("suite").get<std::string>();
  for (auto it = j.at("metrics").begin(); it != j.at("metrics").end(); ++it) {
    r.metrics[it.key()] = it.value().get<double>();
  }
  for (auto it = j.at("per_topic").begin(); it != j.at("per_topic").end(); ++it) {
    r.per_topic[it.key()] = {it.value().at("value").get<double>(),
                             it.value().at("count").get<int>()};
  }
  r.sample_count = j.at("sample_count").get<int>();
  r.config_digest = j.at("config_digest").get<std::string>();
  r.model_a = j.at("model_a").get<std::string>();
  r.model_b = j.value("model_b", std::string());
  return r;
}

namespace {

struct ItemRow {
  const textgen::Instruction* instr;
  Words resp_a, resp_b, reference;
  double score_a = 0.0, score_b = 0.0;
  int speaker_id = 0;
  std::vector<int> resp_a_tokens;
  double item_value = 0.0;  // per-item contribution to the primary metric
};

double topic_wr(const std::vector<ItemRow>& rows) {
  double wins = 0.0;
  for (const auto& r : rows) wins += outcome(r.score_a, r.score_b);
  return 100.0 * wins / static_cast<double>(rows.size());
}

}  // namespace

EvalReport evaluate_suite(const SuiteInput& in, std::vector<json>* per_item) {
  static const std::set<std::string> kSuites = {"wr", "lc", "qa", "s2tt", "consistency"};
  if (!kSuites.count(in.suite)) {
    throw ValidationError("UnknownSuite", "no suite named '" + in.suite + "'");
  }
  if (!in.model_a || !in.corpus || !in.spoken || !in.lexicon || !in.judge) {
    throw ValidationError("PreconditionViolation", "evaluate_suite input incomplete");
  }
  const bool two_model = (in.suite == "wr" || in.suite == "lc");
  if (two_model && !in.model_b) {
    throw ValidationError("PreconditionViolation", in.suite + " suite needs two models");
  }
  if (in.corpus->empty()) {
    throw ValidationError("EmptyCorpus", "no evaluation items");
  }

  if (in.train_ids) {
    for (const auto& instr : *in.corpus) {
      if (in.train_ids->count(instr.id)) {
        throw ValidationError("SplitOverlap",
                              "instruction " + instr.id + " was used in training");
      }
    }
  }

  EvalReport report;
  report.suite = in.suite;
  report.config_digest = in.config_digest;
  report.model_a = in.id_a;
  report.model_b = two_model ? in.id_b : "";
  report.sample_count = static_cast<int>(in.corpus->size());

  std::vector<ItemRow> rows;
  rows.reserve(in.corpus->size());
  std::vector<std::vector<std::vector<int>>> groups;  // consistency suite

  for (const auto& instr : *in.corpus) {
    auto it = in.spoken->find(instr.id);
    if (it == in.spoken->end() || it->second.empty()) {
      throw ValidationError("CorpusMismatch",
                            "no spoken rendering for instruction " + instr.id);
    }
    const auto& renderings = it->second;

    ItemRow row;
    row.instr = &instr;
    row.reference = detokenize(*in.lexicon, instr.reference_response_tokens);

    if (in.suite == "consistency") {
      if (renderings.size() < 2) {
        throw ValidationError("EmptyGroup",
                              "consistency needs >= 2 renderings per instruction");
      }
      std::vector<std::vector<int>> g;
      g.reserve(renderings.size());
      for (const auto& x : renderings) {
        g.push_back(policy::greedy_response(*in.model_a, x, in.max_response_len));
      }
      row.speaker_id = renderings[0].speaker_id;
      row.resp_a_tokens = g[0];
      row.item_value = consistency_score({g}, in.model_a->vocab.eos());
      row.score_a = row.item_value;
      groups.push_back(std::move(g));
    } else {
      const auto& x = renderings[0];
      row.speaker_id = x.speaker_id;
      row.resp_a_tokens = policy::greedy_response(*in.model_a, x, in.max_response_len);
      row.resp_a = detokenize(*in.lexicon, row.resp_a_tokens);
      row.score_a = in.judge->score(instr.text(), row.resp_a, row.reference);
      if (two_model) {
        const auto bt = policy::greedy_response(*in.model_b, x, in.max_response_len);
        row.resp_b = detokenize(*in.lexicon, bt);
        row.score_b = in.judge->score(instr.text(), row.resp_b, row.reference);
        row.item_value = outcome(row.score_a, row.score_b);
      } else if (in.suite == "qa") {
        row.item_value = reward::judge_exact_match(row.resp_a, row.reference);
      } else {  // s2tt: sentence BLEU, empty responses score zero
        row.item_value =
            row.resp_a.empty() ? 0.0 : reward::bleu(row.resp_a, {row.reference});
      }
    }
    rows.push_back(std::move(row));
  }

  // Suite metrics.
  if (two_model) {
    std::vector<Words> ra, rb, rf;
    for (const auto& r : rows) {
      ra.push_back(r.resp_a);
      rb.push_back(r.resp_b);
      rf.push_back(r.reference);
    }
    report.metrics["wr"] = win_rate(*in.judge, ra, rb, rf);
    report.metrics["lc"] = rows.size() >= 10
                               ? length_controlled_wr(*in.judge, ra, rb, rf)
                               : report.metrics["wr"];
  } else if (in.suite == "qa") {
    double sum = 0.0;
    for (const auto& r : rows) sum += r.item_value;
    report.metrics["accuracy"] = sum / static_cast<double>(rows.size());
  } else if (in.suite == "s2tt") {
    double sum = 0.0;
    for (const auto& r : rows) sum += r.item_value;
    report.metrics["bleu"] = sum / static_cast<double>(rows.size());
  } else {
    report.metrics["consistency"] = consistency_score(groups, in.model_a->vocab.eos());
  }

  // Per-topic breakdown of the primary metric.
  std::map<std::string, std::vector<ItemRow>> by_topic;
  for (auto& r : rows) {
    by_topic[std::string(textgen::to_string(r.instr->topic))].push_back(r);
  }
  for (const auto& [topic, trs] : by_topic) {
    TopicStat stat;
    stat.count = static_cast<int>(trs.size());
    if (two_model) {
      stat.value = topic_wr(trs);
    } else {
      double sum = 0.0;
      for (const auto& r : trs) sum += r.item_value;
      stat.value = sum / static_cast<double>(trs.size());
    }
    report.per_topic[topic] = stat;
  }

  if (per_item) {
    for (const auto& r : rows) {
      json rec;
      rec["instruction_id"] = r.instr->id;
      rec["speaker_id"] = r.speaker_id;
      rec["response_tokens"] = r.resp_a_tokens;
      rec["score_A"] = r.score_a;
      rec["score_B"] = r.score_b;
      rec["lengths"] = {static_cast<int>(r.resp_a.size()),
                        static_cast<int>(r.resp_b.size())};
      per_item->push_back(std::move(rec));
    }
  }
  return report;
}

}  // namespace rba::eval
