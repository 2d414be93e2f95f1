#include "rba/objective.hpp"

#include <cmath>

#include "rba/errors.hpp"

namespace rba::objective {

std::optional<std::pair<int, int>> select_group_pair(const std::vector<double>& rewards) {
  if (rewards.size() < 2) {
    throw ValidationError("PreconditionViolation", "group selection needs >= 2 rewards");
  }
  int s_plus = 0, s_minus = 0;
  for (int i = 1; i < static_cast<int>(rewards.size()); ++i) {
    if (rewards[static_cast<std::size_t>(i)] > rewards[static_cast<std::size_t>(s_plus)]) s_plus = i;
    if (rewards[static_cast<std::size_t>(i)] < rewards[static_cast<std::size_t>(s_minus)]) s_minus = i;
  }
  if (rewards[static_cast<std::size_t>(s_plus)] == rewards[static_cast<std::size_t>(s_minus)]) {
    return std::nullopt;  // all rewards equal: no preference signal
  }
  return std::make_pair(s_plus, s_minus);
}

double softplus(double z) {
  // log(1 + e^z) without overflow for large |z|.
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

LossBreakdown dpo_from_logprobs(double lp_theta_plus, double lp_ref_plus,
                                double lp_theta_minus, double lp_ref_minus,
                                double beta) {
  if (beta < 0.0) throw ValidationError("PreconditionViolation", "beta must be >= 0");
  LossBreakdown bd;
  bd.log_v_plus = lp_theta_plus - lp_ref_plus;
  bd.log_v_minus = lp_theta_minus - lp_ref_minus;
  bd.margin = beta * (bd.log_v_plus - bd.log_v_minus);
  bd.pref = softplus(-bd.margin);
  bd.total = bd.pref;
  return bd;
}

LossBreakdown dpo_loss(const policy::PolicyParams& theta, const policy::PolicyParams* ref,
                       const PreferencePair& pair, double beta) {
  return pref_backward(theta, ref, pair, beta, 0.0, nullptr);
}

LossBreakdown pref_backward(const policy::PolicyParams& theta,
                            const policy::PolicyParams* ref, const PreferencePair& pair,
                            double beta, double coeff, policy::Gradients* g) {
  const double lp_tp = policy::sequence_logprob(theta, pair.x_plus, pair.y_plus);
  const double lp_tm = policy::sequence_logprob(theta, pair.x_minus, pair.y_minus);
  const double lp_rp = ref ? policy::sequence_logprob(*ref, pair.x_plus, pair.y_plus) : 0.0;
  const double lp_rm = ref ? policy::sequence_logprob(*ref, pair.x_minus, pair.y_minus) : 0.0;
  LossBreakdown bd = dpo_from_logprobs(lp_tp, lp_rp, lp_tm, lp_rm, beta);

  if (g && coeff != 0.0) {
    // d pref / d margin = -sigmoid(-margin); margin depends on theta only
    // through the two policy log-probs, with slopes +beta and -beta.
    const double sig = 1.0 / (1.0 + std::exp(bd.margin));
    const double k = coeff * sig * beta;
    policy::sequence_logprob_backward(theta, pair.x_plus, pair.y_plus, -k, g);
    policy::sequence_logprob_backward(theta, pair.x_minus, pair.y_minus, +k, g);
  }
  return bd;
}

std::vector<PreferencePair> make_single_pairs(
    const std::vector<speech::SpokenInstruction>& x_group,
    const std::vector<std::vector<int>>& sampled_responses,
    const std::vector<int>& y_ref) {
  if (x_group.size() != sampled_responses.size()) {
    throw ValidationError("GroupSizeMismatch",
                          "one sampled response per spoken rendering required");
  }
  std::vector<PreferencePair> pairs;
  pairs.reserve(x_group.size());
  for (std::size_t s = 0; s < x_group.size(); ++s) {
    if (sampled_responses[s] == y_ref) continue;  // degenerate pair
    PreferencePair p;
    p.x_plus = x_group[s];
    p.y_plus = y_ref;
    p.x_minus = x_group[s];
    p.y_minus = sampled_responses[s];
    p.provenance = Provenance::reference_positive;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

LossBreakdown combined_loss(const policy::PolicyParams& theta,
                            const policy::PolicyParams* ref, const PreferencePair& pair,
                            const std::vector<speech::SpokenInstruction>& x_group,
                            const std::vector<int>& y_ref, double beta, double lambda) {
  return combined_backward(theta, ref, pair, x_group, y_ref, beta, lambda, nullptr);
}

LossBreakdown combined_backward(const policy::PolicyParams& theta,
                                const policy::PolicyParams* ref,
                                const PreferencePair& pair,
                                const std::vector<speech::SpokenInstruction>& x_group,
                                const std::vector<int>& y_ref, double beta,
                                double lambda, policy::Gradients* g) {
  if (lambda < 0.0) throw ValidationError("PreconditionViolation", "lambda must be >= 0");
  LossBreakdown bd = pref_backward(theta, ref, pair, beta, 1.0, g);
  bd.ce = policy::ce_group_backward(theta, x_group, y_ref, lambda, g,
                                    static_cast<int>(x_group.size()));
  bd.total = bd.pref + lambda * bd.ce;
  return bd;
}

}  // namespace rba::objective
