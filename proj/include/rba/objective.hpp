#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "rba/policy.hpp"
#include "rba/speech.hpp"

namespace rba::objective {

enum class Provenance { group_selected, reference_positive };

// One preference comparison. For group-selected pairs the two sides are the
// same instruction rendered by different speakers; for reference-positive
// pairs both sides share one rendering and y_plus is the reference response.
struct PreferencePair {
  speech::SpokenInstruction x_plus;
  std::vector<int> y_plus;
  speech::SpokenInstruction x_minus;
  std::vector<int> y_minus;
  Provenance provenance = Provenance::group_selected;
};

struct LossBreakdown {
  double total = 0.0;
  double pref = 0.0;
  double ce = 0.0;
  double log_v_plus = 0.0;
  double log_v_minus = 0.0;
  double margin = 0.0;  // beta * (log_v_plus - log_v_minus)
};

// Positive = smallest index attaining the max reward, negative = smallest
// index attaining the min. nullopt (no signal) iff all rewards are equal;
// such groups contribute no preference term. Indices are 0-based.
std::optional<std::pair<int, int>> select_group_pair(const std::vector<double>& rewards);

// The preference core on plain numbers, shared by every entry point and by
// closed-form tests. Reference log-probs are 0 in reference-free mode.
// pref = softplus(-margin) = -log sigmoid(margin), computed cancellation-free.
LossBreakdown dpo_from_logprobs(double lp_theta_plus, double lp_ref_plus,
                                double lp_theta_minus, double lp_ref_minus,
                                double beta);

double softplus(double z);

// ref == nullptr selects reference-free mode (ratio denominators dropped).
LossBreakdown dpo_loss(const policy::PolicyParams& theta,
                       const policy::PolicyParams* ref, const PreferencePair& pair,
                       double beta);

// Reference-positive pairs, one per sampled response; pairs whose sample
// equals the reference token-for-token are dropped (zero-signal).
std::vector<PreferencePair> make_single_pairs(
    const std::vector<speech::SpokenInstruction>& x_group,
    const std::vector<std::vector<int>>& sampled_responses,
    const std::vector<int>& y_ref);

// total = pref + lambda * ce_group_loss(theta, x_group, y_ref).
LossBreakdown combined_loss(const policy::PolicyParams& theta,
                            const policy::PolicyParams* ref,
                            const PreferencePair& pair,
                            const std::vector<speech::SpokenInstruction>& x_group,
                            const std::vector<int>& y_ref, double beta, double lambda);

// Accumulates coeff * d(pref)/d(theta) into g (when g != nullptr) and returns
// the breakdown. The chain rule puts coefficient sigma(-margin)*beta on the
// two sequence-logprob gradients, with opposite signs.
LossBreakdown pref_backward(const policy::PolicyParams& theta,
                            const policy::PolicyParams* ref,
                            const PreferencePair& pair, double beta, double coeff,
                            policy::Gradients* g);

// Gradient of combined_loss.total w.r.t. every entry of E and W.
LossBreakdown combined_backward(const policy::PolicyParams& theta,
                                const policy::PolicyParams* ref,
                                const PreferencePair& pair,
                                const std::vector<speech::SpokenInstruction>& x_group,
                                const std::vector<int>& y_ref, double beta,
                                double lambda, policy::Gradients* g);

}  // namespace rba::objective
