#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rba/errors.hpp"

namespace rba::reward {

using Words = std::vector<std::string>;

// F1 over token multisets. Empty-vs-empty is 1, empty-vs-nonempty 0.
double judge_token_f1(const Words& response, const Words& reference);

// 1 iff equal after case-folding, else 0.
double judge_exact_match(const Words& response, const Words& reference);

// Pinned BLEU variant, in [0,100]:
//   - clipped n-gram precisions for n = 1..min(max_n, |candidate|)
//   - add-one smoothing only where the raw match count is zero and n >= 2
//   - brevity penalty min(1, exp(1 - r/c)), r = closest reference length
//     (ties toward the shorter reference)
// Geometric mean of the precisions, times BP, times 100.
double bleu(const Words& candidate, const std::vector<Words>& references, int max_n = 4);

// Judges score detokenized word sequences (EOS never reaches them) and map
// into [0,1]; the BLEU judge rescales /100. instruction_text is accepted for
// interface uniformity and ignored by all three built-ins.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual double score(const std::string& instruction_text, const Words& response,
                       const Words& reference) const = 0;
  virtual std::string name() const = 0;
};

// "token_f1" | "exact_match" | "bleu"; throws ValidationError on anything else.
std::unique_ptr<Judge> make_judge(const std::string& name);

}  // namespace rba::reward
