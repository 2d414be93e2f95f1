#include "rba/reward.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>

namespace rba::reward {

namespace {

std::map<std::string, int> counts(const Words& w) {
  std::map<std::string, int> m;
  for (const auto& t : w) ++m[t];
  return m;
}

std::string fold(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

double judge_token_f1(const Words& response, const Words& reference) {
  if (response.empty() && reference.empty()) return 1.0;
  if (response.empty() || reference.empty()) return 0.0;
  const auto cr = counts(response);
  const auto cf = counts(reference);
  int overlap = 0;
  for (const auto& [tok, n] : cr) {
    auto it = cf.find(tok);
    if (it != cf.end()) overlap += std::min(n, it->second);
  }
  if (overlap == 0) return 0.0;
  const double p = static_cast<double>(overlap) / static_cast<double>(response.size());
  const double r = static_cast<double>(overlap) / static_cast<double>(reference.size());
  return 2.0 * p * r / (p + r);
}

double judge_exact_match(const Words& response, const Words& reference) {
  if (response.size() != reference.size()) return 0.0;
  for (std::size_t i = 0; i < response.size(); ++i) {
    if (fold(response[i]) != fold(reference[i])) return 0.0;
  }
  return 1.0;
}

namespace {

// n-gram joined with '\x1f' as the multiset key.
std::map<std::string, int> ngram_counts(const Words& w, int n) {
  std::map<std::string, int> m;
  if (static_cast<int>(w.size()) < n) return m;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= w.size(); ++i) {
    std::string key = w[i];
    for (int j = 1; j < n; ++j) {
      key += '\x1f';
      key += w[i + static_cast<std::size_t>(j)];
    }
    ++m[key];
  }
  return m;
}

}  // namespace

double bleu(const Words& candidate, const std::vector<Words>& references, int max_n) {
  if (candidate.empty() || references.empty()) {
    throw ValidationError("EmptyInput", "bleu needs a candidate and references");
  }
  for (const Words& r : references) {
    if (r.empty()) throw ValidationError("EmptyInput", "empty reference");
  }
  const int c = static_cast<int>(candidate.size());
  const int upto = std::min(max_n, c);

  double log_p_sum = 0.0;
  for (int n = 1; n <= upto; ++n) {
    const auto cand = ngram_counts(candidate, n);
    // Clip counts against the per-reference max.
    std::map<std::string, int> best;
    for (const Words& r : references) {
      for (const auto& [key, cnt] : ngram_counts(r, n)) {
        best[key] = std::max(best[key], cnt);
      }
    }
    long matched = 0, total = 0;
    for (const auto& [key, cnt] : cand) {
      total += cnt;
      auto it = best.find(key);
      if (it != best.end()) matched += std::min(cnt, it->second);
    }
    double p;
    if (matched > 0) {
      p = static_cast<double>(matched) / static_cast<double>(total);
    } else if (n >= 2) {
      p = 1.0 / static_cast<double>(total + 1);  // add-one floor
    } else {
      return 0.0;  // no unigram overlap: score is zero, unsmoothed
    }
    log_p_sum += std::log(p);
  }

  int r_best = static_cast<int>(references[0].size());
  for (const Words& r : references) {
    const int rl = static_cast<int>(r.size());
    const int d_new = std::abs(rl - c), d_old = std::abs(r_best - c);
    if (d_new < d_old || (d_new == d_old && rl < r_best)) r_best = rl;
  }
  const double bp = std::min(1.0, std::exp(1.0 - static_cast<double>(r_best) /
                                                     static_cast<double>(c)));
  return 100.0 * bp * std::exp(log_p_sum / static_cast<double>(upto));
}

namespace {

class TokenF1Judge final : public Judge {
 public:
  double score(const std::string&, const Words& response, const Words& reference) const override {
    return judge_token_f1(response, reference);
  }
  std::string name() const override { return "token_f1"; }
};

class ExactMatchJudge final : public Judge {
 public:
  double score(const std::string&, const Words& response, const Words& reference) const override {
    return judge_exact_match(response, reference);
  }
  std::string name() const override { return "exact_match"; }
};

class BleuJudge final : public Judge {
 public:
  double score(const std::string&, const Words& response, const Words& reference) const override {
    if (response.empty()) return 0.0;  // judge interface is total
    return bleu(response, {reference}) / 100.0;
  }
  std::string name() const override { return "bleu"; }
};

}  // namespace

std::unique_ptr<Judge> make_judge(const std::string& name) {
  if (name == "token_f1") return std::make_unique<TokenF1Judge>();
  if (name == "exact_match") return std::make_unique<ExactMatchJudge>();
  if (name == "bleu") return std::make_unique<BleuJudge>();
  throw ValidationError("UnknownJudge", "no judge named '" + name + "'");
}

}  // namespace rba::reward
