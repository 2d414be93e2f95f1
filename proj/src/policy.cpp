#include "rba/policy.hpp"

#include <algorithm>
#include <cmath>

#include "rba/io.hpp"
#include "rba/kernels.hpp"
#include "rba/rng.hpp"

namespace rba::policy {

using io::json;

PolicyParams init_params(const Vocab& vocab, int d, std::uint64_t seed, double scale) {
  vocab.validate();
  if (d < 1) throw ValidationError("PreconditionViolation", "embedding width d must be >= 1");
  PolicyParams p;
  p.vocab = vocab;
  p.d = d;
  p.init_seed = seed;
  p.init_scale = scale;
  p.E = Matrix(static_cast<std::size_t>(vocab.total()), static_cast<std::size_t>(d));
  p.W = Matrix(static_cast<std::size_t>(vocab.emittable()), static_cast<std::size_t>(d));
  Rng rng(hash_combine(seed, 0x494e4954ULL));  // "INIT"
  for (double& v : p.E.data) v = (2.0 * rng.next_double() - 1.0) * scale;
  for (double& v : p.W.data) v = (2.0 * rng.next_double() - 1.0) * scale;
  return p;
}

std::vector<double> context_vector(const PolicyParams& params,
                                   const speech::SpokenInstruction& x) {
  if (x.acoustic_tokens.empty()) {
    throw ValidationError("EmptyInput", "spoken instruction has no tokens");
  }
  const auto& ops = kernels::active();
  const auto d = static_cast<std::size_t>(params.d);
  std::vector<double> c(d, 0.0);
  for (int t : x.acoustic_tokens) {
    if (t < 0 || t >= params.vocab.total()) {
      throw ValidationError("PreconditionViolation", "token outside vocabulary");
    }
    ops.axpy(1.0, params.E.row(static_cast<std::size_t>(t)), c.data(), d);
  }
  ops.scale(1.0 / static_cast<double>(x.acoustic_tokens.size()), c.data(), d);
  return c;
}

namespace {

void check_prev(const PolicyParams& params, int prev) {
  if (prev != params.vocab.bos() && !params.vocab.is_emittable(prev)) {
    throw ValidationError("PreconditionViolation",
                          "prev token must be BOS or emittable");
  }
}

// logits -> log-softmax in place, max-subtraction for stability.
void log_softmax(std::vector<double>& v) {
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - mx);
  const double lse = mx + std::log(sum);
  for (double& x : v) x -= lse;
}

std::vector<double> step_logits(const PolicyParams& params, const std::vector<double>& c,
                                int prev) {
  check_prev(params, prev);
  const auto& ops = kernels::active();
  const auto d = static_cast<std::size_t>(params.d);
  std::vector<double> h(d);
  ops.vadd(params.E.row(static_cast<std::size_t>(prev)), c.data(), h.data(), d);
  std::vector<double> logits(params.W.rows);
  ops.matvec(params.W.data.data(), params.W.rows, params.W.cols, h.data(), logits.data());
  return logits;
}

}  // namespace

std::vector<double> step_logprobs(const PolicyParams& params,
                                  const std::vector<double>& c, int prev) {
  std::vector<double> lp = step_logits(params, c, prev);
  log_softmax(lp);
  return lp;
}

namespace {

void check_response(const PolicyParams& params, const std::vector<int>& y) {
  if (y.empty() || y.back() != params.vocab.eos()) {
    throw ValidationError("MissingEOS", "response must be EOS-terminated");
  }
  for (int t : y) {
    if (!params.vocab.is_emittable(t)) {
      throw ValidationError("PreconditionViolation", "response token not emittable");
    }
  }
}

}  // namespace

double sequence_logprob(const PolicyParams& params, const speech::SpokenInstruction& x,
                        const std::vector<int>& y) {
  return sequence_logprob_backward(params, x, y, 0.0, nullptr);
}

double sequence_logprob_backward(const PolicyParams& params,
                                 const speech::SpokenInstruction& x,
                                 const std::vector<int>& y, double coeff,
                                 Gradients* g) {
  check_response(params, y);
  const std::vector<double> c = context_vector(params, x);
  const auto& ops = kernels::active();
  const auto d = static_cast<std::size_t>(params.d);
  const std::size_t rows = params.W.rows;

  double total = 0.0;
  std::vector<double> h(d), logits(rows), p(rows), dc(d, 0.0);
  int prev = params.vocab.bos();

  for (int target : y) {
    check_prev(params, prev);
    ops.vadd(params.E.row(static_cast<std::size_t>(prev)), c.data(), h.data(), d);
    ops.matvec(params.W.data.data(), rows, params.W.cols, h.data(), logits.data());

    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (std::size_t j = 0; j < rows; ++j) {
      p[j] = std::exp(logits[j] - mx);
      sum += p[j];
    }
    const double inv = 1.0 / sum;
    for (double& v : p) v *= inv;
    total += logits[static_cast<std::size_t>(target)] - mx - std::log(sum);

    if (g) {
      // d logprob / d logits = onehot(target) - p
      for (std::size_t j = 0; j < rows; ++j) {
        const double gj = ((static_cast<int>(j) == target) ? 1.0 : 0.0) - p[j];
        const double a = coeff * gj;
        if (a != 0.0) {
          ops.axpy(a, h.data(), g->dW.row(j), d);                 // dW[j] += a*h
          ops.axpy(a, params.W.row(j), g->dE.row(static_cast<std::size_t>(prev)), d);
          ops.axpy(a, params.W.row(j), dc.data(), d);             // dc += a*W[j]
        }
      }
    }
    prev = target;
  }

  if (g) {
    // c is the mean of the instruction embeddings: spread dc over them.
    const double share = 1.0 / static_cast<double>(x.acoustic_tokens.size());
    for (int t : x.acoustic_tokens) {
      ops.axpy(share, dc.data(), g->dE.row(static_cast<std::size_t>(t)), d);
    }
  }
  return total;
}

std::vector<int> sample_response(const PolicyParams& params,
                                 const speech::SpokenInstruction& x,
                                 double temperature, int max_len, std::uint64_t seed) {
  if (temperature <= 0.0) {
    throw ValidationError("PreconditionViolation", "temperature must be > 0");
  }
  if (max_len < 1) {
    throw ValidationError("PreconditionViolation", "max_len must be >= 1");
  }
  const std::vector<double> c = context_vector(params, x);
  Rng rng(hash_combine(seed, 0x53414d50ULL));  // "SAMP"
  std::vector<int> out;
  int prev = params.vocab.bos();
  for (int step = 0; step < max_len; ++step) {
    std::vector<double> lp = step_logprobs(params, c, prev);
    if (temperature != 1.0) {
      for (double& v : lp) v /= temperature;
      log_softmax(lp);
    }
    const double u = rng.next_double();
    double cum = 0.0;
    int tok = static_cast<int>(lp.size()) - 1;
    for (std::size_t j = 0; j < lp.size(); ++j) {
      cum += std::exp(lp[j]);
      if (u < cum) {
        tok = static_cast<int>(j);
        break;
      }
    }
    out.push_back(tok);
    if (tok == params.vocab.eos()) return out;
    prev = tok;
  }
  out.push_back(params.vocab.eos());
  return out;
}

std::vector<int> greedy_response(const PolicyParams& params,
                                 const speech::SpokenInstruction& x, int max_len) {
  const std::vector<double> c = context_vector(params, x);
  std::vector<int> out;
  int prev = params.vocab.bos();
  for (int step = 0; step < max_len; ++step) {
    const std::vector<double> lp = step_logprobs(params, c, prev);
    int tok = 0;
    for (std::size_t j = 1; j < lp.size(); ++j) {
      if (lp[j] > lp[static_cast<std::size_t>(tok)]) tok = static_cast<int>(j);
    }
    out.push_back(tok);
    if (tok == params.vocab.eos()) return out;
    prev = tok;
  }
  out.push_back(params.vocab.eos());
  return out;
}

double ce_group_loss(const PolicyParams& params,
                     const std::vector<speech::SpokenInstruction>& x_group,
                     const std::vector<int>& y_ref, int expected_size) {
  return ce_group_backward(params, x_group, y_ref, 0.0, nullptr, expected_size);
}

double ce_group_backward(const PolicyParams& params,
                         const std::vector<speech::SpokenInstruction>& x_group,
                         const std::vector<int>& y_ref, double coeff, Gradients* g,
                         int expected_size) {
  if (static_cast<int>(x_group.size()) != expected_size) {
    throw ValidationError("GroupSizeMismatch",
                          "expected " + std::to_string(expected_size) +
                              " spoken renderings, got " +
                              std::to_string(x_group.size()));
  }
  const double share = -1.0 / static_cast<double>(x_group.size());
  double loss = 0.0;
  for (const auto& x : x_group) {
    loss += share * sequence_logprob_backward(params, x, y_ref, coeff * share, g);
  }
  return loss;
}

void Gradients::scaled_add(const Gradients& other, double alpha) {
  const auto& ops = kernels::active();
  ops.axpy(alpha, other.dE.data.data(), dE.data.data(), dE.data.size());
  ops.axpy(alpha, other.dW.data.data(), dW.data.data(), dW.data.size());
}

namespace {

json matrix_rows(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols; ++c) row.push_back(m.at(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_rows(const json& rows, const char* what) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw IoError("CorruptFile", std::string(what) + ": bad matrix payload");
  }
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < m.rows; ++r) {
    const json& row = rows[r];
    if (!row.is_array() || row.size() != m.cols) {
      throw IoError("CorruptFile", std::string(what) + ": ragged matrix payload");
    }
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (!row[c].is_number()) {
        throw IoError("CorruptFile", std::string(what) + ": non-numeric entry");
      }
      m.at(r, c) = row[c].get<double>();
    }
  }
  return m;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path,
                     long abort_after_bytes) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "checkpoint";
  j["config_digest"] = ckpt.config_digest;
  j["vocab"] = {{"text_size", ckpt.params.vocab.text_size},
                {"acoustic_size", ckpt.params.vocab.acoustic_size}};
  j["d"] = ckpt.params.d;
  j["init_seed"] = ckpt.params.init_seed;
  j["init_scale"] = ckpt.params.init_scale;
  j["step"] = ckpt.step;
  j["E"] = matrix_rows(ckpt.params.E);
  j["W"] = matrix_rows(ckpt.params.W);
  j["train_ids"] = ckpt.train_ids;
  io::atomic_write_file(path, j.dump() + "\n", abort_after_bytes);
}

Checkpoint load_checkpoint(const std::string& path) {
  const json j = io::parse_json(io::read_file(path), path);
  if (!j.is_object() || !j.contains("format_version")) {
    throw IoError("CorruptFile", path + ": not a checkpoint object");
  }
  if (j["format_version"].get<int>() != 1 ||
      (j.contains("kind") && j["kind"].get<std::string>() != "checkpoint")) {
    throw ValidationError("FormatVersionMismatch", path + ": unsupported checkpoint");
  }
  for (const char* key : {"vocab", "d", "init_seed", "init_scale", "step", "E", "W"}) {
    if (!j.contains(key)) {
      throw IoError("CorruptFile", path + ": missing field " + std::string(key));
    }
  }
  Checkpoint c;
  c.params.vocab.text_size = j["vocab"]["text_size"].get<int>();
  c.params.vocab.acoustic_size = j["vocab"]["acoustic_size"].get<int>();
  c.params.vocab.validate();
  c.params.d = j["d"].get<int>();
  c.params.init_seed = j["init_seed"].get<std::uint64_t>();
  c.params.init_scale = j["init_scale"].get<double>();
  c.step = j["step"].get<long>();
  c.config_digest = j.value("config_digest", std::string());
  c.params.E = matrix_from_rows(j["E"], "E");
  c.params.W = matrix_from_rows(j["W"], "W");
  if (j.contains("train_ids")) {
    c.train_ids = j["train_ids"].get<std::vector<std::string>>();
  }

  const auto v = c.params.vocab;
  const bool shapes_ok =
      c.params.E.rows == static_cast<std::size_t>(v.total()) &&
      c.params.W.rows == static_cast<std::size_t>(v.emittable()) &&
      c.params.E.cols == static_cast<std::size_t>(c.params.d) &&
      c.params.W.cols == static_cast<std::size_t>(c.params.d);
  if (!shapes_ok) {
    throw ValidationError("FormatVersionMismatch",
                          path + ": stored matrices disagree with stored vocab/d");
  }
  return c;
}

Checkpoint load_checkpoint(const std::string& path, const Vocab& expected_vocab,
                           int expected_d) {
  Checkpoint c = load_checkpoint(path);
  if (!(c.params.vocab == expected_vocab) || c.params.d != expected_d) {
    throw ValidationError("FormatVersionMismatch",
                          path + ": checkpoint was built for a different vocab/d spec");
  }
  return c;
}

}  // namespace rba::policy
