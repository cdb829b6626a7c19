#include "cstk/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cstk {
namespace crf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& v) {
  double mx = kNegInf;
  for (double x : v) mx = std::max(mx, x);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

Params Params::zeros(int n_tags, int n_features) {
  Params p;
  p.n_tags = n_tags;
  p.n_features = n_features;
  p.emit.assign(std::size_t(n_tags) * n_features, 0.0);
  p.trans.assign(std::size_t(n_tags) * n_tags, 0.0);
  p.start.assign(n_tags, 0.0);
  return p;
}

Mask Mask::all_allowed(int n_tags) {
  Mask m;
  m.start_allowed.assign(n_tags, 1);
  m.trans_allowed.assign(std::size_t(n_tags) * n_tags, 1);
  return m;
}

std::vector<std::vector<double>> emissions(const Params& params, const Sequence& seq) {
  std::vector<std::vector<double>> scores(seq.size(), std::vector<double>(params.n_tags, 0.0));
  for (std::size_t t = 0; t < seq.size(); ++t) {
    for (int y = 0; y < params.n_tags; ++y) {
      double s = 0.0;
      for (const auto& [feature, value] : seq[t]) s += params.emit_at(y, feature) * value;
      scores[t][y] = s;
    }
  }
  return scores;
}

namespace {

// alpha[t][y]: log-sum over legal prefixes ending in tag y at position t.
std::vector<std::vector<double>> forward(const Params& params, const Mask& mask,
                                         const std::vector<std::vector<double>>& emit) {
  const std::size_t n = emit.size();
  const int T = params.n_tags;
  std::vector<std::vector<double>> alpha(n, std::vector<double>(T, kNegInf));
  for (int y = 0; y < T; ++y) {
    if (mask.start_ok(y)) alpha[0][y] = params.start[y] + emit[0][y];
  }
  std::vector<double> terms(T);
  for (std::size_t t = 1; t < n; ++t) {
    for (int y = 0; y < T; ++y) {
      for (int p = 0; p < T; ++p) {
        terms[p] = mask.trans_ok(p, y) ? alpha[t - 1][p] + params.trans_at(p, y) : kNegInf;
      }
      alpha[t][y] = log_sum_exp(terms) + emit[t][y];
    }
  }
  return alpha;
}

// beta[t][y]: log-sum over legal suffixes leaving tag y at position t.
std::vector<std::vector<double>> backward(const Params& params, const Mask& mask,
                                          const std::vector<std::vector<double>>& emit) {
  const std::size_t n = emit.size();
  const int T = params.n_tags;
  std::vector<std::vector<double>> beta(n, std::vector<double>(T, kNegInf));
  for (int y = 0; y < T; ++y) beta[n - 1][y] = 0.0;
  std::vector<double> terms(T);
  for (std::size_t t = n - 1; t-- > 0;) {
    for (int y = 0; y < T; ++y) {
      for (int q = 0; q < T; ++q) {
        terms[q] = mask.trans_ok(y, q) ? params.trans_at(y, q) + emit[t + 1][q] + beta[t + 1][q]
                                       : kNegInf;
      }
      beta[t][y] = log_sum_exp(terms);
    }
  }
  return beta;
}

}  // namespace

double log_partition(const Params& params, const Mask& mask, const Sequence& seq) {
  if (seq.empty()) return 0.0;
  const auto emit = emissions(params, seq);
  return log_sum_exp(forward(params, mask, emit).back());
}

double path_score(const Params& params, const Mask& mask, const Sequence& seq,
                  const std::vector<int>& path) {
  if (seq.empty()) return 0.0;
  const auto emit = emissions(params, seq);
  if (!mask.start_ok(path[0])) return kNegInf;
  double score = params.start[path[0]] + emit[0][path[0]];
  for (std::size_t t = 1; t < path.size(); ++t) {
    if (!mask.trans_ok(path[t - 1], path[t])) return kNegInf;
    score += params.trans_at(path[t - 1], path[t]) + emit[t][path[t]];
  }
  return score;
}

Marginals marginals(const Params& params, const Mask& mask, const Sequence& seq,
                    const std::vector<int>& gold) {
  Marginals out;
  if (seq.empty()) return out;
  const std::size_t n = seq.size();
  const int T = params.n_tags;
  const auto emit = emissions(params, seq);
  const auto alpha = forward(params, mask, emit);
  const auto beta = backward(params, mask, emit);
  const double log_z = log_sum_exp(alpha.back());

  double gold_score = params.start[gold[0]] + emit[0][gold[0]];
  for (std::size_t t = 1; t < n; ++t) {
    gold_score += params.trans_at(gold[t - 1], gold[t]) + emit[t][gold[t]];
  }
  out.nll = log_z - gold_score;

  out.unary.assign(n, std::vector<double>(T, 0.0));
  for (std::size_t t = 0; t < n; ++t) {
    for (int y = 0; y < T; ++y) {
      const double lp = alpha[t][y] + beta[t][y] - log_z;
      if (lp != kNegInf) out.unary[t][y] = std::exp(lp);
    }
  }
  out.pairwise.assign(std::size_t(T) * T, 0.0);
  for (std::size_t t = 1; t < n; ++t) {
    for (int p = 0; p < T; ++p) {
      if (alpha[t - 1][p] == kNegInf) continue;
      for (int y = 0; y < T; ++y) {
        if (!mask.trans_ok(p, y) || beta[t][y] == kNegInf) continue;
        const double lp =
            alpha[t - 1][p] + params.trans_at(p, y) + emit[t][y] + beta[t][y] - log_z;
        out.pairwise[std::size_t(p) * T + y] += std::exp(lp);
      }
    }
  }
  return out;
}

double nll(const Params& params, const Mask& mask, const Sequence& seq,
           const std::vector<int>& gold, Params* grad) {
  if (seq.empty()) return 0.0;
  if (!grad) {
    const auto emit = emissions(params, seq);
    const double log_z = log_sum_exp(forward(params, mask, emit).back());
    return log_z - path_score(params, mask, seq, gold);
  }
  const std::size_t n = seq.size();
  const int T = params.n_tags;
  const Marginals m = marginals(params, mask, seq, gold);
  for (std::size_t t = 0; t < n; ++t) {
    for (int y = 0; y < T; ++y) {
      const double p = m.unary[t][y] - (gold[t] == y ? 1.0 : 0.0);
      if (t == 0) grad->start[y] += p;
      if (p == 0.0) continue;
      for (const auto& [feature, fvalue] : seq[t]) grad->emit_at(y, feature) += p * fvalue;
    }
  }
  for (std::size_t i = 0; i < m.pairwise.size(); ++i) grad->trans[i] += m.pairwise[i];
  for (std::size_t t = 1; t < n; ++t) grad->trans_at(gold[t - 1], gold[t]) -= 1.0;
  return m.nll;
}

std::vector<int> viterbi(const Params& params, const Mask& mask, const Sequence& seq) {
  if (seq.empty()) return {};
  const std::size_t n = seq.size();
  const int T = params.n_tags;
  const auto emit = emissions(params, seq);
  std::vector<std::vector<double>> best(n, std::vector<double>(T, kNegInf));
  std::vector<std::vector<int>> back(n, std::vector<int>(T, -1));
  for (int y = 0; y < T; ++y) {
    if (mask.start_ok(y)) best[0][y] = params.start[y] + emit[0][y];
  }
  for (std::size_t t = 1; t < n; ++t) {
    for (int y = 0; y < T; ++y) {
      double b = kNegInf;
      int arg = -1;
      for (int p = 0; p < T; ++p) {
        if (!mask.trans_ok(p, y) || best[t - 1][p] == kNegInf) continue;
        const double s = best[t - 1][p] + params.trans_at(p, y);
        if (s > b) {  // strict: ties keep the lowest predecessor index
          b = s;
          arg = p;
        }
      }
      if (arg >= 0) {
        best[t][y] = b + emit[t][y];
        back[t][y] = arg;
      }
    }
  }
  int arg = 0;
  double b = kNegInf;
  for (int y = 0; y < T; ++y) {
    if (best[n - 1][y] > b) {
      b = best[n - 1][y];
      arg = y;
    }
  }
  std::vector<int> path(n);
  path[n - 1] = arg;
  for (std::size_t t = n - 1; t > 0; --t) path[t - 1] = back[t][path[t]];
  return path;
}

}  // namespace crf
}  // namespace cstk
