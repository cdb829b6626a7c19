#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace cstk {
namespace crf {

// Sparse per-token features: (feature id, value).
using TokenFeatures = std::vector<std::pair<int, double>>;
using Sequence = std::vector<TokenFeatures>;

// Linear-chain CRF parameters. Emission score of tag y at position t is
// emit[y] . features(t); path score adds start[y0] and trans[y_prev][y].
struct Params {
  int n_tags = 0;
  int n_features = 0;
  std::vector<double> emit;   // [tag * n_features + feature]
  std::vector<double> trans;  // [from * n_tags + to]
  std::vector<double> start;  // [tag]

  static Params zeros(int n_tags, int n_features);
  double& emit_at(int tag, int feature) { return emit[static_cast<std::size_t>(tag) * n_features + feature]; }
  double emit_at(int tag, int feature) const { return emit[static_cast<std::size_t>(tag) * n_features + feature]; }
  double& trans_at(int from, int to) { return trans[static_cast<std::size_t>(from) * n_tags + to]; }
  double trans_at(int from, int to) const { return trans[static_cast<std::size_t>(from) * n_tags + to]; }
};

// Structural constraints; disallowed starts/transitions score -inf and take
// no probability mass, so illegal BIO paths are excluded everywhere
// (training, partition function, decoding) rather than patched afterwards.
struct Mask {
  std::vector<std::uint8_t> start_allowed;  // [tag]
  std::vector<std::uint8_t> trans_allowed;  // [from * n_tags + to]

  static Mask all_allowed(int n_tags);
  bool start_ok(int tag) const { return start_allowed[static_cast<std::size_t>(tag)] != 0; }
  bool trans_ok(int from, int to) const {
    return trans_allowed[static_cast<std::size_t>(from) * start_allowed.size() + to] != 0;
  }
};

// Emission score matrix [position][tag] for a sequence.
std::vector<std::vector<double>> emissions(const Params& params, const Sequence& seq);

// log of the partition function (sum over all legal tag paths).
double log_partition(const Params& params, const Mask& mask, const Sequence& seq);

// Unnormalized log score of one path; -inf for a masked path.
double path_score(const Params& params, const Mask& mask, const Sequence& seq,
                  const std::vector<int>& path);

// Posterior marginals under the current parameters, plus the gold-path NLL.
// The emission/transition/start gradients follow as expected-minus-gold
// counts; training consumes the marginals directly to stay sparse.
struct Marginals {
  double nll = 0.0;
  std::vector<std::vector<double>> unary;  // [t][y] = p(y_t = y)
  std::vector<double> pairwise;            // [p * n_tags + y], summed over positions
};

Marginals marginals(const Params& params, const Mask& mask, const Sequence& seq,
                    const std::vector<int>& gold);

// Negative log-likelihood of the gold path and, when grad is non-null, its
// dense gradient accumulated into grad (expected minus gold feature counts).
// Used by the finite-difference checks; training uses marginals().
double nll(const Params& params, const Mask& mask, const Sequence& seq,
           const std::vector<int>& gold, Params* grad);

// Best legal path; ties resolved toward the lowest tag index.
std::vector<int> viterbi(const Params& params, const Mask& mask, const Sequence& seq);

}  // namespace crf
}  // namespace cstk
