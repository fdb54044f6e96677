#pragma once

#include <functional>
#include <string>
#include <vector>

#include "labelnet/tensor.hpp"

namespace labelnet {

struct GradCheckLeaf {
  Shape shape;
  std::vector<double> values;
};

// Builds a scalar loss from freshly created leaves. Called repeatedly on
// fresh tapes with perturbed leaf values, so it must be deterministic.
using ScalarFn = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;

// Compares reverse-mode gradients of `fn` against central finite
// differences. Returns max over all leaf entries of
// |analytic - fd| / max(1, |fd|). Throws if two forward passes disagree.
double grad_check(const ScalarFn& fn, const std::vector<GradCheckLeaf>& leaves,
                  double eps = 1e-5);

struct GradCheckResult {
  std::string name;
  double max_rel_error;
  double threshold;
  bool pass() const { return max_rel_error <= threshold; }
};

// Named gradient-check suite over all primitives and model heads, run on
// `seeds` random draws each. `module` filters by name prefix
// ("tensor", "encoder", "r2net", "dele"); empty runs everything.
std::vector<GradCheckResult> run_gradcheck_suite(const std::string& module = "",
                                                 int seeds = 3);

}  // namespace labelnet
