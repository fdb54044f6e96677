#include "labelnet/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace labelnet {

namespace {

double eval_scalar(const ScalarFn& fn, const std::vector<GradCheckLeaf>& leaves,
                   bool with_grad, GradientMap* grads_out,
                   std::vector<int>* leaf_ids_out) {
  Tape tape;
  std::vector<Tensor> ts;
  ts.reserve(leaves.size());
  for (const auto& l : leaves) ts.push_back(tape.leaf(l.shape, l.values, with_grad));
  Tensor loss = fn(tape, ts);
  const double v = loss.item();
  if (with_grad) {
    *grads_out = tape.backward(loss);
    leaf_ids_out->clear();
    for (const auto& t : ts) leaf_ids_out->push_back(t.id());
  }
  return v;
}

}  // namespace

double grad_check(const ScalarFn& fn, const std::vector<GradCheckLeaf>& leaves, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("grad_check: eps must be positive");

  GradientMap grads;
  std::vector<int> leaf_ids;
  const double f0 = eval_scalar(fn, leaves, true, &grads, &leaf_ids);
  const double f1 = eval_scalar(fn, leaves, true, &grads, &leaf_ids);
  if (f0 != f1)
    throw std::logic_error("grad_check: function is not deterministic (" +
                           std::to_string(f0) + " vs " + std::to_string(f1) + ")");

  double max_rel = 0.0;
  std::vector<GradCheckLeaf> work = leaves;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    const auto& analytic = grads.at(leaf_ids[li]);
    for (std::size_t i = 0; i < leaves[li].values.size(); ++i) {
      const double orig = work[li].values[i];
      work[li].values[i] = orig + eps;
      const double fp = eval_scalar(fn, work, false, nullptr, nullptr);
      work[li].values[i] = orig - eps;
      const double fm = eval_scalar(fn, work, false, nullptr, nullptr);
      work[li].values[i] = orig;
      const double fd = (fp - fm) / (2.0 * eps);
      const double rel = std::abs(analytic[i] - fd) / std::max(1.0, std::abs(fd));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace labelnet
