#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

namespace labelnet {

// Dense row-major tensor of 64-bit floats, rank 1..3.
using Shape = std::vector<int>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

enum class OpKind {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kScalarMul,
  kScalarAdd,
  kScaleByScalar,
  kMatMul,
  kConcat,
  kSlice,
  kStack,
  kPadRows,
  kReshape,
  kTanh,
  kRelu,
  kExp,
  kLog,
  kSafeLog,
  kSoftmax,
  kSum,
  kMean,
  kSumAxis,
  kMeanAxis,
  kMaxAxis,
  kConv1d,
  kGatherRows,
  kRepeatRows,
  kLayerNormRows,
  kDot,
  kL2Norm,
  kCosine,
  kSqDist,
  kEuclidean,
};

const char* op_name(OpKind op);
// Parses the snake_case name used by `gradcheck`; throws on unknown kinds.
OpKind op_kind_from_name(const std::string& name);

// Per-op attributes. Only the fields an op reads are meaningful.
struct Attrs {
  int axis = -1;
  int start = 0;
  int len = 0;
  int kernel_width = 0;
  bool same_padding = true;
  bool transpose_a = false;
  bool transpose_b = false;
  double scalar = 0.0;
  int count = 0;  // repeat_rows / pad_rows target row count
  double eps = 0.0;
  double floor = 0.0;  // safe_log clamp
  std::vector<int> ids;
  Shape new_shape;
};

class Tape;

// Lightweight handle into a Tape node. Cheap to copy; all accessors
// verify the tape has not been cleared since creation.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Tape* tape, int id, std::uint64_t version)
      : tape_(tape), id_(id), version_(version) {}

  const Shape& shape() const;
  const std::vector<double>& values() const;
  bool requires_grad() const;
  int rank() const { return static_cast<int>(shape().size()); }
  std::size_t size() const { return shape_size(shape()); }
  double item() const;  // scalar tensors only
  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tape* tape_ = nullptr;
  int id_ = -1;
  std::uint64_t version_ = 0;
};

struct Node {
  OpKind op = OpKind::kLeaf;
  Shape shape;
  std::vector<double> values;
  std::vector<int> inputs;
  Attrs attrs;
  bool requires_grad = false;
};

// Gradients of a scalar loss with respect to requires_grad leaves,
// keyed by leaf node id. Leaves not reachable from the loss map to zeros.
class GradientMap {
 public:
  bool contains(int id) const { return grads_.count(id) != 0; }
  const std::vector<double>& at(int id) const;
  void set(int id, std::vector<double> g) { grads_[id] = std::move(g); }
  std::size_t size() const { return grads_.size(); }

 private:
  std::unordered_map<int, std::vector<double>> grads_;
};

// Define-by-run computation tape. Rebuilt every forward pass; clearing
// invalidates all tensors created on it.
class Tape {
 public:
  Tensor leaf(Shape shape, std::vector<double> values, bool requires_grad = false);
  Tensor constant(double v) { return leaf({1}, {v}); }

  // Reverse-mode sweep from a scalar loss back to every requires_grad leaf.
  GradientMap backward(const Tensor& loss) const;

  void clear();
  std::size_t size() const { return nodes_.size(); }
  std::uint64_t version() const { return version_; }
  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }

 private:
  friend Tensor apply(OpKind, const std::vector<Tensor>&, const Attrs&);
  // deque: node references stay valid while the tape grows
  std::deque<Node> nodes_;
  std::uint64_t version_ = 0;
};

// Records one primitive operation. Validates input shapes against the
// op's shape rule, computes the forward value eagerly, and rejects
// non-finite outputs.
Tensor apply(OpKind op, const std::vector<Tensor>& inputs, const Attrs& attrs = {});

// Elementwise / scalar
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor smul(const Tensor& a, double s);
Tensor sadd(const Tensor& a, double s);
Tensor scale_by(const Tensor& a, const Tensor& scalar);

// Structure
Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_a = false,
              bool transpose_b = false);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& a, int axis, int start, int len);
Tensor stack(const std::vector<Tensor>& rows);
Tensor pad_rows(const Tensor& a, int total_rows);
Tensor reshape(const Tensor& a, Shape new_shape);

// Nonlinearities / reductions
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor safe_log(const Tensor& a, double floor = 1e-12);
Tensor softmax(const Tensor& a, int axis);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sum_axis(const Tensor& a, int axis);
Tensor mean_axis(const Tensor& a, int axis);
Tensor max_axis(const Tensor& a, int axis);

// Sequence / lookup
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int kernel_width,
              bool same_padding);
Tensor gather_rows(const Tensor& table, const std::vector<int>& ids);
Tensor repeat_rows(const Tensor& v, int count);
Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       double eps = 1e-5);

// Vector geometry
Tensor dot(const Tensor& a, const Tensor& b);
Tensor l2_norm(const Tensor& a);
Tensor cosine_sim(const Tensor& a, const Tensor& b);
Tensor squared_distance(const Tensor& a, const Tensor& b);
Tensor euclidean_distance(const Tensor& a, const Tensor& b);

// Composite helpers (no new primitives).
Tensor affine_vec(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor affine_rows(const Tensor& x, const Tensor& w, const Tensor& b);

}  // namespace labelnet
