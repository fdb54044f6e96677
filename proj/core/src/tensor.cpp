#include "labelnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace labelnet {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << "]";
  return os.str();
}

namespace {

struct OpNameEntry {
  OpKind kind;
  const char* name;
};

constexpr OpNameEntry kOpNames[] = {
    {OpKind::kLeaf, "leaf"},
    {OpKind::kAdd, "add"},
    {OpKind::kSub, "sub"},
    {OpKind::kMul, "mul"},
    {OpKind::kScalarMul, "scalar_mul"},
    {OpKind::kScalarAdd, "scalar_add"},
    {OpKind::kScaleByScalar, "scale_by_scalar"},
    {OpKind::kMatMul, "matmul"},
    {OpKind::kConcat, "concat"},
    {OpKind::kSlice, "slice"},
    {OpKind::kStack, "stack"},
    {OpKind::kPadRows, "pad_rows"},
    {OpKind::kReshape, "reshape"},
    {OpKind::kTanh, "tanh"},
    {OpKind::kRelu, "relu"},
    {OpKind::kExp, "exp"},
    {OpKind::kLog, "log"},
    {OpKind::kSafeLog, "safe_log"},
    {OpKind::kSoftmax, "softmax"},
    {OpKind::kSum, "sum"},
    {OpKind::kMean, "mean"},
    {OpKind::kSumAxis, "sum_axis"},
    {OpKind::kMeanAxis, "mean_axis"},
    {OpKind::kMaxAxis, "max_axis"},
    {OpKind::kConv1d, "conv1d"},
    {OpKind::kGatherRows, "gather_rows"},
    {OpKind::kRepeatRows, "repeat_rows"},
    {OpKind::kLayerNormRows, "layer_norm_rows"},
    {OpKind::kDot, "dot"},
    {OpKind::kL2Norm, "l2_norm"},
    {OpKind::kCosine, "cosine_sim"},
    {OpKind::kSqDist, "squared_distance"},
    {OpKind::kEuclidean, "euclidean_distance"},
};

[[noreturn]] void shape_error(OpKind op, const std::string& detail) {
  throw std::invalid_argument(std::string(op_name(op)) + ": " + detail);
}

void require(bool ok, OpKind op, const std::string& detail) {
  if (!ok) shape_error(op, detail);
}

// (rows, cols, transpose) view of a rank-2 block stored row-major.
struct MatView {
  const double* data;
  int rows;
  int cols;
  bool t;
  int r() const { return t ? cols : rows; }
  int c() const { return t ? rows : cols; }
  double at(int i, int j) const { return t ? data[j * cols + i] : data[i * cols + j]; }
};

// C (r x c) += A * B, plain ikj loop; fast path when neither side is
// transposed (the common case in model code).
void matmul_acc(const MatView& a, const MatView& b, double* out) {
  const int r = a.r(), k = a.c(), c = b.c();
  if (!a.t && !b.t) {
    for (int i = 0; i < r; ++i) {
      const double* arow = a.data + static_cast<std::size_t>(i) * k;
      double* orow = out + static_cast<std::size_t>(i) * c;
      for (int kk = 0; kk < k; ++kk) {
        const double av = arow[kk];
        if (av == 0.0) continue;
        const double* brow = b.data + static_cast<std::size_t>(kk) * c;
        for (int j = 0; j < c; ++j) orow[j] += av * brow[j];
      }
    }
    return;
  }
  for (int i = 0; i < r; ++i)
    for (int kk = 0; kk < k; ++kk) {
      const double av = a.at(i, kk);
      if (av == 0.0) continue;
      for (int j = 0; j < c; ++j) out[static_cast<std::size_t>(i) * c + j] += av * b.at(kk, j);
    }
}

int conv_pad_left(int k, bool same) { return same ? (k - 1) / 2 : 0; }

}  // namespace

const char* op_name(OpKind op) {
  for (const auto& e : kOpNames)
    if (e.kind == op) return e.name;
  return "unknown";
}

OpKind op_kind_from_name(const std::string& name) {
  for (const auto& e : kOpNames)
    if (name == e.name) return e.kind;
  throw std::invalid_argument("unknown op kind: " + name);
}

const std::vector<double>& GradientMap::at(int id) const {
  auto it = grads_.find(id);
  if (it == grads_.end())
    throw std::out_of_range("gradient map has no entry for node " + std::to_string(id));
  return it->second;
}

namespace {

const Node& checked_node(const Tensor& t, const Tape* tape, std::uint64_t version) {
  if (tape == nullptr) throw std::logic_error("tensor is not bound to a tape");
  if (tape->version() != version)
    throw std::logic_error("stale tape: tensor predates the last clear()");
  return tape->node(t.id());
}

}  // namespace

const Shape& Tensor::shape() const { return checked_node(*this, tape_, version_).shape; }
const std::vector<double>& Tensor::values() const {
  return checked_node(*this, tape_, version_).values;
}
bool Tensor::requires_grad() const {
  return checked_node(*this, tape_, version_).requires_grad;
}
double Tensor::item() const {
  const auto& v = values();
  if (v.size() != 1) throw std::invalid_argument("item(): tensor is not scalar");
  return v[0];
}

Tensor Tape::leaf(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape.empty() || shape.size() > 3)
    throw std::invalid_argument("leaf: rank must be 1..3, got " + shape_str(shape));
  for (int d : shape)
    if (d <= 0) throw std::invalid_argument("leaf: non-positive extent in " + shape_str(shape));
  if (shape_size(shape) != values.size())
    throw std::invalid_argument("leaf: shape " + shape_str(shape) + " does not match " +
                                std::to_string(values.size()) + " values");
  Node n;
  n.op = OpKind::kLeaf;
  n.shape = std::move(shape);
  n.values = std::move(values);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Tensor(this, static_cast<int>(nodes_.size()) - 1, version_);
}

void Tape::clear() {
  nodes_.clear();
  ++version_;
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

namespace {

Shape infer_shape(OpKind op, const std::vector<const Node*>& in, const Attrs& at) {
  auto same_shape2 = [&](const char* what) {
    require(in.size() == 2, op, "expects 2 inputs");
    require(in[0]->shape == in[1]->shape, op,
            std::string(what) + " shapes differ: " + shape_str(in[0]->shape) + " vs " +
                shape_str(in[1]->shape));
  };
  auto vec2 = [&]() {
    require(in.size() == 2, op, "expects 2 inputs");
    require(in[0]->shape.size() == 1 && in[1]->shape.size() == 1, op, "expects two vectors");
    require(in[0]->shape == in[1]->shape, op,
            "vector lengths differ: " + shape_str(in[0]->shape) + " vs " +
                shape_str(in[1]->shape));
  };
  switch (op) {
    case OpKind::kLeaf:
      shape_error(op, "leaf cannot be applied");
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul:
      same_shape2("operand");
      return in[0]->shape;
    case OpKind::kScalarMul:
    case OpKind::kScalarAdd:
      require(in.size() == 1, op, "expects 1 input");
      return in[0]->shape;
    case OpKind::kScaleByScalar:
      require(in.size() == 2, op, "expects tensor and scalar");
      require(shape_size(in[1]->shape) == 1, op, "second input must be scalar");
      return in[0]->shape;
    case OpKind::kMatMul: {
      require(in.size() == 2, op, "expects 2 inputs");
      const auto& sa = in[0]->shape;
      const auto& sb = in[1]->shape;
      require(sa.size() >= 2 && sb.size() >= 2, op, "operands must be rank >= 2");
      auto rows = [&](const Shape& s, bool t) { return t ? s[s.size() - 1] : s[s.size() - 2]; };
      auto cols = [&](const Shape& s, bool t) { return t ? s[s.size() - 2] : s[s.size() - 1]; };
      int ar = rows(sa, at.transpose_a), ac = cols(sa, at.transpose_a);
      int br = rows(sb, at.transpose_b), bc = cols(sb, at.transpose_b);
      require(ac == br, op,
              "inner extents " + std::to_string(ac) + " and " + std::to_string(br) +
                  " do not match (" + shape_str(sa) + " x " + shape_str(sb) + ")");
      if (sa.size() == 2 && sb.size() == 2) return {ar, bc};
      // batched: leading axis loops; the other operand is rank-2 or shares it
      if (sa.size() == 3 && sb.size() == 2) return {sa[0], ar, bc};
      if (sa.size() == 3 && sb.size() == 3) {
        require(sa[0] == sb[0], op, "batch extents differ");
        return {sa[0], ar, bc};
      }
      shape_error(op, "unsupported ranks " + shape_str(sa) + " x " + shape_str(sb));
    }
    case OpKind::kConcat: {
      require(!in.empty(), op, "expects at least 1 input");
      const int rank = static_cast<int>(in[0]->shape.size());
      require(rank <= 2, op, "supports rank 1 and 2");
      require(at.axis >= 0 && at.axis < rank, op, "axis out of range");
      Shape out = in[0]->shape;
      for (std::size_t i = 1; i < in.size(); ++i) {
        require(static_cast<int>(in[i]->shape.size()) == rank, op, "rank mismatch across parts");
        for (int d = 0; d < rank; ++d)
          if (d != at.axis)
            require(in[i]->shape[d] == out[d], op,
                    "non-concat extents differ: " + shape_str(in[i]->shape) + " vs " +
                        shape_str(out));
        out[at.axis] += in[i]->shape[at.axis];
      }
      return out;
    }
    case OpKind::kSlice: {
      require(in.size() == 1, op, "expects 1 input");
      const auto& s = in[0]->shape;
      require(at.axis >= 0 && at.axis < static_cast<int>(s.size()), op, "axis out of range");
      require(at.len >= 1, op, "len must be >= 1");
      require(at.start >= 0 && at.start + at.len <= s[at.axis], op,
              "range [" + std::to_string(at.start) + "," + std::to_string(at.start + at.len) +
                  ") exceeds extent " + std::to_string(s[at.axis]));
      Shape out = s;
      out[at.axis] = at.len;
      return out;
    }
    case OpKind::kStack: {
      require(!in.empty(), op, "expects at least 1 input");
      require(in[0]->shape.size() == 1, op, "stacks rank-1 vectors");
      for (const auto* n : in)
        require(n->shape == in[0]->shape, op, "all vectors must share a length");
      return {static_cast<int>(in.size()), in[0]->shape[0]};
    }
    case OpKind::kPadRows: {
      require(in.size() == 1 && in[0]->shape.size() == 2, op, "expects one matrix");
      require(at.count >= in[0]->shape[0], op, "target row count smaller than input");
      return {at.count, in[0]->shape[1]};
    }
    case OpKind::kReshape: {
      require(in.size() == 1, op, "expects 1 input");
      require(!at.new_shape.empty() && at.new_shape.size() <= 3, op, "bad target rank");
      require(shape_size(at.new_shape) == shape_size(in[0]->shape), op,
              "element counts differ: " + shape_str(in[0]->shape) + " -> " +
                  shape_str(at.new_shape));
      return at.new_shape;
    }
    case OpKind::kTanh:
    case OpKind::kRelu:
    case OpKind::kExp:
    case OpKind::kLog:
    case OpKind::kSafeLog:
      require(in.size() == 1, op, "expects 1 input");
      return in[0]->shape;
    case OpKind::kSoftmax: {
      require(in.size() == 1, op, "expects 1 input");
      const int rank = static_cast<int>(in[0]->shape.size());
      require(rank <= 2, op, "supports rank 1 and 2");
      require(at.axis >= 0 && at.axis < rank, op, "axis out of range");
      return in[0]->shape;
    }
    case OpKind::kSum:
    case OpKind::kMean:
      require(in.size() == 1, op, "expects 1 input");
      return {1};
    case OpKind::kSumAxis:
    case OpKind::kMeanAxis:
    case OpKind::kMaxAxis: {
      require(in.size() == 1 && in[0]->shape.size() == 2, op, "expects one matrix");
      require(at.axis == 0 || at.axis == 1, op, "axis out of range");
      return {at.axis == 0 ? in[0]->shape[1] : in[0]->shape[0]};
    }
    case OpKind::kConv1d: {
      require(in.size() == 3, op, "expects input, weight, bias");
      const auto& x = in[0]->shape;
      const auto& w = in[1]->shape;
      const auto& b = in[2]->shape;
      require(x.size() == 2 && w.size() == 2 && b.size() == 1, op, "bad operand ranks");
      require(at.kernel_width >= 1, op, "kernel width must be >= 1");
      require(w[0] == at.kernel_width * x[1], op,
              "weight rows " + std::to_string(w[0]) + " != kernel_width*d_in " +
                  std::to_string(at.kernel_width * x[1]));
      require(b[0] == w[1], op, "bias length does not match output channels");
      if (at.same_padding) return {x[0], w[1]};
      require(x[0] >= at.kernel_width, op,
              "sequence length " + std::to_string(x[0]) + " shorter than kernel " +
                  std::to_string(at.kernel_width));
      return {x[0] - at.kernel_width + 1, w[1]};
    }
    case OpKind::kGatherRows: {
      require(in.size() == 1 && in[0]->shape.size() == 2, op, "expects one matrix");
      require(!at.ids.empty(), op, "ids must be non-empty");
      for (int id : at.ids)
        require(id >= 0 && id < in[0]->shape[0], op,
                "row id " + std::to_string(id) + " out of range [0," +
                    std::to_string(in[0]->shape[0]) + ")");
      return {static_cast<int>(at.ids.size()), in[0]->shape[1]};
    }
    case OpKind::kRepeatRows: {
      require(in.size() == 1 && in[0]->shape.size() == 1, op, "expects one vector");
      require(at.count >= 1, op, "count must be >= 1");
      return {at.count, in[0]->shape[0]};
    }
    case OpKind::kLayerNormRows: {
      require(in.size() == 3, op, "expects input, gamma, beta");
      const auto& x = in[0]->shape;
      require(x.size() == 2, op, "expects a matrix input");
      require(in[1]->shape == Shape{x[1]} && in[2]->shape == Shape{x[1]}, op,
              "gamma/beta must have length " + std::to_string(x[1]));
      return x;
    }
    case OpKind::kDot:
    case OpKind::kCosine:
    case OpKind::kSqDist:
    case OpKind::kEuclidean:
      vec2();
      return {1};
    case OpKind::kL2Norm:
      require(in.size() == 1 && in[0]->shape.size() == 1, op, "expects one vector");
      return {1};
  }
  shape_error(op, "unknown op kind");
}

void forward(OpKind op, const std::vector<const Node*>& in, const Attrs& at, Node& out) {
  const std::size_t n = shape_size(out.shape);
  out.values.assign(n, 0.0);
  double* o = out.values.data();
  switch (op) {
    case OpKind::kAdd:
      for (std::size_t i = 0; i < n; ++i) o[i] = in[0]->values[i] + in[1]->values[i];
      break;
    case OpKind::kSub:
      for (std::size_t i = 0; i < n; ++i) o[i] = in[0]->values[i] - in[1]->values[i];
      break;
    case OpKind::kMul:
      for (std::size_t i = 0; i < n; ++i) o[i] = in[0]->values[i] * in[1]->values[i];
      break;
    case OpKind::kScalarMul:
      for (std::size_t i = 0; i < n; ++i) o[i] = in[0]->values[i] * at.scalar;
      break;
    case OpKind::kScalarAdd:
      for (std::size_t i = 0; i < n; ++i) o[i] = in[0]->values[i] + at.scalar;
      break;
    case OpKind::kScaleByScalar: {
      const double s = in[1]->values[0];
      for (std::size_t i = 0; i < n; ++i) o[i] = in[0]->values[i] * s;
      break;
    }
    case OpKind::kMatMul: {
      const auto& sa = in[0]->shape;
      const auto& sb = in[1]->shape;
      const int ar = sa[sa.size() - 2], ac = sa[sa.size() - 1];
      const int br = sb[sb.size() - 2], bc = sb[sb.size() - 1];
      const int batch = out.shape.size() == 3 ? out.shape[0] : 1;
      const std::size_t astride = static_cast<std::size_t>(ar) * ac;
      const std::size_t bstride = sb.size() == 3 ? static_cast<std::size_t>(br) * bc : 0;
      const std::size_t ostride =
          static_cast<std::size_t>(out.shape[out.shape.size() - 2]) * out.shape.back();
      for (int b = 0; b < batch; ++b) {
        MatView av{in[0]->values.data() + (sa.size() == 3 ? b * astride : 0), ar, ac,
                   at.transpose_a};
        MatView bv{in[1]->values.data() + b * bstride, br, bc, at.transpose_b};
        matmul_acc(av, bv, o + b * ostride);
      }
      break;
    }
    case OpKind::kConcat: {
      const int rank = static_cast<int>(out.shape.size());
      if (rank == 1 || at.axis == 0) {
        std::size_t off = 0;
        for (const auto* p : in) {
          std::copy(p->values.begin(), p->values.end(), o + off);
          off += p->values.size();
        }
      } else {  // rank 2, axis 1
        const int rows = out.shape[0];
        const int cols = out.shape[1];
        int coff = 0;
        for (const auto* p : in) {
          const int pc = p->shape[1];
          for (int r = 0; r < rows; ++r)
            std::copy(p->values.begin() + static_cast<std::size_t>(r) * pc,
                      p->values.begin() + static_cast<std::size_t>(r + 1) * pc,
                      o + static_cast<std::size_t>(r) * cols + coff);
          coff += pc;
        }
      }
      break;
    }
    case OpKind::kSlice: {
      const auto& s = in[0]->shape;
      if (s.size() == 1) {
        std::copy_n(in[0]->values.begin() + at.start, at.len, o);
      } else if (s.size() == 2) {
        const int cols = s[1];
        if (at.axis == 0) {
          std::copy_n(in[0]->values.begin() + static_cast<std::size_t>(at.start) * cols,
                      static_cast<std::size_t>(at.len) * cols, o);
        } else {
          for (int r = 0; r < s[0]; ++r)
            std::copy_n(in[0]->values.begin() + static_cast<std::size_t>(r) * cols + at.start,
                        at.len, o + static_cast<std::size_t>(r) * at.len);
        }
      } else {  // rank 3, axis 0 only (leading)
        const std::size_t stride = static_cast<std::size_t>(s[1]) * s[2];
        std::copy_n(in[0]->values.begin() + at.start * stride, at.len * stride, o);
      }
      break;
    }
    case OpKind::kStack: {
      const std::size_t cols = in[0]->values.size();
      for (std::size_t r = 0; r < in.size(); ++r)
        std::copy(in[r]->values.begin(), in[r]->values.end(), o + r * cols);
      break;
    }
    case OpKind::kPadRows:
      std::copy(in[0]->values.begin(), in[0]->values.end(), o);
      break;
    case OpKind::kReshape:
      out.values = in[0]->values;
      break;
    case OpKind::kTanh:
      for (std::size_t i = 0; i < n; ++i) o[i] = std::tanh(in[0]->values[i]);
      break;
    case OpKind::kRelu:
      for (std::size_t i = 0; i < n; ++i) o[i] = in[0]->values[i] > 0.0 ? in[0]->values[i] : 0.0;
      break;
    case OpKind::kExp:
      for (std::size_t i = 0; i < n; ++i) o[i] = std::exp(in[0]->values[i]);
      break;
    case OpKind::kLog:
      for (std::size_t i = 0; i < n; ++i) o[i] = std::log(in[0]->values[i]);
      break;
    case OpKind::kSafeLog:
      for (std::size_t i = 0; i < n; ++i) o[i] = std::log(std::max(in[0]->values[i], at.floor));
      break;
    case OpKind::kSoftmax: {
      const auto& s = in[0]->shape;
      const int groups = s.size() == 1 ? 1 : (at.axis == 1 ? s[0] : s[1]);
      const int len = s.size() == 1 ? s[0] : (at.axis == 1 ? s[1] : s[0]);
      const int stride = (s.size() == 2 && at.axis == 0) ? s[1] : 1;
      const int gstep = (s.size() == 2 && at.axis == 0) ? 1 : len;
      for (int g = 0; g < groups; ++g) {
        const double* x = in[0]->values.data() + static_cast<std::size_t>(g) * gstep;
        double* y = o + static_cast<std::size_t>(g) * gstep;
        double mx = x[0];
        for (int i = 1; i < len; ++i) mx = std::max(mx, x[static_cast<std::size_t>(i) * stride]);
        double z = 0.0;
        for (int i = 0; i < len; ++i) {
          const double e = std::exp(x[static_cast<std::size_t>(i) * stride] - mx);
          y[static_cast<std::size_t>(i) * stride] = e;
          z += e;
        }
        for (int i = 0; i < len; ++i) y[static_cast<std::size_t>(i) * stride] /= z;
      }
      break;
    }
    case OpKind::kSum: {
      double s = 0.0;
      for (double v : in[0]->values) s += v;
      o[0] = s;
      break;
    }
    case OpKind::kMean: {
      double s = 0.0;
      for (double v : in[0]->values) s += v;
      o[0] = s / static_cast<double>(in[0]->values.size());
      break;
    }
    case OpKind::kSumAxis:
    case OpKind::kMeanAxis: {
      const int rows = in[0]->shape[0], cols = in[0]->shape[1];
      if (at.axis == 0) {
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c) o[c] += in[0]->values[static_cast<std::size_t>(r) * cols + c];
        if (op == OpKind::kMeanAxis)
          for (int c = 0; c < cols; ++c) o[c] /= rows;
      } else {
        for (int r = 0; r < rows; ++r) {
          double s = 0.0;
          for (int c = 0; c < cols; ++c) s += in[0]->values[static_cast<std::size_t>(r) * cols + c];
          o[r] = op == OpKind::kMeanAxis ? s / cols : s;
        }
      }
      break;
    }
    case OpKind::kMaxAxis: {
      const int rows = in[0]->shape[0], cols = in[0]->shape[1];
      if (at.axis == 0) {
        for (int c = 0; c < cols; ++c) {
          double mx = in[0]->values[c];
          for (int r = 1; r < rows; ++r)
            mx = std::max(mx, in[0]->values[static_cast<std::size_t>(r) * cols + c]);
          o[c] = mx;
        }
      } else {
        for (int r = 0; r < rows; ++r) {
          const double* row = in[0]->values.data() + static_cast<std::size_t>(r) * cols;
          o[r] = *std::max_element(row, row + cols);
        }
      }
      break;
    }
    case OpKind::kConv1d: {
      const int len = in[0]->shape[0], din = in[0]->shape[1];
      const int dout = in[1]->shape[1];
      const int k = at.kernel_width;
      const int pl = conv_pad_left(k, at.same_padding);
      const int olen = out.shape[0];
      for (int i = 0; i < olen; ++i)
        for (int co = 0; co < dout; ++co) {
          double acc = in[2]->values[co];
          for (int j = 0; j < k; ++j) {
            const int r = i - pl + j;
            if (r < 0 || r >= len) continue;
            const double* xr = in[0]->values.data() + static_cast<std::size_t>(r) * din;
            const double* wr = in[1]->values.data() + static_cast<std::size_t>(j) * din * dout;
            for (int ci = 0; ci < din; ++ci) acc += xr[ci] * wr[static_cast<std::size_t>(ci) * dout + co];
          }
          o[static_cast<std::size_t>(i) * dout + co] = acc;
        }
      break;
    }
    case OpKind::kGatherRows: {
      const int cols = in[0]->shape[1];
      for (std::size_t r = 0; r < at.ids.size(); ++r)
        std::copy_n(in[0]->values.begin() + static_cast<std::size_t>(at.ids[r]) * cols, cols,
                    o + r * cols);
      break;
    }
    case OpKind::kRepeatRows: {
      const std::size_t cols = in[0]->values.size();
      for (int r = 0; r < at.count; ++r)
        std::copy(in[0]->values.begin(), in[0]->values.end(), o + static_cast<std::size_t>(r) * cols);
      break;
    }
    case OpKind::kLayerNormRows: {
      const int rows = in[0]->shape[0], cols = in[0]->shape[1];
      for (int r = 0; r < rows; ++r) {
        const double* x = in[0]->values.data() + static_cast<std::size_t>(r) * cols;
        double* y = o + static_cast<std::size_t>(r) * cols;
        double mu = 0.0;
        for (int c = 0; c < cols; ++c) mu += x[c];
        mu /= cols;
        double var = 0.0;
        for (int c = 0; c < cols; ++c) var += (x[c] - mu) * (x[c] - mu);
        var /= cols;
        const double inv = 1.0 / std::sqrt(var + at.eps);
        for (int c = 0; c < cols; ++c)
          y[c] = (x[c] - mu) * inv * in[1]->values[c] + in[2]->values[c];
      }
      break;
    }
    case OpKind::kDot: {
      double s = 0.0;
      for (std::size_t i = 0; i < in[0]->values.size(); ++i)
        s += in[0]->values[i] * in[1]->values[i];
      o[0] = s;
      break;
    }
    case OpKind::kL2Norm: {
      double s = 0.0;
      for (double v : in[0]->values) s += v * v;
      o[0] = std::sqrt(s);
      break;
    }
    case OpKind::kCosine: {
      double sab = 0.0, saa = 0.0, sbb = 0.0;
      for (std::size_t i = 0; i < in[0]->values.size(); ++i) {
        sab += in[0]->values[i] * in[1]->values[i];
        saa += in[0]->values[i] * in[0]->values[i];
        sbb += in[1]->values[i] * in[1]->values[i];
      }
      if (saa == 0.0 || sbb == 0.0)
        throw std::domain_error("cosine_sim: zero-norm vector, similarity undefined");
      o[0] = sab / (std::sqrt(saa) * std::sqrt(sbb));
      break;
    }
    case OpKind::kSqDist: {
      double s = 0.0;
      for (std::size_t i = 0; i < in[0]->values.size(); ++i) {
        const double d = in[0]->values[i] - in[1]->values[i];
        s += d * d;
      }
      o[0] = s;
      break;
    }
    case OpKind::kEuclidean: {
      double s = 0.0;
      for (std::size_t i = 0; i < in[0]->values.size(); ++i) {
        const double d = in[0]->values[i] - in[1]->values[i];
        s += d * d;
      }
      o[0] = std::sqrt(s);
      break;
    }
    case OpKind::kLeaf:
      break;
  }
}

}  // namespace

Tensor apply(OpKind op, const std::vector<Tensor>& inputs, const Attrs& attrs) {
  if (inputs.empty()) shape_error(op, "expects at least one input");
  Tape* tape = inputs[0].tape();
  if (tape == nullptr) throw std::logic_error("apply: input tensor has no tape");
  std::vector<const Node*> in;
  in.reserve(inputs.size());
  bool needs_grad = false;
  for (const auto& t : inputs) {
    if (t.tape() != tape) throw std::logic_error("apply: inputs live on different tapes");
    (void)t.shape();  // staleness check against the tensor's own version
    in.push_back(&tape->node(t.id()));
    needs_grad = needs_grad || in.back()->requires_grad;
  }
  Node out;
  out.op = op;
  out.shape = infer_shape(op, in, attrs);
  out.attrs = attrs;
  out.requires_grad = needs_grad;
  forward(op, in, attrs, out);
  for (double v : out.values)
    if (!std::isfinite(v))
      throw std::domain_error(std::string(op_name(op)) + ": non-finite value in output");
  for (const auto& t : inputs) out.inputs.push_back(t.id());
  tape->nodes_.push_back(std::move(out));
  return Tensor(tape, static_cast<int>(tape->size()) - 1, tape->version());
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

namespace {

using GradBuf = std::vector<std::vector<double>>;

void backward_op(const std::deque<Node>& nodes, int id, GradBuf& grads) {
  const Node& node = nodes[static_cast<std::size_t>(id)];
  const auto& g = grads[static_cast<std::size_t>(id)];
  const Attrs& at = node.attrs;
  auto input = [&](int i) -> const Node& {
    return nodes[static_cast<std::size_t>(node.inputs[static_cast<std::size_t>(i)])];
  };
  auto gin = [&](int i) -> std::vector<double>& {
    auto& buf = grads[static_cast<std::size_t>(node.inputs[static_cast<std::size_t>(i)])];
    if (buf.empty()) buf.assign(input(i).values.size(), 0.0);
    return buf;
  };
  auto wants = [&](int i) { return input(i).requires_grad; };

  switch (node.op) {
    case OpKind::kLeaf:
      return;
    case OpKind::kAdd:
      for (int s = 0; s < 2; ++s)
        if (wants(s)) {
          auto& d = gin(s);
          for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
        }
      return;
    case OpKind::kSub:
      if (wants(0)) {
        auto& d = gin(0);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      }
      if (wants(1)) {
        auto& d = gin(1);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] -= g[i];
      }
      return;
    case OpKind::kMul:
      if (wants(0)) {
        auto& d = gin(0);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * input(1).values[i];
      }
      if (wants(1)) {
        auto& d = gin(1);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * input(0).values[i];
      }
      return;
    case OpKind::kScalarMul:
      if (wants(0)) {
        auto& d = gin(0);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * at.scalar;
      }
      return;
    case OpKind::kScalarAdd:
      if (wants(0)) {
        auto& d = gin(0);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      }
      return;
    case OpKind::kScaleByScalar: {
      const double s = input(1).values[0];
      if (wants(0)) {
        auto& d = gin(0);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * s;
      }
      if (wants(1)) {
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * input(0).values[i];
        gin(1)[0] += acc;
      }
      return;
    }
    case OpKind::kMatMul: {
      const auto& sa = input(0).shape;
      const auto& sb = input(1).shape;
      const int ar = sa[sa.size() - 2], ac = sa[sa.size() - 1];
      const int br = sb[sb.size() - 2], bc = sb[sb.size() - 1];
      const int orows = node.shape[node.shape.size() - 2];
      const int ocols = node.shape.back();
      const int batch = node.shape.size() == 3 ? node.shape[0] : 1;
      const std::size_t astride = sa.size() == 3 ? static_cast<std::size_t>(ar) * ac : 0;
      const std::size_t bstride = sb.size() == 3 ? static_cast<std::size_t>(br) * bc : 0;
      const std::size_t ostride = static_cast<std::size_t>(orows) * ocols;
      for (int b = 0; b < batch; ++b) {
        MatView gv{g.data() + b * ostride, orows, ocols, false};
        const double* adata = input(0).values.data() + b * astride;
        const double* bdata = input(1).values.data() + b * bstride;
        if (wants(0)) {
          double* da = gin(0).data() + b * astride;
          MatView bv{bdata, br, bc, at.transpose_b};
          if (!at.transpose_a) {  // dA = G * op(B)^T
            MatView bT{bdata, br, bc, !at.transpose_b};
            matmul_acc(gv, bT, da);
          } else {  // dA^T = op(B) * G^T  => dA = (B G^T) laid out transposed
            MatView gT{g.data() + b * ostride, orows, ocols, true};
            matmul_acc(bv, gT, da);
          }
        }
        if (wants(1)) {
          double* db = gin(1).data() + b * bstride;
          MatView av{adata, ar, ac, at.transpose_a};
          if (!at.transpose_b) {  // dB = op(A)^T * G
            MatView aT{adata, ar, ac, !at.transpose_a};
            matmul_acc(aT, gv, db);
          } else {  // dB = G^T * op(A)
            MatView gT{g.data() + b * ostride, orows, ocols, true};
            matmul_acc(gT, av, db);
          }
        }
      }
      return;
    }
    case OpKind::kConcat: {
      const int rank = static_cast<int>(node.shape.size());
      if (rank == 1 || at.axis == 0) {
        std::size_t off = 0;
        for (std::size_t s = 0; s < node.inputs.size(); ++s) {
          const std::size_t len = input(static_cast<int>(s)).values.size();
          if (wants(static_cast<int>(s))) {
            auto& d = gin(static_cast<int>(s));
            for (std::size_t i = 0; i < len; ++i) d[i] += g[off + i];
          }
          off += len;
        }
      } else {
        const int rows = node.shape[0], cols = node.shape[1];
        int coff = 0;
        for (std::size_t s = 0; s < node.inputs.size(); ++s) {
          const int pc = input(static_cast<int>(s)).shape[1];
          if (wants(static_cast<int>(s))) {
            auto& d = gin(static_cast<int>(s));
            for (int r = 0; r < rows; ++r)
              for (int c = 0; c < pc; ++c)
                d[static_cast<std::size_t>(r) * pc + c] +=
                    g[static_cast<std::size_t>(r) * cols + coff + c];
          }
          coff += pc;
        }
      }
      return;
    }
    case OpKind::kSlice: {
      if (!wants(0)) return;
      auto& d = gin(0);
      const auto& s = input(0).shape;
      if (s.size() == 1) {
        for (int i = 0; i < at.len; ++i) d[static_cast<std::size_t>(at.start + i)] += g[i];
      } else if (s.size() == 2) {
        const int cols = s[1];
        if (at.axis == 0) {
          for (std::size_t i = 0; i < g.size(); ++i)
            d[static_cast<std::size_t>(at.start) * cols + i] += g[i];
        } else {
          for (int r = 0; r < s[0]; ++r)
            for (int c = 0; c < at.len; ++c)
              d[static_cast<std::size_t>(r) * cols + at.start + c] +=
                  g[static_cast<std::size_t>(r) * at.len + c];
        }
      } else {
        const std::size_t stride = static_cast<std::size_t>(s[1]) * s[2];
        for (std::size_t i = 0; i < g.size(); ++i) d[at.start * stride + i] += g[i];
      }
      return;
    }
    case OpKind::kStack: {
      const std::size_t cols = input(0).values.size();
      for (std::size_t r = 0; r < node.inputs.size(); ++r)
        if (wants(static_cast<int>(r))) {
          auto& d = gin(static_cast<int>(r));
          for (std::size_t c = 0; c < cols; ++c) d[c] += g[r * cols + c];
        }
      return;
    }
    case OpKind::kPadRows: {
      if (!wants(0)) return;
      auto& d = gin(0);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
      return;
    }
    case OpKind::kReshape: {
      if (!wants(0)) return;
      auto& d = gin(0);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      return;
    }
    case OpKind::kTanh: {
      if (!wants(0)) return;
      auto& d = gin(0);
      for (std::size_t i = 0; i < g.size(); ++i)
        d[i] += g[i] * (1.0 - node.values[i] * node.values[i]);
      return;
    }
    case OpKind::kRelu: {
      if (!wants(0)) return;
      auto& d = gin(0);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (input(0).values[i] > 0.0) d[i] += g[i];
      return;
    }
    case OpKind::kExp: {
      if (!wants(0)) return;
      auto& d = gin(0);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * node.values[i];
      return;
    }
    case OpKind::kLog: {
      if (!wants(0)) return;
      auto& d = gin(0);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] / input(0).values[i];
      return;
    }
    case OpKind::kSafeLog: {
      if (!wants(0)) return;
      auto& d = gin(0);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (input(0).values[i] >= at.floor) d[i] += g[i] / input(0).values[i];
      return;
    }
    case OpKind::kSoftmax: {
      if (!wants(0)) return;
      auto& d = gin(0);
      const auto& s = input(0).shape;
      const int groups = s.size() == 1 ? 1 : (at.axis == 1 ? s[0] : s[1]);
      const int len = s.size() == 1 ? s[0] : (at.axis == 1 ? s[1] : s[0]);
      const int stride = (s.size() == 2 && at.axis == 0) ? s[1] : 1;
      const int gstep = (s.size() == 2 && at.axis == 0) ? 1 : len;
      for (int grp = 0; grp < groups; ++grp) {
        const double* y = node.values.data() + static_cast<std::size_t>(grp) * gstep;
        const double* gy = g.data() + static_cast<std::size_t>(grp) * gstep;
        double dotv = 0.0;
        for (int i = 0; i < len; ++i) {
          const std::size_t idx = static_cast<std::size_t>(i) * stride;
          dotv += gy[idx] * y[idx];
        }
        double* dx = d.data() + static_cast<std::size_t>(grp) * gstep;
        for (int i = 0; i < len; ++i) {
          const std::size_t idx = static_cast<std::size_t>(i) * stride;
          dx[idx] += y[idx] * (gy[idx] - dotv);
        }
      }
      return;
    }
    case OpKind::kSum: {
      if (!wants(0)) return;
      auto& d = gin(0);
      for (auto& v : d) v += g[0];
      return;
    }
    case OpKind::kMean: {
      if (!wants(0)) return;
      auto& d = gin(0);
      const double s = g[0] / static_cast<double>(d.size());
      for (auto& v : d) v += s;
      return;
    }
    case OpKind::kSumAxis:
    case OpKind::kMeanAxis: {
      if (!wants(0)) return;
      auto& d = gin(0);
      const int rows = input(0).shape[0], cols = input(0).shape[1];
      const double div = node.op == OpKind::kMeanAxis ? (at.axis == 0 ? rows : cols) : 1.0;
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
          d[static_cast<std::size_t>(r) * cols + c] += g[at.axis == 0 ? c : r] / div;
      return;
    }
    case OpKind::kMaxAxis: {
      if (!wants(0)) return;
      auto& d = gin(0);
      const int rows = input(0).shape[0], cols = input(0).shape[1];
      // gradient routes to the first max along the reduced axis
      if (at.axis == 0) {
        for (int c = 0; c < cols; ++c) {
          int arg = 0;
          double mx = input(0).values[c];
          for (int r = 1; r < rows; ++r) {
            const double v = input(0).values[static_cast<std::size_t>(r) * cols + c];
            if (v > mx) {
              mx = v;
              arg = r;
            }
          }
          d[static_cast<std::size_t>(arg) * cols + c] += g[c];
        }
      } else {
        for (int r = 0; r < rows; ++r) {
          const double* row = input(0).values.data() + static_cast<std::size_t>(r) * cols;
          const int arg = static_cast<int>(std::max_element(row, row + cols) - row);
          d[static_cast<std::size_t>(r) * cols + arg] += g[r];
        }
      }
      return;
    }
    case OpKind::kConv1d: {
      const int len = input(0).shape[0], din = input(0).shape[1];
      const int dout = input(1).shape[1];
      const int k = at.kernel_width;
      const int pl = conv_pad_left(k, at.same_padding);
      const int olen = node.shape[0];
      for (int i = 0; i < olen; ++i)
        for (int co = 0; co < dout; ++co) {
          const double gv = g[static_cast<std::size_t>(i) * dout + co];
          if (gv == 0.0) continue;
          if (wants(2)) gin(2)[static_cast<std::size_t>(co)] += gv;
          for (int j = 0; j < k; ++j) {
            const int r = i - pl + j;
            if (r < 0 || r >= len) continue;
            for (int ci = 0; ci < din; ++ci) {
              const std::size_t widx = (static_cast<std::size_t>(j) * din + ci) * dout + co;
              if (wants(0))
                gin(0)[static_cast<std::size_t>(r) * din + ci] += gv * input(1).values[widx];
              if (wants(1))
                gin(1)[widx] += gv * input(0).values[static_cast<std::size_t>(r) * din + ci];
            }
          }
        }
      return;
    }
    case OpKind::kGatherRows: {
      if (!wants(0)) return;
      auto& d = gin(0);
      const int cols = input(0).shape[1];
      for (std::size_t r = 0; r < at.ids.size(); ++r)
        for (int c = 0; c < cols; ++c)
          d[static_cast<std::size_t>(at.ids[r]) * cols + c] += g[r * cols + c];
      return;
    }
    case OpKind::kRepeatRows: {
      if (!wants(0)) return;
      auto& d = gin(0);
      const std::size_t cols = d.size();
      for (int r = 0; r < at.count; ++r)
        for (std::size_t c = 0; c < cols; ++c) d[c] += g[static_cast<std::size_t>(r) * cols + c];
      return;
    }
    case OpKind::kLayerNormRows: {
      const int rows = input(0).shape[0], cols = input(0).shape[1];
      for (int r = 0; r < rows; ++r) {
        const double* x = input(0).values.data() + static_cast<std::size_t>(r) * cols;
        const double* gy = g.data() + static_cast<std::size_t>(r) * cols;
        double mu = 0.0;
        for (int c = 0; c < cols; ++c) mu += x[c];
        mu /= cols;
        double var = 0.0;
        for (int c = 0; c < cols; ++c) var += (x[c] - mu) * (x[c] - mu);
        var /= cols;
        const double inv = 1.0 / std::sqrt(var + at.eps);
        if (wants(1) || wants(0)) {
          // x_hat needed for both gamma and input grads
          double m1 = 0.0, m2 = 0.0;  // mean(gamma*gy), mean(gamma*gy*x_hat)
          for (int c = 0; c < cols; ++c) {
            const double xh = (x[c] - mu) * inv;
            const double gg = input(1).values[c] * gy[c];
            m1 += gg;
            m2 += gg * xh;
          }
          m1 /= cols;
          m2 /= cols;
          if (wants(0)) {
            auto& d = gin(0);
            for (int c = 0; c < cols; ++c) {
              const double xh = (x[c] - mu) * inv;
              const double gg = input(1).values[c] * gy[c];
              d[static_cast<std::size_t>(r) * cols + c] += (gg - m1 - xh * m2) * inv;
            }
          }
          if (wants(1)) {
            auto& d = gin(1);
            for (int c = 0; c < cols; ++c) d[c] += gy[c] * (x[c] - mu) * inv;
          }
        }
        if (wants(2)) {
          auto& d = gin(2);
          for (int c = 0; c < cols; ++c) d[c] += gy[c];
        }
      }
      return;
    }
    case OpKind::kDot: {
      for (int s = 0; s < 2; ++s)
        if (wants(s)) {
          auto& d = gin(s);
          const auto& other = input(1 - s).values;
          for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[0] * other[i];
        }
      return;
    }
    case OpKind::kL2Norm: {
      if (!wants(0)) return;
      const double nrm = node.values[0];
      if (nrm == 0.0) return;  // subgradient 0 at the origin
      auto& d = gin(0);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[0] * input(0).values[i] / nrm;
      return;
    }
    case OpKind::kCosine: {
      double sab = 0.0, saa = 0.0, sbb = 0.0;
      const auto& a = input(0).values;
      const auto& b = input(1).values;
      for (std::size_t i = 0; i < a.size(); ++i) {
        sab += a[i] * b[i];
        saa += a[i] * a[i];
        sbb += b[i] * b[i];
      }
      const double na = std::sqrt(saa), nb = std::sqrt(sbb);
      const double c = sab / (na * nb);
      if (wants(0)) {
        auto& d = gin(0);
        for (std::size_t i = 0; i < a.size(); ++i)
          d[i] += g[0] * (b[i] / (na * nb) - c * a[i] / saa);
      }
      if (wants(1)) {
        auto& d = gin(1);
        for (std::size_t i = 0; i < b.size(); ++i)
          d[i] += g[0] * (a[i] / (na * nb) - c * b[i] / sbb);
      }
      return;
    }
    case OpKind::kSqDist: {
      const auto& a = input(0).values;
      const auto& b = input(1).values;
      if (wants(0)) {
        auto& d = gin(0);
        for (std::size_t i = 0; i < a.size(); ++i) d[i] += g[0] * 2.0 * (a[i] - b[i]);
      }
      if (wants(1)) {
        auto& d = gin(1);
        for (std::size_t i = 0; i < a.size(); ++i) d[i] -= g[0] * 2.0 * (a[i] - b[i]);
      }
      return;
    }
    case OpKind::kEuclidean: {
      const double dist = node.values[0];
      if (dist == 0.0) return;  // subgradient 0 at coincident points
      const auto& a = input(0).values;
      const auto& b = input(1).values;
      if (wants(0)) {
        auto& d = gin(0);
        for (std::size_t i = 0; i < a.size(); ++i) d[i] += g[0] * (a[i] - b[i]) / dist;
      }
      if (wants(1)) {
        auto& d = gin(1);
        for (std::size_t i = 0; i < a.size(); ++i) d[i] -= g[0] * (a[i] - b[i]) / dist;
      }
      return;
    }
  }
}

}  // namespace

GradientMap Tape::backward(const Tensor& loss) const {
  if (loss.tape() != this) throw std::logic_error("backward: loss lives on another tape");
  const Shape& lshape = loss.shape();  // staleness check
  if (shape_size(lshape) != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(lshape));

  GradBuf grads(nodes_.size());
  grads[static_cast<std::size_t>(loss.id())] = {1.0};
  for (int id = loss.id(); id >= 0; --id) {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (!node.requires_grad) continue;
    if (grads[static_cast<std::size_t>(id)].empty()) continue;  // not reachable from loss
    backward_op(nodes_, id, grads);
  }

  GradientMap out;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const Node& node = nodes_[id];
    if (node.op != OpKind::kLeaf || !node.requires_grad) continue;
    auto& buf = grads[id];
    if (buf.empty()) buf.assign(node.values.size(), 0.0);
    out.set(static_cast<int>(id), std::move(buf));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Free-function sugar
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) { return apply(OpKind::kAdd, {a, b}); }
Tensor sub(const Tensor& a, const Tensor& b) { return apply(OpKind::kSub, {a, b}); }
Tensor mul(const Tensor& a, const Tensor& b) { return apply(OpKind::kMul, {a, b}); }

Tensor smul(const Tensor& a, double s) {
  Attrs at;
  at.scalar = s;
  return apply(OpKind::kScalarMul, {a}, at);
}

Tensor sadd(const Tensor& a, double s) {
  Attrs at;
  at.scalar = s;
  return apply(OpKind::kScalarAdd, {a}, at);
}

Tensor scale_by(const Tensor& a, const Tensor& scalar) {
  return apply(OpKind::kScaleByScalar, {a, scalar});
}

Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_a, bool transpose_b) {
  Attrs at;
  at.transpose_a = transpose_a;
  at.transpose_b = transpose_b;
  return apply(OpKind::kMatMul, {a, b}, at);
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  Attrs at;
  at.axis = axis;
  return apply(OpKind::kConcat, parts, at);
}

Tensor slice(const Tensor& a, int axis, int start, int len) {
  Attrs at;
  at.axis = axis;
  at.start = start;
  at.len = len;
  return apply(OpKind::kSlice, {a}, at);
}

Tensor stack(const std::vector<Tensor>& rows) { return apply(OpKind::kStack, rows); }

Tensor pad_rows(const Tensor& a, int total_rows) {
  Attrs at;
  at.count = total_rows;
  return apply(OpKind::kPadRows, {a}, at);
}

Tensor reshape(const Tensor& a, Shape new_shape) {
  Attrs at;
  at.new_shape = std::move(new_shape);
  return apply(OpKind::kReshape, {a}, at);
}

Tensor tanh(const Tensor& a) { return apply(OpKind::kTanh, {a}); }
Tensor relu(const Tensor& a) { return apply(OpKind::kRelu, {a}); }
Tensor exp(const Tensor& a) { return apply(OpKind::kExp, {a}); }
Tensor log(const Tensor& a) { return apply(OpKind::kLog, {a}); }

Tensor safe_log(const Tensor& a, double floor) {
  Attrs at;
  at.floor = floor;
  return apply(OpKind::kSafeLog, {a}, at);
}

Tensor softmax(const Tensor& a, int axis) {
  Attrs at;
  at.axis = axis;
  return apply(OpKind::kSoftmax, {a}, at);
}

Tensor sum(const Tensor& a) { return apply(OpKind::kSum, {a}); }
Tensor mean(const Tensor& a) { return apply(OpKind::kMean, {a}); }

Tensor sum_axis(const Tensor& a, int axis) {
  Attrs at;
  at.axis = axis;
  return apply(OpKind::kSumAxis, {a}, at);
}

Tensor mean_axis(const Tensor& a, int axis) {
  Attrs at;
  at.axis = axis;
  return apply(OpKind::kMeanAxis, {a}, at);
}

Tensor max_axis(const Tensor& a, int axis) {
  Attrs at;
  at.axis = axis;
  return apply(OpKind::kMaxAxis, {a}, at);
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int kernel_width,
              bool same_padding) {
  Attrs at;
  at.kernel_width = kernel_width;
  at.same_padding = same_padding;
  return apply(OpKind::kConv1d, {x, w, b}, at);
}

Tensor gather_rows(const Tensor& table, const std::vector<int>& ids) {
  Attrs at;
  at.ids = ids;
  return apply(OpKind::kGatherRows, {table}, at);
}

Tensor repeat_rows(const Tensor& v, int count) {
  Attrs at;
  at.count = count;
  return apply(OpKind::kRepeatRows, {v}, at);
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  Attrs at;
  at.eps = eps;
  return apply(OpKind::kLayerNormRows, {x, gamma, beta}, at);
}

Tensor dot(const Tensor& a, const Tensor& b) { return apply(OpKind::kDot, {a, b}); }
Tensor l2_norm(const Tensor& a) { return apply(OpKind::kL2Norm, {a}); }
Tensor cosine_sim(const Tensor& a, const Tensor& b) { return apply(OpKind::kCosine, {a, b}); }
Tensor squared_distance(const Tensor& a, const Tensor& b) {
  return apply(OpKind::kSqDist, {a, b});
}
Tensor euclidean_distance(const Tensor& a, const Tensor& b) {
  return apply(OpKind::kEuclidean, {a, b});
}

Tensor affine_vec(const Tensor& x, const Tensor& w, const Tensor& b) {
  // w is (out x in), x and b are vectors
  const int in = x.shape()[0];
  const int out = w.shape()[0];
  Tensor col = reshape(x, {in, 1});
  return add(reshape(matmul(w, col), {out}), b);
}

Tensor affine_rows(const Tensor& x, const Tensor& w, const Tensor& b) {
  // x is (n x in), w is (out x in), b broadcast over rows
  Tensor y = matmul(x, w, false, true);
  return add(y, repeat_rows(b, x.shape()[0]));
}

}  // namespace labelnet
