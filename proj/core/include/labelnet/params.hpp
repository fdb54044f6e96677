#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "labelnet/tensor.hpp"

namespace labelnet {

// Optimizer group: encoder parameters take lr1 with decoupled weight
// decay, head parameters take lr2 without it.
enum class ParamGroup { kEncoder, kHead };

struct Param {
  std::string name;
  Shape shape;
  std::vector<double> value;
  ParamGroup group = ParamGroup::kHead;
};

// Uniform double in [0,1) from raw engine output; avoids the
// implementation-defined std distributions so runs are reproducible.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

inline double uniform_sym(std::mt19937_64& rng, double bound) {
  return (2.0 * uniform01(rng) - 1.0) * bound;
}

class ParamStore {
 public:
  int add(std::string name, Shape shape, std::vector<double> value, ParamGroup group);
  int add_uniform(std::string name, Shape shape, double bound, ParamGroup group,
                  std::mt19937_64& rng);
  int add_zeros(std::string name, Shape shape, ParamGroup group);
  int add_const(std::string name, Shape shape, double v, ParamGroup group);

  Param& at(int id) { return params_.at(static_cast<std::size_t>(id)); }
  const Param& at(int id) const { return params_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return params_.size(); }
  std::size_t value_count() const;

 private:
  std::vector<Param> params_;
};

// Parameter leaves for one forward/backward pass, indexed by param id.
using Binding = std::vector<Tensor>;

Binding bind_all(Tape& tape, const ParamStore& store, bool requires_grad = true);

}  // namespace labelnet
