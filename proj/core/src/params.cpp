#include "labelnet/params.hpp"

#include <stdexcept>

namespace labelnet {

int ParamStore::add(std::string name, Shape shape, std::vector<double> value,
                    ParamGroup group) {
  if (shape_size(shape) != value.size())
    throw std::invalid_argument("param " + name + ": shape/value size mismatch");
  params_.push_back(Param{std::move(name), std::move(shape), std::move(value), group});
  return static_cast<int>(params_.size()) - 1;
}

int ParamStore::add_uniform(std::string name, Shape shape, double bound, ParamGroup group,
                            std::mt19937_64& rng) {
  std::vector<double> v(shape_size(shape));
  for (auto& x : v) x = uniform_sym(rng, bound);
  return add(std::move(name), std::move(shape), std::move(v), group);
}

int ParamStore::add_zeros(std::string name, Shape shape, ParamGroup group) {
  std::vector<double> v(shape_size(shape), 0.0);
  return add(std::move(name), std::move(shape), std::move(v), group);
}

int ParamStore::add_const(std::string name, Shape shape, double c, ParamGroup group) {
  std::vector<double> v(shape_size(shape), c);
  return add(std::move(name), std::move(shape), std::move(v), group);
}

std::size_t ParamStore::value_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

Binding bind_all(Tape& tape, const ParamStore& store, bool requires_grad) {
  Binding b;
  b.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Param& p = store.at(static_cast<int>(i));
    b.push_back(tape.leaf(p.shape, p.value, requires_grad));
  }
  return b;
}

}  // namespace labelnet
