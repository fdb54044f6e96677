#include "labelnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace labelnet {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts are unsupported");

namespace {

constexpr char kMagic[4] = {'L', 'N', 'C', 'P'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_str(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

std::string read_str(std::istream& is) {
  const std::uint64_t n = read_u64(is);
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return s;
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot write " + path);
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  write_str(os, config_to_text(model.cfg));

  write_u64(os, static_cast<std::uint64_t>(model.vocab.size()));
  for (const auto& tok : model.vocab.id_to_token) write_str(os, tok);

  write_u64(os, static_cast<std::uint64_t>(model.labels.size()));
  for (int i = 0; i < model.labels.size(); ++i) {
    write_str(os, model.labels.names[static_cast<std::size_t>(i)]);
    const auto& descs = model.labels.descriptions[static_cast<std::size_t>(i)];
    write_u64(os, descs.size());
    for (const auto& d : descs) write_str(os, d);
  }

  write_u64(os, model.params.size());
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const Param& p = model.params.at(static_cast<int>(i));
    write_str(os, p.name);
    os.put(p.group == ParamGroup::kEncoder ? 0 : 1);
    os.put(static_cast<char>(p.shape.size()));
    for (int d : p.shape) write_u32(os, static_cast<std::uint32_t>(d));
    os.write(reinterpret_cast<const char*>(p.value.data()),
             static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failure on " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: " + path + " is not a checkpoint file");
  const std::uint32_t version = read_u32(is);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

  TrainConfig cfg = parse_config_text(read_str(is));

  Vocab vocab;
  const std::uint64_t vsize = read_u64(is);
  vocab.id_to_token.reserve(vsize);
  for (std::uint64_t i = 0; i < vsize; ++i) vocab.id_to_token.push_back(read_str(is));

  LabelSet labels;
  const std::uint64_t m = read_u64(is);
  for (std::uint64_t i = 0; i < m; ++i) {
    labels.names.push_back(read_str(is));
    const std::uint64_t nd = read_u64(is);
    std::vector<std::string> descs;
    for (std::uint64_t j = 0; j < nd; ++j) descs.push_back(read_str(is));
    labels.descriptions.push_back(std::move(descs));
  }

  Model model = build_model(cfg, std::move(vocab), std::move(labels));

  const std::uint64_t pcount = read_u64(is);
  if (pcount != model.params.size())
    throw std::runtime_error("checkpoint: parameter count mismatch (file " +
                             std::to_string(pcount) + ", model " +
                             std::to_string(model.params.size()) + ")");
  for (std::uint64_t i = 0; i < pcount; ++i) {
    Param& p = model.params.at(static_cast<int>(i));
    const std::string name = read_str(is);
    if (name != p.name)
      throw std::runtime_error("checkpoint: parameter \"" + name + "\" where \"" + p.name +
                               "\" was expected");
    const int group = is.get();
    const int rank = is.get();
    if (rank != static_cast<int>(p.shape.size()))
      throw std::runtime_error("checkpoint: rank mismatch for " + name);
    Shape shape(static_cast<std::size_t>(rank));
    for (auto& d : shape) d = static_cast<int>(read_u32(is));
    if (shape != p.shape)
      throw std::runtime_error("checkpoint: shape mismatch for " + name + ": file " +
                               shape_str(shape) + ", model " + shape_str(p.shape));
    p.group = group == 0 ? ParamGroup::kEncoder : ParamGroup::kHead;
    is.read(reinterpret_cast<char*>(p.value.data()),
            static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated parameter data for " + name);
  }
  return model;
}

}  // namespace labelnet
