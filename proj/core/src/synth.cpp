#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "labelnet/data.hpp"
#include "labelnet/params.hpp"

namespace labelnet {

namespace {

using nlohmann::json;

const char* kLabelWords[] = {"alpha",   "bravo", "charlie", "delta", "echo",
                             "foxtrot", "golf",  "hotel",   "india", "juliett"};

std::string label_name(int c) {
  if (c < 10) return kLabelWords[c];
  return "label" + std::to_string(c);
}

std::string keyword(int c, int j) {
  return "sig" + std::to_string(c) + static_cast<char>('a' + j);
}

constexpr int kKeywordsPerClass = 3;
constexpr int kSigSlots = 3;

std::string make_sentence(const SynthSpec& spec, int cls, std::mt19937_64& rng) {
  const int len = 8 + static_cast<int>(rng() % 5);  // 8..12 tokens
  std::vector<std::string> toks;
  toks.reserve(static_cast<std::size_t>(len));
  const int fillers = spec.vocab_size - spec.classes * kKeywordsPerClass;
  for (int i = 0; i < kSigSlots; ++i) {
    int src = cls;
    if (uniform01(rng) < spec.overlap) src = static_cast<int>(rng() % spec.classes);
    toks.push_back(keyword(src, static_cast<int>(rng() % kKeywordsPerClass)));
  }
  for (int i = kSigSlots; i < len; ++i)
    toks.push_back("tok" + std::to_string(rng() % static_cast<std::uint64_t>(fillers)));
  for (int i = len - 1; i > 0; --i)
    std::swap(toks[static_cast<std::size_t>(i)],
              toks[static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(i + 1))]);
  std::ostringstream os;
  for (int i = 0; i < len; ++i) os << (i ? " " : "") << toks[static_cast<std::size_t>(i)];
  return os.str();
}

void write_split(const SynthSpec& spec, const std::string& path, const std::string& tag,
                 int per_class, std::mt19937_64& rng) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("gen_synthetic: cannot write " + path);
  int serial = 0;
  // round-robin over classes keeps first-appearance label order stable
  for (int k = 0; k < per_class; ++k)
    for (int c = 0; c < spec.classes; ++c) {
      json obj;
      obj["id"] = tag + "-" + std::to_string(serial++);
      obj["label"] = label_name(c);
      obj["text"] = make_sentence(spec, c, rng);
      out << obj.dump() << "\n";
    }
}

}  // namespace

SynthSpec parse_synth_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_synth_spec: cannot open " + path);
  SynthSpec spec;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw std::runtime_error("parse_synth_spec: line " + std::to_string(lineno) +
                                 " is not key=value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "classes")
        spec.classes = std::stoi(val);
      else if (key == "vocab_size")
        spec.vocab_size = std::stoi(val);
      else if (key == "per_class")
        spec.per_class = std::stoi(val);
      else if (key == "overlap")
        spec.overlap = std::stod(val);
      else if (key == "seed")
        spec.seed = std::stoull(val);
      else
        throw std::runtime_error("parse_synth_spec: unknown key \"" + key + "\"");
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("parse_synth_spec: bad value for \"" + key + "\"");
    }
  }
  return spec;
}

void gen_synthetic(const SynthSpec& spec, const std::string& out_dir) {
  if (spec.classes < 2) throw std::invalid_argument("gen_synthetic: need >= 2 classes");
  if (spec.per_class < 1) throw std::invalid_argument("gen_synthetic: per_class must be >= 1");
  if (spec.overlap < 0.0 || spec.overlap > 1.0)
    throw std::invalid_argument("gen_synthetic: overlap must lie in [0,1]");
  if (spec.vocab_size <= spec.classes * kKeywordsPerClass + 8)
    throw std::invalid_argument("gen_synthetic: vocab_size too small for " +
                                std::to_string(spec.classes) + " classes");

  std::filesystem::create_directories(out_dir);
  std::mt19937_64 rng(spec.seed);
  const int eval_per_class = std::max(1, spec.per_class / 4);
  write_split(spec, out_dir + "/train.jsonl", "train", spec.per_class, rng);
  write_split(spec, out_dir + "/dev.jsonl", "dev", eval_per_class, rng);
  write_split(spec, out_dir + "/test.jsonl", "test", eval_per_class, rng);

  // per-class gloss sentences built from the class's signature keywords,
  // mirroring hand-picked dictionary descriptions
  json labels = json::array();
  for (int c = 0; c < spec.classes; ++c) {
    json words = json::array();
    json descs = json::array();
    descs.push_back(keyword(c, 0) + " " + keyword(c, 1) + " " + keyword(c, 2));
    descs.push_back("topics such as " + keyword(c, 0) + " and " + keyword(c, 2));
    words.push_back(json{{"word", label_name(c)}, {"descriptions", descs}});
    labels.push_back(json{{"label", label_name(c)}, {"words", words}});
  }
  std::ofstream lf(out_dir + "/labels.json");
  if (!lf) throw std::runtime_error("gen_synthetic: cannot write labels.json");
  lf << labels.dump(2) << "\n";
}

}  // namespace labelnet
