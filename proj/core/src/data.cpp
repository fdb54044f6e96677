#include "labelnet/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

namespace labelnet {

namespace {

using nlohmann::json;

std::unordered_map<std::string, int> token_index(const Vocab& v) {
  std::unordered_map<std::string, int> idx;
  for (int i = 0; i < v.size(); ++i) idx[v.id_to_token[static_cast<std::size_t>(i)]] = i;
  return idx;
}

}  // namespace

int Vocab::id_of(const std::string& token) const {
  // linear maps are rebuilt by hot paths; this accessor is for tests/tools
  for (int i = kSep + 1; i < size(); ++i)
    if (id_to_token[static_cast<std::size_t>(i)] == token) return i;
  return kUnk;
}

std::vector<std::string> normalize_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocab build_vocab(const std::vector<std::string>& corpus, int min_freq) {
  if (corpus.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  if (min_freq < 1) throw std::invalid_argument("build_vocab: min_freq must be >= 1");
  std::map<std::string, std::int64_t> freq;  // ordered for the lexicographic tie-break
  for (const auto& text : corpus)
    for (auto& tok : normalize_tokens(text)) ++freq[tok];

  std::vector<std::pair<std::string, std::int64_t>> kept;
  for (const auto& [tok, n] : freq)
    if (n >= min_freq) kept.emplace_back(tok, n);
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocab v;
  v.id_to_token = {"<pad>", "<unk>", "<cls>", "<sep>"};
  for (auto& [tok, n] : kept) v.id_to_token.push_back(tok);
  return v;
}

namespace {

TokenSequence finish_sequence(std::vector<int> ids, int n_max) {
  if (static_cast<int>(ids.size()) > n_max) ids.resize(static_cast<std::size_t>(n_max));
  TokenSequence seq;
  seq.real_len = static_cast<int>(ids.size());
  ids.resize(static_cast<std::size_t>(n_max), Vocab::kPad);
  seq.ids = std::move(ids);
  return seq;
}

}  // namespace

TokenSequence tokenize(const std::string& text, const Vocab& vocab, int n_max) {
  if (n_max < 3) throw std::invalid_argument("tokenize: n_max must be >= 3");
  auto idx = token_index(vocab);
  std::vector<int> ids{Vocab::kCls};
  for (const auto& tok : normalize_tokens(text)) {
    auto it = idx.find(tok);
    ids.push_back(it == idx.end() ? Vocab::kUnk : it->second);
  }
  return finish_sequence(std::move(ids), n_max);
}

TokenSequence tokenize_pair(const std::string& text1, const std::string& text2,
                            const Vocab& vocab, int n_max) {
  if (n_max < 3) throw std::invalid_argument("tokenize: n_max must be >= 3");
  auto idx = token_index(vocab);
  std::vector<int> ids{Vocab::kCls};
  for (const auto& tok : normalize_tokens(text1)) {
    auto it = idx.find(tok);
    ids.push_back(it == idx.end() ? Vocab::kUnk : it->second);
  }
  ids.push_back(Vocab::kSep);
  for (const auto& tok : normalize_tokens(text2)) {
    auto it = idx.find(tok);
    ids.push_back(it == idx.end() ? Vocab::kUnk : it->second);
  }
  return finish_sequence(std::move(ids), n_max);
}

std::vector<std::string> detokenize(const std::vector<int>& ids, const Vocab& vocab) {
  std::vector<std::string> out;
  for (int id : ids) {
    if (id <= Vocab::kSep) continue;
    if (id >= vocab.size())
      throw std::invalid_argument("detokenize: id " + std::to_string(id) + " out of range");
    out.push_back(vocab.id_to_token[static_cast<std::size_t>(id)]);
  }
  return out;
}

int LabelSet::index_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (names[static_cast<std::size_t>(i)] == name) return i;
  return -1;
}

namespace {

Dataset load_dataset_impl(const std::string& path, const LabelSet* fixed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  Dataset ds;
  if (fixed) ds.labels = *fixed;
  std::vector<bool> seen(fixed ? static_cast<std::size_t>(fixed->size()) : 0, false);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("load_dataset: " + path + " line " + std::to_string(lineno) +
                               ": " + e.what());
    }
    if (!obj.contains("text") || !obj["text"].is_string())
      throw std::runtime_error("load_dataset: " + path + " line " + std::to_string(lineno) +
                               ": missing \"text\"");
    if (!obj.contains("label") || !obj["label"].is_string())
      throw std::runtime_error("load_dataset: " + path + " line " + std::to_string(lineno) +
                               ": missing \"label\"");
    Example ex;
    ex.text = obj["text"].get<std::string>();
    if (obj.contains("text2")) {
      ex.text2 = obj["text2"].get<std::string>();
      ex.is_pair = true;
    }
    ex.id = obj.contains("id") ? obj["id"].get<std::string>()
                               : "line-" + std::to_string(lineno);
    const std::string name = obj["label"].get<std::string>();
    int li = ds.labels.index_of(name);
    if (li < 0) {
      if (fixed)
        throw std::runtime_error("load_dataset: " + path + " line " + std::to_string(lineno) +
                                 ": unknown label \"" + name + "\"");
      li = ds.labels.size();
      ds.labels.names.push_back(name);
      ds.labels.descriptions.emplace_back();
    } else if (fixed) {
      seen[static_cast<std::size_t>(li)] = true;
    }
    ex.label = li;
    ds.examples.push_back(std::move(ex));
  }
  if (ds.examples.empty()) throw std::runtime_error("load_dataset: " + path + " is empty");
  if (fixed)
    for (int i = 0; i < fixed->size(); ++i)
      if (!seen[static_cast<std::size_t>(i)])
        throw std::runtime_error("load_dataset: label \"" +
                                 fixed->names[static_cast<std::size_t>(i)] +
                                 "\" from the label file never appears in " + path);
  return ds;
}

}  // namespace

Dataset load_dataset(const std::string& path) { return load_dataset_impl(path, nullptr); }

Dataset load_dataset(const std::string& path, const LabelSet& labels) {
  return load_dataset_impl(path, &labels);
}

LabelSet load_label_descriptions(const std::string& path, int max_per_word) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_label_descriptions: cannot open " + path);
  json root;
  try {
    in >> root;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("load_label_descriptions: " + path + ": " + e.what());
  }
  if (!root.is_array())
    throw std::runtime_error("load_label_descriptions: top level must be an array");
  LabelSet ls;
  for (const auto& entry : root) {
    if (!entry.contains("label") || !entry["label"].is_string())
      throw std::runtime_error("load_label_descriptions: entry missing \"label\"");
    const std::string name = entry["label"].get<std::string>();
    if (ls.index_of(name) >= 0)
      throw std::runtime_error("load_label_descriptions: duplicate label \"" + name + "\"");
    std::vector<std::string> descs;
    if (entry.contains("words")) {
      for (const auto& w : entry["words"]) {
        const std::string word =
            w.contains("word") ? w["word"].get<std::string>() : std::string("?");
        const auto& list = w.at("descriptions");
        if (static_cast<int>(list.size()) > max_per_word)
          throw std::runtime_error("load_label_descriptions: word \"" + word + "\" of label \"" +
                                   name + "\" has " + std::to_string(list.size()) +
                                   " descriptions, cap is " + std::to_string(max_per_word));
        for (const auto& d : list) descs.push_back(d.get<std::string>());
      }
    }
    ls.names.push_back(name);
    ls.descriptions.push_back(std::move(descs));
  }
  return ls;
}

Batch make_batch(const std::vector<Example>& examples, const std::vector<int>& example_idx,
                 const Vocab& vocab, int n_max, std::mt19937_64& rng) {
  const int n = static_cast<int>(example_idx.size());
  if (n == 0) throw std::invalid_argument("make_batch: empty batch");
  if (n % 2 != 0)
    throw std::invalid_argument("make_batch: batch size " + std::to_string(n) +
                                " is odd, pairing needs an even count");

  // seeded shuffle of batch positions; pairs are consecutive elements
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i)
    std::swap(order[static_cast<std::size_t>(i)],
              order[static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(i + 1))]);

  Batch batch;
  batch.example_idx = example_idx;
  for (int idx : example_idx) {
    const Example& ex = examples.at(static_cast<std::size_t>(idx));
    batch.tokens.push_back(ex.is_pair ? tokenize_pair(ex.text, ex.text2, vocab, n_max)
                                      : tokenize(ex.text, vocab, n_max));
    batch.labels.push_back(ex.label);
  }

  for (int j = 0; j + 1 < n; j += 2) {
    const int a = order[static_cast<std::size_t>(j)];
    const int b = order[static_cast<std::size_t>(j + 1)];
    batch.pairs.push_back({a, b, batch.labels[static_cast<std::size_t>(a)] ==
                                         batch.labels[static_cast<std::size_t>(b)]
                                     ? 1
                                     : 0});
  }

  const int want = n / 3;
  for (int t = 0; t < want; ++t) {
    const int anchor = order[static_cast<std::size_t>(t)];
    const int alabel = batch.labels[static_cast<std::size_t>(anchor)];
    std::vector<int> pos, neg;
    for (int i = 0; i < n; ++i) {
      if (i == anchor) continue;
      (batch.labels[static_cast<std::size_t>(i)] == alabel ? pos : neg).push_back(i);
    }
    if (pos.empty() || neg.empty()) {
      ++batch.skipped_triplets;
      continue;
    }
    const int p = pos[static_cast<std::size_t>(rng() % pos.size())];
    const int ng = neg[static_cast<std::size_t>(rng() % neg.size())];
    batch.triplets.push_back({anchor, p, ng});
  }
  return batch;
}

}  // namespace labelnet
