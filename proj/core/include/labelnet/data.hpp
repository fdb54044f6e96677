#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "labelnet/encoder.hpp"

namespace labelnet {

struct Vocab {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;

  std::vector<std::string> id_to_token;  // dense; reserved ids first

  int size() const { return static_cast<int>(id_to_token.size()); }
  int id_of(const std::string& token) const;  // kUnk when missing
};

// Lowercases and splits on whitespace/punctuation (non-alphanumeric runs).
std::vector<std::string> normalize_tokens(const std::string& text);

// Tokens with frequency >= min_freq, ids ordered by frequency descending
// then lexicographic after the four reserved ids.
Vocab build_vocab(const std::vector<std::string>& corpus, int min_freq = 1);

// [CLS] + tokens, truncated to n_max, padded with PAD.
TokenSequence tokenize(const std::string& text, const Vocab& vocab, int n_max);
// [CLS] + tokens1 + [SEP] + tokens2 for sentence pairs.
TokenSequence tokenize_pair(const std::string& text1, const std::string& text2,
                            const Vocab& vocab, int n_max);

// Inverse of tokenize for in-vocabulary text: drops reserved ids and maps
// the rest back to token strings.
std::vector<std::string> detokenize(const std::vector<int>& ids, const Vocab& vocab);

struct Example {
  std::string id;
  std::string text;
  std::string text2;  // empty unless the example is a sentence pair
  bool is_pair = false;
  int label = -1;
};

struct LabelSet {
  std::vector<std::string> names;
  // per label: descriptions concatenated across its words
  std::vector<std::vector<std::string>> descriptions;

  int size() const { return static_cast<int>(names.size()); }
  int index_of(const std::string& name) const;  // -1 when missing
};

struct Dataset {
  std::vector<Example> examples;
  LabelSet labels;
};

// JSON Lines loader; one {"text", "text2"?, "label"} object per line.
// Labels are indexed in first-appearance order.
Dataset load_dataset(const std::string& path);
// Same, with indices fixed by a previously loaded label set. Unknown
// dataset labels and file labels absent from the dataset are errors.
Dataset load_dataset(const std::string& path, const LabelSet& labels);

// Label-description JSON file; each word carries at most max_per_word
// descriptions (more is a load error).
LabelSet load_label_descriptions(const std::string& path, int max_per_word = 3);

struct PairRef {
  int a, b;    // positions within the batch
  int target;  // 1 iff same label
};

struct TripletRef {
  int anchor, positive, negative;  // positions within the batch
};

struct Batch {
  std::vector<int> example_idx;       // indices into the source example list
  std::vector<TokenSequence> tokens;  // N rows, padded to a common length
  std::vector<int> labels;
  std::vector<PairRef> pairs;        // N/2, every position in exactly one pair
  std::vector<TripletRef> triplets;  // up to N/3
  int skipped_triplets = 0;

  int size() const { return static_cast<int>(labels.size()); }
};

// Builds pair targets and in-batch triplets over the given examples.
// Pairs are consecutive elements of a seeded shuffle; anchors without an
// in-batch positive or negative are skipped and counted.
Batch make_batch(const std::vector<Example>& examples, const std::vector<int>& example_idx,
                 const Vocab& vocab, int n_max, std::mt19937_64& rng);

struct SynthSpec {
  int classes = 4;
  int vocab_size = 200;
  int per_class = 500;  // train examples per class; dev/test are per_class/4
  double overlap = 0.0;
  std::uint64_t seed = 1;
};

SynthSpec parse_synth_spec(const std::string& path);

// Writes train.jsonl, dev.jsonl, test.jsonl and labels.json under out_dir.
// Each class mixes signature keywords with shared filler tokens; overlap
// is the probability a signature slot draws from a random class instead.
void gen_synthetic(const SynthSpec& spec, const std::string& out_dir);

}  // namespace labelnet
