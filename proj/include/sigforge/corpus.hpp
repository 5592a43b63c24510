#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sigforge::corpus {

/// One behavior-log sample. An empty label means "unlabeled".
struct Document {
    std::string sample_id;
    std::string text;
    std::string label;
};

struct DictEntry {
    std::string unigram;
    size_t doc_frequency = 0;
};

/// Ordered top-N unigrams; the entry order defines the bit-vector coordinates.
/// Immutable after construction.
class Dictionary {
public:
    Dictionary() = default;
    explicit Dictionary(std::vector<DictEntry> entries);

    size_t size() const { return entries_.size(); }
    const std::vector<DictEntry>& entries() const { return entries_; }
    const DictEntry& entry(size_t i) const { return entries_[i]; }

    /// Position of a unigram, or nullopt if absent.
    std::optional<size_t> index_of(std::string_view unigram) const;

private:
    std::vector<DictEntry> entries_;
    std::unordered_map<std::string_view, size_t> index_;  // views into entries_
};

/// Fixed-width presence vector: bit i set iff dictionary unigram i occurs.
struct FeatureVector {
    std::string sample_id;
    std::vector<uint8_t> bits;
    std::string label;
};

struct CorpusSpec {
    size_t n_families = 6;
    size_t variants_per_family = 300;
    size_t base_tokens_per_family = 120;
    size_t shared_token_pool = 300;
    double perturbation_rate = 0.1;
    uint64_t seed = 0;

    void validate() const;  // throws InvalidSpec
};

struct SplitSpec {
    size_t train_per_class = 200;
    size_t test_per_class = 100;
    uint64_t seed = 0;
};

/// Replaces invalid UTF-8 byte sequences with U+FFFD.
std::string sanitize_utf8(std::string_view bytes);

/// Maximal runs of bytes delimited by space, tab, CR or LF, deduplicated.
/// No normalization of any kind: markup and punctuation stay verbatim.
std::set<std::string> tokenize(std::string_view text);

/// Document-frequency dictionary: unigrams present in every document are
/// dropped, the rest sorted by (df desc, unigram asc) and cut at top_n.
Dictionary build_dictionary(const std::vector<Document>& docs, size_t top_n);

FeatureVector encode(const Document& doc, const Dictionary& dict);

/// Deterministic labeled corpus that mimics sandbox-style key/value logs.
/// Families share a slice of a common token pool; each variant perturbs its
/// family base independently (delete or substitute, probability
/// perturbation_rate per token) and appends fresh noise tokens.
std::vector<Document> generate_synthetic_corpus(const CorpusSpec& spec);

struct SplitIndices {
    std::vector<size_t> train;
    std::vector<size_t> test;
};

/// Per-class seeded selection over positions. The same labels + spec always
/// produce the same membership, whatever the payload type is.
SplitIndices split_indices(const std::vector<std::string>& labels, const SplitSpec& spec);

std::pair<std::vector<FeatureVector>, std::vector<FeatureVector>> split_dataset(
    const std::vector<FeatureVector>& vectors, const SplitSpec& spec);

// --- file formats ---

void write_dictionary(const std::filesystem::path& path, const Dictionary& dict);
Dictionary read_dictionary(const std::filesystem::path& path);

void write_features(const std::filesystem::path& path, const std::vector<FeatureVector>& vecs);
std::vector<FeatureVector> read_features(const std::filesystem::path& path, size_t width);

void write_labels(const std::filesystem::path& path, const std::vector<Document>& docs);

/// Loads `<label>_<index>.log` files (sorted by filename) plus the labels file.
std::vector<Document> load_corpus_dir(const std::filesystem::path& dir);

}  // namespace sigforge::corpus
