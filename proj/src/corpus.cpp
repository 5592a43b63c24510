#include "sigforge/corpus.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "sigforge/errors.hpp"
#include "sigforge/rng.hpp"
#include "sigforge/util.hpp"

namespace sigforge::corpus {

Dictionary::Dictionary(std::vector<DictEntry> entries) : entries_(std::move(entries)) {
    index_.reserve(entries_.size());
    for (size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].unigram, i);
}

std::optional<size_t> Dictionary::index_of(std::string_view unigram) const {
    auto it = index_.find(unigram);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void CorpusSpec::validate() const {
    if (n_families < 1 || variants_per_family < 1 || base_tokens_per_family < 1 ||
        shared_token_pool < 1)
        throw InvalidSpec("corpus spec: all counts must be >= 1");
    if (!(perturbation_rate >= 0.0 && perturbation_rate <= 1.0))
        throw InvalidSpec("corpus spec: perturbation_rate must be in [0,1]");
}

std::string sanitize_utf8(std::string_view bytes) {
    static const std::string kReplacement = "\xEF\xBF\xBD";  // U+FFFD
    std::string out;
    out.reserve(bytes.size());
    size_t i = 0;
    const size_t n = bytes.size();
    auto cont = [&](size_t k) {
        return i + k < n && (static_cast<unsigned char>(bytes[i + k]) & 0xC0) == 0x80;
    };
    while (i < n) {
        const unsigned char c = static_cast<unsigned char>(bytes[i]);
        size_t len = 0;
        if (c < 0x80) {
            len = 1;
        } else if ((c & 0xE0) == 0xC0 && c >= 0xC2 && cont(1)) {
            len = 2;
        } else if ((c & 0xF0) == 0xE0 && cont(1) && cont(2)) {
            const unsigned char c1 = static_cast<unsigned char>(bytes[i + 1]);
            const bool overlong = c == 0xE0 && c1 < 0xA0;
            const bool surrogate = c == 0xED && c1 >= 0xA0;
            if (!overlong && !surrogate) len = 3;
        } else if ((c & 0xF8) == 0xF0 && c <= 0xF4 && cont(1) && cont(2) && cont(3)) {
            const unsigned char c1 = static_cast<unsigned char>(bytes[i + 1]);
            const bool overlong = c == 0xF0 && c1 < 0x90;
            const bool too_big = c == 0xF4 && c1 >= 0x90;
            if (!overlong && !too_big) len = 4;
        }
        if (len == 0) {
            out += kReplacement;
            ++i;
        } else {
            out.append(bytes.substr(i, len));
            i += len;
        }
    }
    return out;
}

std::set<std::string> tokenize(std::string_view text) {
    std::set<std::string> tokens;
    size_t start = std::string_view::npos;
    auto is_sep = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    for (size_t i = 0; i <= text.size(); ++i) {
        const bool sep = i == text.size() || is_sep(text[i]);
        if (!sep && start == std::string_view::npos) start = i;
        if (sep && start != std::string_view::npos) {
            tokens.emplace(text.substr(start, i - start));
            start = std::string_view::npos;
        }
    }
    return tokens;
}

Dictionary build_dictionary(const std::vector<Document>& docs, size_t top_n) {
    if (docs.empty()) throw EmptyCorpus("build_dictionary: corpus has zero documents");

    // Token extraction can run per document; the merge below is a single
    // ordered pass so worker count never changes the result.
    std::vector<std::set<std::string>> per_doc(docs.size());
#pragma omp parallel for schedule(dynamic)
    for (int64_t i = 0; i < static_cast<int64_t>(docs.size()); ++i)
        per_doc[static_cast<size_t>(i)] = tokenize(docs[static_cast<size_t>(i)].text);

    std::map<std::string, size_t> df;
    for (const auto& tokens : per_doc)
        for (const auto& t : tokens) ++df[t];

    std::vector<DictEntry> entries;
    entries.reserve(df.size());
    for (auto& [unigram, count] : df)
        if (count < docs.size()) entries.push_back({unigram, count});

    // Map order already gives ascending unigram; a stable sort on df keeps
    // that as the tie order.
    std::stable_sort(entries.begin(), entries.end(),
                     [](const DictEntry& a, const DictEntry& b) {
                         return a.doc_frequency > b.doc_frequency;
                     });
    if (entries.size() > top_n) entries.resize(top_n);
    return Dictionary(std::move(entries));
}

FeatureVector encode(const Document& doc, const Dictionary& dict) {
    FeatureVector fv;
    fv.sample_id = doc.sample_id;
    fv.label = doc.label;
    fv.bits.assign(dict.size(), 0);
    for (const auto& token : tokenize(doc.text))
        if (auto idx = dict.index_of(token)) fv.bits[*idx] = 1;
    return fv;
}

namespace {

// Stable key choice per token keeps the rendered line, and therefore the
// extracted unigram, identical across every document that carries the token.
const char* kLogKeys[] = {"api", "file", "regkey", "mutex", "host", "port"};

std::string render_log(const std::vector<std::string>& tokens) {
    std::string out = "{\n  \"run\": {\n";
    for (const auto& t : tokens) {
        const char* key = kLogKeys[util::fnv1a64(t) % (sizeof(kLogKeys) / sizeof(kLogKeys[0]))];
        out += "    \"";
        out += key;
        out += "\": \"";
        out += t;
        out += "\",\n";
    }
    out += "  }\n}\n";
    return out;
}

std::string fresh_token(const char* prefix, Rng& rng) {
    return std::string(prefix) + util::to_hex(rng.next_u64(), 12);
}

size_t zero_pad_width(size_t max_value) {
    size_t w = 1;
    while (max_value >= 10) {
        max_value /= 10;
        ++w;
    }
    return w < 3 ? 3 : w;
}

}  // namespace

std::vector<Document> generate_synthetic_corpus(const CorpusSpec& spec) {
    spec.validate();

    Rng pool_rng = Rng::stream(spec.seed, streams::kGenShared);
    std::vector<std::string> pool(spec.shared_token_pool);
    for (size_t i = 0; i < pool.size(); ++i)
        pool[i] = "s" + std::to_string(i) + "_" + util::to_hex(pool_rng.next_u64(), 12);

    const size_t pad = zero_pad_width(spec.variants_per_family - 1);
    std::vector<Document> docs;
    docs.reserve(spec.n_families * spec.variants_per_family);

    for (size_t f = 0; f < spec.n_families; ++f) {
        Rng fam_rng = Rng::stream(spec.seed, streams::kGenFamilyBase + f);

        // A quarter of the family base comes from the shared pool; the rest
        // is unique to the family.
        const size_t n_shared = std::min(spec.base_tokens_per_family / 4, pool.size());
        std::vector<size_t> pool_idx = fam_rng.permutation(pool.size());
        std::vector<std::string> base;
        base.reserve(spec.base_tokens_per_family);
        for (size_t i = 0; i < n_shared; ++i) base.push_back(pool[pool_idx[i]]);
        for (size_t i = n_shared; i < spec.base_tokens_per_family; ++i)
            base.push_back("t" + std::to_string(f) + "_" + std::to_string(i) + "_" +
                           util::to_hex(fam_rng.next_u64(), 8));

        const std::string label = "fam" + std::to_string(f);
        for (size_t v = 0; v < spec.variants_per_family; ++v) {
            Rng var_rng =
                Rng::stream(spec.seed, streams::kGenVariantBase + f * 1000003ULL + v);
            std::vector<std::string> tokens;
            tokens.reserve(base.size() + base.size() / 8 + 1);
            for (const auto& t : base) {
                if (var_rng.uniform() < spec.perturbation_rate) {
                    if (var_rng.below(2) == 1) tokens.push_back(fresh_token("n", var_rng));
                    // else: token deleted
                } else {
                    tokens.push_back(t);
                }
            }
            for (size_t i = 0; i < base.size(); ++i)
                if (var_rng.uniform() < spec.perturbation_rate * 0.5)
                    tokens.push_back(fresh_token("n", var_rng));

            std::string idx = std::to_string(v);
            idx.insert(0, pad > idx.size() ? pad - idx.size() : 0, '0');
            Document doc;
            doc.sample_id = label + "_" + idx;
            doc.label = label;
            doc.text = render_log(tokens);
            docs.push_back(std::move(doc));
        }
    }
    return docs;
}

SplitIndices split_indices(const std::vector<std::string>& labels, const SplitSpec& spec) {
    std::map<std::string, std::vector<size_t>> by_class;
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i].empty())
            throw InvalidSpec("split: sample at position " + std::to_string(i) + " is unlabeled");
        by_class[labels[i]].push_back(i);
    }

    SplitIndices out;
    size_t class_rank = 0;
    for (auto& [name, positions] : by_class) {
        const size_t need = spec.train_per_class + spec.test_per_class;
        if (positions.size() < need)
            throw InsufficientSamples("split: class '" + name + "' has " +
                                      std::to_string(positions.size()) + " samples, needs " +
                                      std::to_string(need));
        Rng rng = Rng::stream(spec.seed, streams::kSplitClassBase + class_rank);
        rng.shuffle(positions);
        out.train.insert(out.train.end(), positions.begin(),
                         positions.begin() + static_cast<ptrdiff_t>(spec.train_per_class));
        out.test.insert(out.test.end(),
                        positions.begin() + static_cast<ptrdiff_t>(spec.train_per_class),
                        positions.begin() + static_cast<ptrdiff_t>(need));
        ++class_rank;
    }
    return out;
}

std::pair<std::vector<FeatureVector>, std::vector<FeatureVector>> split_dataset(
    const std::vector<FeatureVector>& vectors, const SplitSpec& spec) {
    std::vector<std::string> labels(vectors.size());
    for (size_t i = 0; i < vectors.size(); ++i) labels[i] = vectors[i].label;
    const SplitIndices idx = split_indices(labels, spec);

    std::pair<std::vector<FeatureVector>, std::vector<FeatureVector>> out;
    out.first.reserve(idx.train.size());
    out.second.reserve(idx.test.size());
    for (size_t i : idx.train) out.first.push_back(vectors[i]);
    for (size_t i : idx.test) out.second.push_back(vectors[i]);
    return out;
}

// --- file formats ---

void write_dictionary(const std::filesystem::path& path, const Dictionary& dict) {
    std::string out = "sigforge-dict v1 " + std::to_string(dict.size()) + "\n";
    for (const auto& e : dict.entries()) {
        out += e.unigram;
        out += '\t';
        out += std::to_string(e.doc_frequency);
        out += '\n';
    }
    util::write_file_atomic(path, out);
}

Dictionary read_dictionary(const std::filesystem::path& path) {
    const std::string content = util::read_text_file(path);
    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("dictionary file empty: " + path.string());
    const auto header = util::split(line, ' ');
    if (header.size() != 3 || header[0] != "sigforge-dict" || header[1] != "v1")
        throw FormatError("bad dictionary header: " + line);
    const size_t count = std::stoull(header[2]);

    std::vector<DictEntry> entries;
    entries.reserve(count);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos) throw FormatError("bad dictionary line: " + line);
        entries.push_back({line.substr(0, tab), std::stoull(line.substr(tab + 1))});
    }
    if (entries.size() != count)
        throw FormatError("dictionary entry count mismatch in " + path.string());
    return Dictionary(std::move(entries));
}

void write_features(const std::filesystem::path& path, const std::vector<FeatureVector>& vecs) {
    std::string out;
    for (const auto& fv : vecs) {
        out += fv.sample_id;
        out += '\t';
        out += fv.label.empty() ? "-" : fv.label;
        out += '\t';
        bool first = true;
        for (size_t i = 0; i < fv.bits.size(); ++i) {
            if (!fv.bits[i]) continue;
            if (!first) out += ' ';
            out += std::to_string(i);
            first = false;
        }
        out += '\n';
    }
    util::write_file_atomic(path, out);
}

std::vector<FeatureVector> read_features(const std::filesystem::path& path, size_t width) {
    const std::string content = util::read_text_file(path);
    std::istringstream in(content);
    std::string line;
    std::vector<FeatureVector> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = util::split(line, '\t');
        if (fields.size() != 3) throw FormatError("bad feature line: " + line);
        FeatureVector fv;
        fv.sample_id = fields[0];
        fv.label = fields[1] == "-" ? "" : fields[1];
        fv.bits.assign(width, 0);
        std::istringstream bits(fields[2]);
        size_t idx;
        while (bits >> idx) {
            if (idx >= width) throw FormatError("feature index out of range: " + line);
            fv.bits[idx] = 1;
        }
        out.push_back(std::move(fv));
    }
    return out;
}

void write_labels(const std::filesystem::path& path, const std::vector<Document>& docs) {
    std::string out;
    for (const auto& d : docs) {
        out += d.sample_id;
        out += '\t';
        out += d.label;
        out += '\n';
    }
    util::write_file_atomic(path, out);
}

std::vector<Document> load_corpus_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw IoFailure("corpus directory not found: " + dir.string());

    std::unordered_map<std::string, std::string> labels;
    const auto labels_path = dir / "labels.tsv";
    if (std::filesystem::exists(labels_path)) {
        std::istringstream in(util::read_text_file(labels_path));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const size_t tab = line.find('\t');
            if (tab == std::string::npos) throw FormatError("bad labels line: " + line);
            labels[line.substr(0, tab)] = line.substr(tab + 1);
        }
    }

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".log")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::vector<Document> docs;
    docs.reserve(files.size());
    for (const auto& f : files) {
        Document d;
        d.sample_id = f.stem().string();
        d.text = sanitize_utf8(util::read_text_file(f));
        if (auto it = labels.find(d.sample_id); it != labels.end()) d.label = it->second;
        docs.push_back(std::move(d));
    }
    return docs;
}

}  // namespace sigforge::corpus
