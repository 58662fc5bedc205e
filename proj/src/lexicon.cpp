#include "syllab/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "syllab/error.hpp"
#include "syllab/tensor.hpp"

namespace syllab {

namespace {

std::size_t utf8_sequence_length(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead >> 5) == 0x6) return 2;
    if ((lead >> 4) == 0xE) return 3;
    if ((lead >> 3) == 0x1E) return 4;
    return 0;
}

std::vector<std::string> split_code_points(std::string_view text, std::size_t line_number) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const std::size_t len = utf8_sequence_length(static_cast<unsigned char>(text[i]));
        if (len == 0 || i + len > text.size()) throw ParseError(line_number, "invalid UTF-8 sequence");
        for (std::size_t k = 1; k < len; ++k) {
            if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
                throw ParseError(line_number, "invalid UTF-8 sequence");
            }
        }
        out.emplace_back(text.substr(i, len));
        i += len;
    }
    return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < text.size() && text[j] != ' ' && text[j] != '\t') ++j;
        if (j > i) out.emplace_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace

std::size_t SyllabifiedEntry::syllable_count() const {
    return 1 + static_cast<std::size_t>(std::count(boundaries.begin(), boundaries.end(), Label{1}));
}

void LexiconFormat::validate() const {
    const auto c = static_cast<unsigned char>(syllable_delimiter);
    if (c == '\t' || c == '\n' || c == '\r' || c == '\0' || c >= 0x80) {
        throw DataError("syllable delimiter must be a printable ASCII character");
    }
    if (tokenization == PhoneTokenization::whitespace && c == ' ') {
        throw DataError("syllable delimiter cannot be a space in whitespace mode");
    }
}

std::string_view to_string(PhoneTokenization t) {
    return t == PhoneTokenization::character ? "char" : "whitespace";
}

PhoneTokenization tokenization_from_string(std::string_view name) {
    if (name == "char" || name == "character") return PhoneTokenization::character;
    if (name == "whitespace") return PhoneTokenization::whitespace;
    throw DataError("unknown phone tokenization '" + std::string(name) + "'");
}

PhoneVocabulary::PhoneVocabulary() {
    add(std::string(pad_token));
    add(std::string(unk_token));
}

PhoneVocabulary PhoneVocabulary::from_tokens(std::vector<std::string> tokens) {
    if (tokens.size() < 2 || tokens[0] != pad_token || tokens[1] != unk_token) {
        throw DataError("vocabulary must start with the reserved PAD and UNK tokens");
    }
    PhoneVocabulary vocab;
    for (std::size_t i = 2; i < tokens.size(); ++i) {
        if (vocab.contains(tokens[i])) throw DataError("duplicate vocabulary token '" + tokens[i] + "'");
        vocab.add(tokens[i]);
    }
    return vocab;
}

int PhoneVocabulary::add(const std::string& phone) {
    if (auto it = index_.find(phone); it != index_.end()) return it->second;
    const int index = static_cast<int>(tokens_.size());
    tokens_.push_back(phone);
    index_.emplace(phone, index);
    return index;
}

bool PhoneVocabulary::contains(std::string_view phone) const { return index_.find(phone) != index_.end(); }

int PhoneVocabulary::index_of(std::string_view phone) const {
    auto it = index_.find(phone);
    return it == index_.end() ? unk_index : it->second;
}

SyllabifiedEntry parse_pronunciation(std::string word, std::string_view pronunciation, const LexiconFormat& format,
                                     std::size_t line_number) {
    const std::string delimiter(1, format.syllable_delimiter);
    std::vector<std::string> tokens = format.tokenization == PhoneTokenization::character
                                          ? split_code_points(pronunciation, line_number)
                                          : split_whitespace(pronunciation);
    if (tokens.empty()) throw ParseError(line_number, "empty pronunciation");
    if (tokens.front() == delimiter) throw ParseError(line_number, "pronunciation starts with a syllable delimiter");
    if (tokens.back() == delimiter) throw ParseError(line_number, "pronunciation ends with a syllable delimiter");

    SyllabifiedEntry entry;
    entry.word = std::move(word);
    for (auto& token : tokens) {
        if (token == delimiter) {
            if (entry.boundaries.back() == 1) throw ParseError(line_number, "empty syllable");
            entry.boundaries.back() = 1;
        } else {
            entry.phones.push_back(std::move(token));
            entry.boundaries.push_back(0);
        }
    }
    return entry;
}

std::vector<std::string> tokenize_phones(std::string_view text, const LexiconFormat& format) {
    return format.tokenization == PhoneTokenization::character ? split_code_points(text, 0) : split_whitespace(text);
}

std::vector<SyllabifiedEntry> parse_lexicon(std::istream& in, const LexiconFormat& format) {
    format.validate();
    std::vector<SyllabifiedEntry> entries;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError(line_number, "missing TAB between word and pronunciation");
        std::string_view pron = std::string_view(line).substr(tab + 1);
        if (pron.find('\t') != std::string_view::npos) throw ParseError(line_number, "more than one TAB");
        if (tab == 0) throw ParseError(line_number, "empty word");
        entries.push_back(parse_pronunciation(line.substr(0, tab), pron, format, line_number));
    }
    return entries;
}

std::vector<SyllabifiedEntry> read_lexicon(const std::filesystem::path& path, const LexiconFormat& format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open lexicon '" + path.string() + "'");
    try {
        return parse_lexicon(in, format);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), e.detail() + " (in " + path.string() + ")");
    }
}

std::vector<SyllabifiedEntry> clean_duplicates(std::span<const SyllabifiedEntry> entries) {
    std::unordered_map<std::string_view, std::size_t> counts;
    for (const auto& e : entries) ++counts[e.word];
    std::vector<SyllabifiedEntry> out;
    out.reserve(entries.size());
    for (const auto& e : entries) {
        if (counts[e.word] == 1) out.push_back(e);
    }
    return out;
}

PhoneVocabulary build_vocabulary(std::span<const SyllabifiedEntry> entries) {
    if (entries.empty()) throw DataError("build_vocabulary: no entries");
    PhoneVocabulary vocab;
    for (const auto& e : entries) {
        for (const auto& p : e.phones) vocab.add(p);
    }
    return vocab;
}

EncodedEntry encode_phones(std::span<const std::string> phones, const PhoneVocabulary& vocab, std::size_t max_len) {
    if (phones.size() > max_len) {
        throw ShapeError("sequence of " + std::to_string(phones.size()) + " phones exceeds max_len " +
                         std::to_string(max_len));
    }
    EncodedEntry out;
    out.indices.assign(max_len, PhoneVocabulary::pad_index);
    out.labels.assign(max_len, 0);
    out.true_len = phones.size();
    for (std::size_t i = 0; i < phones.size(); ++i) {
        out.indices[i] = vocab.index_of(phones[i]);
        if (out.indices[i] == PhoneVocabulary::unk_index) ++out.unknown_phones;
    }
    return out;
}

EncodedEntry encode_entry(const SyllabifiedEntry& entry, const PhoneVocabulary& vocab, std::size_t max_len) {
    EncodedEntry out = encode_phones(entry.phones, vocab, max_len);
    std::copy(entry.boundaries.begin(), entry.boundaries.end(), out.labels.begin());
    return out;
}

DecodedWord decode_boundaries(std::span<const std::string> phones, std::span<const Label> labels,
                              const LexiconFormat& format) {
    if (phones.size() != labels.size()) throw ShapeError("decode_boundaries: phones and labels differ in length");
    const bool spaced = format.tokenization == PhoneTokenization::whitespace;
    DecodedWord out;
    for (std::size_t i = 0; i < phones.size(); ++i) {
        if (spaced && i > 0) out.text += ' ';
        out.text += phones[i];
        if (labels[i] == 0) continue;
        if (i + 1 == phones.size()) {
            out.trailing_boundary = true;
        } else {
            if (spaced) out.text += ' ';
            out.text += format.syllable_delimiter;
        }
    }
    return out;
}

std::string render_entry(const SyllabifiedEntry& entry, const LexiconFormat& format) {
    return entry.word + '\t' + decode_boundaries(entry.phones, entry.boundaries, format).text;
}

void write_lexicon(std::ostream& out, std::span<const SyllabifiedEntry> entries, const LexiconFormat& format) {
    for (const auto& e : entries) out << render_entry(e, format) << '\n';
}

std::size_t max_phone_length(std::span<const SyllabifiedEntry> entries) {
    std::size_t n = 0;
    for (const auto& e : entries) n = std::max(n, e.phones.size());
    return n;
}

DatasetSplit split_dataset(std::vector<SyllabifiedEntry> entries, Rng& rng) {
    if (entries.size() < 10) {
        throw DataError("split_dataset needs at least 10 entries, got " + std::to_string(entries.size()));
    }
    rng.shuffle(std::span(entries));
    const std::size_t n = entries.size();
    // Nearest for train, floor for dev: 89402 -> 71522 / 8940 / 8940.
    const std::size_t n_train = (n * 8 + 5) / 10;
    const std::size_t n_dev = n / 10;
    DatasetSplit split;
    split.seed = rng.seed();
    auto begin = std::make_move_iterator(entries.begin());
    split.train.assign(begin, begin + static_cast<std::ptrdiff_t>(n_train));
    split.dev.assign(begin + static_cast<std::ptrdiff_t>(n_train), begin + static_cast<std::ptrdiff_t>(n_train + n_dev));
    split.test.assign(begin + static_cast<std::ptrdiff_t>(n_train + n_dev), std::make_move_iterator(entries.end()));
    return split;
}

DatasetSplit split_dataset(std::vector<SyllabifiedEntry> entries, std::uint64_t seed) {
    Rng rng(seed);
    return split_dataset(std::move(entries), rng);
}

PreparedDataset prepare_dataset(std::vector<SyllabifiedEntry> entries, const LexiconFormat& format,
                                std::uint64_t seed) {
    PreparedDataset prepared;
    prepared.format = format;
    prepared.input_entries = entries.size();
    auto cleaned = clean_duplicates(entries);
    prepared.removed_duplicates = entries.size() - cleaned.size();
    prepared.max_len = max_phone_length(cleaned);
    prepared.split = split_dataset(std::move(cleaned), seed);
    return prepared;
}

namespace {

void write_file(const std::filesystem::path& path, std::span<const SyllabifiedEntry> entries,
                const LexiconFormat& format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    write_lexicon(out, entries, format);
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace

void write_prepared(const std::filesystem::path& dir, const PreparedDataset& prepared) {
    std::filesystem::create_directories(dir);
    const auto& s = prepared.split;
    write_file(dir / "train.tsv", s.train, prepared.format);
    write_file(dir / "dev.tsv", s.dev, prepared.format);
    write_file(dir / "test.tsv", s.test, prepared.format);

    std::ofstream meta(dir / "split.meta", std::ios::binary | std::ios::trunc);
    if (!meta) throw DataError("cannot write split.meta in '" + dir.string() + "'");
    meta << "format_version=1\n"
         << "seed=" << s.seed << '\n'
         << "tokenization=" << to_string(prepared.format.tokenization) << '\n'
         << "delimiter=" << prepared.format.syllable_delimiter << '\n'
         << "input_entries=" << prepared.input_entries << '\n'
         << "removed_duplicates=" << prepared.removed_duplicates << '\n'
         << "cleaned_entries=" << (s.train.size() + s.dev.size() + s.test.size()) << '\n'
         << "train=" << s.train.size() << '\n'
         << "dev=" << s.dev.size() << '\n'
         << "test=" << s.test.size() << '\n'
         << "max_len=" << prepared.max_len << '\n';
}

PreparedDataset read_prepared(const std::filesystem::path& dir) {
    std::ifstream meta(dir / "split.meta", std::ios::binary);
    if (!meta) throw DataError("no split.meta in '" + dir.string() + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(meta, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw DataError("split.meta is missing '" + key + "'");
        return it->second;
    };
    auto get_count = [&](const std::string& key) -> std::size_t {
        try {
            return static_cast<std::size_t>(std::stoull(get(key)));
        } catch (const std::logic_error&) {
            throw DataError("split.meta has a malformed '" + key + "'");
        }
    };
    if (get("format_version") != "1") throw DataError("unsupported split.meta format_version " + get("format_version"));

    PreparedDataset prepared;
    prepared.format.tokenization = tokenization_from_string(get("tokenization"));
    if (get("delimiter").size() != 1) throw DataError("split.meta delimiter must be one character");
    prepared.format.syllable_delimiter = get("delimiter")[0];
    prepared.format.validate();
    prepared.input_entries = get_count("input_entries");
    prepared.removed_duplicates = get_count("removed_duplicates");
    prepared.max_len = get_count("max_len");
    prepared.split.seed = get_count("seed");
    prepared.split.train = read_lexicon(dir / "train.tsv", prepared.format);
    prepared.split.dev = read_lexicon(dir / "dev.tsv", prepared.format);
    prepared.split.test = read_lexicon(dir / "test.tsv", prepared.format);
    if (prepared.split.train.size() != get_count("train") || prepared.split.dev.size() != get_count("dev") ||
        prepared.split.test.size() != get_count("test")) {
        throw DataError("split files disagree with the counts in split.meta");
    }
    return prepared;
}

}  // namespace syllab
