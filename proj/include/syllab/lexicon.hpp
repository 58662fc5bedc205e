#pragma once
// Syllabified pronunciation lexicons: parsing, the duplicate-word cleaning
// rule, the phone vocabulary, label encoding and the 80/10/10 split.
//
// A lexicon line is `word<TAB>pronunciation`, where the pronunciation is a
// phone sequence with a delimiter ('-' by default) between syllables. Each
// phone carries label 1 if a syllable boundary follows it, else 0.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace syllab {

class Rng;

using Label = std::uint8_t;

struct SyllabifiedEntry {
    std::string word;
    std::vector<std::string> phones;
    std::vector<Label> boundaries;  // same length as phones; last is always 0

    std::size_t syllable_count() const;
    friend bool operator==(const SyllabifiedEntry&, const SyllabifiedEntry&) = default;
};

enum class PhoneTokenization {
    character,   // one UTF-8 code point per phone (DISC style)
    whitespace,  // phones separated by spaces; the delimiter is its own token
};

struct LexiconFormat {
    PhoneTokenization tokenization = PhoneTokenization::character;
    char syllable_delimiter = '-';

    void validate() const;
    friend bool operator==(const LexiconFormat&, const LexiconFormat&) = default;
};

std::string_view to_string(PhoneTokenization t);
PhoneTokenization tokenization_from_string(std::string_view name);

class PhoneVocabulary {
public:
    static constexpr int pad_index = 0;
    static constexpr int unk_index = 1;
    static constexpr std::string_view pad_token = "<PAD>";
    static constexpr std::string_view unk_token = "<UNK>";

    // Reserved tokens only.
    PhoneVocabulary();

    // Rebuild from a full index-ordered token list (as stored in checkpoints).
    static PhoneVocabulary from_tokens(std::vector<std::string> tokens);

    // Appends `phone` if unseen; returns its index.
    int add(const std::string& phone);

    bool contains(std::string_view phone) const;
    // unk_index for unseen phones.
    int index_of(std::string_view phone) const;
    const std::string& phone(int index) const { return tokens_.at(static_cast<std::size_t>(index)); }
    std::size_t size() const noexcept { return tokens_.size(); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    friend bool operator==(const PhoneVocabulary& a, const PhoneVocabulary& b) { return a.tokens_ == b.tokens_; }

private:
    struct Hash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
    };
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int, Hash, std::equal_to<>> index_;
};

struct EncodedEntry {
    std::vector<int> indices;  // max_len, right-padded with pad_index
    std::vector<Label> labels; // max_len, right-padded with 0
    std::size_t true_len = 0;
    std::size_t unknown_phones = 0;
};

struct DecodedWord {
    std::string text;
    // The label sequence ended in 1; nothing was rendered for it.
    bool trailing_boundary = false;
};

struct DatasetSplit {
    std::vector<SyllabifiedEntry> train;
    std::vector<SyllabifiedEntry> dev;
    std::vector<SyllabifiedEntry> test;
    std::uint64_t seed = 0;
};

// Parses one pronunciation field into phones and boundary labels.
SyllabifiedEntry parse_pronunciation(std::string word, std::string_view pronunciation, const LexiconFormat& format,
                                     std::size_t line_number = 0);

// Splits an undelimited phone string (inference input) into phone tokens.
std::vector<std::string> tokenize_phones(std::string_view text, const LexiconFormat& format);

// One entry per non-empty line. Throws ParseError carrying the 1-based line.
std::vector<SyllabifiedEntry> parse_lexicon(std::istream& in, const LexiconFormat& format);
std::vector<SyllabifiedEntry> read_lexicon(const std::filesystem::path& path, const LexiconFormat& format);

// Drops every entry whose word occurs more than once (all copies).
std::vector<SyllabifiedEntry> clean_duplicates(std::span<const SyllabifiedEntry> entries);

// PAD, UNK, then phones in first-occurrence order.
PhoneVocabulary build_vocabulary(std::span<const SyllabifiedEntry> entries);

// Throws ShapeError when the entry is longer than max_len.
EncodedEntry encode_entry(const SyllabifiedEntry& entry, const PhoneVocabulary& vocab, std::size_t max_len);
EncodedEntry encode_phones(std::span<const std::string> phones, const PhoneVocabulary& vocab, std::size_t max_len);

DecodedWord decode_boundaries(std::span<const std::string> phones, std::span<const Label> labels,
                              const LexiconFormat& format = {});

std::string render_entry(const SyllabifiedEntry& entry, const LexiconFormat& format);
void write_lexicon(std::ostream& out, std::span<const SyllabifiedEntry> entries, const LexiconFormat& format);

std::size_t max_phone_length(std::span<const SyllabifiedEntry> entries);

// Seeded shuffle, then round(0.8N) train, floor(0.1N) dev, remainder test.
// Throws DataError for fewer than 10 entries.
DatasetSplit split_dataset(std::vector<SyllabifiedEntry> entries, std::uint64_t seed);
DatasetSplit split_dataset(std::vector<SyllabifiedEntry> entries, Rng& rng);

// parse -> clean -> split, with the bookkeeping written to split.meta.
struct PreparedDataset {
    DatasetSplit split;
    LexiconFormat format;
    std::size_t input_entries = 0;
    std::size_t removed_duplicates = 0;
    std::size_t max_len = 0;
};

PreparedDataset prepare_dataset(std::vector<SyllabifiedEntry> entries, const LexiconFormat& format,
                                std::uint64_t seed);

// train.tsv, dev.tsv, test.tsv and split.meta.
void write_prepared(const std::filesystem::path& dir, const PreparedDataset& prepared);
PreparedDataset read_prepared(const std::filesystem::path& dir);

}  // namespace syllab
