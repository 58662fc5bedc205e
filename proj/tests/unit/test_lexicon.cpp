#include <doctest.h>

#include <cmath>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "syllab/error.hpp"
#include "syllab/lexicon.hpp"
#include "syllab/synthetic.hpp"
#include "syllab/tensor.hpp"

using namespace syllab;

namespace {

std::vector<SyllabifiedEntry> parse(const std::string& text, LexiconFormat format = {}) {
    std::istringstream in(text);
    return parse_lexicon(in, format);
}

SyllabifiedEntry entry(const std::string& word, const std::string& pron) {
    return parse_pronunciation(word, pron, {});
}

std::vector<std::string> phones_of(const std::string& s) {
    std::vector<std::string> out;
    for (char c : s) out.emplace_back(1, c);
    return out;
}

}  // namespace

TEST_CASE("parse_lexicon on the worked examples") {
    const auto entries = parse("achieved\t@-Jivd\nworrisome\twV-rI-sF\n\na\tV\n");
    REQUIRE(entries.size() == 3);
    CHECK(entries[0].word == "achieved");
    CHECK(entries[0].phones == phones_of("@Jivd"));
    CHECK(entries[0].boundaries == std::vector<Label>{1, 0, 0, 0, 0});
    CHECK(entries[1].phones == phones_of("wVrIsF"));
    CHECK(entries[1].boundaries == std::vector<Label>{0, 1, 0, 1, 0, 0});
    CHECK(entries[2].phones == phones_of("V"));
    CHECK(entries[2].boundaries == std::vector<Label>{0});
    CHECK(entries[1].syllable_count() == 3);
}

TEST_CASE("parse_lexicon errors carry line numbers") {
    auto line_of = [](const std::string& text) -> std::size_t {
        try {
            parse(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return 0;
    };
    CHECK(line_of("a\tV\nno tab here\n") == 2);
    CHECK(line_of("a\tV\n\nb\t\n") == 3);
    CHECK(line_of("a\t-V\n") == 1);
    CHECK(line_of("a\tV-\n") == 1);
    CHECK(line_of("a\tV--b\n") == 1);
    CHECK(line_of("a\tV\tb\n") == 1);
    CHECK(line_of("\tVb\n") == 1);
    CHECK(line_of("a\t\xC3\n") == 1);
}

TEST_CASE("character mode splits UTF-8 code points") {
    const auto entries = parse("x\t\xCA\x98" "a-b\n");
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].phones == std::vector<std::string>{"\xCA\x98", "a", "b"});
    CHECK(entries[0].boundaries == std::vector<Label>{0, 1, 0});
}

TEST_CASE("whitespace mode") {
    LexiconFormat fmt{PhoneTokenization::whitespace, '.'};
    const auto entries = parse("hello\th @ . l oU\n", fmt);
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].phones == std::vector<std::string>{"h", "@", "l", "oU"});
    CHECK(entries[0].boundaries == std::vector<Label>{0, 1, 0, 0});
    CHECK(decode_boundaries(entries[0].phones, entries[0].boundaries, fmt).text == "h @ . l oU");
    CHECK_THROWS_AS(parse("x\t. a\n", fmt), ParseError);
    CHECK_THROWS_AS((LexiconFormat{PhoneTokenization::whitespace, ' '}.validate()), DataError);
}

TEST_CASE("decode_boundaries") {
    CHECK(decode_boundaries(phones_of("wVrIsF"), std::vector<Label>{0, 1, 0, 1, 0, 0}).text == "wV-rI-sF");
    CHECK(decode_boundaries(phones_of("V"), std::vector<Label>{0}).text == "V");
    CHECK(decode_boundaries(phones_of("mIsInt3prIt1SH"), std::vector<Label>{0, 0, 1, 0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 0})
              .text == "mIs-In-t3-prI-t1-SH");

    const auto trailing = decode_boundaries(phones_of("ab"), std::vector<Label>{0, 1});
    CHECK(trailing.text == "ab");
    CHECK(trailing.trailing_boundary);
    CHECK_THROWS_AS(decode_boundaries(phones_of("ab"), std::vector<Label>{0}), ShapeError);
}

TEST_CASE("round trip: decode(parse(line)) reproduces the pronunciation") {
    for (const char* pron : {"mIs-In-t3-prI-t1-SH", "@-Jivd", "wV-rI-sF", "pV-blIk-@-drEs-sI-st@mz", "V"}) {
        const auto e = entry("w", pron);
        CHECK(decode_boundaries(e.phones, e.boundaries).text == pron);
        CHECK(e.syllable_count() == 1 + static_cast<std::size_t>(std::count(pron, pron + std::strlen(pron), '-')));
    }
    // Property over generated words.
    for (const auto& e : generate_synthetic_language(500, 3)) {
        const std::string line = render_entry(e, {});
        const auto back = parse(line + "\n");
        REQUIRE(back.size() == 1);
        CHECK(back[0] == e);
    }
}

TEST_CASE("clean_duplicates") {
    const std::vector<SyllabifiedEntry> input{entry("lead", "lid"), entry("lead", "lEd"), entry("bass", "b{s")};
    const auto cleaned = clean_duplicates(input);
    REQUIRE(cleaned.size() == 1);
    CHECK(cleaned[0].word == "bass");

    const std::vector<SyllabifiedEntry> homophones{entry("sun", "sVn"), entry("son", "sVn")};
    CHECK(clean_duplicates(homophones).size() == 2);
    CHECK(clean_duplicates(std::vector<SyllabifiedEntry>{}).empty());

    // Case-sensitive comparison.
    const std::vector<SyllabifiedEntry> cased{entry("Polish", "p5-lIS"), entry("polish", "pQ-lIS")};
    CHECK(clean_duplicates(cased).size() == 2);

    // Idempotent, and words unique afterwards, on random multisets.
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<SyllabifiedEntry> pool;
        for (int i = 0; i < 40; ++i) pool.push_back(entry(std::string(1, static_cast<char>('a' + rng.below(20))), "V"));
        const auto once = clean_duplicates(pool);
        CHECK(clean_duplicates(once) == once);
        std::set<std::string> words;
        for (const auto& e : once) words.insert(e.word);
        CHECK(words.size() == once.size());
    }
}

TEST_CASE("build_vocabulary") {
    const std::vector<SyllabifiedEntry> entries{entry("x", "a-b"), entry("y", "ba")};
    const auto vocab = build_vocabulary(entries);
    CHECK(vocab.tokens() == std::vector<std::string>{"<PAD>", "<UNK>", "a", "b"});
    CHECK(vocab.index_of("a") == 2);
    CHECK(vocab.index_of("zz") == PhoneVocabulary::unk_index);
    CHECK(build_vocabulary(entries) == vocab);
    CHECK(PhoneVocabulary::from_tokens(vocab.tokens()) == vocab);
    CHECK_THROWS_AS(PhoneVocabulary::from_tokens({"a", "b"}), DataError);
    CHECK_THROWS_AS(build_vocabulary(std::vector<SyllabifiedEntry>{}), DataError);

    std::string many;
    for (int i = 0; i < 47; ++i) many += static_cast<char>('A' + i);
    const std::vector<SyllabifiedEntry> wide{entry("w", many)};
    CHECK(build_vocabulary(wide).size() == 49);

    // Indices dense and mutually inverse.
    for (std::size_t i = 0; i < vocab.size(); ++i) CHECK(vocab.index_of(vocab.phone(static_cast<int>(i))) == static_cast<int>(i));
}

TEST_CASE("encode_entry") {
    const auto e = entry("achieved", "@-Jivd");
    const std::vector<SyllabifiedEntry> all{e};
    const auto vocab = build_vocabulary(all);
    const auto enc = encode_entry(e, vocab, 7);
    CHECK(enc.indices == std::vector<int>{2, 3, 4, 5, 6, 0, 0});
    CHECK(enc.labels == std::vector<Label>{1, 0, 0, 0, 0, 0, 0});
    CHECK(enc.true_len == 5);

    const auto single = encode_entry(entry("a", "V"), vocab, 1);
    CHECK(single.indices.size() == 1);
    CHECK(single.true_len == 1);
    CHECK(single.unknown_phones == 1);

    const std::vector<std::string> unseen{"\xCA\x98"};
    CHECK(encode_phones(unseen, vocab, 3).indices[0] == PhoneVocabulary::unk_index);
    CHECK_THROWS_AS(encode_entry(e, vocab, 4), ShapeError);
}

TEST_CASE("split_dataset") {
    auto make = [](std::size_t n) {
        std::vector<SyllabifiedEntry> v;
        for (std::size_t i = 0; i < n; ++i) v.push_back(entry("w" + std::to_string(i), "V"));
        return v;
    };
    const auto ten = split_dataset(make(10), 1);
    CHECK(ten.train.size() == 8);
    CHECK(ten.dev.size() == 1);
    CHECK(ten.test.size() == 1);
    CHECK_THROWS_AS(split_dataset(make(9), 1), DataError);

    const auto a = split_dataset(make(101), 77);
    const auto b = split_dataset(make(101), 77);
    const auto c = split_dataset(make(101), 78);
    CHECK(a.train == b.train);
    CHECK(a.dev == b.dev);
    CHECK(a.test == b.test);
    CHECK(a.train != c.train);

    // Partition property over sizes.
    for (std::size_t n : {10u, 11u, 17u, 19u, 99u, 250u}) {
        const auto s = split_dataset(make(n), n);
        CHECK(s.train.size() == static_cast<std::size_t>(std::lround(0.8 * static_cast<double>(n))));
        CHECK(s.dev.size() == n / 10);
        CHECK(s.train.size() + s.dev.size() + s.test.size() == n);
        std::set<std::string> seen;
        for (const auto* part : {&s.train, &s.dev, &s.test}) {
            for (const auto& e : *part) CHECK(seen.insert(e.word).second);
        }
        CHECK(seen.size() == n);
    }
    const auto big = split_dataset(make(89402), 5);
    CHECK(big.train.size() == 71522);
    CHECK(big.dev.size() == 8940);
    CHECK(big.test.size() == 8940);
}

TEST_CASE("prepared dataset files round-trip") {
    std::vector<SyllabifiedEntry> words = generate_synthetic_language(60, 5);
    words.push_back(entry(words[0].word, "V"));
    const auto prepared = prepare_dataset(words, {}, 4);
    CHECK(prepared.input_entries == 61);
    CHECK(prepared.removed_duplicates == 2);
    const auto dir = std::filesystem::temp_directory_path() / "syllab_prepared_test";
    std::filesystem::remove_all(dir);
    write_prepared(dir, prepared);
    const auto back = read_prepared(dir);
    CHECK(back.split.train == prepared.split.train);
    CHECK(back.split.dev == prepared.split.dev);
    CHECK(back.split.test == prepared.split.test);
    CHECK(back.max_len == prepared.max_len);
    CHECK(back.removed_duplicates == 2);
    CHECK(back.split.seed == 4);
    std::filesystem::remove_all(dir);
}
