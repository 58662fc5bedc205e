#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "syllab/error.hpp"
#include "syllab/synthetic.hpp"
#include "syllab/training.hpp"

using namespace syllab;

namespace {

SyllabifiedEntry entry(std::string_view pron) {
    return parse_pronunciation(std::string(pron), pron, LexiconFormat{});
}

ModelConfig tiny_config() {
    ModelConfig c = ModelConfig::preset(Preset::small);
    c.embedding_dim = 6;
    c.lstm_dim = 5;
    c.conv_filters = 4;
    c.conv_blocks = 1;
    c.batch_size = 8;
    c.max_epochs = 3;
    c.patience = 2;
    return c;
}

}  // namespace

TEST_CASE("make_batches") {
    Rng rng(1);
    const auto batches = make_batches(130, 64, rng);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].size() == 64);
    CHECK(batches[1].size() == 64);
    CHECK(batches[2].size() == 2);
    std::set<std::size_t> seen;
    for (const auto& b : batches) seen.insert(b.begin(), b.end());
    CHECK(seen.size() == 130);
    CHECK(*seen.rbegin() == 129);

    Rng one(2);
    const auto singles = make_batches(5, 1, one);
    CHECK(singles.size() == 5);
    for (const auto& b : singles) CHECK(b.size() == 1);

    Rng a(7), b(7);
    CHECK(make_batches(100, 16, a) == make_batches(100, 16, b));
    Rng c(8);
    Rng d(7);
    CHECK(make_batches(100, 16, c) != make_batches(100, 16, d));
}

TEST_CASE("EarlyStopping") {
    SUBCASE("strictly improving never stops") {
        EarlyStopping s(StopMetric::dev_word_accuracy, 3);
        for (std::size_t e = 1; e <= 10; ++e) {
            CHECK(s.update({e, 1.0, 0.05 * static_cast<double>(e), 1.0}));
            CHECK_FALSE(s.should_stop());
        }
        CHECK(s.best_epoch() == 10);
    }
    SUBCASE("constant metric stops after patience epochs; best is the first") {
        EarlyStopping s(StopMetric::dev_word_accuracy, 4);
        std::size_t stopped_at = 0;
        for (std::size_t e = 1; e <= 20 && stopped_at == 0; ++e) {
            s.update({e, 1.0, 0.5, 1.0});
            if (s.should_stop()) stopped_at = e;
        }
        CHECK(stopped_at == 5);
        CHECK(s.best_epoch() == 1);
    }
    SUBCASE("loss metric prefers lower values") {
        EarlyStopping s(StopMetric::dev_loss, 2);
        CHECK(s.update({1, 0.0, 0.0, 3.0}));
        CHECK(s.update({2, 0.0, 0.0, 2.0}));
        CHECK_FALSE(s.update({3, 0.0, 0.0, 2.5}));
        CHECK_FALSE(s.update({4, 0.0, 0.0, 2.0}));
        CHECK(s.should_stop());
        CHECK(s.best_epoch() == 2);
    }
}

TEST_CASE("evaluate_word_accuracy") {
    // Zero parameters give zero emissions, so every prediction is all-zero:
    // exactly the monosyllables are right.
    const ModelConfig config = tiny_config();
    std::vector<SyllabifiedEntry> words{entry("pat"), entry("ka"), entry("od"), entry("s")};
    const PhoneVocabulary vocab = build_vocabulary(words);
    const ModelParameters zero = ModelParameters::zeros(config, vocab.size());
    CHECK(evaluate_word_accuracy(zero, config, vocab, words) == 1.0);

    words[3] = entry("pa-ta");
    CHECK(evaluate_word_accuracy(zero, config, vocab, words) == 0.75);
    std::reverse(words.begin(), words.end());
    CHECK(evaluate_word_accuracy(zero, config, vocab, words) == 0.75);

    CHECK_THROWS_AS(evaluate_word_accuracy(zero, config, vocab, std::vector<SyllabifiedEntry>{}), DataError);
}

TEST_CASE("summarize_accuracies") {
    const auto single = summarize_accuracies({0.9852});
    CHECK(single.repetitions == 1);
    CHECK(single.std_dev == 0.0);
    CHECK(single.format() == "98.52 ± 0.00");

    const auto many = summarize_accuracies({0.9, 1.0});
    CHECK(many.mean == doctest::Approx(0.95));
    CHECK(many.std_dev == doctest::Approx(std::sqrt(0.005)));
    CHECK(many.format() == "95.00 ± 7.07");
}

TEST_CASE("synthetic language") {
    const auto a = generate_synthetic_language(300, 5);
    CHECK(a == generate_synthetic_language(300, 5));
    CHECK(a != generate_synthetic_language(300, 6));
    std::set<std::string> words;
    for (const auto& e : a) {
        words.insert(e.word);
        REQUIRE(e.phones.size() == e.boundaries.size());
        CHECK(e.boundaries.back() == 0);
        CHECK(e.boundaries == maximal_onset_boundaries(e.phones));
        const std::size_t syl = e.syllable_count();
        CHECK(syl >= 1);
        CHECK(syl <= 5);
        // Each syllable has exactly one vowel and at most one coda/onset consonant.
        std::size_t start = 0;
        for (std::size_t i = 0; i < e.phones.size(); ++i) {
            if (e.boundaries[i] == 1 || i + 1 == e.phones.size()) {
                std::size_t vowels = 0;
                for (std::size_t j = start; j <= i; ++j) vowels += is_synthetic_vowel(e.phones[j]) ? 1 : 0;
                CHECK(vowels == 1);
                CHECK(i + 1 - start <= 3);
                start = i + 1;
            }
        }
    }
    CHECK(words.size() == a.size());

    const std::vector<std::string> phones{"p", "a", "s", "t", "a", "e", "k"};
    CHECK(maximal_onset_boundaries(phones) == std::vector<Label>{0, 0, 1, 0, 1, 0, 0});
}

TEST_CASE("word_loss heads") {
    ModelConfig config = tiny_config();
    const std::vector<SyllabifiedEntry> words{entry("pa-ta")};
    const PhoneVocabulary vocab = build_vocabulary(words);
    const EncodedEntry w = encode_entry(words[0], vocab, 6);
    CHECK(word_loss(w, ModelParameters::zeros(config, vocab.size()), config, Mode::eval) ==
          doctest::Approx(4.0 * std::log(2.0)));
    config.output_head = OutputHead::softmax;
    CHECK(word_loss(w, ModelParameters::zeros(config, vocab.size()), config, Mode::eval) ==
          doctest::Approx(4.0 * std::log(2.0)));
}

TEST_CASE("train is deterministic and reports history") {
    const auto words = generate_synthetic_language(60, 11);
    DatasetSplit split = split_dataset(words, 3);
    const ModelConfig config = tiny_config();

    std::ostringstream history;
    TrainingOptions options;
    options.history_jsonl = &history;
    const TrainingRun a = train(config, split, 42, options);
    const TrainingRun b = train(config, split, 42);
    REQUIRE(a.history.size() == b.history.size());
    CHECK(a.history.size() <= config.max_epochs);
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].epoch == i + 1);
        CHECK(a.history[i].train_loss == b.history[i].train_loss);
    }
    CHECK(a.best_epoch >= 1);
    const auto pa = a.final_params.tensors();
    const auto pb = b.final_params.tensors();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i] == *pb[i]);

    std::istringstream lines(history.str());
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.at("epoch").get<std::size_t>() == ++n);
        CHECK(j.contains("train_loss"));
        CHECK(j.contains("dev_word_accuracy"));
        CHECK(j.contains("dev_loss"));
        CHECK(j.contains("best_epoch"));
    }
    CHECK(n == a.history.size());

    const TrainingRun c = train(config, split, 43);
    CHECK(c.initial_train_loss != a.initial_train_loss);

    DatasetSplit no_dev = split;
    no_dev.dev.clear();
    CHECK_THROWS_AS(train(config, no_dev, 1), DataError);
}
