#include "syllab/training.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "syllab/error.hpp"

namespace syllab {

bool EarlyStopping::update(const EpochRecord& record) {
    const double value =
        metric_ == StopMetric::dev_word_accuracy ? record.dev_word_accuracy : -record.dev_loss;
    if (best_epoch_ == 0 || value > best_value_) {
        best_epoch_ = record.epoch;
        best_value_ = value;
        since_best_ = 0;
        return true;
    }
    ++since_best_;
    return false;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n_entries, std::size_t batch_size, Rng& rng) {
    if (batch_size < 1) throw ShapeError("make_batches: batch_size must be >= 1");
    std::vector<std::size_t> order(n_entries);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span(order));
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t i = 0; i < n_entries; i += batch_size) {
        const std::size_t end = std::min(n_entries, i + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

double word_loss(const EncodedEntry& word, const ModelParameters& params, const ModelConfig& config, Mode mode,
                 Rng* rng, ModelParameters* grads, double scale) {
    ForwardCache cache;
    const Tensor emissions = encode(word.indices, word.true_len, params, config, mode, rng, grads ? &cache : nullptr);
    if (grads == nullptr) {
        return config.output_head == OutputHead::crf ? crf_nll(emissions, params.crf, word.labels, word.true_len)
                                                     : softmax_nll(emissions, word.labels, word.true_len);
    }
    Tensor d_emissions(emissions.shape());
    const double loss =
        config.output_head == OutputHead::crf
            ? crf_nll_backward(emissions, params.crf, word.labels, word.true_len, d_emissions, grads->crf, scale)
            : softmax_nll(emissions, word.labels, word.true_len, &d_emissions, scale);
    encode_backward(cache, word.indices, d_emissions, params, config, *grads);
    return loss;
}

namespace {

LabelPath decode_emissions(const Tensor& emissions, std::size_t true_len, const ModelParameters& params,
                           const ModelConfig& config) {
    return config.output_head == OutputHead::crf ? viterbi_decode(emissions, params.crf, true_len)
                                                 : softmax_decode(emissions, true_len);
}

bool matches_gold(const LabelPath& path, const EncodedEntry& word) {
    return std::equal(path.labels.begin(), path.labels.end(), word.labels.begin());
}

struct DevScore {
    double accuracy = 0.0;
    double loss = 0.0;
};

DevScore score_encoded(std::span<const EncodedEntry> words, const ModelParameters& params, const ModelConfig& config) {
    std::size_t correct = 0;
    double loss = 0.0;
    for (const auto& w : words) {
        const Tensor emissions = encode(w.indices, w.true_len, params, config, Mode::eval);
        if (matches_gold(decode_emissions(emissions, w.true_len, params, config), w)) ++correct;
        loss += config.output_head == OutputHead::crf ? crf_nll(emissions, params.crf, w.labels, w.true_len)
                                                      : softmax_nll(emissions, w.labels, w.true_len);
    }
    const double n = static_cast<double>(words.size());
    return {static_cast<double>(correct) / n, loss / n};
}

std::vector<EncodedEntry> encode_all(std::span<const SyllabifiedEntry> entries, const PhoneVocabulary& vocab,
                                     std::size_t max_len) {
    std::vector<EncodedEntry> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(encode_entry(e, vocab, max_len));
    return out;
}

}  // namespace

LabelPath predict(const EncodedEntry& word, const ModelParameters& params, const ModelConfig& config) {
    const Tensor emissions = encode(word.indices, word.true_len, params, config, Mode::eval);
    return decode_emissions(emissions, word.true_len, params, config);
}

double evaluate_word_accuracy(const ModelParameters& params, const ModelConfig& config, const PhoneVocabulary& vocab,
                              std::span<const SyllabifiedEntry> entries) {
    if (entries.empty()) throw DataError("evaluate_word_accuracy: no entries");
    std::size_t correct = 0;
    for (const auto& e : entries) {
        const auto word = encode_entry(e, vocab, e.phones.size());
        if (matches_gold(predict(word, params, config), word)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(entries.size());
}

TrainingRun train(const ModelConfig& config, const DatasetSplit& split, std::uint64_t seed,
                  const TrainingOptions& options) {
    config.validate();
    if (split.train.empty() || split.dev.empty()) throw DataError("train: training and development sets must be non-empty");

    TrainingRun run;
    run.seed = seed;
    run.vocabulary = build_vocabulary(split.train);
    run.max_len = std::max({max_phone_length(split.train), max_phone_length(split.dev), max_phone_length(split.test)});
    const auto train_words = encode_all(split.train, run.vocabulary, run.max_len);
    const auto dev_words = encode_all(split.dev, run.vocabulary, run.max_len);

    // Independent streams: initialization, batch order, dropout.
    Rng init_rng(seed, 0);
    Rng order_rng(seed, 1);
    Rng dropout_rng(seed, 2);

    ModelParameters params = ModelParameters::initialize(config, run.vocabulary.size(), init_rng);
    ModelParameters grads = ModelParameters::zeros(config, run.vocabulary.size());
    AdamHyperparameters hyper;
    hyper.learning_rate = config.learning_rate;
    std::vector<AdamState> adam;
    for (const Tensor* t : params.tensors()) adam.push_back(AdamState::for_parameter(*t, hyper));

    {
        double total = 0.0;
        for (const auto& w : train_words) total += word_loss(w, params, config, Mode::eval);
        run.initial_train_loss = total / static_cast<double>(train_words.size());
    }

    EarlyStopping stopper(options.stop_metric, config.patience);
    ModelParameters best = params;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto batches = make_batches(train_words.size(), config.batch_size, order_rng);
        double epoch_loss = 0.0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto& batch = batches[b];
            grads.set_zero();
            const double scale = 1.0 / static_cast<double>(batch.size());
            double batch_loss = 0.0;
            for (std::size_t idx : batch) {
                batch_loss += word_loss(train_words[idx], params, config, Mode::train, &dropout_rng, &grads, scale);
            }
            if (!std::isfinite(batch_loss)) {
                throw NumericError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(b + 1) + " of " + std::to_string(batches.size()));
            }
            epoch_loss += batch_loss;
            auto grad_list = grads.tensors();
            clip_global_norm(grad_list, config.clip_threshold);
            auto param_list = params.tensors();
            for (std::size_t i = 0; i < param_list.size(); ++i) adam_step(*param_list[i], *grad_list[i], adam[i]);
        }

        EpochRecord record;
        record.epoch = epoch;
        record.train_loss = epoch_loss / static_cast<double>(train_words.size());
        const DevScore dev = score_encoded(dev_words, params, config);
        record.dev_word_accuracy = dev.accuracy;
        record.dev_loss = dev.loss;
        run.history.push_back(record);

        const bool improved = stopper.update(record);
        if (improved) best = params;
        if (options.progress != nullptr) {
            *options.progress << "epoch " << epoch << "  train_loss " << std::setprecision(6) << record.train_loss
                              << "  dev_acc " << record.dev_word_accuracy << "  dev_loss " << record.dev_loss
                              << (improved ? "  *" : "") << std::endl;
        }
        if (options.history_jsonl != nullptr) {
            nlohmann::json line{{"epoch", epoch},
                                {"train_loss", record.train_loss},
                                {"dev_word_accuracy", record.dev_word_accuracy},
                                {"dev_loss", record.dev_loss},
                                {"best_epoch", stopper.best_epoch()}};
            *options.history_jsonl << line.dump() << '\n';
        }
        if (stopper.should_stop() && epoch < config.max_epochs) {
            run.stopped_early = true;
            break;
        }
    }
    run.best_epoch = stopper.best_epoch();
    run.final_params = std::move(best);
    return run;
}

std::string ExperimentReport::format(int decimals) const {
    std::ostringstream out;
    out << std::fixed << std::setprecision(decimals) << 100.0 * mean << " ± " << 100.0 * std_dev;
    return out.str();
}

ExperimentReport summarize_accuracies(std::vector<double> values) {
    ExperimentReport report;
    report.repetitions = values.size();
    report.per_run_test_accuracy = std::move(values);
    const auto& v = report.per_run_test_accuracy;
    if (v.empty()) return report;
    const double n = static_cast<double>(v.size());
    report.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - report.mean) * (x - report.mean);
        report.std_dev = std::sqrt(ss / (n - 1.0));
    }
    return report;
}

ExperimentReport run_experiment(const ModelConfig& config, const DatasetSplit& split, std::size_t repetitions,
                                std::uint64_t base_seed, const TrainingOptions& options) {
    if (repetitions < 1) throw ShapeError("run_experiment: repetitions must be >= 1");
    if (split.test.empty()) throw DataError("run_experiment: empty test set");
    std::vector<double> accuracies;
    for (std::size_t r = 0; r < repetitions; ++r) {
        const TrainingRun run = train(config, split, base_seed + r, options);
        accuracies.push_back(evaluate_word_accuracy(run.final_params, config, run.vocabulary, split.test));
        if (options.progress != nullptr) {
            *options.progress << "repetition " << (r + 1) << "/" << repetitions << "  seed " << (base_seed + r)
                              << "  test_acc " << accuracies.back() << std::endl;
        }
    }
    return summarize_accuracies(std::move(accuracies));
}

}  // namespace syllab
