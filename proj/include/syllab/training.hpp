#pragma once
// Mini-batch training with Adam, global-norm clipping and early stopping on
// the development set; word-level evaluation; the repeated-run experiment
// harness.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "syllab/lexicon.hpp"
#include "syllab/network.hpp"

namespace syllab {

enum class StopMetric { dev_word_accuracy, dev_loss };

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double dev_word_accuracy = 0.0;
    double dev_loss = 0.0;
};

// Tracks the best epoch; "improved" means strictly better.
class EarlyStopping {
public:
    EarlyStopping(StopMetric metric, std::size_t patience) : metric_(metric), patience_(patience) {}

    // Returns true when this epoch is the new best.
    bool update(const EpochRecord& record);
    bool should_stop() const noexcept { return since_best_ >= patience_; }
    std::size_t best_epoch() const noexcept { return best_epoch_; }

private:
    StopMetric metric_;
    std::size_t patience_;
    std::size_t best_epoch_ = 0;
    double best_value_ = 0.0;
    std::size_t since_best_ = 0;
};

struct TrainingOptions {
    StopMetric stop_metric = StopMetric::dev_word_accuracy;
    // Human-readable progress lines; nullptr for silence.
    std::ostream* progress = nullptr;
    // One JSON object per epoch (see docs/formats.md).
    std::ostream* history_jsonl = nullptr;
};

struct TrainingRun {
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    bool stopped_early = false;
    // Mean training loss of the initial parameters (eval mode), before any update.
    double initial_train_loss = 0.0;
    ModelParameters final_params;  // restored from best_epoch
    PhoneVocabulary vocabulary;
    std::size_t max_len = 0;
    std::uint64_t seed = 0;
};

// Shuffles [0, n_entries) with rng, then chunks; the last batch may be short.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n_entries, std::size_t batch_size, Rng& rng);

// Loss of one encoded word under the configured head (CRF NLL or summed
// per-position cross entropy). With `grads`, scale * gradient is accumulated.
double word_loss(const EncodedEntry& word, const ModelParameters& params, const ModelConfig& config, Mode mode,
                 Rng* rng = nullptr, ModelParameters* grads = nullptr, double scale = 1.0);

// Decoded label path (Viterbi or per-position argmax) in eval mode.
LabelPath predict(const EncodedEntry& word, const ModelParameters& params, const ModelConfig& config);

// Fraction of entries whose whole boundary sequence is predicted exactly.
// Throws DataError on an empty list.
double evaluate_word_accuracy(const ModelParameters& params, const ModelConfig& config, const PhoneVocabulary& vocab,
                              std::span<const SyllabifiedEntry> entries);

// Requires non-empty train and dev. Vocabulary comes from the training
// entries; max_len spans train, dev and test. Throws NumericError naming the
// epoch and batch if a batch loss is not finite.
TrainingRun train(const ModelConfig& config, const DatasetSplit& split, std::uint64_t seed,
                  const TrainingOptions& options = {});

struct ExperimentReport {
    std::size_t repetitions = 0;
    std::vector<double> per_run_test_accuracy;  // fractions in [0, 1]
    double mean = 0.0;
    double std_dev = 0.0;  // sample (n - 1) standard deviation; 0 for one run

    // Percentages, e.g. "98.52 ± 0.11".
    std::string format(int decimals = 2) const;
};

// Mean and sample standard deviation of `values`.
ExperimentReport summarize_accuracies(std::vector<double> values);

// Trains with seeds base_seed .. base_seed + repetitions - 1 on the same split.
ExperimentReport run_experiment(const ModelConfig& config, const DatasetSplit& split, std::size_t repetitions,
                                std::uint64_t base_seed, const TrainingOptions& options = {});

}  // namespace syllab
