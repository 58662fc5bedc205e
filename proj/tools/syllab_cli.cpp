// syllab: prepare lexicon splits, train, evaluate and syllabify.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "syllab/checkpoint.hpp"
#include "syllab/error.hpp"
#include "syllab/lexicon.hpp"
#include "syllab/training.hpp"

namespace {

using namespace syllab;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

class UsageError : public Error {
public:
    using Error::Error;
};

std::string format_double(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

LexiconFormat make_format(const std::string& tokenization, const std::string& delimiter) {
    if (delimiter.size() != 1) throw UsageError("--delimiter must be a single character");
    LexiconFormat format;
    format.tokenization = tokenization_from_string(tokenization);
    format.syllable_delimiter = delimiter[0];
    format.validate();
    return format;
}

// --- prepare ------------------------------------------------------------------

struct PrepareArgs {
    std::string lexicon;
    std::string tokenization = "char";
    std::string delimiter = "-";
    std::uint64_t seed = 1;
    std::string out_dir;
};

int cmd_prepare(const PrepareArgs& a) {
    const LexiconFormat format = make_format(a.tokenization, a.delimiter);
    auto entries = read_lexicon(a.lexicon, format);
    const PreparedDataset prepared = prepare_dataset(std::move(entries), format, a.seed);
    write_prepared(a.out_dir, prepared);
    const auto& s = prepared.split;
    std::cout << "entries " << prepared.input_entries << "  removed_duplicates " << prepared.removed_duplicates
              << "  train " << s.train.size() << "  dev " << s.dev.size() << "  test " << s.test.size()
              << "  max_len " << prepared.max_len << '\n';
    return kExitOk;
}

// --- train --------------------------------------------------------------------

struct ModelOverrides {
    std::optional<std::string> output_head;
    std::optional<std::size_t> embedding_dim, lstm_dim, conv_blocks, conv_filters, conv_width, pool_size;
    std::optional<std::size_t> batch_size, max_epochs, patience;
    std::optional<double> dropout, clip, learning_rate;
};

ModelConfig build_config(const std::string& preset, const ModelOverrides& o) {
    ModelConfig c;
    try {
        c = ModelConfig::preset(preset_from_string(preset));
        if (o.output_head) c.output_head = output_head_from_string(*o.output_head);
        if (o.embedding_dim) c.embedding_dim = *o.embedding_dim;
        if (o.lstm_dim) c.lstm_dim = *o.lstm_dim;
        if (o.conv_blocks) c.conv_blocks = *o.conv_blocks;
        if (o.conv_filters) c.conv_filters = *o.conv_filters;
        if (o.conv_width) c.conv_width = *o.conv_width;
        if (o.pool_size) c.pool_size = *o.pool_size;
        if (o.batch_size) c.batch_size = *o.batch_size;
        if (o.max_epochs) c.max_epochs = *o.max_epochs;
        if (o.patience) c.patience = *o.patience;
        if (o.dropout) c.dropout_rate = *o.dropout;
        if (o.clip) c.clip_threshold = *o.clip;
        if (o.learning_rate) c.learning_rate = *o.learning_rate;
        c.validate();
    } catch (const ShapeError& e) {
        throw UsageError(e.what());
    }
    return c;
}

struct TrainArgs {
    std::string split_dir;
    std::string preset = "base";
    ModelOverrides overrides;
    std::string stop_metric = "accuracy";
    std::uint64_t seed = 1;
    std::string out;
    std::string history;
    bool quiet = false;
};

TrainingOptions make_options(const std::string& stop_metric, bool quiet) {
    TrainingOptions options;
    if (stop_metric == "accuracy") {
        options.stop_metric = StopMetric::dev_word_accuracy;
    } else if (stop_metric == "loss") {
        options.stop_metric = StopMetric::dev_loss;
    } else {
        throw UsageError("--stop-metric must be 'accuracy' or 'loss'");
    }
    if (!quiet) options.progress = &std::cout;
    return options;
}

int cmd_train(const TrainArgs& a) {
    const ModelConfig config = build_config(a.preset, a.overrides);
    TrainingOptions options = make_options(a.stop_metric, a.quiet);
    const PreparedDataset prepared = read_prepared(a.split_dir);

    const std::string history_path = a.history.empty() ? a.out + ".history.jsonl" : a.history;
    std::ofstream history(history_path, std::ios::binary | std::ios::trunc);
    if (!history) throw DataError("cannot write history log '" + history_path + "'");
    options.history_jsonl = &history;

    const TrainingRun run = train(config, prepared.split, a.seed, options);
    const double dev_acc = evaluate_word_accuracy(run.final_params, config, run.vocabulary, prepared.split.dev);
    const double test_acc = prepared.split.test.empty()
                                ? 0.0
                                : evaluate_word_accuracy(run.final_params, config, run.vocabulary, prepared.split.test);

    Checkpoint ckpt;
    ckpt.config = config;
    ckpt.vocabulary = run.vocabulary;
    ckpt.lexicon_format = prepared.format;
    ckpt.parameters = run.final_params;
    ckpt.training_seed = a.seed;
    ckpt.metadata = {{"preset", a.preset},
                     {"best_epoch", std::to_string(run.best_epoch)},
                     {"epochs_run", std::to_string(run.history.size())},
                     {"stopped_early", run.stopped_early ? "true" : "false"},
                     {"dev_word_accuracy", format_double(dev_acc)},
                     {"test_word_accuracy", format_double(test_acc)},
                     {"max_len", std::to_string(run.max_len)},
                     {"parameter_count", std::to_string(run.final_params.scalar_count())}};
    save_checkpoint(ckpt, a.out);

    std::cout << "best_epoch " << run.best_epoch << "  dev_word_accuracy " << dev_acc << "  test_word_accuracy "
              << test_acc << '\n'
              << "saved " << a.out << '\n';
    return kExitOk;
}

// --- evaluate -----------------------------------------------------------------

struct EvaluateArgs {
    std::vector<std::string> checkpoints;
    std::string data;
};

int cmd_evaluate(const EvaluateArgs& a) {
    std::vector<double> accuracies;
    for (const auto& path : a.checkpoints) {
        const Checkpoint ckpt = load_checkpoint(path);
        const auto entries = read_lexicon(a.data, ckpt.lexicon_format);
        if (entries.empty()) throw DataError("dataset '" + a.data + "' has no entries");
        std::size_t oov_phones = 0, oov_words = 0;
        for (const auto& e : entries) {
            std::size_t unknown = 0;
            for (const auto& p : e.phones) unknown += ckpt.vocabulary.contains(p) ? 0 : 1;
            oov_phones += unknown;
            oov_words += unknown > 0 ? 1 : 0;
        }
        const double acc = evaluate_word_accuracy(ckpt.parameters, ckpt.config, ckpt.vocabulary, entries);
        accuracies.push_back(acc);
        std::cout << path << "  word_accuracy " << std::fixed << std::setprecision(6) << acc << std::defaultfloat
                  << "  words " << entries.size() << "  oov_phones " << oov_phones << "  oov_words " << oov_words
                  << '\n';
    }
    if (accuracies.size() > 1) {
        std::cout << "mean ± sd over " << accuracies.size() << " checkpoints: "
                  << summarize_accuracies(accuracies).format() << '\n';
    }
    return kExitOk;
}

// --- syllabify ----------------------------------------------------------------

struct SyllabifyArgs {
    std::string checkpoint;
    std::string input;
};

int cmd_syllabify(const SyllabifyArgs& a) {
    const Checkpoint ckpt = load_checkpoint(a.checkpoint);
    std::ifstream file;
    std::istream* in = &std::cin;
    if (!a.input.empty() && a.input != "-") {
        file.open(a.input, std::ios::binary);
        if (!file) throw DataError("cannot open input '" + a.input + "'");
        in = &file;
    }
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(*in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto phones = tokenize_phones(line, ckpt.lexicon_format);
        if (phones.empty()) {
            std::cerr << "warning: line " << line_number << ": empty, skipped\n";
            continue;
        }
        const EncodedEntry word = encode_phones(phones, ckpt.vocabulary, phones.size());
        if (word.unknown_phones > 0) {
            std::cerr << "warning: line " << line_number << ": " << word.unknown_phones
                      << " phone(s) not in the model vocabulary, treated as unknown\n";
        }
        const LabelPath path = predict(word, ckpt.parameters, ckpt.config);
        std::cout << decode_boundaries(phones, path.labels, ckpt.lexicon_format).text << '\n';
    }
    return kExitOk;
}

// --- experiment ---------------------------------------------------------------

struct ExperimentArgs {
    std::string split_dir;
    std::string preset = "base";
    ModelOverrides overrides;
    std::string stop_metric = "accuracy";
    std::size_t repetitions = 20;
    std::uint64_t seed = 1;
    bool quiet = false;
};

int cmd_experiment(const ExperimentArgs& a) {
    const ModelConfig config = build_config(a.preset, a.overrides);
    if (a.repetitions < 1) throw UsageError("--repetitions must be >= 1");
    const TrainingOptions options = make_options(a.stop_metric, a.quiet);
    const PreparedDataset prepared = read_prepared(a.split_dir);
    const ExperimentReport report = run_experiment(config, prepared.split, a.repetitions, a.seed, options);
    for (std::size_t i = 0; i < report.per_run_test_accuracy.size(); ++i) {
        std::cout << "run " << (i + 1) << "  seed " << (a.seed + i) << "  test_word_accuracy "
                  << format_double(report.per_run_test_accuracy[i]) << '\n';
    }
    std::cout << "test word accuracy (%): " << report.format() << '\n';
    return kExitOk;
}

void add_model_options(CLI::App* cmd, std::string& preset, ModelOverrides& o, std::string& stop_metric) {
    cmd->add_option("--preset", preset, "base, small or base-softmax")->capture_default_str();
    cmd->add_option("--output-head", o.output_head, "crf or softmax");
    cmd->add_option("--embedding-dim", o.embedding_dim);
    cmd->add_option("--lstm-dim", o.lstm_dim);
    cmd->add_option("--conv-blocks", o.conv_blocks);
    cmd->add_option("--conv-filters", o.conv_filters);
    cmd->add_option("--conv-width", o.conv_width);
    cmd->add_option("--pool-size", o.pool_size);
    cmd->add_option("--dropout", o.dropout);
    cmd->add_option("--batch-size", o.batch_size);
    cmd->add_option("--max-epochs", o.max_epochs);
    cmd->add_option("--patience", o.patience);
    cmd->add_option("--clip", o.clip, "global gradient-norm threshold");
    cmd->add_option("--learning-rate", o.learning_rate);
    cmd->add_option("--stop-metric", stop_metric, "accuracy or loss")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neural syllabification: BiLSTM-CNN encoder with CRF or softmax output"};
    app.require_subcommand(1);

    PrepareArgs prepare;
    auto* p = app.add_subcommand("prepare", "Clean a lexicon and write train/dev/test splits");
    p->add_option("--lexicon", prepare.lexicon, "word<TAB>syllabified pronunciation, one per line")->required();
    p->add_option("--tokenization", prepare.tokenization, "char or whitespace")->capture_default_str();
    p->add_option("--delimiter", prepare.delimiter, "syllable delimiter")->capture_default_str();
    p->add_option("--seed", prepare.seed)->capture_default_str();
    p->add_option("--out", prepare.out_dir, "output directory")->required();

    TrainArgs train_args;
    auto* t = app.add_subcommand("train", "Train a model on a prepared split");
    t->add_option("--split-dir", train_args.split_dir)->required();
    add_model_options(t, train_args.preset, train_args.overrides, train_args.stop_metric);
    t->add_option("--seed", train_args.seed)->capture_default_str();
    t->add_option("--out", train_args.out, "checkpoint path")->required();
    t->add_option("--history", train_args.history, "JSON-lines epoch log (default: <out>.history.jsonl)");
    t->add_flag("--quiet", train_args.quiet);

    EvaluateArgs eval_args;
    auto* e = app.add_subcommand("evaluate", "Word accuracy of one or more checkpoints on a lexicon file");
    e->add_option("--checkpoint", eval_args.checkpoints)->required();
    e->add_option("--data", eval_args.data)->required();

    SyllabifyArgs syl_args;
    auto* s = app.add_subcommand("syllabify", "Syllabify phone strings, one word per line");
    s->add_option("--checkpoint", syl_args.checkpoint)->required();
    s->add_option("--input", syl_args.input, "input file (default: stdin)");

    ExperimentArgs exp_args;
    auto* x = app.add_subcommand("experiment", "Repeat training with consecutive seeds; report mean ± sd");
    x->add_option("--split-dir", exp_args.split_dir)->required();
    add_model_options(x, exp_args.preset, exp_args.overrides, exp_args.stop_metric);
    x->add_option("--repetitions", exp_args.repetitions)->capture_default_str();
    x->add_option("--seed", exp_args.seed, "first seed")->capture_default_str();
    x->add_flag("--quiet", exp_args.quiet);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*p) return cmd_prepare(prepare);
        if (*t) return cmd_train(train_args);
        if (*e) return cmd_evaluate(eval_args);
        if (*s) return cmd_syllabify(syl_args);
        if (*x) return cmd_experiment(exp_args);
    } catch (const UsageError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitUsage;
    } catch (const NumericError& err) {
        std::cerr << "numeric failure: " << err.what() << '\n';
        return kExitNumeric;
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitData;
    } catch (const std::filesystem::filesystem_error& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
