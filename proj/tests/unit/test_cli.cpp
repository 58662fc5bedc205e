#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "syllab/checkpoint.hpp"
#include "syllab/lexicon.hpp"
#include "syllab/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Result run(const fs::path& dir, const std::string& args) {
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";
    const std::string cmd =
        std::string("\"") + SYLLAB_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

const char* kTiny = "--preset small --embedding-dim 6 --lstm-dim 5 --conv-filters 4 --conv-blocks 1 --batch-size 8";

}  // namespace

TEST_CASE("cli end to end") {
    const fs::path dir = fs::temp_directory_path() / "syllab_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);

    {
        std::ofstream lex(dir / "lexicon.tsv");
        for (const auto& e : syllab::generate_synthetic_language(80, 4)) {
            lex << syllab::render_entry(e, syllab::LexiconFormat{}) << '\n';
        }
        lex << "pata\tpa-ta\n";  // duplicate word, removed by cleaning
        lex << "pata\tpat-a\n";
    }

    Result r = run(dir, "prepare --lexicon \"" + (dir / "lexicon.tsv").string() + "\" --seed 3 --out \"" +
                            (dir / "split").string() + "\"");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(fs::exists(dir / "split" / "train.tsv"));
    CHECK(fs::exists(dir / "split" / "split.meta"));

    const std::string ckpt = (dir / "model.ckpt").string();
    r = run(dir, "train --split-dir \"" + (dir / "split").string() + "\" " + kTiny + " --max-epochs 1 --seed 9 --out \"" +
                     ckpt + "\" --quiet");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(fs::exists(ckpt));
    CHECK(fs::exists(ckpt + ".history.jsonl"));
    const auto loaded = syllab::load_checkpoint(ckpt);
    CHECK(loaded.training_seed == 9);
    CHECK(loaded.metadata.at("epochs_run") == "1");

    r = run(dir, "evaluate --checkpoint \"" + ckpt + "\" --data \"" + (dir / "split" / "test.tsv").string() + "\"");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.out.find("word_accuracy") != std::string::npos);

    {
        std::ofstream words(dir / "words.txt");
        words << "pata\n\nkot\n";
    }
    r = run(dir, "syllabify --checkpoint \"" + ckpt + "\" --input \"" + (dir / "words.txt").string() + "\"");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    std::istringstream lines(r.out);
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
        std::string stripped;
        for (char c : line) if (c != '-') stripped += c;
        CHECK((stripped == "pata" || stripped == "kot"));
        ++n;
    }
    CHECK(n == 2);
    CHECK(r.err.find("line 2") != std::string::npos);

    SUBCASE("usage errors exit 1") {
        CHECK(run(dir, "").code == 1);
        CHECK(run(dir, "train --split-dir x").code == 1);
        CHECK(run(dir, "train --split-dir \"" + (dir / "split").string() + "\" --conv-width 0 --out \"" +
                           (dir / "bad.ckpt").string() + "\"")
                  .code == 1);
        CHECK_FALSE(fs::exists(dir / "bad.ckpt"));
    }
    SUBCASE("data errors exit 2") {
        {
            std::ofstream bad(dir / "bad.tsv");
            bad << "pata\tpa--ta\n";
        }
        r = run(dir, "prepare --lexicon \"" + (dir / "bad.tsv").string() + "\" --out \"" + (dir / "s2").string() + "\"");
        CHECK(r.code == 2);
        CHECK(r.err.find("line 1") != std::string::npos);
        CHECK(run(dir, "evaluate --checkpoint \"" + (dir / "missing.ckpt").string() + "\" --data \"" +
                           (dir / "split" / "test.tsv").string() + "\"")
                  .code == 2);
    }
    fs::remove_all(dir / "s2");
}
