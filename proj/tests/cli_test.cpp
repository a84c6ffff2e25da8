#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "ecase/config.hpp"
#include "ecase/corpus.hpp"
#include "support/test_util.hpp"

using namespace ecase;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args) {
    const char* bin = std::getenv("ECASE_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "ECASE_BIN must point at the built binary");
    const std::string cmd =
        std::string(bin) + " " + args + " > cli_test_out.tmp 2> cli_test_err.tmp";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file("cli_test_out.tmp");
    r.err = read_file("cli_test_err.tmp");
    return r;
}

struct TmpDir {
    fs::path path;
    explicit TmpDir(const std::string& name) : path(name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TmpDir() { fs::remove_all(path); }
};

RunConfig resolve_one(const std::string& preset, const std::vector<std::string>& lines = {}) {
    KeyValues kv;
    int n = 0;
    for (const auto& l : lines) kv.parse_line(l, ++n, "test");
    return resolve_config(preset, {kv});
}

}  // namespace

TEST_SUITE("presets") {
    TEST_CASE("case preset disables every module") {
        const RunConfig rc = resolve_one("case");
        CHECK_FALSE(rc.model.enable_sentence_attention);
        CHECK(rc.loss.lambda_sim == 0.0);
        CHECK(rc.aug.p_word == 0.0);
        CHECK(rc.aug.p_sentence == 0.0);
        CHECK(rc.model.input_form == InputForm::window);
    }

    TEST_CASE("ecase preset enables attention, similarity loss, and augmentation") {
        const RunConfig rc = resolve_one("ecase");
        CHECK(rc.model.enable_sentence_attention);
        CHECK(rc.loss.lambda_sim == doctest::Approx(0.01));
        CHECK(rc.aug.p_word == doctest::Approx(0.5));
        CHECK(rc.aug.p_sentence == doctest::Approx(0.15));
    }

    TEST_CASE("partial ablations carve out one module each") {
        const RunConfig aug = resolve_one("case_aug");
        CHECK_FALSE(aug.model.enable_sentence_attention);
        CHECK(aug.loss.lambda_sim == 0.0);
        CHECK(aug.aug.p_word == doctest::Approx(0.5));
        const RunConfig emc = resolve_one("case_emc");
        CHECK(emc.model.enable_sentence_attention);
        CHECK(emc.loss.lambda_sim == doctest::Approx(0.01));
        CHECK(emc.aug.p_word == 0.0);
    }

    TEST_CASE("pairwise baselines set their input forms") {
        CHECK(resolve_one("seqcon").model.input_form == InputForm::pair_in_context);
        CHECK(resolve_one("seqpair").model.input_form == InputForm::pair_isolated);
    }

    TEST_CASE("explicit keys override preset values") {
        const RunConfig rc = resolve_one("ecase", {"loss.lambda_sim = 0.05"});
        CHECK(rc.loss.lambda_sim == doctest::Approx(0.05));
        CHECK(rc.aug.p_word == doctest::Approx(0.5));  // untouched preset value
    }

    TEST_CASE("unknown preset is a config error") {
        CHECK_THROWS_AS(resolve_one("ekase"), ConfigError);
    }
}

TEST_SUITE("config resolution") {
    TEST_CASE("later layers win") {
        KeyValues file_kv, cli_kv;
        file_kv.set("window.context_length", "7");
        file_kv.set("train.epochs", "3");
        cli_kv.set("window.context_length", "9");
        const RunConfig rc = resolve_config("ecase", {file_kv, cli_kv});
        CHECK(rc.window.context_length == 9);
        CHECK(rc.train.epochs == 3);
    }

    TEST_CASE("every invalid key is reported at once") {
        KeyValues kv;
        kv.set("window.context_length", "soup");
        kv.set("aug.p_word", "maybe");
        kv.set("no.such.key", "1");
        try {
            resolve_config("", {kv});
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("window.context_length") != std::string::npos);
            CHECK(msg.find("aug.p_word") != std::string::npos);
            CHECK(msg.find("no.such.key") != std::string::npos);
            CHECK(msg.find("3 problems") != std::string::npos);
        }
    }

    TEST_CASE("out-of-range values fail validation") {
        CHECK_THROWS_AS(resolve_one("", {"aug.p_word = 1.5"}), ConfigError);
        CHECK_THROWS_AS(resolve_one("", {"train.epochs = 0"}), ConfigError);
        CHECK_THROWS_AS(resolve_one("", {"model.n_labels = 5"}), ConfigError);
    }

    TEST_CASE("serialized config reparses to the same settings") {
        const RunConfig rc = resolve_one("ecase", {"train.seeds = 3,5", "model.toy_dim = 24",
                                                   "model.n_attention_heads = 4",
                                                   "loss.lambda_sim = 0.02"});
        const std::string dump = serialize_config(rc);
        KeyValues kv;
        std::istringstream in(dump);
        std::string line;
        int n = 0;
        while (std::getline(in, line)) kv.parse_line(line, ++n, "dump");
        const RunConfig back = resolve_config("", {kv});
        CHECK(back.model.toy_dim == 24);
        CHECK(back.loss.lambda_sim == doctest::Approx(0.02));
        CHECK(back.train.seeds == std::vector<std::uint64_t>{3, 5});
        CHECK(back.aug.p_word == doctest::Approx(0.5));
        // identical settings modulo the informational preset comment
        auto strip_comments = [](const std::string& s) {
            std::istringstream ss(s);
            std::string line, out;
            while (std::getline(ss, line))
                if (!line.empty() && line[0] != '#') out += line + "\n";
            return out;
        };
        CHECK(strip_comments(serialize_config(back)) == strip_comments(dump));
    }

    TEST_CASE("class weight spec: none, auto, explicit") {
        CHECK(resolve_one("", {"loss.class_weights = none"}).loss.class_weights.empty());
        const RunConfig autow = resolve_one("", {"loss.class_weights = auto"});
        CHECK(autow.train.auto_class_weights);
        const RunConfig expl = resolve_one("", {"loss.class_weights = 1,2,3"});
        CHECK(expl.loss.class_weights == std::vector<double>{1.0, 2.0, 3.0});
    }

    TEST_CASE("deterministic fallback split partitions the corpus") {
        Corpus corpus;
        for (int i = 0; i < 10; ++i)
            corpus.push_back(testing::make_doc("d" + std::to_string(i), {"text one"}, {}));
        const auto [tr, va] = split_corpus(corpus, 0.2);
        CHECK(tr.size() + va.size() == corpus.size());
        CHECK(va.size() == 2);
        const auto [tr2, va2] = split_corpus(corpus, 0.2);
        CHECK(va == va2);
    }
}

TEST_SUITE("shipped data") {
    TEST_CASE("the bundled marker lexicon matches the built-in table") {
        const char* data = std::getenv("ECASE_DATA");
        REQUIRE_MESSAGE(data != nullptr, "ECASE_DATA must point at the data directory");
        const auto shipped = MarkerLexicon::from_file(std::string(data) + "/markers_pdtb.txt");
        CHECK(shipped.markers == MarkerLexicon::pdtb_default().markers);
        CHECK(shipped.hash() == MarkerLexicon::pdtb_default().hash());
    }

    TEST_CASE("the demo corpus is valid canonical JSONL") {
        const char* data = std::getenv("ECASE_DATA");
        REQUIRE(data != nullptr);
        const Corpus c = ingest(std::string(data) + "/demo_corpus.jsonl",
                                CorpusFormat::canonical_jsonl);
        CHECK(c.size() == 6);
        const auto s = stats(c, MarkerLexicon::pdtb_default());
        CHECK(s.n_heads == 6);
        CHECK(s.n_support > 0);
        CHECK(s.n_attack > 0);
        // round-trips through export
        CHECK(ingest_bytes(export_canonical(c), CorpusFormat::canonical_jsonl) == c);
    }
}

TEST_SUITE("cli process") {
    TEST_CASE("ingest: valid tsv converts, missing file exits 2, bad line exits 3") {
        TmpDir dir("cli_test_ingest");
        const std::string tsv = (dir.path / "in.tsv").string();
        write_file(tsv,
                   "P\tdoc1\tp0\t1\tThe claim sentence.\n"
                   "P\tdoc1\tp1\t0\tBecause of the evidence.\n"
                   "L\tdoc1\t0\t1\tsupport\n");
        const std::string out = (dir.path / "out.jsonl").string();
        auto r = run_cli("ingest --format generic_tsv --in " + tsv + " --out " + out);
        CHECK(r.code == 0);
        const Corpus c = ingest(out, CorpusFormat::canonical_jsonl);
        REQUIRE(c.size() == 1);
        CHECK(c[0].links.size() == 1);

        r = run_cli("ingest --format generic_tsv --in " + (dir.path / "absent.tsv").string() +
                    " --out " + out);
        CHECK(r.code == 2);
        CHECK(r.err.find("file not found") != std::string::npos);

        const std::string bad = (dir.path / "bad.tsv").string();
        write_file(bad, "P\tdoc1\tp0\t1\tfine text\nX\tdoc1\tbroken\n");
        r = run_cli("ingest --format generic_tsv --in " + bad + " --out " + out);
        CHECK(r.code == 3);
        CHECK(r.err.find("line 2") != std::string::npos);
    }

    TEST_CASE("stats prints corpus counts as JSON") {
        TmpDir dir("cli_test_stats");
        Corpus corpus = {testing::make_doc("d", {"However, one.", "plain claim"}, {1},
                                           {{1, 0, Label::support}})};
        const std::string path = (dir.path / "c.jsonl").string();
        write_file(path, export_canonical(corpus));
        const auto r = run_cli("stats --in " + path);
        CHECK(r.code == 0);
        const auto j = nlohmann::json::parse(r.out);
        CHECK(j.at("n_propositions") == 2);
        CHECK(j.at("n_support") == 1);
        CHECK(j.at("n_heads") == 1);
        CHECK(j.at("pct_with_markers") == doctest::Approx(0.5));
    }

    TEST_CASE("train writes a self-reproducing run directory; eval and analyze consume it") {
        TmpDir dir("cli_test_train");
        const auto corpus = testing::make_synthetic_corpus(6, 5);
        const auto val = testing::make_synthetic_corpus(2, 6);
        const std::string cpath = (dir.path / "corpus.jsonl").string();
        const std::string vpath = (dir.path / "val.jsonl").string();
        write_file(cpath, export_canonical(corpus));
        write_file(vpath, export_canonical(val));
        const std::string cfg = (dir.path / "tiny.conf").string();
        write_file(cfg,
                   "model.toy_dim = 16\nmodel.hidden_dim = 16\nmodel.toy_layers = 1\n"
                   "model.toy_vocab = 512\nmodel.n_attention_heads = 4\n"
                   "train.epochs = 2\ntrain.batch_size = 4\ntrain.max_steps = 4\n"
                   "train.learning_rate = 0.002\ntrain.seeds = 1\n");
        const std::string out = (dir.path / "runs").string();

        auto r = run_cli("train --preset ecase --lambda 0.05 --config " + cfg + " --corpus " +
                         cpath + " --val " + vpath + " --out " + out + " --run-name r1");
        CHECK(r.code == 0);
        const fs::path rd = fs::path(out) / "r1";
        CHECK(fs::exists(rd / "config.resolved"));
        // the explicit flag overrides the preset; the rest stays per preset
        const std::string resolved = read_file((rd / "config.resolved").string());
        CHECK(resolved.find("loss.lambda_sim = 0.05") != std::string::npos);
        CHECK(resolved.find("aug.p_word = 0.5") != std::string::npos);
        CHECK(fs::exists(rd / "checkpoint-seed1.eckp"));
        CHECK(fs::exists(rd / "report.json"));
        CHECK(fs::exists(rd / "report.csv"));
        CHECK(fs::exists(rd / "train_log-seed1.jsonl"));

        // rerunning from the persisted config reproduces the report exactly
        r = run_cli("train --config " + (rd / "config.resolved").string() + " --run-name r2");
        CHECK(r.code == 0);
        CHECK(read_file((fs::path(out) / "r2" / "report.json").string()) ==
              read_file((rd / "report.json").string()));

        // eval the checkpoint
        r = run_cli("eval --checkpoint " + (rd / "checkpoint-seed1.eckp").string() + " --in " +
                    vpath);
        CHECK(r.code == 0);
        const auto j = nlohmann::json::parse(r.out);
        CHECK(j.contains("macro_f1"));

        // analyze with window dumps
        r = run_cli("analyze --checkpoint " + (rd / "checkpoint-seed1.eckp").string() + " --in " +
                    vpath + " --out " + out + " --set paths.run_name=a1 --dump-windows");
        CHECK(r.code == 0);
        CHECK(fs::exists(fs::path(out) / "a1" / "analysis.json"));
        CHECK(fs::exists(fs::path(out) / "a1" / "windows.jsonl"));
        std::ifstream wdump(fs::path(out) / "a1" / "windows.jsonl");
        std::string line;
        REQUIRE(std::getline(wdump, line));
        CHECK(nlohmann::json::parse(line).contains("sep_positions"));
    }

    TEST_CASE("config validation failure exits 2 and lists the problems") {
        const auto r = run_cli("train --set aug.p_word=2.0 --set no.key=1");
        CHECK(r.code == 2);
        CHECK(r.err.find("aug.p_word") != std::string::npos);
        CHECK(r.err.find("no.key") != std::string::npos);
    }

    TEST_CASE("sweep creates one directory per length plus the aggregate table") {
        TmpDir dir("cli_test_sweep");
        const auto corpus = testing::make_synthetic_corpus(6, 15);
        const auto val = testing::make_synthetic_corpus(2, 16);
        const std::string cpath = (dir.path / "corpus.jsonl").string();
        const std::string vpath = (dir.path / "val.jsonl").string();
        write_file(cpath, export_canonical(corpus));
        write_file(vpath, export_canonical(val));
        const std::string out = (dir.path / "runs").string();
        auto r = run_cli(
            "sweep --lengths 1,2,3,4 --preset case --corpus " + cpath + " --val " + vpath +
            " --out " + out +
            " --run-name s1 --set model.toy_dim=16 --set model.hidden_dim=16"
            " --set model.toy_layers=1 --set model.toy_vocab=512"
            " --set model.n_attention_heads=4 --set train.epochs=1 --set train.batch_size=4"
            " --set train.max_steps=2 --set train.seeds=1");
        CHECK(r.code == 0);
        const fs::path sd = fs::path(out) / "s1";
        int run_dirs = 0;
        for (int L : {1, 2, 3, 4})
            if (fs::exists(sd / ("L" + std::to_string(L)) / "report.json")) ++run_dirs;
        CHECK(run_dirs == 4);
        CHECK(fs::exists(sd / "sweep_table.json"));
        CHECK(fs::exists(sd / "sweep_table.csv"));
        const auto table = nlohmann::json::parse(read_file((sd / "sweep_table.json").string()));
        CHECK(table.at("rows").size() == 4);

        r = run_cli("sweep --lengths 2,2 --preset case --corpus " + cpath + " --val " + vpath +
                    " --out " + out + " --run-name s2");
        CHECK(r.code == 2);
        CHECK(r.err.find("duplicate") != std::string::npos);
    }

    TEST_CASE("unknown subcommand usage exits 2") {
        const auto r = run_cli("frobnicate");
        CHECK(r.code == 2);
    }
}
