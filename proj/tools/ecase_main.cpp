// ecase: train and evaluate proposition-level argument structure models.
// Subcommands: ingest, stats, train, eval, analyze, sweep.
// Exit codes: 0 ok, 2 config/usage, 3 data error, 4 runtime failure.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ecase/checkpoint.hpp"
#include "ecase/config.hpp"
#include "ecase/corpus.hpp"
#include "ecase/eval.hpp"
#include "ecase/train.hpp"

namespace fs = std::filesystem;
using namespace ecase;

namespace {

void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw ConfigError(what + ": no path given");
    if (!fs::exists(path)) throw ConfigError("file not found: " + path);
}

MarkerLexicon load_markers(const std::string& path) {
    if (path.empty()) return MarkerLexicon::pdtb_default();
    require_file(path, "--markers");
    return MarkerLexicon::from_file(path);
}

std::string timestamp_name(const char* prefix) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s-%04d%02d%02d-%02d%02d%02d", prefix, tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

fs::path make_run_dir(const RunConfig& rc, const char* prefix) {
    fs::path dir = fs::path(rc.out_dir) /
                   (rc.run_name.empty() ? timestamp_name(prefix) : rc.run_name);
    int suffix = 1;
    fs::path candidate = dir;
    while (fs::exists(candidate) && rc.run_name.empty())
        candidate = dir.string() + "-" + std::to_string(++suffix);
    fs::create_directories(candidate);
    return candidate;
}

struct CommonArgs {
    std::string config_file;
    std::string preset;
    std::vector<std::string> sets;
    long seed = -1;
    std::string out;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--config", config_file, "flat key=value configuration file");
        cmd->add_option("--preset", preset, "ecase | case | case_aug | case_emc | seqcon | seqpair");
        cmd->add_option("--set", sets, "override any config key, e.g. --set loss.lambda_sim=0.05");
        cmd->add_option("--seed", seed, "single training seed (replaces train.seeds)");
        cmd->add_option("--out", out, "output directory");
    }

    RunConfig resolve(const KeyValues& extra) const {
        std::vector<KeyValues> layers;
        if (!config_file.empty()) {
            require_file(config_file, "--config");
            layers.push_back(KeyValues::from_file(config_file));
        }
        KeyValues cli;
        for (const auto& s : sets) cli.parse_line(s, 0, "--set");
        for (const auto& [k, v] : extra.items) cli.set(k, v);
        if (seed >= 0) cli.set("train.seeds", std::to_string(seed));
        if (!out.empty()) cli.set("paths.out", out);
        layers.push_back(cli);
        return resolve_config(preset, layers);
    }
};

Corpus load_canonical(const std::string& path, const char* what) {
    require_file(path, what);
    Corpus corpus = ingest(path, CorpusFormat::canonical_jsonl);
    if (corpus.empty()) throw DataError(std::string(what) + ": no documents in " + path);
    return corpus;
}

void write_reports(const fs::path& dir, const std::vector<EvalReport>& reports) {
    if (reports.size() == 1) {
        write_file((dir / "report.json").string(), report_to_json(reports.front()).dump(2) + "\n");
        write_file((dir / "report.csv").string(), report_to_csv(reports.front()));
    } else {
        const AggregateReport agg = aggregate_seeds(reports);
        nlohmann::json j = aggregate_to_json(agg);
        nlohmann::json per_seed = nlohmann::json::array();
        for (const auto& r : reports) per_seed.push_back(report_to_json(r));
        j["per_seed"] = std::move(per_seed);
        write_file((dir / "report.json").string(), j.dump(2) + "\n");
        write_file((dir / "report.csv").string(), aggregate_to_csv(agg));
    }
}

// ---------------------------------------------------------------------------

int cmd_ingest(const std::string& format, const std::string& in, const std::string& out,
               bool collapse_attack) {
    require_file(in, "--in");
    IngestOptions opt;
    opt.collapse_attack = collapse_attack;
    const Corpus corpus = ingest(in, corpus_format_from_name(format), opt);
    write_file(out, export_canonical(corpus));
    std::cout << "ingested " << corpus.size() << " documents -> " << out << "\n";
    return 0;
}

int cmd_stats(const std::string& in, const std::string& markers_path) {
    const Corpus corpus = load_canonical(in, "--in");
    const MarkerLexicon lex = load_markers(markers_path);
    const CorpusStats s = stats(corpus, lex);
    nlohmann::json j{{"n_documents", corpus.size()},
                     {"n_propositions", s.n_propositions},
                     {"n_support", s.n_support},
                     {"n_attack", s.n_attack},
                     {"n_heads", s.n_heads},
                     {"pct_with_markers", s.pct_with_markers}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

struct SplitCorpora {
    Corpus train_docs, val_docs, eval_docs;
};

SplitCorpora load_splits(const RunConfig& rc) {
    SplitCorpora sc;
    Corpus full = load_canonical(rc.corpus_path, "paths.corpus");
    if (!rc.val_path.empty()) {
        sc.train_docs = std::move(full);
        sc.val_docs = load_canonical(rc.val_path, "paths.val");
    } else {
        auto [tr, va] = split_corpus(full, rc.val_fraction);
        sc.train_docs = std::move(tr);
        sc.val_docs = std::move(va);
    }
    sc.eval_docs = rc.eval_path.empty() ? sc.val_docs : load_canonical(rc.eval_path, "paths.eval");
    return sc;
}

int cmd_train(const CommonArgs& common, const KeyValues& extra) {
    RunConfig rc = common.resolve(extra);
    const SplitCorpora sc = load_splits(rc);
    const MarkerLexicon lex = load_markers(rc.markers_path);
    const fs::path dir = make_run_dir(rc, "run");
    write_file((dir / "config.resolved").string(), serialize_config(rc));

    std::vector<EvalReport> reports;
    for (const std::uint64_t seed : rc.train.seeds) {
        std::ofstream log(dir / ("train_log-seed" + std::to_string(seed) + ".jsonl"));
        TrainResult tr = train(sc.train_docs, sc.val_docs, rc.model, rc.window, rc.aug, rc.loss,
                               rc.train, lex, seed, &log);
        const fs::path ck_path = dir / ("checkpoint-seed" + std::to_string(seed) + ".eckp");
        tr.checkpoint.save(ck_path.string());
        auto preds = predict(tr.checkpoint, sc.eval_docs);
        EvalReport rep = full_report(preds, rc.model.n_labels, sc.eval_docs, lex, rc.unit,
                                     rc.bucket_edges);
        rep.seed = seed;
        reports.push_back(std::move(rep));
        std::cout << "seed " << seed << ": best epoch " << tr.best_epoch << ", val macro-F1 "
                  << tr.best_val_macro << ", eval macro-F1 " << reports.back().macro_f1
                  << ", checkpoint " << ck_path.string() << "\n";
    }
    write_reports(dir, reports);
    std::cout << "run directory: " << dir.string() << "\n";
    return 0;
}

int cmd_eval(const CommonArgs& common, const std::string& checkpoint_path, const std::string& in,
             const std::string& setting, const std::string& markers_path, const KeyValues& extra) {
    RunConfig rc = common.resolve(extra);
    require_file(checkpoint_path, "--checkpoint");
    const Corpus corpus = load_canonical(in, "--in");
    const MarkerLexicon lex = load_markers(markers_path);
    const Checkpoint ck = Checkpoint::load(checkpoint_path);
    std::optional<Setting> setting_override;
    if (!setting.empty()) setting_override = setting_from_name(setting);
    const auto preds = predict(ck, corpus, setting_override);
    const int n_labels = ck.config.at("model").at("n_labels").get<int>();
    EvalReport rep = full_report(preds, n_labels, corpus, lex, rc.unit, rc.bucket_edges);
    rep.seed = ck.config.value("seed", 0ULL);
    if (!common.out.empty()) {
        const fs::path dir = make_run_dir(rc, "eval");
        write_reports(dir, {rep});
        std::cout << "reports written to " << dir.string() << "\n";
    } else {
        std::cout << report_to_json(rep).dump(2) << "\n";
    }
    return 0;
}

int cmd_analyze(const CommonArgs& common, const std::string& checkpoint_path,
                const std::string& in, const std::string& markers_path, bool dump_windows,
                const KeyValues& extra) {
    RunConfig rc = common.resolve(extra);
    require_file(checkpoint_path, "--checkpoint");
    const Corpus corpus = load_canonical(in, "--in");
    const MarkerLexicon lex = load_markers(markers_path);
    const Checkpoint ck = Checkpoint::load(checkpoint_path);
    const auto preds = predict(ck, corpus);
    const int n_labels = ck.config.at("model").at("n_labels").get<int>();

    nlohmann::json j;
    {
        const auto buckets =
            distance_bucket_report(preds, n_labels, rc.unit, rc.bucket_edges);
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& b : buckets)
            rows.push_back({{"range", b.range_name()}, {"macro_f1", b.macro_f1}, {"n", b.n}});
        j["distance_buckets"] = std::move(rows);
        j["distance_unit"] = rc.unit == DistanceUnit::propositions ? "propositions" : "tokens";
    }
    {
        const auto ms = marker_split_report(preds, n_labels, corpus, lex);
        j["marker_split"] = {{"with", ms.with_f1},
                             {"without", ms.without_f1},
                             {"n_with", ms.n_with},
                             {"n_without", ms.n_without}};
    }
    const EvalReport rep = evaluate(preds, n_labels);
    j["macro_f1"] = rep.macro_f1;

    if (!common.out.empty()) {
        const fs::path dir = make_run_dir(rc, "analyze");
        write_file((dir / "analysis.json").string(), j.dump(2) + "\n");
        if (dump_windows) {
            const LoadedModel lm = load_model(ck);
            std::ofstream dump(dir / "windows.jsonl");
            for (const auto& doc : corpus) {
                const auto plans = build_plans(doc, lm.window_cfg, lm.setting,
                                               lm.model.cfg.input_form, *lm.tokenizer);
                for (const auto& plan : plans)
                    for (const auto& g : plan.groups) dump << window_to_jsonl(g) << "\n";
            }
        }
        std::cout << "analysis written to " << dir.string() << "\n";
    } else {
        std::cout << j.dump(2) << "\n";
        if (dump_windows) {
            const LoadedModel lm = load_model(ck);
            for (const auto& doc : corpus) {
                const auto plans = build_plans(doc, lm.window_cfg, lm.setting,
                                               lm.model.cfg.input_form, *lm.tokenizer);
                for (const auto& plan : plans)
                    for (const auto& g : plan.groups) std::cout << window_to_jsonl(g) << "\n";
            }
        }
    }
    return 0;
}

int cmd_sweep(const CommonArgs& common, const std::string& lengths_csv, const KeyValues& extra) {
    RunConfig rc = common.resolve(extra);
    std::vector<int> lengths;
    {
        std::istringstream ss(lengths_csv);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                lengths.push_back(std::stoi(item));
            } catch (const std::exception&) {
                throw ConfigError("--lengths: expected comma-separated integers");
            }
        }
    }
    const SplitCorpora sc = load_splits(rc);
    const MarkerLexicon lex = load_markers(rc.markers_path);
    const fs::path dir = make_run_dir(rc, "sweep");
    write_file((dir / "config.resolved").string(), serialize_config(rc));

    // one run directory per context length, plus the aggregate table
    SweepResult result;
    if (lengths.size() < 2) throw ConfigError("sweep needs at least 2 context lengths");
    for (std::size_t i = 1; i < lengths.size(); ++i)
        for (std::size_t k = 0; k < i; ++k)
            if (lengths[i] == lengths[k])
                throw ConfigError("sweep lengths contain a duplicate: " +
                                  std::to_string(lengths[i]));
    for (const int L : lengths) {
        const fs::path subdir = dir / ("L" + std::to_string(L));
        fs::create_directories(subdir);
        WindowConfig wl = rc.window;
        wl.context_length = L;
        SweepRow row;
        row.context_length = L;
        std::vector<EvalReport> reports;
        for (const std::uint64_t seed : rc.train.seeds) {
            std::ofstream log(subdir / ("train_log-seed" + std::to_string(seed) + ".jsonl"));
            TrainResult tr = train(sc.train_docs, sc.val_docs, rc.model, wl, rc.aug, rc.loss,
                                   rc.train, lex, seed, &log);
            tr.checkpoint.save((subdir / ("checkpoint-seed" + std::to_string(seed) + ".eckp")).string());
            const auto preds = predict(tr.checkpoint, sc.eval_docs);
            EvalReport rep = evaluate(preds, rc.model.n_labels);
            rep.seed = seed;
            row.per_seed.push_back(rep.macro_f1);
            reports.push_back(std::move(rep));
        }
        write_reports(subdir, reports);
        double mean = 0.0;
        for (double v : row.per_seed) mean += v;
        mean /= static_cast<double>(row.per_seed.size());
        double var = 0.0;
        for (double v : row.per_seed) var += (v - mean) * (v - mean);
        var /= static_cast<double>(row.per_seed.size());
        row.macro_f1_mean = mean;
        row.macro_f1_stdev = std::sqrt(var);
        std::cout << "L=" << L << ": macro-F1 " << row.macro_f1_mean << " +/- "
                  << row.macro_f1_stdev << "\n";
        result.rows.push_back(std::move(row));
    }
    write_file((dir / "sweep_table.json").string(), result.to_json().dump(2) + "\n");
    write_file((dir / "sweep_table.csv").string(), result.to_csv());
    std::cout << "sweep directory: " << dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ecase: context-aware argument structure extraction"};
    app.require_subcommand(1);

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "convert a corpus to canonical JSONL");
    std::string ingest_format = "canonical_jsonl", ingest_in, ingest_out;
    bool collapse_attack = false;
    ingest_cmd->add_option("--format", ingest_format,
                           "canonical_jsonl | essays_brat | generic_tsv");
    ingest_cmd->add_option("--in", ingest_in, "input file (or .ann directory for brat)")
        ->required();
    ingest_cmd->add_option("--out", ingest_out, "output canonical JSONL path")->required();
    ingest_cmd->add_flag("--collapse-attack", collapse_attack,
                         "drop attack links on ingest (two-label corpora)");

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "corpus statistics");
    std::string stats_in, stats_markers;
    stats_cmd->add_option("--in", stats_in, "canonical JSONL corpus")->required();
    stats_cmd->add_option("--markers", stats_markers, "marker lexicon file (default: built-in)");

    // train
    auto* train_cmd = app.add_subcommand("train", "train one model per seed");
    CommonArgs train_common;
    train_common.add_to(train_cmd);
    std::string t_corpus, t_val, t_eval, t_markers, t_run_name, t_setting;
    double t_lambda = -1.0;
    int t_context = -1;
    train_cmd->add_option("--corpus", t_corpus, "training corpus (canonical JSONL)");
    train_cmd->add_option("--val", t_val, "validation corpus");
    train_cmd->add_option("--eval", t_eval, "held-out evaluation corpus");
    train_cmd->add_option("--markers", t_markers, "marker lexicon file");
    train_cmd->add_option("--run-name", t_run_name, "run directory name (default: timestamp)");
    train_cmd->add_option("--lambda", t_lambda, "similarity loss weight");
    train_cmd->add_option("--context-length", t_context, "window size L");
    train_cmd->add_option("--setting", t_setting, "head_given | end_to_end");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    CommonArgs eval_common;
    eval_common.add_to(eval_cmd);
    std::string e_checkpoint, e_in, e_setting, e_markers;
    eval_cmd->add_option("--checkpoint", e_checkpoint, "checkpoint file")->required();
    eval_cmd->add_option("--in", e_in, "canonical JSONL corpus")->required();
    eval_cmd->add_option("--setting", e_setting, "override the checkpoint's setting");
    eval_cmd->add_option("--markers", e_markers, "marker lexicon file");

    // analyze
    auto* analyze_cmd = app.add_subcommand("analyze", "distance/marker breakdowns");
    CommonArgs analyze_common;
    analyze_common.add_to(analyze_cmd);
    std::string a_checkpoint, a_in, a_markers, a_unit, a_buckets;
    bool a_dump_windows = false;
    analyze_cmd->add_option("--checkpoint", a_checkpoint, "checkpoint file")->required();
    analyze_cmd->add_option("--in", a_in, "canonical JSONL corpus")->required();
    analyze_cmd->add_option("--markers", a_markers, "marker lexicon file");
    analyze_cmd->add_option("--unit", a_unit, "propositions | tokens");
    analyze_cmd->add_option("--buckets", a_buckets, "bucket edges, e.g. 2,4,7");
    analyze_cmd->add_flag("--dump-windows", a_dump_windows, "emit tokenized windows as JSONL");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "train/evaluate across context lengths");
    CommonArgs sweep_common;
    sweep_common.add_to(sweep_cmd);
    std::string s_lengths, s_corpus, s_val, s_eval, s_markers, s_run_name;
    sweep_cmd->add_option("--lengths", s_lengths, "comma-separated context lengths")->required();
    sweep_cmd->add_option("--corpus", s_corpus, "training corpus (canonical JSONL)");
    sweep_cmd->add_option("--val", s_val, "validation corpus");
    sweep_cmd->add_option("--eval", s_eval, "held-out evaluation corpus");
    sweep_cmd->add_option("--markers", s_markers, "marker lexicon file");
    sweep_cmd->add_option("--run-name", s_run_name, "run directory name");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (ingest_cmd->parsed())
            return cmd_ingest(ingest_format, ingest_in, ingest_out, collapse_attack);
        if (stats_cmd->parsed()) return cmd_stats(stats_in, stats_markers);
        if (train_cmd->parsed()) {
            KeyValues extra;
            if (!t_corpus.empty()) extra.set("paths.corpus", t_corpus);
            if (!t_val.empty()) extra.set("paths.val", t_val);
            if (!t_eval.empty()) extra.set("paths.eval", t_eval);
            if (!t_markers.empty()) extra.set("paths.markers", t_markers);
            if (!t_run_name.empty()) extra.set("paths.run_name", t_run_name);
            if (t_lambda >= 0.0) extra.set("loss.lambda_sim", std::to_string(t_lambda));
            if (t_context >= 0) extra.set("window.context_length", std::to_string(t_context));
            if (!t_setting.empty()) extra.set("train.setting", t_setting);
            return cmd_train(train_common, extra);
        }
        if (eval_cmd->parsed()) {
            KeyValues extra;
            return cmd_eval(eval_common, e_checkpoint, e_in, e_setting, e_markers, extra);
        }
        if (analyze_cmd->parsed()) {
            KeyValues extra;
            if (!a_unit.empty()) extra.set("eval.unit", a_unit);
            if (!a_buckets.empty()) extra.set("eval.buckets", a_buckets);
            return cmd_analyze(analyze_common, a_checkpoint, a_in, a_markers, a_dump_windows,
                               extra);
        }
        if (sweep_cmd->parsed()) {
            KeyValues extra;
            if (!s_corpus.empty()) extra.set("paths.corpus", s_corpus);
            if (!s_val.empty()) extra.set("paths.val", s_val);
            if (!s_eval.empty()) extra.set("paths.eval", s_eval);
            if (!s_markers.empty()) extra.set("paths.markers", s_markers);
            if (!s_run_name.empty()) extra.set("paths.run_name", s_run_name);
            return cmd_sweep(sweep_common, s_lengths, extra);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
