// Declarative run configuration: flat dotted key-value assignments layered
// as defaults < preset < config file < command-line overrides, validated all
// at once, and persisted next to every run's outputs.
#pragma once

#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "ecase/common.hpp"
#include "ecase/eval.hpp"
#include "ecase/train.hpp"

namespace ecase {

// Ordered assignment list; later assignments win.
struct KeyValues {
    std::vector<std::pair<std::string, std::string>> items;

    void set(const std::string& key, const std::string& value) { items.emplace_back(key, value); }

    void parse_line(const std::string& raw, int lineno, const std::string& where) {
        std::string line = raw;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) return;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + " line " + std::to_string(lineno) +
                              ": expected key = value");
        auto trim = [](std::string s) {
            const std::size_t x = s.find_first_not_of(" \t\r");
            if (x == std::string::npos) return std::string();
            const std::size_t y = s.find_last_not_of(" \t\r");
            return s.substr(x, y - x + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(where + " line " + std::to_string(lineno) + ": empty key");
        set(key, value);
    }

    static KeyValues from_file(const std::string& path) {
        KeyValues kv;
        std::istringstream in(read_file(path));
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) kv.parse_line(line, ++lineno, path);
        return kv;
    }
};

enum class Preset { ecase, case_base, case_aug, case_emc, seqcon, seqpair };

inline Preset preset_from_name(const std::string& s) {
    if (s == "ecase") return Preset::ecase;
    if (s == "case") return Preset::case_base;
    if (s == "case_aug" || s == "case+aug") return Preset::case_aug;
    if (s == "case_emc" || s == "case+emc") return Preset::case_emc;
    if (s == "seqcon") return Preset::seqcon;
    if (s == "seqpair") return Preset::seqpair;
    throw ConfigError("unknown preset: " + s +
                      " (expected ecase, case, case_aug, case_emc, seqcon, seqpair)");
}

inline const char* preset_name(Preset p) {
    switch (p) {
        case Preset::ecase: return "ecase";
        case Preset::case_base: return "case";
        case Preset::case_aug: return "case_aug";
        case Preset::case_emc: return "case_emc";
        case Preset::seqcon: return "seqcon";
        case Preset::seqpair: return "seqpair";
    }
    return "?";
}

// The named model configurations: the full model, the plain context-window
// baseline, the two partial ablations, and the two pairwise baselines.
inline KeyValues preset_assignments(Preset p) {
    KeyValues kv;
    auto common_case = [&] {
        kv.set("model.input_form", "window");
        kv.set("model.enable_sentence_attention", "false");
        kv.set("loss.lambda_sim", "0");
        kv.set("aug.p_word", "0");
        kv.set("aug.p_sentence", "0");
    };
    switch (p) {
        case Preset::ecase:
            kv.set("model.input_form", "window");
            kv.set("model.enable_sentence_attention", "true");
            kv.set("loss.lambda_sim", "0.01");
            kv.set("aug.p_word", "0.5");
            kv.set("aug.p_sentence", "0.15");
            break;
        case Preset::case_base:
            common_case();
            break;
        case Preset::case_aug:
            common_case();
            kv.set("aug.p_word", "0.5");
            kv.set("aug.p_sentence", "0.15");
            break;
        case Preset::case_emc:
            common_case();
            kv.set("model.enable_sentence_attention", "true");
            kv.set("loss.lambda_sim", "0.01");
            break;
        case Preset::seqcon:
            common_case();
            kv.set("model.input_form", "pair_in_context");
            break;
        case Preset::seqpair:
            common_case();
            kv.set("model.input_form", "pair_isolated");
            break;
    }
    return kv;
}

struct RunConfig {
    std::string preset;  // informational; assignments already folded in
    WindowConfig window;
    AugmentConfig aug;
    ModelConfig model;
    LossConfig loss;
    TrainConfig train;
    std::string corpus_path, val_path, eval_path, markers_path, out_dir = "runs", run_name;
    double val_fraction = 0.1;  // used when no explicit validation split
    DistanceUnit unit = DistanceUnit::propositions;
    std::vector<int> bucket_edges = default_prop_bucket_edges();
    std::string class_weight_spec = "none";  // none | auto | w0,w1[,w2]

    void sync() {
        model.resolve();
        loss.max_tokens = model.max_tokens;
        if (window.max_tokens > model.max_tokens) window.max_tokens = model.max_tokens;
    }
};

namespace detail {

struct Applier {
    RunConfig& rc;
    std::vector<std::string>& errors;

    void fail(const std::string& key, const std::string& value, const std::string& why) {
        errors.push_back(key + " = " + value + ": " + why);
    }

    bool to_int(const std::string& k, const std::string& v, int& out) {
        try {
            std::size_t used = 0;
            out = std::stoi(v, &used);
            if (used != v.size()) throw std::invalid_argument("trailing characters");
            return true;
        } catch (const std::exception&) {
            fail(k, v, "expected integer");
            return false;
        }
    }
    bool to_long(const std::string& k, const std::string& v, long& out) {
        try {
            std::size_t used = 0;
            out = std::stol(v, &used);
            if (used != v.size()) throw std::invalid_argument("trailing characters");
            return true;
        } catch (const std::exception&) {
            fail(k, v, "expected integer");
            return false;
        }
    }
    bool to_double(const std::string& k, const std::string& v, double& out) {
        try {
            std::size_t used = 0;
            out = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument("trailing characters");
            return true;
        } catch (const std::exception&) {
            fail(k, v, "expected number");
            return false;
        }
    }
    bool to_bool(const std::string& k, const std::string& v, bool& out) {
        if (v == "true" || v == "1" || v == "yes") {
            out = true;
            return true;
        }
        if (v == "false" || v == "0" || v == "no") {
            out = false;
            return true;
        }
        fail(k, v, "expected true/false");
        return false;
    }
    template <typename T>
    bool to_list(const std::string& k, const std::string& v, std::vector<T>& out,
                 bool (Applier::*conv)(const std::string&, const std::string&, T&)) {
        out.clear();
        std::istringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            T parsed{};
            if (!(this->*conv)(k, item, parsed)) return false;
            out.push_back(parsed);
        }
        if (out.empty()) {
            fail(k, v, "expected comma-separated list");
            return false;
        }
        return true;
    }

    void apply(const std::string& key, const std::string& value) {
        int i = 0;
        long l = 0;
        double d = 0;
        bool b = false;
        if (key == "window.context_length") {
            if (to_int(key, value, i)) rc.window.context_length = i;
        } else if (key == "window.max_tokens") {
            if (to_int(key, value, i)) rc.window.max_tokens = i;
        } else if (key == "aug.p_word") {
            if (to_double(key, value, d)) rc.aug.p_word = d;
        } else if (key == "aug.p_sentence") {
            if (to_double(key, value, d)) rc.aug.p_sentence = d;
        } else if (key == "aug.mask_head") {
            if (to_bool(key, value, b)) rc.aug.mask_head = b;
        } else if (key == "aug.keep_masked_labels") {
            if (to_bool(key, value, b)) rc.aug.keep_masked_labels = b;
        } else if (key == "model.hidden_dim") {
            if (to_int(key, value, i)) rc.model.hidden_dim = i;
        } else if (key == "model.n_attention_heads") {
            if (to_int(key, value, i)) rc.model.n_attention_heads = i;
        } else if (key == "model.n_labels") {
            if (to_int(key, value, i)) rc.model.n_labels = i;
        } else if (key == "model.max_tokens") {
            if (to_int(key, value, i)) rc.model.max_tokens = i;
        } else if (key == "model.backend") {
            try {
                rc.model.backend = backend_from_name(value);
            } catch (const ConfigError& e) {
                fail(key, value, e.what());
            }
        } else if (key == "model.toy_layers") {
            if (to_int(key, value, i)) rc.model.toy_layers = i;
        } else if (key == "model.toy_dim") {
            if (to_int(key, value, i)) rc.model.toy_dim = i;
        } else if (key == "model.toy_vocab") {
            if (to_int(key, value, i)) rc.model.toy_vocab = i;
        } else if (key == "model.toy_use_positions") {
            if (to_bool(key, value, b)) rc.model.toy_use_positions = b;
        } else if (key == "model.enable_sentence_attention") {
            if (to_bool(key, value, b)) rc.model.enable_sentence_attention = b;
        } else if (key == "model.attn_layernorm") {
            if (to_bool(key, value, b)) rc.model.attn_layernorm = b;
        } else if (key == "model.input_form") {
            try {
                rc.model.input_form = input_form_from_name(value);
            } catch (const ConfigError& e) {
                fail(key, value, e.what());
            }
        } else if (key == "model.backbone") {
            rc.model.backbone = value;
        } else if (key == "loss.lambda_sim") {
            if (to_double(key, value, d)) rc.loss.lambda_sim = d;
        } else if (key == "loss.class_weights") {
            if (value == "none" || value == "auto") {
                rc.class_weight_spec = value;
            } else {
                std::vector<double> w;
                if (to_list(key, value, w, &Applier::to_double)) {
                    rc.loss.class_weights = w;
                    rc.class_weight_spec = value;
                }
            }
        } else if (key == "train.learning_rate") {
            if (to_double(key, value, d)) rc.train.learning_rate = d;
        } else if (key == "train.schedule") {
            rc.train.schedule = value;
        } else if (key == "train.epochs") {
            if (to_int(key, value, i)) rc.train.epochs = i;
        } else if (key == "train.batch_size") {
            if (to_int(key, value, i)) rc.train.batch_size = i;
        } else if (key == "train.seeds") {
            std::vector<long> s;
            if (to_list(key, value, s, &Applier::to_long)) {
                rc.train.seeds.clear();
                for (long v : s) rc.train.seeds.push_back(static_cast<std::uint64_t>(v));
            }
        } else if (key == "train.optimizer") {
            rc.train.optimizer = value;
        } else if (key == "train.setting") {
            try {
                rc.train.setting = setting_from_name(value);
            } catch (const ConfigError& e) {
                fail(key, value, e.what());
            }
        } else if (key == "train.max_steps") {
            if (to_long(key, value, l)) rc.train.max_steps = l;
        } else if (key == "paths.corpus") {
            rc.corpus_path = value;
        } else if (key == "paths.val") {
            rc.val_path = value;
        } else if (key == "paths.eval") {
            rc.eval_path = value;
        } else if (key == "paths.markers") {
            rc.markers_path = value;
        } else if (key == "paths.out") {
            rc.out_dir = value;
        } else if (key == "paths.run_name") {
            rc.run_name = value;
        } else if (key == "split.val_fraction") {
            if (to_double(key, value, d)) rc.val_fraction = d;
        } else if (key == "eval.unit") {
            try {
                rc.unit = distance_unit_from_name(value);
            } catch (const ConfigError& e) {
                fail(key, value, e.what());
            }
        } else if (key == "eval.buckets") {
            std::vector<int> e;
            if (to_list(key, value, e, &Applier::to_int)) rc.bucket_edges = e;
        } else {
            errors.push_back(key + ": unknown configuration key");
        }
    }
};

inline std::string fmt_double(double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

}  // namespace detail

// Layer assignments and validate; every invalid key is reported in one error.
inline RunConfig resolve_config(const std::string& preset_name_or_empty,
                                const std::vector<KeyValues>& layers) {
    RunConfig rc;
    std::vector<std::string> errors;
    detail::Applier ap{rc, errors};
    if (!preset_name_or_empty.empty()) {
        try {
            const Preset p = preset_from_name(preset_name_or_empty);
            rc.preset = preset_name(p);
            for (const auto& [k, v] : preset_assignments(p).items) ap.apply(k, v);
        } catch (const ConfigError& e) {
            errors.push_back(e.what());
        }
    }
    for (const auto& layer : layers)
        for (const auto& [k, v] : layer.items) ap.apply(k, v);

    rc.sync();
    const auto checked = [&](auto&& fn) {
        try {
            fn();
        } catch (const ConfigError& e) {
            errors.push_back(e.what());
        }
    };
    checked([&] { rc.window.validate(); });
    checked([&] { rc.aug.validate(); });
    checked([&] { rc.model.validate(); });
    checked([&] { rc.loss.validate(); });
    checked([&] { rc.train.validate(); });
    if (rc.class_weight_spec == "auto") rc.train.auto_class_weights = true;
    if (!errors.empty()) {
        std::string msg = "invalid configuration (" + std::to_string(errors.size()) + " problem" +
                          (errors.size() == 1 ? "" : "s") + "):";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
    return rc;
}

// Full resolved dump; reloading it (with no preset) reproduces the run.
inline std::string serialize_config(const RunConfig& rc) {
    std::ostringstream ss;
    if (!rc.preset.empty()) ss << "# preset: " << rc.preset << "\n";
    ss << "window.context_length = " << rc.window.context_length << "\n";
    ss << "window.max_tokens = " << rc.window.max_tokens << "\n";
    ss << "aug.p_word = " << detail::fmt_double(rc.aug.p_word) << "\n";
    ss << "aug.p_sentence = " << detail::fmt_double(rc.aug.p_sentence) << "\n";
    ss << "aug.mask_head = " << (rc.aug.mask_head ? "true" : "false") << "\n";
    ss << "aug.keep_masked_labels = " << (rc.aug.keep_masked_labels ? "true" : "false") << "\n";
    ss << "model.hidden_dim = " << rc.model.hidden_dim << "\n";
    ss << "model.n_attention_heads = " << rc.model.n_attention_heads << "\n";
    ss << "model.n_labels = " << rc.model.n_labels << "\n";
    ss << "model.max_tokens = " << rc.model.max_tokens << "\n";
    ss << "model.backend = " << backend_name(rc.model.backend) << "\n";
    ss << "model.toy_layers = " << rc.model.toy_layers << "\n";
    ss << "model.toy_dim = " << rc.model.toy_dim << "\n";
    ss << "model.toy_vocab = " << rc.model.toy_vocab << "\n";
    ss << "model.toy_use_positions = " << (rc.model.toy_use_positions ? "true" : "false") << "\n";
    ss << "model.enable_sentence_attention = "
       << (rc.model.enable_sentence_attention ? "true" : "false") << "\n";
    ss << "model.attn_layernorm = " << (rc.model.attn_layernorm ? "true" : "false") << "\n";
    ss << "model.input_form = " << input_form_name(rc.model.input_form) << "\n";
    if (!rc.model.backbone.empty()) ss << "model.backbone = " << rc.model.backbone << "\n";
    ss << "loss.lambda_sim = " << detail::fmt_double(rc.loss.lambda_sim) << "\n";
    ss << "loss.class_weights = " << rc.class_weight_spec << "\n";
    ss << "train.learning_rate = " << detail::fmt_double(rc.train.learning_rate) << "\n";
    ss << "train.schedule = " << rc.train.schedule << "\n";
    ss << "train.epochs = " << rc.train.epochs << "\n";
    ss << "train.batch_size = " << rc.train.batch_size << "\n";
    ss << "train.seeds = ";
    for (std::size_t i = 0; i < rc.train.seeds.size(); ++i)
        ss << (i ? "," : "") << rc.train.seeds[i];
    ss << "\n";
    ss << "train.optimizer = " << rc.train.optimizer << "\n";
    ss << "train.setting = " << setting_name(rc.train.setting) << "\n";
    ss << "train.max_steps = " << rc.train.max_steps << "\n";
    if (!rc.corpus_path.empty()) ss << "paths.corpus = " << rc.corpus_path << "\n";
    if (!rc.val_path.empty()) ss << "paths.val = " << rc.val_path << "\n";
    if (!rc.eval_path.empty()) ss << "paths.eval = " << rc.eval_path << "\n";
    if (!rc.markers_path.empty()) ss << "paths.markers = " << rc.markers_path << "\n";
    ss << "paths.out = " << rc.out_dir << "\n";
    if (!rc.run_name.empty()) ss << "paths.run_name = " << rc.run_name << "\n";
    ss << "split.val_fraction = " << detail::fmt_double(rc.val_fraction) << "\n";
    ss << "eval.unit = " << (rc.unit == DistanceUnit::propositions ? "propositions" : "tokens")
       << "\n";
    ss << "eval.buckets = ";
    for (std::size_t i = 0; i < rc.bucket_edges.size(); ++i)
        ss << (i ? "," : "") << rc.bucket_edges[i];
    ss << "\n";
    return ss.str();
}

// Deterministic fallback split when no explicit validation file is given:
// every k-th document (by position) goes to validation.
inline std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double val_fraction) {
    if (!(val_fraction > 0.0) || val_fraction >= 1.0)
        throw ConfigError("split.val_fraction must be in (0,1)");
    const std::size_t stride =
        std::max<std::size_t>(2, static_cast<std::size_t>(1.0 / val_fraction));
    Corpus train_docs, val_docs;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (i % stride == stride - 1)
            val_docs.push_back(corpus[i]);
        else
            train_docs.push_back(corpus[i]);
    }
    if (train_docs.empty() || val_docs.empty())
        throw ConfigError("corpus too small to split; provide paths.val explicitly");
    return {std::move(train_docs), std::move(val_docs)};
}

}  // namespace ecase
