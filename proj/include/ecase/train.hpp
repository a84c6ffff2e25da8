// Training loop (Adam, constant schedule, on-the-fly augmentation,
// best-validation-macro-F1 checkpoint selection), prediction, and the
// context-length sweep. A fixed (seed, config, corpus) triple reproduces the
// checkpoint byte for byte.
#pragma once

#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecase/augment.hpp"
#include "ecase/checkpoint.hpp"
#include "ecase/common.hpp"
#include "ecase/corpus.hpp"
#include "ecase/eval.hpp"
#include "ecase/losses.hpp"
#include "ecase/model.hpp"
#include "ecase/optimizer.hpp"
#include "ecase/pairing.hpp"
#include "ecase/tokenizer.hpp"

namespace ecase {

struct TrainConfig {
    double learning_rate = 1e-5;
    std::string schedule = "constant";
    int epochs = 15;
    int batch_size = 8;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::string optimizer = "adam";
    Setting setting = Setting::head_given;
    long max_steps = 0;             // 0 = run all epochs
    bool auto_class_weights = false;  // inverse-frequency weights for L_cls

    void validate() const {
        if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
        if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
        if (seeds.empty()) throw ConfigError("train.seeds must be non-empty");
        if (schedule != "constant") throw ConfigError("train.schedule: only 'constant' exists");
        if (optimizer != "adam") throw ConfigError("train.optimizer: only 'adam' exists");
        if (max_steps < 0) throw ConfigError("train.max_steps must be >= 0");
    }
};

// ---------------------------------------------------------------------------
// Config <-> JSON (checkpoint header and run-directory persistence).
// ---------------------------------------------------------------------------
inline nlohmann::json window_config_to_json(const WindowConfig& c) {
    return {{"context_length", c.context_length}, {"max_tokens", c.max_tokens}};
}
inline WindowConfig window_config_from_json(const nlohmann::json& j) {
    WindowConfig c;
    c.context_length = j.at("context_length").get<int>();
    c.max_tokens = j.at("max_tokens").get<int>();
    return c;
}

inline nlohmann::json aug_config_to_json(const AugmentConfig& c) {
    return {{"p_word", c.p_word},
            {"p_sentence", c.p_sentence},
            {"mask_head", c.mask_head},
            {"keep_masked_labels", c.keep_masked_labels}};
}
inline AugmentConfig aug_config_from_json(const nlohmann::json& j) {
    AugmentConfig c;
    c.p_word = j.at("p_word").get<double>();
    c.p_sentence = j.at("p_sentence").get<double>();
    c.mask_head = j.value("mask_head", false);
    c.keep_masked_labels = j.value("keep_masked_labels", false);
    return c;
}

inline nlohmann::json loss_config_to_json(const LossConfig& c) {
    return {{"lambda_sim", c.lambda_sim},
            {"class_weights", c.class_weights},
            {"max_tokens", c.max_tokens}};
}
inline LossConfig loss_config_from_json(const nlohmann::json& j) {
    LossConfig c;
    c.lambda_sim = j.at("lambda_sim").get<double>();
    c.class_weights = j.value("class_weights", std::vector<double>{});
    c.max_tokens = j.at("max_tokens").get<int>();
    return c;
}

inline nlohmann::json model_config_to_json(const ModelConfig& c) {
    return {{"hidden_dim", c.hidden_dim},
            {"n_attention_heads", c.n_attention_heads},
            {"n_labels", c.n_labels},
            {"max_tokens", c.max_tokens},
            {"backend", backend_name(c.backend)},
            {"toy_layers", c.toy_layers},
            {"toy_dim", c.toy_dim},
            {"toy_vocab", c.toy_vocab},
            {"toy_use_positions", c.toy_use_positions},
            {"enable_sentence_attention", c.enable_sentence_attention},
            {"attn_layernorm", c.attn_layernorm},
            {"input_form", input_form_name(c.input_form)},
            {"backbone", c.backbone}};
}
inline ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.n_attention_heads = j.at("n_attention_heads").get<int>();
    c.n_labels = j.at("n_labels").get<int>();
    c.max_tokens = j.at("max_tokens").get<int>();
    c.backend = backend_from_name(j.at("backend").get<std::string>());
    c.toy_layers = j.at("toy_layers").get<int>();
    c.toy_dim = j.at("toy_dim").get<int>();
    c.toy_vocab = j.at("toy_vocab").get<int>();
    c.toy_use_positions = j.value("toy_use_positions", true);
    c.enable_sentence_attention = j.at("enable_sentence_attention").get<bool>();
    c.attn_layernorm = j.value("attn_layernorm", false);
    c.input_form = input_form_from_name(j.at("input_form").get<std::string>());
    c.backbone = j.value("backbone", std::string{});
    return c;
}

inline nlohmann::json encoder_config_to_json(const EncoderConfig& c) {
    return {{"n_layers", c.n_layers}, {"dim", c.dim},
            {"n_heads", c.n_heads},   {"vocab", c.vocab},
            {"max_positions", c.max_positions},
            {"use_positions", c.use_positions}};
}
inline EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
    EncoderConfig c;
    c.n_layers = j.at("n_layers").get<int>();
    c.dim = j.at("dim").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.vocab = j.at("vocab").get<int>();
    c.max_positions = j.at("max_positions").get<int>();
    c.use_positions = j.value("use_positions", true);
    return c;
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate},
            {"schedule", c.schedule},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"seeds", c.seeds},
            {"optimizer", c.optimizer},
            {"setting", setting_name(c.setting)},
            {"max_steps", c.max_steps},
            {"auto_class_weights", c.auto_class_weights}};
}
inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.schedule = j.at("schedule").get<std::string>();
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.optimizer = j.at("optimizer").get<std::string>();
    c.setting = setting_from_name(j.at("setting").get<std::string>());
    c.max_steps = j.value("max_steps", 0L);
    c.auto_class_weights = j.value("auto_class_weights", false);
    return c;
}

// ---------------------------------------------------------------------------
// Model + tokenizer construction per backend.
// ---------------------------------------------------------------------------
struct BuiltModel {
    EcaseModel model;
    std::unique_ptr<Tokenizer> tokenizer;
};

inline BuiltModel build_model(ModelConfig mc, std::uint64_t seed) {
    mc.resolve();
    if (mc.backend == Backend::toy) {
        mc.validate();
        BuiltModel out{EcaseModel(mc, mc.toy_encoder_config()),
                       std::make_unique<HashTokenizer>(mc.toy_vocab)};
        out.model.init(seed);
        return out;
    }
    const std::string path = resolve_backbone_path(mc.backbone);
    Backbone bb = load_backbone(path);
    mc.hidden_dim = bb.cfg.dim;
    mc.n_attention_heads = bb.cfg.n_heads;  // sentence attention mirrors the backbone
    mc.validate();
    BuiltModel out{EcaseModel(mc, bb.cfg), nullptr};
    out.model.init(seed);
    std::vector<Tensor*> enc_params;
    out.model.enc.collect(enc_params);
    detail::Container c;
    c.tensors = std::move(bb.tensors);
    detail::load_tensors_into(enc_params, c, "backbone " + path);
    if (bb.vocab_words.empty())
        out.tokenizer = std::make_unique<HashTokenizer>(bb.cfg.vocab);
    else
        out.tokenizer = std::make_unique<VocabTokenizer>(bb.vocab_words);
    return out;
}

// ---------------------------------------------------------------------------
// Encode plans: which windows to run through the encoder and which member
// rows feed each pair, for every input form.
// ---------------------------------------------------------------------------
struct RepRef {
    int group = 0;
    int slot = 0;
};

struct PlanPair {
    PairInstance pi;
    RepRef head, tail;
};

struct EncodePlan {
    const Document* doc = nullptr;
    std::vector<ContextWindow> groups;
    std::vector<PlanPair> pairs;
};

namespace detail {

inline int require_slot(const ContextWindow& w, int prop, const char* what) {
    const int slot = w.member_slot(prop);
    if (slot < 0)
        throw DataError(std::string(what) + ": proposition " + std::to_string(prop) +
                        " truncated out of the window in document " + w.doc_id);
    return slot;
}

}  // namespace detail

// One plan per head window; `pairs` come from enumerate_pairs.
inline std::vector<EncodePlan> build_plans(const Document& doc, const WindowConfig& wc,
                                           Setting setting, InputForm form, const Tokenizer& tok,
                                           std::vector<ArgLink>* unreachable = nullptr) {
    EnumeratedPairs ep = enumerate_pairs(doc, wc, setting, tok);
    if (unreachable)
        unreachable->insert(unreachable->end(), ep.unreachable_links.begin(),
                            ep.unreachable_links.end());
    // group pairs by head in document order
    std::map<int, std::vector<PairInstance>> by_head;
    for (auto& p : ep.pairs) by_head[p.head_index].push_back(p);

    std::vector<EncodePlan> plans;
    for (auto& [head, pairs] : by_head) {
        EncodePlan plan;
        plan.doc = &doc;
        if (form == InputForm::window) {
            plan.groups.push_back(*pairs.front().window);
            const ContextWindow& w = plan.groups.front();
            for (auto& p : pairs) {
                PlanPair pp;
                pp.pi = p;
                pp.head = {0, detail::require_slot(w, p.head_index, "plan")};
                pp.tail = {0, detail::require_slot(w, p.tail_index, "plan")};
                plan.pairs.push_back(std::move(pp));
            }
        } else if (form == InputForm::pair_in_context) {
            for (auto& p : pairs) {
                ContextWindow w = build_window_span(doc, p.head_index, p.tail_index, wc, tok);
                PlanPair pp;
                pp.pi = p;
                const int g = static_cast<int>(plan.groups.size());
                pp.head = {g, detail::require_slot(w, p.head_index, "pair_in_context")};
                pp.tail = {g, detail::require_slot(w, p.tail_index, "pair_in_context")};
                plan.groups.push_back(std::move(w));
                plan.pairs.push_back(std::move(pp));
            }
        } else {  // pair_isolated
            for (auto& p : pairs) {
                ContextWindow wh = build_window_single(doc, p.head_index, wc, tok);
                ContextWindow wt = build_window_single(doc, p.tail_index, wc, tok);
                PlanPair pp;
                pp.pi = p;
                pp.head = {static_cast<int>(plan.groups.size()), 0};
                plan.groups.push_back(std::move(wh));
                pp.tail = {static_cast<int>(plan.groups.size()), 0};
                plan.groups.push_back(std::move(wt));
                plan.pairs.push_back(std::move(pp));
            }
        }
        if (!plan.pairs.empty()) plans.push_back(std::move(plan));
    }
    return plans;
}

// Training-time copy of a plan with masking applied. Draw order: groups in
// order, markers before sentences within a group.
inline EncodePlan augment_plan(const EncodePlan& plan, const MarkerLexicon& lexicon,
                               const AugmentConfig& cfg, SeededRandom& rng) {
    EncodePlan out = plan;
    for (std::size_t g = 0; g < out.groups.size(); ++g) {
        const int gi = static_cast<int>(g);
        // pairs whose tail representation this group provides
        std::vector<PairInstance> tails;
        std::vector<std::size_t> tail_rows;
        for (std::size_t r = 0; r < out.pairs.size(); ++r)
            if (out.pairs[r].tail.group == gi) {
                tails.push_back(out.pairs[r].pi);
                tail_rows.push_back(r);
            }
        std::vector<MarkerMatch> matches;
        for (int member : out.groups[g].member_indices) {
            auto found = find_markers(plan.doc->prop(member).text, lexicon, member);
            matches.insert(matches.end(), found.begin(), found.end());
        }
        ContextWindow masked = mask_markers(out.groups[g], matches, cfg, rng);
        SentenceMaskResult sm = mask_sentences(masked, tails, cfg, rng);
        out.groups[g] = std::move(sm.window);
        for (std::size_t i = 0; i < tail_rows.size(); ++i)
            out.pairs[tail_rows[i]].pi.excluded = sm.pairs[i].excluded;
    }
    return out;
}

// ---------------------------------------------------------------------------
// One optimization step over a batch of plans.
// ---------------------------------------------------------------------------
struct StepOutcome {
    double loss_cls = 0.0;
    double loss_sim = 0.0;
    double total = 0.0;
    LossDiagnostics diag;
    long n_pairs = 0;
    long n_masked_out = 0;
};

inline StepOutcome run_batch(EcaseModel& model, const std::vector<const EncodePlan*>& batch,
                             const LossConfig& loss_cfg, bool backprop) {
    StepOutcome out;
    struct GroupState {
        EcaseModel::WindowCache cache;
        Mat h;
        Mat dh;
    };
    std::vector<std::vector<GroupState>> states(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
        states[b].resize(batch[b]->groups.size());
        for (std::size_t g = 0; g < batch[b]->groups.size(); ++g) {
            GroupState& st = states[b][g];
            st.h = model.forward_window(batch[b]->groups[g], st.cache);
            st.dh = Mat(st.h.rows, st.h.cols);
        }
    }

    // flatten pairs into one batch
    const int D = model.cfg.hidden_dim;
    std::vector<std::pair<std::size_t, std::size_t>> rows;  // (plan, pair)
    for (std::size_t b = 0; b < batch.size(); ++b)
        for (std::size_t p = 0; p < batch[b]->pairs.size(); ++p) rows.emplace_back(b, p);

    PairBatch pb;
    pb.head_vectors = Mat(static_cast<int>(rows.size()), D);
    pb.tail_vectors = Mat(static_cast<int>(rows.size()), D);
    Mat probs(static_cast<int>(rows.size()), model.cfg.n_labels);
    std::vector<PairHead::Cache> head_caches(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& [b, p] = rows[r];
        const PlanPair& pp = batch[b]->pairs[p];
        const Mat& h_head = states[b][static_cast<std::size_t>(pp.head.group)].h;
        const Mat& h_tail = states[b][static_cast<std::size_t>(pp.tail.group)].h;
        const double* hv = h_head.row(pp.head.slot);
        const double* tv = h_tail.row(pp.tail.slot);
        for (int j = 0; j < D; ++j) {
            pb.head_vectors(static_cast<int>(r), j) = hv[j];
            pb.tail_vectors(static_cast<int>(r), j) = tv[j];
        }
        pb.gold.push_back(pp.pi.gold);
        pb.token_distances.push_back(std::min(pp.pi.token_distance, loss_cfg.max_tokens));
        pb.loss_mask.push_back(!pp.pi.excluded);
        if (pp.pi.excluded) ++out.n_masked_out;
        const auto pr = model.head.forward(hv, tv, &head_caches[r]);
        for (int j = 0; j < model.cfg.n_labels; ++j) probs(static_cast<int>(r), j) = pr[static_cast<std::size_t>(j)];
    }
    out.n_pairs = static_cast<long>(rows.size());

    out.loss_cls = classification_loss(probs, pb, loss_cfg, &out.diag);
    // λ = 0 disables the similarity path entirely; the degenerate
    // configuration is then bit-identical to plain cross-entropy training.
    if (loss_cfg.lambda_sim != 0.0) out.loss_sim = similarity_loss(pb, loss_cfg, &out.diag);
    out.total = total_loss(out.loss_cls, out.loss_sim, loss_cfg);

    if (!backprop) return out;

    const Mat dlogits = classification_loss_grad_logits(probs, pb, loss_cfg);
    Mat dhead_sim(pb.size(), D), dtail_sim(pb.size(), D);
    if (loss_cfg.lambda_sim != 0.0) similarity_loss_backward(pb, loss_cfg, dhead_sim, dtail_sim);

    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!pb.loss_mask[r]) continue;
        const auto& [b, p] = rows[r];
        const PlanPair& pp = batch[b]->pairs[p];
        Mat& dh_head = states[b][static_cast<std::size_t>(pp.head.group)].dh;
        Mat& dh_tail = states[b][static_cast<std::size_t>(pp.tail.group)].dh;
        std::vector<double> dl(static_cast<std::size_t>(model.cfg.n_labels));
        for (int j = 0; j < model.cfg.n_labels; ++j) dl[static_cast<std::size_t>(j)] = dlogits(static_cast<int>(r), j);
        model.head.backward(head_caches[r], dl, dh_head.row(pp.head.slot),
                            dh_tail.row(pp.tail.slot));
        if (loss_cfg.lambda_sim != 0.0) {
            double* dhh = dh_head.row(pp.head.slot);
            double* dht = dh_tail.row(pp.tail.slot);
            for (int j = 0; j < D; ++j) {
                dhh[j] += loss_cfg.lambda_sim * dhead_sim(static_cast<int>(r), j);
                dht[j] += loss_cfg.lambda_sim * dtail_sim(static_cast<int>(r), j);
            }
        }
    }
    for (std::size_t b = 0; b < batch.size(); ++b)
        for (std::size_t g = 0; g < batch[b]->groups.size(); ++g)
            model.backward_window(states[b][g].cache, states[b][g].dh);
    return out;
}

// ---------------------------------------------------------------------------
// Prediction.
// ---------------------------------------------------------------------------
inline int argmax_label(const std::vector<double>& probs) {
    int best = 0;
    for (int j = 1; j < static_cast<int>(probs.size()); ++j)
        if (probs[static_cast<std::size_t>(j)] > probs[static_cast<std::size_t>(best)]) best = j;
    return best;
}

inline std::vector<Prediction> predict_docs(const EcaseModel& model, const Corpus& corpus,
                                            const Tokenizer& tok, const WindowConfig& wc,
                                            Setting setting) {
    if (model.cfg.n_labels == 2 && corpus_has_attack(corpus))
        throw ConfigError("corpus contains attack links but the model has 2 labels");
    std::vector<Prediction> out;
    for (const auto& doc : corpus) {
        const auto plans = build_plans(doc, wc, setting, model.cfg.input_form, tok);
        for (const auto& plan : plans) {
            std::vector<Mat> reps;
            reps.reserve(plan.groups.size());
            for (const auto& g : plan.groups) reps.push_back(model.forward_window(g));
            for (const auto& pp : plan.pairs) {
                Prediction pr;
                pr.pair = pp.pi;
                pr.probs = model.classify(
                    reps[static_cast<std::size_t>(pp.head.group)].row(pp.head.slot),
                    reps[static_cast<std::size_t>(pp.tail.group)].row(pp.tail.slot));
                pr.predicted = argmax_label(pr.probs);
                out.push_back(std::move(pr));
            }
        }
    }
    return out;
}

inline double pair_accuracy(const std::vector<Prediction>& preds) {
    if (preds.empty()) return 0.0;
    long ok = 0;
    for (const auto& p : preds)
        if (p.predicted == static_cast<int>(p.pair.gold)) ++ok;
    return static_cast<double>(ok) / static_cast<double>(preds.size());
}

// ---------------------------------------------------------------------------
// Training.
// ---------------------------------------------------------------------------
struct TrainResult {
    Checkpoint checkpoint;
    int best_epoch = 0;          // 1-based
    double best_val_macro = 0.0;
    double final_train_accuracy = 0.0;  // last-step weights, no augmentation
    long steps = 0;
    LossDiagnostics diagnostics;
    std::vector<double> step_losses;
};

// Earliest index of the maximum (ties resolve to the earliest epoch).
inline int select_best(const std::vector<double>& val_scores) {
    if (val_scores.empty()) throw std::invalid_argument("select_best: empty");
    int best = 0;
    for (int i = 1; i < static_cast<int>(val_scores.size()); ++i)
        if (val_scores[static_cast<std::size_t>(i)] > val_scores[static_cast<std::size_t>(best)])
            best = i;
    return best;
}

inline std::vector<double> inverse_frequency_weights(const std::vector<EncodePlan>& plans,
                                                     int n_labels) {
    std::vector<long> counts(static_cast<std::size_t>(n_labels), 0);
    long total = 0;
    for (const auto& plan : plans)
        for (const auto& pp : plan.pairs) {
            ++counts[static_cast<std::size_t>(static_cast<int>(pp.pi.gold))];
            ++total;
        }
    std::vector<double> w(static_cast<std::size_t>(n_labels), 1.0);
    for (int l = 0; l < n_labels; ++l) {
        const long c = counts[static_cast<std::size_t>(l)];
        if (c > 0)
            w[static_cast<std::size_t>(l)] =
                static_cast<double>(total) / (static_cast<double>(n_labels) * static_cast<double>(c));
    }
    return w;
}

inline TrainResult train(const Corpus& train_docs, const Corpus& val_docs, ModelConfig mc,
                         const WindowConfig& wc, const AugmentConfig& ac, LossConfig lc,
                         const TrainConfig& tc, const MarkerLexicon& lexicon, std::uint64_t seed,
                         std::ostream* log = nullptr) {
    wc.validate();
    ac.validate();
    tc.validate();
    mc.resolve();
    if (train_docs.empty() || val_docs.empty())
        throw ConfigError("train requires disjoint, non-empty train and validation splits");
    if (mc.n_labels == 2 && (corpus_has_attack(train_docs) || corpus_has_attack(val_docs)))
        throw ConfigError("corpus contains attack links but model.n_labels = 2");
    lc.max_tokens = mc.max_tokens;

    BuiltModel built = build_model(mc, seed);
    EcaseModel& model = built.model;
    const Tokenizer& tok = *built.tokenizer;
    mc = model.cfg;  // backend resolution may have filled dims

    std::vector<EncodePlan> plans;
    for (const auto& doc : train_docs) {
        auto dp = build_plans(doc, wc, tc.setting, mc.input_form, tok);
        for (auto& p : dp) plans.push_back(std::move(p));
    }
    if (plans.empty()) throw ConfigError("training split produced no pairs");

    if (tc.auto_class_weights && lc.class_weights.empty())
        lc.class_weights = inverse_frequency_weights(plans, mc.n_labels);
    lc.validate();

    const bool augment_on = ac.p_word > 0.0 || ac.p_sentence > 0.0;
    Adam adam(tc.learning_rate);
    std::vector<std::size_t> order(plans.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    auto log_event = [&](const nlohmann::json& j) {
        if (log) (*log) << j.dump() << "\n";
    };

    TrainResult result;
    std::map<std::string, Mat> best_weights;
    double best_val = -1.0;
    int best_epoch = 0;
    long step = 0;
    bool stop = false;

    for (int epoch = 1; epoch <= tc.epochs && !stop; ++epoch) {
        SeededRandom shuffle_rng(SeededRandom::derive(seed, 0x5u, static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);
        for (std::size_t at = 0; at < order.size() && !stop;
             at += static_cast<std::size_t>(tc.batch_size)) {
            ++step;
            const std::size_t hi = std::min(order.size(), at + static_cast<std::size_t>(tc.batch_size));
            SeededRandom aug_rng(SeededRandom::derive(seed, 0xAu,
                                                      static_cast<std::uint64_t>(epoch),
                                                      static_cast<std::uint64_t>(step)));
            std::vector<EncodePlan> augmented;
            std::vector<const EncodePlan*> batch;
            for (std::size_t i = at; i < hi; ++i) {
                const EncodePlan& plan = plans[order[i]];
                if (augment_on) {
                    augmented.push_back(augment_plan(plan, lexicon, ac, aug_rng));
                } else {
                    batch.push_back(&plan);
                }
            }
            for (const auto& p : augmented) batch.push_back(&p);

            model.zero_grads();
            StepOutcome so = run_batch(model, batch, lc, /*backprop=*/true);
            if (!std::isfinite(so.total))
                throw NumericError("training diverged at step " + std::to_string(step) +
                                   " (non-finite loss)");
            adam.step(model.params());
            result.diagnostics.merge(so.diag);
            result.step_losses.push_back(so.total);
            log_event({{"event", "step"},
                       {"step", step},
                       {"loss_cls", so.loss_cls},
                       {"loss_sim", so.loss_sim},
                       {"lr", tc.learning_rate}});
            if (tc.max_steps > 0 && step >= tc.max_steps) stop = true;
        }

        const auto val_preds = predict_docs(model, val_docs, tok, wc, tc.setting);
        if (val_preds.empty()) throw ConfigError("validation split produced no pairs");
        const EvalReport val_report = evaluate(val_preds, mc.n_labels);
        const bool improved = val_report.macro_f1 > best_val;
        if (improved) {
            best_val = val_report.macro_f1;
            best_epoch = epoch;
            best_weights.clear();
            for (Tensor* t : model.params()) best_weights[t->name] = t->w;
        }
        log_event({{"event", "epoch"},
                   {"epoch", epoch},
                   {"val_macro_f1", val_report.macro_f1},
                   {"best", improved}});
    }

    result.final_train_accuracy =
        pair_accuracy(predict_docs(model, train_docs, tok, wc, tc.setting));
    for (Tensor* t : model.params()) {
        auto it = best_weights.find(t->name);
        if (it != best_weights.end()) t->w = it->second;
    }

    nlohmann::json cfg_json;
    cfg_json["model"] = model_config_to_json(mc);
    cfg_json["encoder"] = encoder_config_to_json(model.enc.cfg);
    cfg_json["window"] = window_config_to_json(wc);
    cfg_json["aug"] = aug_config_to_json(ac);
    cfg_json["loss"] = loss_config_to_json(lc);
    cfg_json["train"] = train_config_to_json(tc);
    cfg_json["seed"] = seed;
    cfg_json["best_epoch"] = best_epoch;
    cfg_json["best_val_macro_f1"] = best_val;
    if (const auto* vt = dynamic_cast<const VocabTokenizer*>(&tok))
        cfg_json["tokenizer"] = {{"type", "vocab"}, {"words", vt->words()}};
    else
        cfg_json["tokenizer"] = {{"type", "hash"}, {"vocab", tok.vocab_size()}};

    result.checkpoint = make_checkpoint(model, cfg_json, lexicon.hash());
    result.best_epoch = best_epoch;
    result.best_val_macro = best_val;
    result.steps = step;
    log_event({{"event", "diagnostics"},
               {"prob_clamps", result.diagnostics.prob_clamps},
               {"zero_norm_pairs", result.diagnostics.zero_norm_pairs},
               {"final_train_accuracy", result.final_train_accuracy}});
    return result;
}

// ---------------------------------------------------------------------------
// Checkpoint-driven prediction.
// ---------------------------------------------------------------------------
struct LoadedModel {
    EcaseModel model;
    std::unique_ptr<Tokenizer> tokenizer;
    WindowConfig window_cfg;
    Setting setting = Setting::head_given;
};

inline LoadedModel load_model(const Checkpoint& ck) {
    const ModelConfig mc = model_config_from_json(ck.config.at("model"));
    const EncoderConfig ec = encoder_config_from_json(ck.config.at("encoder"));
    LoadedModel lm{EcaseModel(mc, ec), nullptr, window_config_from_json(ck.config.at("window")),
                   setting_from_name(ck.config.at("train").at("setting").get<std::string>())};
    restore_model(lm.model, ck);
    const auto& tj = ck.config.at("tokenizer");
    if (tj.at("type").get<std::string>() == "vocab")
        lm.tokenizer = std::make_unique<VocabTokenizer>(tj.at("words").get<std::vector<std::string>>());
    else
        lm.tokenizer = std::make_unique<HashTokenizer>(tj.at("vocab").get<int>());
    return lm;
}

inline std::vector<Prediction> predict(const Checkpoint& ck, const Corpus& corpus,
                                       std::optional<Setting> setting = std::nullopt) {
    LoadedModel lm = load_model(ck);
    return predict_docs(lm.model, corpus, *lm.tokenizer, lm.window_cfg,
                        setting.value_or(lm.setting));
}

// ---------------------------------------------------------------------------
// Context-length sweep (one model per L, shared seeds).
// ---------------------------------------------------------------------------
struct SweepRow {
    int context_length = 0;
    double macro_f1_mean = 0.0;
    double macro_f1_stdev = 0.0;
    std::vector<double> per_seed;
};

struct SweepResult {
    std::vector<SweepRow> rows;

    std::string to_csv() const {
        std::ostringstream ss;
        ss << "context_length,macro_f1_mean,macro_f1_stdev\n";
        for (const auto& r : rows)
            ss << r.context_length << "," << r.macro_f1_mean << "," << r.macro_f1_stdev << "\n";
        return ss.str();
    }
    nlohmann::json to_json() const {
        nlohmann::json rows_j = nlohmann::json::array();
        for (const auto& r : rows)
            rows_j.push_back({{"context_length", r.context_length},
                              {"macro_f1_mean", r.macro_f1_mean},
                              {"macro_f1_stdev", r.macro_f1_stdev},
                              {"per_seed", r.per_seed}});
        return nlohmann::json{{"rows", rows_j}};
    }
};

inline SweepResult context_length_sweep(const Corpus& train_docs, const Corpus& val_docs,
                                        const Corpus& eval_docs, const ModelConfig& mc,
                                        const WindowConfig& wc, const AugmentConfig& ac,
                                        const LossConfig& lc, const TrainConfig& tc,
                                        const MarkerLexicon& lexicon, std::vector<int> lengths,
                                        std::ostream* log = nullptr) {
    if (lengths.size() < 2) throw ConfigError("sweep needs at least 2 context lengths");
    std::vector<int> sorted = lengths;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i] == sorted[i - 1])
            throw ConfigError("sweep lengths contain a duplicate: " + std::to_string(sorted[i]));
    SweepResult out;
    for (int L : lengths) {
        WindowConfig wl = wc;
        wl.context_length = L;
        SweepRow row;
        row.context_length = L;
        for (std::uint64_t s : tc.seeds) {
            TrainResult tr = train(train_docs, val_docs, mc, wl, ac, lc, tc, lexicon, s, log);
            const auto preds = predict(tr.checkpoint, eval_docs);
            const EvalReport rep = evaluate(preds, model_config_from_json(
                                                       tr.checkpoint.config.at("model")).n_labels);
            row.per_seed.push_back(rep.macro_f1);
        }
        double mean = 0.0;
        for (double v : row.per_seed) mean += v;
        mean /= static_cast<double>(row.per_seed.size());
        double var = 0.0;
        for (double v : row.per_seed) var += (v - mean) * (v - mean);
        var /= static_cast<double>(row.per_seed.size());
        row.macro_f1_mean = mean;
        row.macro_f1_stdev = std::sqrt(var);
        out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace ecase
