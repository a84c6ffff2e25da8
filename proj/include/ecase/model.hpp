// The classification model: encoder backend producing per-proposition
// representations at the separators, an optional sentence-level attention
// aggregator mixed in by addition, and the two-matrix pair head
//   P(y | j, k) = softmax(tanh([H_j; H_k] W1) W2).
#pragma once

#include <string>
#include <vector>

#include "ecase/common.hpp"
#include "ecase/encoder.hpp"
#include "ecase/pairing.hpp"
#include "ecase/tensor.hpp"

namespace ecase {

enum class Backend { toy, pretrained };
enum class InputForm { window, pair_isolated, pair_in_context };

inline Backend backend_from_name(const std::string& s) {
    if (s == "toy") return Backend::toy;
    if (s == "pretrained") return Backend::pretrained;
    throw ConfigError("unknown backend: " + s);
}
inline const char* backend_name(Backend b) {
    return b == Backend::toy ? "toy" : "pretrained";
}

inline InputForm input_form_from_name(const std::string& s) {
    if (s == "window") return InputForm::window;
    if (s == "pair_isolated") return InputForm::pair_isolated;
    if (s == "pair_in_context") return InputForm::pair_in_context;
    throw ConfigError("unknown input form: " + s);
}
inline const char* input_form_name(InputForm f) {
    switch (f) {
        case InputForm::window: return "window";
        case InputForm::pair_isolated: return "pair_isolated";
        case InputForm::pair_in_context: return "pair_in_context";
    }
    return "?";
}

struct ModelConfig {
    int hidden_dim = 32;
    int n_attention_heads = 4;
    int n_labels = 3;
    int max_tokens = 512;
    Backend backend = Backend::toy;
    // toy backend shape
    int toy_layers = 2;
    int toy_dim = 32;
    int toy_vocab = 1024;
    bool toy_use_positions = true;
    // modules
    bool enable_sentence_attention = true;
    bool attn_layernorm = false;  // optional LN after the sentence attention
    InputForm input_form = InputForm::window;
    std::string backbone = "";  // file for backend=pretrained (may use ECASE_CACHE)

    // For the toy backend the encoder width is the hidden width.
    void resolve() {
        if (backend == Backend::toy) hidden_dim = toy_dim;
    }

    void validate() const {
        if (n_labels != 2 && n_labels != 3) throw ConfigError("model.n_labels must be 2 or 3");
        if (hidden_dim < 1 || n_attention_heads < 1 || hidden_dim % n_attention_heads != 0)
            throw ConfigError("model.hidden_dim must be a positive multiple of "
                              "model.n_attention_heads");
        if (max_tokens < 8) throw ConfigError("model.max_tokens must be >= 8");
        if (backend == Backend::toy) {
            if (toy_layers < 1) throw ConfigError("model.toy_layers must be >= 1");
            if (toy_vocab <= 4) throw ConfigError("model.toy_vocab must exceed reserved ids");
            if (toy_dim != hidden_dim)
                throw ConfigError("model.toy_dim must equal model.hidden_dim (call resolve())");
        } else if (backbone.empty()) {
            throw ConfigError("model.backbone file required for backend=pretrained");
        }
    }

    EncoderConfig toy_encoder_config() const {
        EncoderConfig e;
        e.n_layers = toy_layers;
        e.dim = toy_dim;
        e.n_heads = n_attention_heads;
        e.vocab = toy_vocab;
        e.max_positions = max_tokens;
        e.use_positions = toy_use_positions;
        return e;
    }
};

// Per-proposition representations, one row per window member in member order.
struct EncoderOutput {
    Mat prop_vectors;
};

// ---------------------------------------------------------------------------
// Pair classification head (no biases, per the two-matrix formulation).
// ---------------------------------------------------------------------------
struct PairHead {
    Tensor w1;  // 2D x D
    Tensor w2;  // D x n_labels

    PairHead() = default;
    PairHead(int dim, int n_labels)
        : w1("head.w1", 2 * dim, dim), w2("head.w2", dim, n_labels) {}

    void init(std::uint64_t seed, double stddev) {
        w1.init_gauss(seed, stddev);
        w2.init_gauss(seed, stddev);
    }

    struct Cache {
        std::vector<double> x;  // [h_head; h_tail], 2D
        std::vector<double> a;  // tanh activations, D
    };

    // probabilities over labels; head first, then tail
    std::vector<double> forward(const double* h_head, const double* h_tail, Cache* cache) const {
        const int twoD = w1.w.rows;
        const int D = w1.w.cols;
        const int L = w2.w.cols;
        std::vector<double> x(static_cast<std::size_t>(twoD));
        for (int j = 0; j < twoD / 2; ++j) {
            x[static_cast<std::size_t>(j)] = h_head[j];
            x[static_cast<std::size_t>(j + twoD / 2)] = h_tail[j];
        }
        for (double v : x)
            if (!std::isfinite(v)) throw std::invalid_argument("classify_pair: non-finite input");
        std::vector<double> a(static_cast<std::size_t>(D), 0.0);
        for (int i = 0; i < twoD; ++i) {
            const double xi = x[static_cast<std::size_t>(i)];
            if (xi == 0.0) continue;
            const double* w = w1.w.row(i);
            for (int j = 0; j < D; ++j) a[static_cast<std::size_t>(j)] += xi * w[j];
        }
        for (auto& v : a) v = std::tanh(v);
        std::vector<double> logits(static_cast<std::size_t>(L), 0.0);
        for (int i = 0; i < D; ++i) {
            const double ai = a[static_cast<std::size_t>(i)];
            if (ai == 0.0) continue;
            const double* w = w2.w.row(i);
            for (int j = 0; j < L; ++j) logits[static_cast<std::size_t>(j)] += ai * w[j];
        }
        if (cache) {
            cache->x = x;
            cache->a = a;
        }
        softmax_row(logits.data(), L);
        return logits;
    }

    // dlogits -> gradients; returns d/d h_head and d/d h_tail
    void backward(const Cache& c, const std::vector<double>& dlogits, double* dh_head,
                  double* dh_tail) {
        const int twoD = w1.w.rows;
        const int D = w1.w.cols;
        const int L = w2.w.cols;
        std::vector<double> da(static_cast<std::size_t>(D), 0.0);
        for (int i = 0; i < D; ++i) {
            double s = 0.0;
            const double* w = w2.w.row(i);
            for (int j = 0; j < L; ++j) {
                s += dlogits[static_cast<std::size_t>(j)] * w[j];
                w2.g(i, j) += c.a[static_cast<std::size_t>(i)] * dlogits[static_cast<std::size_t>(j)];
            }
            da[static_cast<std::size_t>(i)] = s;
        }
        std::vector<double> dpre(static_cast<std::size_t>(D));
        for (int i = 0; i < D; ++i) {
            const double ai = c.a[static_cast<std::size_t>(i)];
            dpre[static_cast<std::size_t>(i)] = da[static_cast<std::size_t>(i)] * (1.0 - ai * ai);
        }
        for (int i = 0; i < twoD; ++i) {
            const double xi = c.x[static_cast<std::size_t>(i)];
            double s = 0.0;
            const double* w = w1.w.row(i);
            double* wg = w1.g.row(i);
            for (int j = 0; j < D; ++j) {
                wg[j] += xi * dpre[static_cast<std::size_t>(j)];
                s += w[j] * dpre[static_cast<std::size_t>(j)];
            }
            if (i < twoD / 2)
                dh_head[i] += s;
            else
                dh_tail[i - twoD / 2] += s;
        }
    }

    void collect(std::vector<Tensor*>& out) {
        out.push_back(&w1);
        out.push_back(&w2);
    }

    void zero_grads() {
        w1.zero_grad();
        w2.zero_grad();
    }
};

// Elementwise mix of token-level and sentence-level representations.
inline Mat mix(const Mat& h_w, const Mat& h_s) {
    if (!h_w.same_shape(h_s))
        throw std::invalid_argument("mix: shape mismatch " + std::to_string(h_w.rows) + "x" +
                                    std::to_string(h_w.cols) + " vs " + std::to_string(h_s.rows) +
                                    "x" + std::to_string(h_s.cols));
    return add(h_w, h_s);
}

// ---------------------------------------------------------------------------
// Full model.
// ---------------------------------------------------------------------------
struct EcaseModel {
    ModelConfig cfg;
    Encoder enc;
    MultiHeadAttention sent_attn;
    LayerNorm sent_ln;
    PairHead head;

    EcaseModel() = default;

    // encoder_cfg comes from cfg.toy_encoder_config() for the toy backend or
    // from the loaded backbone container for backend=pretrained.
    EcaseModel(const ModelConfig& mc, const EncoderConfig& encoder_cfg)
        : cfg(mc),
          enc(encoder_cfg),
          sent_attn("sent_attn", mc.hidden_dim, mc.n_attention_heads),
          sent_ln("sent_attn.ln", mc.hidden_dim),
          head(mc.hidden_dim, mc.n_labels) {
        cfg.validate();
        if (encoder_cfg.dim != cfg.hidden_dim)
            throw ConfigError("encoder width does not match model.hidden_dim");
    }

    static EcaseModel make_toy(ModelConfig mc) {
        mc.resolve();
        return EcaseModel(mc, mc.toy_encoder_config());
    }

    void init(std::uint64_t seed, double stddev = 0.02) {
        enc.init(seed, stddev);
        sent_attn.init(seed, stddev);
        sent_ln.init();
        head.init(seed, stddev);
    }

    std::vector<Tensor*> params() {
        std::vector<Tensor*> out;
        enc.collect(out);
        sent_attn.collect(out);
        sent_ln.collect(out);
        head.collect(out);
        return out;
    }

    void zero_grads() {
        for (Tensor* t : params()) t->zero_grad();
    }

    // ------------------------------------------------------------------ //
    struct WindowCache {
        const ContextWindow* window = nullptr;
        Encoder::Cache enc_cache;
        Mat h_w;  // S x D token-level proposition reps
        MultiHeadAttention::Cache attn_cache;
        LayerNorm::Cache ln_cache;
        Mat h;  // mixed reps actually used downstream
    };

    // Token-level proposition representations: encoder output gathered at the
    // separator positions, one row per member in member order.
    EncoderOutput encode(const ContextWindow& w, Encoder::Cache& ec) const {
        Mat u = enc.forward(w.token_ids, ec);
        Mat h(w.n_members(), cfg.hidden_dim);
        for (int s = 0; s < w.n_members(); ++s) {
            const int pos = w.sep_positions.at(w.member_indices[static_cast<std::size_t>(s)]);
            const double* src = u.row(pos);
            double* dst = h.row(s);
            for (int j = 0; j < cfg.hidden_dim; ++j) dst[j] = src[j];
        }
        return EncoderOutput{std::move(h)};
    }

    EncoderOutput encode(const ContextWindow& w) const {
        Encoder::Cache ec;
        return encode(w, ec);
    }

    // Sentence-level self-attention over the member rows.
    Mat sentence_attention(const Mat& h_w, MultiHeadAttention::Cache& cache,
                           LayerNorm::Cache& ln_cache) const {
        if (!cfg.enable_sentence_attention)
            throw ConfigError("sentence attention is disabled in this configuration");
        if (h_w.rows < 1) throw std::invalid_argument("sentence_attention: no rows");
        Mat h_s = sent_attn.forward(h_w, cache);
        if (cfg.attn_layernorm) h_s = sent_ln.forward(h_s, ln_cache);
        return h_s;
    }

    Mat sentence_attention(const Mat& h_w) const {
        MultiHeadAttention::Cache c;
        LayerNorm::Cache lc;
        return sentence_attention(h_w, c, lc);
    }

    // Mixed representations for a window. With attention disabled this is the
    // gathered encoder output itself, bit for bit.
    Mat forward_window(const ContextWindow& w, WindowCache& c) const {
        c.window = &w;
        c.h_w = encode(w, c.enc_cache).prop_vectors;
        if (cfg.enable_sentence_attention) {
            Mat h_s = sentence_attention(c.h_w, c.attn_cache, c.ln_cache);
            c.h = mix(c.h_w, h_s);
        } else {
            c.h = c.h_w;
        }
        return c.h;
    }

    Mat forward_window(const ContextWindow& w) const {
        WindowCache c;
        return forward_window(w, c);
    }

    // dh: gradient on the mixed representations (S x D).
    void backward_window(WindowCache& c, const Mat& dh) {
        Mat dh_w = dh;
        if (cfg.enable_sentence_attention) {
            Mat dh_s = dh;
            if (cfg.attn_layernorm) dh_s = sent_ln.backward(c.ln_cache, dh_s);
            add_inplace(dh_w, sent_attn.backward(c.attn_cache, dh_s));
        }
        // scatter rows back to separator positions
        const ContextWindow& w = *c.window;
        Mat du(c.enc_cache.out.rows, c.enc_cache.out.cols);
        for (int s = 0; s < w.n_members(); ++s) {
            const int pos = w.sep_positions.at(w.member_indices[static_cast<std::size_t>(s)]);
            double* dst = du.row(pos);
            const double* src = dh_w.row(s);
            for (int j = 0; j < cfg.hidden_dim; ++j) dst[j] += src[j];
        }
        enc.backward(c.enc_cache, du);
    }

    std::vector<double> classify(const double* h_head, const double* h_tail) const {
        return head.forward(h_head, h_tail, nullptr);
    }
};

// Standalone form: classify one pair given explicit head parameters.
inline std::vector<double> classify_pair(const std::vector<double>& h_head,
                                         const std::vector<double>& h_tail, const PairHead& head) {
    if (static_cast<int>(h_head.size()) != head.w1.w.rows / 2 ||
        static_cast<int>(h_tail.size()) != head.w1.w.rows / 2)
        throw std::invalid_argument("classify_pair: vector width mismatch");
    return head.forward(h_head.data(), h_tail.data(), nullptr);
}

}  // namespace ecase
