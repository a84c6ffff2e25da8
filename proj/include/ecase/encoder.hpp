// Transformer encoder with explicit forward caches and hand-written
// backward passes (double precision, CPU). Used both as the toy backend and
// to run user-supplied exported backbones of the same architecture.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ecase/common.hpp"
#include "ecase/tensor.hpp"

namespace ecase {

constexpr double kLayerNormEps = 1e-5;

// ---------------------------------------------------------------------------
// LayerNorm over rows.
// ---------------------------------------------------------------------------
struct LayerNorm {
    Tensor gain;
    Tensor bias;

    LayerNorm() = default;
    LayerNorm(const std::string& prefix, int dim)
        : gain(prefix + ".g", 1, dim), bias(prefix + ".b", 1, dim) {}

    void init() {
        gain.init_const(1.0);
        bias.init_zero();
    }

    struct Cache {
        Mat xhat;
        std::vector<double> inv_std;
    };

    Mat forward(const Mat& x, Cache& c) const {
        const int T = x.rows, D = x.cols;
        Mat y(T, D);
        c.xhat = Mat(T, D);
        c.inv_std.assign(static_cast<std::size_t>(T), 0.0);
        for (int i = 0; i < T; ++i) {
            const double* xi = x.row(i);
            double mu = 0.0;
            for (int j = 0; j < D; ++j) mu += xi[j];
            mu /= D;
            double var = 0.0;
            for (int j = 0; j < D; ++j) var += (xi[j] - mu) * (xi[j] - mu);
            var /= D;
            const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
            c.inv_std[static_cast<std::size_t>(i)] = inv;
            for (int j = 0; j < D; ++j) {
                const double xh = (xi[j] - mu) * inv;
                c.xhat(i, j) = xh;
                y(i, j) = xh * gain.w(0, j) + bias.w(0, j);
            }
        }
        return y;
    }

    Mat backward(const Cache& c, const Mat& dy) {
        const int T = dy.rows, D = dy.cols;
        Mat dx(T, D);
        for (int i = 0; i < T; ++i) {
            double mean_dxh = 0.0, mean_dxh_xh = 0.0;
            for (int j = 0; j < D; ++j) {
                const double dxh = dy(i, j) * gain.w(0, j);
                mean_dxh += dxh;
                mean_dxh_xh += dxh * c.xhat(i, j);
                gain.g(0, j) += dy(i, j) * c.xhat(i, j);
                bias.g(0, j) += dy(i, j);
            }
            mean_dxh /= D;
            mean_dxh_xh /= D;
            const double inv = c.inv_std[static_cast<std::size_t>(i)];
            for (int j = 0; j < D; ++j) {
                const double dxh = dy(i, j) * gain.w(0, j);
                dx(i, j) = inv * (dxh - mean_dxh - c.xhat(i, j) * mean_dxh_xh);
            }
        }
        return dx;
    }

    void collect(std::vector<Tensor*>& out) {
        out.push_back(&gain);
        out.push_back(&bias);
    }
};

// ---------------------------------------------------------------------------
// Multi-head scaled-dot-product self-attention (full, bidirectional).
// ---------------------------------------------------------------------------
struct MultiHeadAttention {
    int dim = 0;
    int n_heads = 1;
    Tensor wq, wk, wv, wo;
    Tensor bq, bk, bv, bo;

    MultiHeadAttention() = default;
    MultiHeadAttention(const std::string& prefix, int d, int heads)
        : dim(d),
          n_heads(heads),
          wq(prefix + ".wq", d, d),
          wk(prefix + ".wk", d, d),
          wv(prefix + ".wv", d, d),
          wo(prefix + ".wo", d, d),
          bq(prefix + ".bq", 1, d),
          bk(prefix + ".bk", 1, d),
          bv(prefix + ".bv", 1, d),
          bo(prefix + ".bo", 1, d) {
        if (d % heads != 0) throw ConfigError("attention dim must divide by head count");
    }

    void init(std::uint64_t seed, double stddev) {
        for (Tensor* t : {&wq, &wk, &wv, &wo}) t->init_gauss(seed, stddev);
        for (Tensor* t : {&bq, &bk, &bv, &bo}) t->init_zero();
    }

    struct Cache {
        Mat x, q, k, v, o;
        std::vector<Mat> attn;  // per head, T x T, rows are softmax distributions
    };

    Mat forward(const Mat& x, Cache& c) const {
        const int T = x.rows;
        const int dh = dim / n_heads;
        const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
        c.x = x;
        c.q = matmul(x, wq.w);
        c.k = matmul(x, wk.w);
        c.v = matmul(x, wv.w);
        for (int i = 0; i < T; ++i)
            for (int j = 0; j < dim; ++j) {
                c.q(i, j) += bq.w(0, j);
                c.k(i, j) += bk.w(0, j);
                c.v(i, j) += bv.w(0, j);
            }
        c.o = Mat(T, dim);
        c.attn.assign(static_cast<std::size_t>(n_heads), Mat());
        for (int h = 0; h < n_heads; ++h) {
            const int off = h * dh;
            Mat& A = c.attn[static_cast<std::size_t>(h)];
            A = Mat(T, T);
            for (int i = 0; i < T; ++i) {
                for (int j = 0; j < T; ++j)
                    A(i, j) = scale * dot(c.q.row(i) + off, c.k.row(j) + off, dh);
                softmax_row(A.row(i), T);
            }
            for (int i = 0; i < T; ++i)
                for (int j = 0; j < T; ++j) {
                    const double aij = A(i, j);
                    if (aij == 0.0) continue;
                    const double* vj = c.v.row(j) + off;
                    double* oi = c.o.row(i) + off;
                    for (int d2 = 0; d2 < dh; ++d2) oi[d2] += aij * vj[d2];
                }
        }
        Mat y = matmul(c.o, wo.w);
        for (int i = 0; i < T; ++i)
            for (int j = 0; j < dim; ++j) y(i, j) += bo.w(0, j);
        return y;
    }

    Mat backward(const Cache& c, const Mat& dy) {
        const int T = dy.rows;
        const int dh = dim / n_heads;
        const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

        add_At_B(wo.g, c.o, dy);
        for (int i = 0; i < T; ++i)
            for (int j = 0; j < dim; ++j) bo.g(0, j) += dy(i, j);
        Mat dO = matmul_Bt(dy, wo.w);

        Mat dQ(T, dim), dK(T, dim), dV(T, dim);
        for (int h = 0; h < n_heads; ++h) {
            const int off = h * dh;
            const Mat& A = c.attn[static_cast<std::size_t>(h)];
            // dA = dOh Vh^T ; dVh = A^T dOh
            Mat dA(T, T);
            for (int i = 0; i < T; ++i)
                for (int j = 0; j < T; ++j)
                    dA(i, j) = dot(dO.row(i) + off, c.v.row(j) + off, dh);
            for (int j = 0; j < T; ++j)
                for (int i = 0; i < T; ++i) {
                    const double aij = A(i, j);
                    if (aij == 0.0) continue;
                    const double* doi = dO.row(i) + off;
                    double* dvj = dV.row(j) + off;
                    for (int d2 = 0; d2 < dh; ++d2) dvj[d2] += aij * doi[d2];
                }
            // softmax rows: dS_i = A_i ⊙ (dA_i − ⟨dA_i, A_i⟩)
            Mat dS(T, T);
            for (int i = 0; i < T; ++i) {
                double inner = 0.0;
                for (int j = 0; j < T; ++j) inner += dA(i, j) * A(i, j);
                for (int j = 0; j < T; ++j) dS(i, j) = A(i, j) * (dA(i, j) - inner);
            }
            // dQh = dS Kh * scale ; dKh = dS^T Qh * scale
            for (int i = 0; i < T; ++i)
                for (int j = 0; j < T; ++j) {
                    const double s = dS(i, j) * scale;
                    if (s == 0.0) continue;
                    const double* kj = c.k.row(j) + off;
                    const double* qi = c.q.row(i) + off;
                    double* dqi = dQ.row(i) + off;
                    double* dkj = dK.row(j) + off;
                    for (int d2 = 0; d2 < dh; ++d2) {
                        dqi[d2] += s * kj[d2];
                        dkj[d2] += s * qi[d2];
                    }
                }
        }

        add_At_B(wq.g, c.x, dQ);
        add_At_B(wk.g, c.x, dK);
        add_At_B(wv.g, c.x, dV);
        for (int i = 0; i < T; ++i)
            for (int j = 0; j < dim; ++j) {
                bq.g(0, j) += dQ(i, j);
                bk.g(0, j) += dK(i, j);
                bv.g(0, j) += dV(i, j);
            }
        Mat dx = matmul_Bt(dQ, wq.w);
        add_inplace(dx, matmul_Bt(dK, wk.w));
        add_inplace(dx, matmul_Bt(dV, wv.w));
        return dx;
    }

    void collect(std::vector<Tensor*>& out) {
        for (Tensor* t : {&wq, &wk, &wv, &wo, &bq, &bk, &bv, &bo}) out.push_back(t);
    }
};

// ---------------------------------------------------------------------------
// GELU (exact erf form).
// ---------------------------------------------------------------------------
inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }
inline double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
    const double pdf = std::exp(-0.5 * x * x) * 0.3989422804014326779;  // 1/sqrt(2*pi)
    return cdf + x * pdf;
}

// ---------------------------------------------------------------------------
// One pre-norm encoder layer: x + MHA(LN1(x)), then x + MLP(LN2(x)).
// ---------------------------------------------------------------------------
struct EncoderLayer {
    LayerNorm ln1, ln2;
    MultiHeadAttention attn;
    Tensor mlp_w1, mlp_b1, mlp_w2, mlp_b2;

    EncoderLayer() = default;
    EncoderLayer(const std::string& prefix, int dim, int heads)
        : ln1(prefix + ".ln1", dim),
          ln2(prefix + ".ln2", dim),
          attn(prefix + ".attn", dim, heads),
          mlp_w1(prefix + ".mlp.w1", dim, 4 * dim),
          mlp_b1(prefix + ".mlp.b1", 1, 4 * dim),
          mlp_w2(prefix + ".mlp.w2", 4 * dim, dim),
          mlp_b2(prefix + ".mlp.b2", 1, dim) {}

    void init(std::uint64_t seed, double stddev) {
        ln1.init();
        ln2.init();
        attn.init(seed, stddev);
        mlp_w1.init_gauss(seed, stddev);
        mlp_w2.init_gauss(seed, stddev);
        mlp_b1.init_zero();
        mlp_b2.init_zero();
    }

    struct Cache {
        LayerNorm::Cache ln1c, ln2c;
        MultiHeadAttention::Cache attnc;
        Mat x1;       // after attention residual
        Mat mlp_pre;  // pre-activation
        Mat mlp_h;    // after gelu
    };

    Mat forward(const Mat& x, Cache& c) const {
        Mat n1 = ln1.forward(x, c.ln1c);
        Mat a = attn.forward(n1, c.attnc);
        c.x1 = add(x, a);
        Mat n2 = ln2.forward(c.x1, c.ln2c);
        c.mlp_pre = matmul(n2, mlp_w1.w);
        const int T = c.mlp_pre.rows, H = c.mlp_pre.cols;
        for (int i = 0; i < T; ++i)
            for (int j = 0; j < H; ++j) c.mlp_pre(i, j) += mlp_b1.w(0, j);
        c.mlp_h = c.mlp_pre;
        for (auto& v : c.mlp_h.a) v = gelu(v);
        Mat m = matmul(c.mlp_h, mlp_w2.w);
        for (int i = 0; i < m.rows; ++i)
            for (int j = 0; j < m.cols; ++j) m(i, j) += mlp_b2.w(0, j);
        return add(c.x1, m);
    }

    Mat backward(Cache& c, const Mat& dy) {
        // MLP branch
        add_At_B(mlp_w2.g, c.mlp_h, dy);
        for (int i = 0; i < dy.rows; ++i)
            for (int j = 0; j < dy.cols; ++j) mlp_b2.g(0, j) += dy(i, j);
        Mat dh = matmul_Bt(dy, mlp_w2.w);
        Mat dpre = dh;
        for (std::size_t i = 0; i < dpre.a.size(); ++i) dpre.a[i] *= gelu_grad(c.mlp_pre.a[i]);
        // recompute n2 is avoided: cache xhat handles LN backward; for w1 grad
        // we need n2 = ln2(x1); rebuild it from the LN cache.
        Mat n2(c.ln2c.xhat.rows, c.ln2c.xhat.cols);
        for (int i = 0; i < n2.rows; ++i)
            for (int j = 0; j < n2.cols; ++j)
                n2(i, j) = c.ln2c.xhat(i, j) * ln2.gain.w(0, j) + ln2.bias.w(0, j);
        add_At_B(mlp_w1.g, n2, dpre);
        for (int i = 0; i < dpre.rows; ++i)
            for (int j = 0; j < dpre.cols; ++j) mlp_b1.g(0, j) += dpre(i, j);
        Mat dn2 = matmul_Bt(dpre, mlp_w1.w);
        Mat dx1 = ln2.backward(c.ln2c, dn2);
        add_inplace(dx1, dy);  // residual
        // Attention branch
        Mat dn1 = attn.backward(c.attnc, dx1);
        Mat dx = ln1.backward(c.ln1c, dn1);
        add_inplace(dx, dx1);  // residual
        return dx;
    }

    void collect(std::vector<Tensor*>& out) {
        ln1.collect(out);
        ln2.collect(out);
        attn.collect(out);
        for (Tensor* t : {&mlp_w1, &mlp_b1, &mlp_w2, &mlp_b2}) out.push_back(t);
    }
};

// ---------------------------------------------------------------------------
// Full encoder: token (+ optional position) embeddings, N layers, final LN.
// ---------------------------------------------------------------------------
struct EncoderConfig {
    int n_layers = 2;
    int dim = 32;
    int n_heads = 4;
    int vocab = 1024;
    int max_positions = 512;
    bool use_positions = true;

    void validate() const {
        if (n_layers < 1) throw ConfigError("encoder layers must be >= 1");
        if (dim < 1 || n_heads < 1 || dim % n_heads != 0)
            throw ConfigError("encoder dim must be a positive multiple of head count");
        if (vocab <= 4) throw ConfigError("encoder vocab too small");
        if (max_positions < 8) throw ConfigError("encoder max_positions too small");
    }
};

struct Encoder {
    EncoderConfig cfg;
    Tensor tok_emb;
    Tensor pos_emb;
    std::vector<EncoderLayer> layers;
    LayerNorm lnf;

    Encoder() = default;
    explicit Encoder(const EncoderConfig& c) : cfg(c) {
        cfg.validate();
        tok_emb = Tensor("enc.tok_emb", cfg.vocab, cfg.dim);
        pos_emb = Tensor("enc.pos_emb", cfg.max_positions, cfg.dim);
        for (int l = 0; l < cfg.n_layers; ++l)
            layers.emplace_back("enc.l" + std::to_string(l), cfg.dim, cfg.n_heads);
        lnf = LayerNorm("enc.lnf", cfg.dim);
    }

    void init(std::uint64_t seed, double stddev = 0.02) {
        tok_emb.init_gauss(seed, stddev);
        pos_emb.init_gauss(seed, stddev);
        for (auto& l : layers) l.init(seed, stddev);
        lnf.init();
    }

    struct Cache {
        std::vector<int> ids;
        std::vector<EncoderLayer::Cache> layer_caches;
        LayerNorm::Cache lnf_cache;
        Mat out;
    };

    Mat forward(const std::vector<int>& ids, Cache& c) const {
        const int T = static_cast<int>(ids.size());
        if (T == 0) throw std::invalid_argument("encoder: empty token sequence");
        if (T > cfg.max_positions)
            throw std::invalid_argument("encoder: sequence of " + std::to_string(T) +
                                        " tokens exceeds max_positions");
        for (int id : ids)
            if (id < 0 || id >= cfg.vocab)
                throw std::invalid_argument("encoder: token id " + std::to_string(id) +
                                            " outside vocabulary of " + std::to_string(cfg.vocab));
        c.ids = ids;
        Mat x(T, cfg.dim);
        for (int t = 0; t < T; ++t) {
            const double* e = tok_emb.w.row(ids[static_cast<std::size_t>(t)]);
            double* xt = x.row(t);
            for (int j = 0; j < cfg.dim; ++j) xt[j] = e[j];
            if (cfg.use_positions) {
                const double* p = pos_emb.w.row(t);
                for (int j = 0; j < cfg.dim; ++j) xt[j] += p[j];
            }
        }
        c.layer_caches.assign(layers.size(), EncoderLayer::Cache{});
        for (std::size_t l = 0; l < layers.size(); ++l)
            x = layers[l].forward(x, c.layer_caches[l]);
        c.out = lnf.forward(x, c.lnf_cache);
        return c.out;
    }

    void backward(Cache& c, const Mat& dout) {
        Mat dx = lnf.backward(c.lnf_cache, dout);
        for (std::size_t l = layers.size(); l-- > 0;)
            dx = layers[l].backward(c.layer_caches[l], dx);
        for (int t = 0; t < dx.rows; ++t) {
            const int id = c.ids[static_cast<std::size_t>(t)];
            double* tg = tok_emb.g.row(id);
            const double* dxt = dx.row(t);
            for (int j = 0; j < cfg.dim; ++j) tg[j] += dxt[j];
            if (cfg.use_positions) {
                double* pg = pos_emb.g.row(t);
                for (int j = 0; j < cfg.dim; ++j) pg[j] += dxt[j];
            }
        }
    }

    void collect(std::vector<Tensor*>& out) {
        out.push_back(&tok_emb);
        out.push_back(&pos_emb);
        for (auto& l : layers) l.collect(out);
        lnf.collect(out);
    }
};

}  // namespace ecase
