// Training objectives: masked (optionally class-weighted) cross-entropy,
// the distance-weighted cosine similarity regularizer
//   y == no_rel:  1 + exp(-d_ij/d) * cos(H_i, H_j)
//   y != no_rel:  1 - exp(d_ij/d - 1) * cos(H_i, H_j)
// and their weighted combination. Reduction over pairs is the mean, so the
// mixing weight is batch-size independent.
#pragma once

#include <cmath>
#include <vector>

#include "ecase/common.hpp"
#include "ecase/tensor.hpp"

namespace ecase {

struct LossConfig {
    double lambda_sim = 0.01;
    std::vector<double> class_weights;  // empty = unweighted
    int max_tokens = 512;               // the distance normalizer d

    void validate() const {
        if (lambda_sim < 0.0) throw ConfigError("loss.lambda_sim must be >= 0");
        if (max_tokens <= 0) throw ConfigError("loss.max_tokens must be > 0");
        for (double w : class_weights)
            if (!(w > 0.0)) throw ConfigError("loss.class_weights must be positive");
    }
};

struct LossDiagnostics {
    long prob_clamps = 0;     // gold probability hit the 1e-12 floor
    long zero_norm_pairs = 0; // cosine undefined, treated as 0

    void merge(const LossDiagnostics& o) {
        prob_clamps += o.prob_clamps;
        zero_norm_pairs += o.zero_norm_pairs;
    }
};

struct PairBatch {
    Mat head_vectors;  // B x D
    Mat tail_vectors;  // B x D
    std::vector<Label> gold;
    std::vector<int> token_distances;
    std::vector<bool> loss_mask;  // false = excluded by augmentation

    int size() const { return head_vectors.rows; }

    void validate(const LossConfig& cfg) const {
        const int B = size();
        if (tail_vectors.rows != B || static_cast<int>(gold.size()) != B ||
            static_cast<int>(token_distances.size()) != B ||
            static_cast<int>(loss_mask.size()) != B)
            throw std::invalid_argument("PairBatch: mismatched leading dimensions");
        if (head_vectors.cols != tail_vectors.cols)
            throw std::invalid_argument("PairBatch: head/tail width mismatch");
        for (int d : token_distances)
            if (d < 0 || d > cfg.max_tokens)
                throw std::invalid_argument("PairBatch: token distance outside [0, d]");
    }
};

constexpr double kProbFloor = 1e-12;

// ---------------------------------------------------------------------------
// Cross-entropy over masked rows.
// ---------------------------------------------------------------------------
inline double classification_loss(const Mat& probs, const PairBatch& batch,
                                  const LossConfig& cfg, LossDiagnostics* diag = nullptr) {
    cfg.validate();
    const int B = probs.rows;
    if (B != batch.size()) throw std::invalid_argument("classification_loss: row mismatch");
    double num = 0.0, z = 0.0;
    for (int i = 0; i < B; ++i) {
        if (!batch.loss_mask[static_cast<std::size_t>(i)]) continue;
        const int g = static_cast<int>(batch.gold[static_cast<std::size_t>(i)]);
        if (g < 0 || g >= probs.cols)
            throw std::invalid_argument("classification_loss: gold label outside prob columns");
        double p = probs(i, g);
        if (p < kProbFloor) {
            p = kProbFloor;
            if (diag) ++diag->prob_clamps;
        }
        const double w = cfg.class_weights.empty()
                             ? 1.0
                             : cfg.class_weights[static_cast<std::size_t>(g)];
        num += w * -std::log(p);
        z += w;
    }
    return z == 0.0 ? 0.0 : num / z;
}

// Gradient at the logits of softmax rows: w_g * (p - onehot) / sum(weights).
// Masked rows get zero rows.
inline Mat classification_loss_grad_logits(const Mat& probs, const PairBatch& batch,
                                           const LossConfig& cfg) {
    const int B = probs.rows, L = probs.cols;
    Mat d(B, L);
    double z = 0.0;
    for (int i = 0; i < B; ++i) {
        if (!batch.loss_mask[static_cast<std::size_t>(i)]) continue;
        const int g = static_cast<int>(batch.gold[static_cast<std::size_t>(i)]);
        z += cfg.class_weights.empty() ? 1.0 : cfg.class_weights[static_cast<std::size_t>(g)];
    }
    if (z == 0.0) return d;
    for (int i = 0; i < B; ++i) {
        if (!batch.loss_mask[static_cast<std::size_t>(i)]) continue;
        const int g = static_cast<int>(batch.gold[static_cast<std::size_t>(i)]);
        const double w =
            cfg.class_weights.empty() ? 1.0 : cfg.class_weights[static_cast<std::size_t>(g)];
        for (int j = 0; j < L; ++j)
            d(i, j) = w * (probs(i, j) - (j == g ? 1.0 : 0.0)) / z;
    }
    return d;
}

// ---------------------------------------------------------------------------
// Distance-weighted similarity regularizer.
// ---------------------------------------------------------------------------
namespace detail {

struct SimTerm {
    double value = 0.0;
    double sign_weight = 0.0;  // s * w: +w for no_rel, -w for related
    double cosv = 0.0;
    double nh = 0.0, nt = 0.0;
    bool degenerate = false;
};

inline SimTerm sim_term(const double* h, const double* t, int D, Label gold, int dist,
                        const LossConfig& cfg) {
    SimTerm out;
    const double dn = static_cast<double>(dist) / static_cast<double>(cfg.max_tokens);
    const double w = gold == Label::no_rel ? std::exp(-dn) : std::exp(dn - 1.0);
    const double s = gold == Label::no_rel ? 1.0 : -1.0;
    out.nh = norm2(h, D);
    out.nt = norm2(t, D);
    if (out.nh == 0.0 || out.nt == 0.0) {
        out.degenerate = true;
        out.cosv = 0.0;
    } else {
        out.cosv = dot(h, t, D) / (out.nh * out.nt);
    }
    out.sign_weight = s * w;
    out.value = 1.0 + out.sign_weight * out.cosv;
    return out;
}

}  // namespace detail

inline double similarity_loss(const PairBatch& batch, const LossConfig& cfg,
                              LossDiagnostics* diag = nullptr) {
    cfg.validate();
    batch.validate(cfg);
    const int D = batch.head_vectors.cols;
    double sum = 0.0;
    int n = 0;
    for (int i = 0; i < batch.size(); ++i) {
        if (!batch.loss_mask[static_cast<std::size_t>(i)]) continue;
        const auto term =
            detail::sim_term(batch.head_vectors.row(i), batch.tail_vectors.row(i), D,
                             batch.gold[static_cast<std::size_t>(i)],
                             batch.token_distances[static_cast<std::size_t>(i)], cfg);
        if (term.degenerate && diag) ++diag->zero_norm_pairs;
        sum += term.value;
        ++n;
    }
    return n == 0 ? 0.0 : sum / n;
}

// Accumulates d(similarity_loss)/dH into dhead/dtail (mean reduction).
inline void similarity_loss_backward(const PairBatch& batch, const LossConfig& cfg, Mat& dhead,
                                     Mat& dtail) {
    const int D = batch.head_vectors.cols;
    int n = 0;
    for (int i = 0; i < batch.size(); ++i)
        if (batch.loss_mask[static_cast<std::size_t>(i)]) ++n;
    if (n == 0) return;
    for (int i = 0; i < batch.size(); ++i) {
        if (!batch.loss_mask[static_cast<std::size_t>(i)]) continue;
        const double* h = batch.head_vectors.row(i);
        const double* t = batch.tail_vectors.row(i);
        const auto term = detail::sim_term(h, t, D, batch.gold[static_cast<std::size_t>(i)],
                                           batch.token_distances[static_cast<std::size_t>(i)], cfg);
        if (term.degenerate) continue;  // cosine treated as constant 0
        const double coef = term.sign_weight / n;
        const double inv_ht = 1.0 / (term.nh * term.nt);
        const double inv_h2 = 1.0 / (term.nh * term.nh);
        const double inv_t2 = 1.0 / (term.nt * term.nt);
        double* dh = dhead.row(i);
        double* dt = dtail.row(i);
        for (int j = 0; j < D; ++j) {
            dh[j] += coef * (t[j] * inv_ht - term.cosv * h[j] * inv_h2);
            dt[j] += coef * (h[j] * inv_ht - term.cosv * t[j] * inv_t2);
        }
    }
}

inline double total_loss(double cls, double sim, const LossConfig& cfg) {
    if (!std::isfinite(cls) || !std::isfinite(sim))
        throw NumericError("total_loss: non-finite inputs");
    return cls + cfg.lambda_sim * sim;
}

}  // namespace ecase
