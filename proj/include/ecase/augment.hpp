// Training-time masking augmentation: word-level discourse-marker masking
// and sentence-level proposition masking. Both replace token ids with the
// mask id in place; sequence length, separators, and the proposition maps
// never change.
#pragma once

#include <string>
#include <vector>

#include "ecase/common.hpp"
#include "ecase/corpus.hpp"
#include "ecase/markers.hpp"
#include "ecase/pairing.hpp"

namespace ecase {

struct AugmentConfig {
    double p_word = 0.5;       // per marker occurrence
    double p_sentence = 0.15;  // per non-head window member
    std::uint64_t seed = 0;
    bool mask_head = false;          // allow sentence-masking the head itself
    bool keep_masked_labels = false; // keep masked-tail pairs in the loss

    void validate() const {
        if (p_word < 0.0 || p_word > 1.0) throw ConfigError("aug.p_word must be in [0,1]");
        if (p_sentence < 0.0 || p_sentence > 1.0)
            throw ConfigError("aug.p_sentence must be in [0,1]");
    }
};

// Each marker occurrence is an independent Bernoulli(p_word); a selected
// occurrence has every token overlapping its char span replaced by the mask
// id. Separators are untouchable, and the head proposition's content is
// never altered, so matches inside the head are dropped up front.
inline ContextWindow mask_markers(const ContextWindow& window,
                                  const std::vector<MarkerMatch>& matches,
                                  const AugmentConfig& cfg, SeededRandom& rng) {
    cfg.validate();
    ContextWindow out = window;
    for (const auto& m : matches) {
        if (m.proposition_index == window.head_index) continue;
        const bool draw = rng.bernoulli(cfg.p_word);
        if (!draw) continue;
        for (int t = 0; t < out.length(); ++t) {
            const auto ti = static_cast<std::size_t>(t);
            if (out.token_is_sep[ti]) continue;
            if (out.token_prop[ti] != m.proposition_index) continue;
            // overlap test on [char_start, char_end)
            if (out.token_char_start[ti] < m.char_end && m.char_start < out.token_char_end[ti])
                out.token_ids[ti] = SpecialIds::mask;
        }
    }
    return out;
}

struct SentenceMaskResult {
    ContextWindow window;
    std::vector<PairInstance> pairs;
    std::vector<int> masked_members;
};

// Each maskable member is an independent Bernoulli(p_sentence); selected
// members lose all content tokens to the mask id (separator kept). Pairs
// whose tail was masked are excluded from the classification loss unless
// keep_masked_labels is set. The head is maskable only with mask_head.
inline SentenceMaskResult mask_sentences(const ContextWindow& window,
                                         const std::vector<PairInstance>& pairs,
                                         const AugmentConfig& cfg, SeededRandom& rng) {
    cfg.validate();
    SentenceMaskResult res;
    res.window = window;
    res.pairs = pairs;
    for (int member : window.member_indices) {
        if (member == window.head_index && !cfg.mask_head) continue;
        if (!rng.bernoulli(cfg.p_sentence)) continue;
        res.masked_members.push_back(member);
        for (int t = 0; t < res.window.length(); ++t) {
            const auto ti = static_cast<std::size_t>(t);
            if (res.window.token_is_sep[ti]) continue;
            if (res.window.token_prop[ti] == member) res.window.token_ids[ti] = SpecialIds::mask;
        }
        if (!cfg.keep_masked_labels)
            for (auto& p : res.pairs)
                if (p.tail_index == member) p.excluded = true;
    }
    return res;
}

// Full training-time pipeline for one window: find markers on the raw member
// texts, mask markers, then mask sentences. Draw order is fixed (markers in
// member order, then members in window order) so a given seed is
// byte-deterministic.
inline SentenceMaskResult augment_window(const ContextWindow& window, const Document& doc,
                                         const std::vector<PairInstance>& pairs,
                                         const MarkerLexicon& lexicon, const AugmentConfig& cfg,
                                         SeededRandom& rng) {
    std::vector<MarkerMatch> matches;
    for (int member : window.member_indices) {
        auto found = find_markers(doc.prop(member).text, lexicon, member);
        matches.insert(matches.end(), found.begin(), found.end());
    }
    ContextWindow masked = mask_markers(window, matches, cfg, rng);
    return mask_sentences(masked, pairs, cfg, rng);
}

}  // namespace ecase
