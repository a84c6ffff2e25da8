// Context windows around head propositions and (head, tail) pair instances.
// A window is laid out as [sep p_a-tokens sep p_a+1-tokens ...]; the encoder
// output at each separator is the proposition's representation.
#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecase/common.hpp"
#include "ecase/corpus.hpp"
#include "ecase/tokenizer.hpp"

namespace ecase {

struct WindowConfig {
    int context_length = 10;  // propositions on each side of the head
    int max_tokens = 512;     // hard cap on window token count

    void validate() const {
        if (context_length < 0) throw ConfigError("window.context_length must be >= 0");
        if (max_tokens < 8) throw ConfigError("window.max_tokens must be >= 8");
    }
};

struct ContextWindow {
    std::string doc_id;
    int head_index = 0;
    std::vector<int> member_indices;           // contiguous, ascending, contains head
    std::vector<int> token_ids;
    std::vector<int> token_prop;               // owning proposition index, per token
    std::vector<bool> token_is_sep;
    std::vector<std::size_t> token_char_start; // span in the proposition text
    std::vector<std::size_t> token_char_end;   // (0,0) for separators
    std::map<int, int> sep_positions;          // proposition index -> separator position
    std::map<int, int> token_offsets;          // proposition index -> first content token

    int length() const { return static_cast<int>(token_ids.size()); }
    int n_members() const { return static_cast<int>(member_indices.size()); }

    int member_slot(int prop_index) const {
        for (int s = 0; s < n_members(); ++s)
            if (member_indices[static_cast<std::size_t>(s)] == prop_index) return s;
        return -1;
    }
};

enum class Setting { head_given, end_to_end };

inline Setting setting_from_name(const std::string& s) {
    if (s == "head_given" || s == "head-given") return Setting::head_given;
    if (s == "end_to_end" || s == "end-to-end") return Setting::end_to_end;
    throw ConfigError("unknown setting: " + s);
}

inline const char* setting_name(Setting s) {
    return s == Setting::head_given ? "head_given" : "end_to_end";
}

struct PairInstance {
    std::shared_ptr<const ContextWindow> window;
    int head_index = 0;
    int tail_index = 0;
    Label gold = Label::no_rel;
    int token_distance = 0;
    bool excluded = false;  // set by sentence masking: out of the training loss
};

namespace detail {

// Window over an explicit contiguous member range, with farthest-first
// truncation. Ties between the two ends alternate, starting on the left.
inline ContextWindow build_window_range(const Document& doc, int head_index, int lo, int hi,
                                        const WindowConfig& cfg, const Tokenizer& tok) {
    cfg.validate();
    if (head_index < 0 || head_index >= doc.size())
        throw std::invalid_argument("head index out of range: " + std::to_string(head_index));

    std::vector<std::vector<Token>> toks;
    std::vector<int> members;
    for (int i = lo; i <= hi; ++i) {
        members.push_back(i);
        toks.push_back(tok.encode(doc.prop(i).text));
    }

    auto total = [&]() {
        int t = 0;
        for (const auto& v : toks) t += 1 + static_cast<int>(v.size());
        return t;
    };

    bool drop_left_on_tie = true;
    while (total() > cfg.max_tokens && members.size() > 1) {
        const int dl = head_index - members.front();
        const int dr = members.back() - head_index;
        bool drop_left;
        if (dl > dr)
            drop_left = true;
        else if (dr > dl)
            drop_left = false;
        else {
            drop_left = drop_left_on_tie;
            drop_left_on_tie = !drop_left_on_tie;
        }
        if (drop_left) {
            members.erase(members.begin());
            toks.erase(toks.begin());
        } else {
            members.pop_back();
            toks.pop_back();
        }
    }
    if (total() > cfg.max_tokens)
        throw DataError("document " + doc.id + ": head proposition " +
                        doc.prop(head_index).id + " alone exceeds max_tokens=" +
                        std::to_string(cfg.max_tokens));

    ContextWindow w;
    w.doc_id = doc.id;
    w.head_index = head_index;
    w.member_indices = members;
    for (std::size_t m = 0; m < members.size(); ++m) {
        const int prop = members[m];
        w.sep_positions[prop] = w.length();
        w.token_ids.push_back(tok.sep_id());
        w.token_prop.push_back(prop);
        w.token_is_sep.push_back(true);
        w.token_char_start.push_back(0);
        w.token_char_end.push_back(0);
        w.token_offsets[prop] = w.length();
        for (const Token& t : toks[m]) {
            w.token_ids.push_back(t.id);
            w.token_prop.push_back(prop);
            w.token_is_sep.push_back(false);
            w.token_char_start.push_back(t.char_start);
            w.token_char_end.push_back(t.char_end);
        }
    }
    return w;
}

}  // namespace detail

inline ContextWindow build_window(const Document& doc, int head_index, const WindowConfig& cfg,
                                  const Tokenizer& tok) {
    const int lo = std::max(0, head_index - cfg.context_length);
    const int hi = std::min(doc.size() - 1, head_index + cfg.context_length);
    return detail::build_window_range(doc, head_index, lo, hi, cfg, tok);
}

// Single-proposition window (isolated-pair encoding).
inline ContextWindow build_window_single(const Document& doc, int prop_index,
                                         const WindowConfig& cfg, const Tokenizer& tok) {
    return detail::build_window_range(doc, prop_index, prop_index, prop_index, cfg, tok);
}

// Window covering exactly the head..tail span (pair-in-context encoding).
inline ContextWindow build_window_span(const Document& doc, int head_index, int tail_index,
                                       const WindowConfig& cfg, const Tokenizer& tok) {
    return detail::build_window_range(doc, head_index, std::min(head_index, tail_index),
                                      std::max(head_index, tail_index), cfg, tok);
}

struct EnumeratedPairs {
    std::vector<PairInstance> pairs;
    // Gold links whose tail fell outside the head's window; they cap recall.
    std::vector<ArgLink> unreachable_links;
};

inline int pair_token_distance(const ContextWindow& w, int head, int tail) {
    return std::abs(w.token_offsets.at(head) - w.token_offsets.at(tail));
}

inline EnumeratedPairs enumerate_pairs(const Document& doc, const WindowConfig& cfg,
                                       Setting setting, const Tokenizer& tok) {
    validate_document(doc);
    EnumeratedPairs out;
    for (int h = 0; h < doc.size(); ++h) {
        if (setting == Setting::head_given && !doc.prop(h).is_head) continue;
        auto window = std::make_shared<const ContextWindow>(build_window(doc, h, cfg, tok));
        for (int member : window->member_indices) {
            if (member == h) continue;
            PairInstance pi;
            pi.window = window;
            pi.head_index = h;
            pi.tail_index = member;
            pi.gold = doc.gold(h, member);
            pi.token_distance = pair_token_distance(*window, h, member);
            out.pairs.push_back(std::move(pi));
        }
        for (const auto& l : doc.links)
            if (l.head_index == h && window->member_slot(l.tail_index) < 0)
                out.unreachable_links.push_back(l);
    }
    return out;
}

// Debug dump used by `ecase analyze --dump-windows`.
inline std::string window_to_jsonl(const ContextWindow& w) {
    nlohmann::json j;
    j["doc_id"] = w.doc_id;
    j["head_index"] = w.head_index;
    j["member_indices"] = w.member_indices;
    j["token_ids"] = w.token_ids;
    nlohmann::json seps = nlohmann::json::object();
    for (const auto& [prop, pos] : w.sep_positions) seps[std::to_string(prop)] = pos;
    j["sep_positions"] = std::move(seps);
    nlohmann::json offs = nlohmann::json::object();
    for (const auto& [prop, pos] : w.token_offsets) offs[std::to_string(prop)] = pos;
    j["token_offsets"] = std::move(offs);
    return j.dump();
}

}  // namespace ecase
