// Discourse marker lexicon and surface matcher. Matching is word based:
// case-insensitive, word-boundary exact, longest match first, non-overlapping.
#pragma once

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ecase/common.hpp"

namespace ecase {

// A word for matching purposes is a maximal run of word characters.
// Bytes >= 0x80 count as word characters so UTF-8 text segments sanely.
inline bool is_word_char(unsigned char c) {
    return std::isalnum(c) != 0 || c == '_' || c >= 0x80;
}

struct WordSpan {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
};

inline std::vector<WordSpan> split_words(const std::string& text) {
    std::vector<WordSpan> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        if (!is_word_char(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && is_word_char(static_cast<unsigned char>(text[j]))) ++j;
        out.push_back({i, j});
        i = j;
    }
    return out;
}

inline std::string ascii_lower(std::string s) {
    for (char& c : s)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

struct MarkerLexicon {
    // Lowercase, deduplicated entries; multi-word entries use single spaces.
    std::vector<std::string> markers;

    // The 18 connectives the augmentation defaults to.
    static MarkerLexicon pdtb_default() {
        MarkerLexicon lex;
        lex.markers = {"because",     "therefore",    "however",
                       "although",    "though",       "nevertheless",
                       "nonetheless", "thus",         "hence",
                       "consequently", "for this reason", "due to",
                       "in particular", "particularly", "specifically",
                       "in fact",     "actually",     "but"};
        lex.normalize();
        return lex;
    }

    // One marker per line; '#' starts a comment; blank lines ignored.
    static MarkerLexicon from_file(const std::string& path) {
        MarkerLexicon lex;
        std::istringstream in(read_file(path));
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            // trim
            std::size_t b = line.find_first_not_of(" \t\r");
            if (b == std::string::npos) continue;
            std::size_t e = line.find_last_not_of(" \t\r");
            std::string entry = line.substr(b, e - b + 1);
            lex.markers.push_back(std::move(entry));
        }
        if (lex.markers.empty())
            throw DataError("marker lexicon is empty: " + path);
        lex.normalize();
        return lex;
    }

    void normalize() {
        std::set<std::string> seen;
        std::vector<std::string> out;
        for (auto& m : markers) {
            // collapse internal whitespace to single spaces, lowercase
            std::istringstream ws(ascii_lower(m));
            std::string word, norm;
            while (ws >> word) {
                if (!norm.empty()) norm += ' ';
                norm += word;
            }
            if (norm.empty()) continue;
            if (seen.insert(norm).second) out.push_back(std::move(norm));
        }
        markers = std::move(out);
    }

    std::uint64_t hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto& m : markers) {
            h = fnv1a64(m.data(), m.size(), h);
            h = fnv1a64("\n", 1, h);
        }
        return h;
    }

    bool empty() const { return markers.empty(); }
};

struct MarkerMatch {
    int proposition_index = 0;
    std::size_t char_start = 0;
    std::size_t char_end = 0;  // exclusive
    std::string marker;

    friend bool operator==(const MarkerMatch& x, const MarkerMatch& y) {
        return x.proposition_index == y.proposition_index && x.char_start == y.char_start &&
               x.char_end == y.char_end && x.marker == y.marker;
    }
};

namespace detail {

// Does lexicon entry `words` match text words starting at word index wi?
// Consecutive entry words must be separated by whitespace only in the text.
inline bool match_at(const std::string& text, const std::vector<WordSpan>& spans,
                     std::size_t wi, const std::vector<std::string>& words) {
    if (wi + words.size() > spans.size()) return false;
    for (std::size_t k = 0; k < words.size(); ++k) {
        const WordSpan& s = spans[wi + k];
        if (s.end - s.begin != words[k].size()) return false;
        for (std::size_t c = 0; c < words[k].size(); ++c) {
            const char lc = static_cast<char>(
                std::tolower(static_cast<unsigned char>(text[s.begin + c])));
            if (lc != words[k][c]) return false;
        }
        if (k > 0) {
            // gap between previous word and this one must be pure whitespace
            for (std::size_t c = spans[wi + k - 1].end; c < s.begin; ++c) {
                const unsigned char ch = static_cast<unsigned char>(text[c]);
                if (std::isspace(ch) == 0) return false;
            }
        }
    }
    return true;
}

}  // namespace detail

// All non-overlapping matches, scanning left to right, preferring the entry
// spanning the most words (then the most characters) at each position.
inline std::vector<MarkerMatch> find_markers(const std::string& text,
                                             const MarkerLexicon& lexicon,
                                             int proposition_index = 0) {
    std::vector<MarkerMatch> out;
    if (lexicon.empty()) return out;

    std::vector<std::vector<std::string>> entry_words;
    entry_words.reserve(lexicon.markers.size());
    for (const auto& m : lexicon.markers) {
        std::istringstream ws(m);
        std::vector<std::string> words;
        std::string w;
        while (ws >> w) words.push_back(w);
        entry_words.push_back(std::move(words));
    }

    const std::vector<WordSpan> spans = split_words(text);
    std::size_t wi = 0;
    while (wi < spans.size()) {
        int best = -1;
        std::size_t best_words = 0, best_chars = 0;
        for (std::size_t e = 0; e < entry_words.size(); ++e) {
            if (!detail::match_at(text, spans, wi, entry_words[e])) continue;
            const std::size_t nw = entry_words[e].size();
            const std::size_t nc = lexicon.markers[e].size();
            if (nw > best_words || (nw == best_words && nc > best_chars)) {
                best = static_cast<int>(e);
                best_words = nw;
                best_chars = nc;
            }
        }
        if (best >= 0) {
            MarkerMatch m;
            m.proposition_index = proposition_index;
            m.char_start = spans[wi].begin;
            m.char_end = spans[wi + best_words - 1].end;
            m.marker = lexicon.markers[static_cast<std::size_t>(best)];
            out.push_back(std::move(m));
            wi += best_words;
        } else {
            ++wi;
        }
    }
    return out;
}

inline bool contains_marker(const std::string& text, const MarkerLexicon& lexicon) {
    return !find_markers(text, lexicon).empty();
}

}  // namespace ecase
