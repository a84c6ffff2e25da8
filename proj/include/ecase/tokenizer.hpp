// Tokenization with character provenance. Tokens are words (per
// markers.hpp word segmentation) plus single punctuation characters; each
// token keeps its source char span so marker masking can map surface spans
// to token positions.
#pragma once

#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "ecase/common.hpp"
#include "ecase/markers.hpp"

namespace ecase {

struct Token {
    int id = 0;
    std::size_t char_start = 0;
    std::size_t char_end = 0;  // exclusive
};

// Reserved ids shared by every tokenizer; content ids start at 4.
struct SpecialIds {
    static constexpr int pad = 0;
    static constexpr int sep = 1;   // the per-proposition separator ([CLS]-like)
    static constexpr int mask = 2;
    static constexpr int unk = 3;
    static constexpr int first_content = 4;
};

class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::vector<Token> encode(const std::string& text) const = 0;
    virtual int vocab_size() const = 0;
    virtual std::string describe() const = 0;

    int sep_id() const { return SpecialIds::sep; }
    int mask_id() const { return SpecialIds::mask; }
    int unk_id() const { return SpecialIds::unk; }

protected:
    // words + single punctuation chars, lowercased surface for id lookup
    static std::vector<std::pair<std::string, WordSpan>> pieces(const std::string& text) {
        std::vector<std::pair<std::string, WordSpan>> out;
        std::size_t i = 0;
        const std::size_t n = text.size();
        while (i < n) {
            const unsigned char c = static_cast<unsigned char>(text[i]);
            if (std::isspace(c)) {
                ++i;
                continue;
            }
            if (is_word_char(c)) {
                std::size_t j = i;
                while (j < n && is_word_char(static_cast<unsigned char>(text[j]))) ++j;
                out.emplace_back(ascii_lower(text.substr(i, j - i)), WordSpan{i, j});
                i = j;
            } else {
                out.emplace_back(text.substr(i, 1), WordSpan{i, i + 1});
                ++i;
            }
        }
        return out;
    }
};

// Stateless hashing tokenizer for the toy backend: id = 4 + fnv(word) % space.
class HashTokenizer final : public Tokenizer {
public:
    explicit HashTokenizer(int vocab) : vocab_(vocab) {
        if (vocab_ <= SpecialIds::first_content)
            throw ConfigError("tokenizer vocab must exceed reserved ids");
    }

    std::vector<Token> encode(const std::string& text) const override {
        std::vector<Token> out;
        for (const auto& [surface, span] : pieces(text)) {
            const int space = vocab_ - SpecialIds::first_content;
            const int id = SpecialIds::first_content +
                           static_cast<int>(fnv1a64(surface) % static_cast<std::uint64_t>(space));
            out.push_back(Token{id, span.begin, span.end});
        }
        return out;
    }

    int vocab_size() const override { return vocab_; }
    std::string describe() const override {
        return "hash:" + std::to_string(vocab_);
    }

private:
    int vocab_;
};

// Word-level vocabulary tokenizer for user-supplied backbones: one word per
// line, line order assigns ids starting at 4; unknown words map to unk.
class VocabTokenizer final : public Tokenizer {
public:
    explicit VocabTokenizer(std::vector<std::string> words) : words_(std::move(words)) {
        int id = SpecialIds::first_content;
        for (const auto& w : words_) ids_[ascii_lower(w)] = id++;
    }

    static VocabTokenizer from_file(const std::string& path) {
        std::istringstream in(read_file(path));
        std::vector<std::string> words;
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
            if (!line.empty()) words.push_back(line);
        }
        return VocabTokenizer(std::move(words));
    }

    std::vector<Token> encode(const std::string& text) const override {
        std::vector<Token> out;
        for (const auto& [surface, span] : pieces(text)) {
            auto it = ids_.find(surface);
            const int id = it == ids_.end() ? SpecialIds::unk : it->second;
            out.push_back(Token{id, span.begin, span.end});
        }
        return out;
    }

    int vocab_size() const override {
        return SpecialIds::first_content + static_cast<int>(words_.size());
    }
    std::string describe() const override {
        return "vocab:" + std::to_string(words_.size());
    }
    const std::vector<std::string>& words() const { return words_; }

private:
    std::vector<std::string> words_;
    std::map<std::string, int> ids_;
};

}  // namespace ecase
