// Corpus data model and ingestion. Canonical interchange is one JSON object
// per line:
//   {"doc_id": ..., "propositions": [{"id","text","is_head"}, ...],
//    "links": [{"head","tail","label"}, ...]}
// Link direction is tail -> head throughout: the tail supports/attacks the
// head. Adapters for formats phrased the other way around must flip.
#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecase/common.hpp"
#include "ecase/markers.hpp"

namespace ecase {

struct Proposition {
    std::string id;
    int index = 0;
    std::string text;
    bool is_head = false;

    friend bool operator==(const Proposition&, const Proposition&) = default;
};

struct ArgLink {
    int head_index = 0;
    int tail_index = 0;
    Label label = Label::support;

    friend bool operator==(const ArgLink&, const ArgLink&) = default;
};

struct Document {
    std::string id;
    std::vector<Proposition> propositions;
    std::vector<ArgLink> links;

    const Proposition& prop(int index) const {
        return propositions[static_cast<std::size_t>(index)];
    }
    int size() const { return static_cast<int>(propositions.size()); }

    // gold label for an ordered (head, tail) pair; no_rel when unlinked
    Label gold(int head, int tail) const {
        for (const auto& l : links)
            if (l.head_index == head && l.tail_index == tail) return l.label;
        return Label::no_rel;
    }

    friend bool operator==(const Document&, const Document&) = default;
};

using Corpus = std::vector<Document>;

enum class CorpusFormat { canonical_jsonl, essays_brat, generic_tsv };

inline CorpusFormat corpus_format_from_name(const std::string& s) {
    if (s == "canonical_jsonl" || s == "canonical" || s == "jsonl")
        return CorpusFormat::canonical_jsonl;
    if (s == "essays_brat" || s == "brat") return CorpusFormat::essays_brat;
    if (s == "generic_tsv" || s == "tsv") return CorpusFormat::generic_tsv;
    throw ConfigError("unknown corpus format: " + s);
}

struct IngestOptions {
    // AbstRCT two-label handling: drop attack links entirely on ingest.
    bool collapse_attack = false;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------
inline void validate_document(const Document& doc) {
    const int n = doc.size();
    for (int i = 0; i < n; ++i) {
        const auto& p = doc.propositions[static_cast<std::size_t>(i)];
        if (p.index != i)
            throw DataError("document " + doc.id + ": proposition indices must be 0..n-1 (got " +
                            std::to_string(p.index) + " at position " + std::to_string(i) + ")");
        if (p.text.empty())
            throw DataError("document " + doc.id + ": proposition " + p.id + " has empty text");
    }
    std::map<std::string, int> ids;
    for (const auto& p : doc.propositions)
        if (++ids[p.id] > 1)
            throw DataError("document " + doc.id + ": duplicate proposition id " + p.id);

    std::map<std::pair<int, int>, int> pairs;
    for (const auto& l : doc.links) {
        if (l.head_index < 0 || l.head_index >= n || l.tail_index < 0 || l.tail_index >= n)
            throw DataError("document " + doc.id + ": link references missing proposition index " +
                            std::to_string(l.head_index < 0 || l.head_index >= n ? l.head_index
                                                                                 : l.tail_index));
        if (l.head_index == l.tail_index)
            throw DataError("document " + doc.id + ": self-link at index " +
                            std::to_string(l.head_index));
        if (l.label == Label::no_rel)
            throw DataError("document " + doc.id + ": explicit no_rel links are not stored");
        if (++pairs[{l.head_index, l.tail_index}] > 1)
            throw DataError("document " + doc.id + ": duplicate link (" +
                            std::to_string(l.head_index) + "," + std::to_string(l.tail_index) + ")");
        if (!doc.propositions[static_cast<std::size_t>(l.head_index)].is_head)
            throw DataError("document " + doc.id + ": link head " + std::to_string(l.head_index) +
                            " is not flagged is_head");
    }
}

inline void validate_corpus(const Corpus& corpus) {
    for (const auto& d : corpus) validate_document(d);
}

namespace detail {

inline std::string strip_separator_artifacts(std::string s) {
    // Source texts occasionally carry stray tabs/newlines from annotation
    // exports; the canonical model is one flat line of text per proposition.
    for (char& c : s)
        if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    std::size_t b = s.find_first_not_of(' ');
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(' ');
    return s.substr(b, e - b + 1);
}

inline void apply_collapse(Document& doc, const IngestOptions& opt) {
    if (!opt.collapse_attack) return;
    std::erase_if(doc.links, [](const ArgLink& l) { return l.label == Label::attack; });
}

// ------------------------- canonical JSONL --------------------------------
inline Corpus ingest_canonical(const std::string& bytes, const IngestOptions& opt) {
    Corpus corpus;
    std::istringstream in(bytes);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("line " + std::to_string(lineno) + ": malformed JSON record: " +
                            e.what());
        }
        try {
            Document doc;
            doc.id = j.at("doc_id").get<std::string>();
            int index = 0;
            for (const auto& pj : j.at("propositions")) {
                Proposition p;
                p.id = pj.at("id").get<std::string>();
                p.text = strip_separator_artifacts(pj.at("text").get<std::string>());
                p.is_head = pj.value("is_head", false);
                p.index = index++;
                doc.propositions.push_back(std::move(p));
            }
            for (const auto& lj : j.value("links", nlohmann::json::array())) {
                ArgLink l;
                l.head_index = lj.at("head").get<int>();
                l.tail_index = lj.at("tail").get<int>();
                l.label = label_from_name(lj.at("label").get<std::string>());
                doc.links.push_back(l);
            }
            apply_collapse(doc, opt);
            validate_document(doc);
            corpus.push_back(std::move(doc));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("line " + std::to_string(lineno) + ": malformed record: " + e.what());
        } catch (const std::invalid_argument& e) {
            throw DataError("line " + std::to_string(lineno) + ": malformed record: " + e.what());
        }
    }
    return corpus;
}

// ------------------------------ brat --------------------------------------
// Standoff annotation pairs: <name>.txt with the raw text and <name>.ann with
//   T<k>\t<Type> <start> <end>\t<surface>
//   R<k>\t<supports|attacks> Arg1:T<i> Arg2:T<j>
// Arg1 is the premise (tail), Arg2 the claim (head); direction flips to our
// tail -> head convention. Propositions are ordered by span start. A path may
// name one .ann file or a directory of them.
inline Document ingest_brat_file(const std::string& ann_path, const IngestOptions& opt) {
    namespace fs = std::filesystem;
    const std::string ann = read_file(ann_path);
    fs::path txt_path = fs::path(ann_path);
    txt_path.replace_extension(".txt");
    std::string text;
    if (fs::exists(txt_path)) text = read_file(txt_path.string());

    struct Span {
        std::string tid;
        std::string type;
        std::size_t start = 0, end = 0;
        std::string surface;
    };
    std::vector<Span> spans;
    struct Rel {
        std::string kind, arg1, arg2;
        int lineno;
    };
    std::vector<Rel> rels;

    std::istringstream in(ann);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string id;
        std::getline(ls, id, '\t');
        if (id.empty()) continue;
        if (id[0] == 'T') {
            std::string meta;
            if (!std::getline(ls, meta, '\t'))
                throw DataError(ann_path + " line " + std::to_string(lineno) +
                                ": malformed T record");
            std::istringstream ms(meta);
            Span s;
            s.tid = id;
            if (!(ms >> s.type >> s.start >> s.end))
                throw DataError(ann_path + " line " + std::to_string(lineno) +
                                ": malformed T span");
            std::getline(ls, s.surface);
            spans.push_back(std::move(s));
        } else if (id[0] == 'R') {
            std::string meta;
            std::getline(ls, meta);
            std::istringstream ms(meta);
            Rel r;
            r.lineno = lineno;
            std::string a1, a2;
            if (!(ms >> r.kind >> a1 >> a2))
                throw DataError(ann_path + " line " + std::to_string(lineno) +
                                ": malformed R record");
            auto strip = [&](const std::string& s, const char* prefix) {
                if (s.rfind(prefix, 0) != 0)
                    throw DataError(ann_path + " line " + std::to_string(lineno) +
                                    ": expected " + prefix + " in R record");
                return s.substr(std::string(prefix).size());
            };
            r.arg1 = strip(a1, "Arg1:");
            r.arg2 = strip(a2, "Arg2:");
            rels.push_back(std::move(r));
        }
        // other record types (A, E, ...) are ignored
    }

    std::stable_sort(spans.begin(), spans.end(),
                     [](const Span& a, const Span& b) { return a.start < b.start; });

    Document doc;
    doc.id = fs::path(ann_path).stem().string();
    std::map<std::string, int> index_of;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const Span& s = spans[i];
        Proposition p;
        p.id = s.tid;
        p.index = static_cast<int>(i);
        std::string body = s.surface;
        if (body.empty() && s.end <= text.size() && s.start < s.end)
            body = text.substr(s.start, s.end - s.start);
        p.text = strip_separator_artifacts(body);
        // Claims are head candidates in the essays scheme.
        p.is_head = (s.type == "Claim" || s.type == "MajorClaim");
        index_of[s.tid] = p.index;
        doc.propositions.push_back(std::move(p));
    }
    for (const auto& r : rels) {
        auto i1 = index_of.find(r.arg1);
        auto i2 = index_of.find(r.arg2);
        if (i1 == index_of.end() || i2 == index_of.end())
            throw DataError(ann_path + " line " + std::to_string(r.lineno) +
                            ": relation references unknown span (document " + doc.id + ")");
        ArgLink l;
        l.tail_index = i1->second;  // Arg1 = premise = tail
        l.head_index = i2->second;  // Arg2 = claim   = head
        const std::string kind = ascii_lower(r.kind);
        if (kind == "supports" || kind == "support")
            l.label = Label::support;
        else if (kind == "attacks" || kind == "attack")
            l.label = Label::attack;
        else
            throw DataError(ann_path + " line " + std::to_string(r.lineno) +
                            ": unknown relation kind " + r.kind);
        doc.propositions[static_cast<std::size_t>(l.head_index)].is_head = true;
        doc.links.push_back(l);
    }
    apply_collapse(doc, opt);
    validate_document(doc);
    return doc;
}

inline Corpus ingest_brat(const std::string& path, const IngestOptions& opt) {
    namespace fs = std::filesystem;
    Corpus corpus;
    if (fs::is_directory(path)) {
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(path))
            if (e.path().extension() == ".ann") files.push_back(e.path().string());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw DataError("no .ann files under " + path);
        for (const auto& f : files) corpus.push_back(ingest_brat_file(f, opt));
    } else {
        corpus.push_back(ingest_brat_file(path, opt));
    }
    return corpus;
}

// ---------------------------- generic TSV ---------------------------------
// Line-oriented, two record kinds, grouped by doc id:
//   P\t<doc_id>\t<prop_id>\t<0|1 is_head>\t<text>
//   L\t<doc_id>\t<head_index>\t<tail_index>\t<support|attack>
inline Corpus ingest_tsv(const std::string& bytes, const IngestOptions& opt) {
    Corpus corpus;
    std::map<std::string, std::size_t> doc_pos;
    std::istringstream in(bytes);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& what) -> DataError {
        return DataError("line " + std::to_string(lineno) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cols;
        std::size_t pos = 0;
        while (true) {
            std::size_t tab = line.find('\t', pos);
            cols.push_back(line.substr(pos, tab == std::string::npos ? tab : tab - pos));
            if (tab == std::string::npos) break;
            pos = tab + 1;
        }
        if (cols.size() != 5) throw fail("expected 5 tab-separated columns, got " +
                                         std::to_string(cols.size()));
        const std::string& kind = cols[0];
        const std::string& doc_id = cols[1];
        auto it = doc_pos.find(doc_id);
        if (it == doc_pos.end()) {
            it = doc_pos.emplace(doc_id, corpus.size()).first;
            corpus.push_back(Document{doc_id, {}, {}});
        }
        Document& doc = corpus[it->second];
        if (kind == "P") {
            Proposition p;
            p.id = cols[2];
            if (cols[3] != "0" && cols[3] != "1") throw fail("is_head must be 0 or 1");
            p.is_head = cols[3] == "1";
            p.text = strip_separator_artifacts(cols[4]);
            p.index = doc.size();
            doc.propositions.push_back(std::move(p));
        } else if (kind == "L") {
            ArgLink l;
            try {
                l.head_index = std::stoi(cols[2]);
                l.tail_index = std::stoi(cols[3]);
            } catch (const std::exception&) {
                throw fail("link indices must be integers");
            }
            try {
                l.label = label_from_name(cols[4]);
            } catch (const std::invalid_argument& e) {
                throw fail(e.what());
            }
            doc.links.push_back(l);
        } else {
            throw fail("unknown record kind '" + kind + "'");
        }
    }
    for (auto& doc : corpus) {
        apply_collapse(doc, opt);
        validate_document(doc);
    }
    return corpus;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------
inline Corpus ingest_bytes(const std::string& bytes, CorpusFormat format,
                           const IngestOptions& opt = {}) {
    switch (format) {
        case CorpusFormat::canonical_jsonl: return detail::ingest_canonical(bytes, opt);
        case CorpusFormat::generic_tsv: return detail::ingest_tsv(bytes, opt);
        case CorpusFormat::essays_brat:
            throw ConfigError("brat ingestion reads files, use ingest(path, ...)");
    }
    throw ConfigError("unreachable corpus format");
}

inline Corpus ingest(const std::string& path, CorpusFormat format,
                     const IngestOptions& opt = {}) {
    if (format == CorpusFormat::essays_brat) return detail::ingest_brat(path, opt);
    return ingest_bytes(read_file(path), format, opt);
}

inline std::string export_canonical(const Corpus& corpus) {
    std::string out;
    for (const auto& doc : corpus) {
        nlohmann::json j;
        j["doc_id"] = doc.id;
        nlohmann::json props = nlohmann::json::array();
        for (const auto& p : doc.propositions)
            props.push_back({{"id", p.id}, {"text", p.text}, {"is_head", p.is_head}});
        j["propositions"] = std::move(props);
        nlohmann::json links = nlohmann::json::array();
        for (const auto& l : doc.links)
            links.push_back({{"head", l.head_index},
                             {"tail", l.tail_index},
                             {"label", label_name(l.label)}});
        j["links"] = std::move(links);
        out += j.dump();
        out += '\n';
    }
    return out;
}

struct CorpusStats {
    long n_propositions = 0;
    long n_support = 0;
    long n_attack = 0;
    long n_heads = 0;
    double pct_with_markers = 0.0;
};

inline CorpusStats stats(const Corpus& corpus, const MarkerLexicon& markers) {
    if (corpus.empty()) throw DataError("stats: empty corpus");
    CorpusStats s;
    long with_markers = 0;
    for (const auto& doc : corpus) {
        s.n_propositions += doc.size();
        for (const auto& p : doc.propositions) {
            if (p.is_head) ++s.n_heads;
            if (contains_marker(p.text, markers)) ++with_markers;
        }
        for (const auto& l : doc.links) {
            if (l.label == Label::support) ++s.n_support;
            if (l.label == Label::attack) ++s.n_attack;
        }
    }
    s.pct_with_markers =
        s.n_propositions == 0 ? 0.0
                              : static_cast<double>(with_markers) /
                                    static_cast<double>(s.n_propositions);
    return s;
}

// True largest relation label present (drives n_labels compatibility checks).
inline bool corpus_has_attack(const Corpus& corpus) {
    for (const auto& doc : corpus)
        for (const auto& l : doc.links)
            if (l.label == Label::attack) return true;
    return false;
}

}  // namespace ecase
