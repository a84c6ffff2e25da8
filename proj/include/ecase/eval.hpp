// Evaluation: per-label F1 with macro over every class including no_rel,
// confusion matrices, distance-bucket and marker-presence breakdowns, and
// mean/stdev aggregation across seeds.
#pragma once

#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecase/common.hpp"
#include "ecase/corpus.hpp"
#include "ecase/markers.hpp"
#include "ecase/pairing.hpp"

namespace ecase {

struct Prediction {
    PairInstance pair;
    int predicted = 0;  // label index
    std::vector<double> probs;
};

// Square confusion with gold-major layout.
struct Confusion {
    int n_labels = 0;
    std::vector<long> counts;

    Confusion() = default;
    explicit Confusion(int n) : n_labels(n), counts(static_cast<std::size_t>(n) * n, 0) {}

    long& at(int gold, int pred) {
        return counts[static_cast<std::size_t>(gold) * n_labels + pred];
    }
    long at(int gold, int pred) const {
        return counts[static_cast<std::size_t>(gold) * n_labels + pred];
    }
    void add(int gold, int pred) { ++at(gold, pred); }
    void merge(const Confusion& o) {
        for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
    }
    long total() const {
        long t = 0;
        for (long c : counts) t += c;
        return t;
    }

    double f1(int label) const {
        long tp = at(label, label), fp = 0, fn = 0;
        for (int g = 0; g < n_labels; ++g)
            if (g != label) fp += at(g, label);
        for (int p = 0; p < n_labels; ++p)
            if (p != label) fn += at(label, p);
        const double denom_p = static_cast<double>(tp + fp);
        const double denom_r = static_cast<double>(tp + fn);
        const double prec = denom_p == 0.0 ? 0.0 : tp / denom_p;
        const double rec = denom_r == 0.0 ? 0.0 : tp / denom_r;
        return prec + rec == 0.0 ? 0.0 : 2.0 * prec * rec / (prec + rec);
    }

    // unweighted mean over all classes, no_rel included
    double macro_f1() const {
        double s = 0.0;
        for (int l = 0; l < n_labels; ++l) s += f1(l);
        return s / n_labels;
    }

    friend bool operator==(const Confusion&, const Confusion&) = default;
};

enum class DistanceUnit { propositions, tokens };

inline DistanceUnit distance_unit_from_name(const std::string& s) {
    if (s == "propositions" || s == "props") return DistanceUnit::propositions;
    if (s == "tokens") return DistanceUnit::tokens;
    throw ConfigError("unknown distance unit: " + s);
}

struct BucketRow {
    int lo = 0;       // inclusive
    int hi = -1;      // exclusive; -1 = open ended
    double macro_f1 = 0.0;
    long n = 0;
    Confusion confusion;

    std::string range_name() const {
        std::ostringstream ss;
        ss << "[" << lo << "," << (hi < 0 ? std::string("inf") : std::to_string(hi)) << ")";
        return ss.str();
    }
};

struct MarkerSplit {
    double with_f1 = 0.0;
    double without_f1 = 0.0;
    long n_with = 0;
    long n_without = 0;
    Confusion with_confusion;
    Confusion without_confusion;
};

struct EvalReport {
    int n_labels = 0;
    std::vector<double> per_label_f1;
    double macro_f1 = 0.0;
    Confusion confusion;
    std::vector<BucketRow> distance_buckets;
    MarkerSplit marker_split;
    std::uint64_t seed = 0;

    double support_f1() const { return per_label_f1[static_cast<int>(Label::support)]; }
    double attack_f1() const {
        if (n_labels < 3) throw std::invalid_argument("attack_f1: two-label report");
        return per_label_f1[static_cast<int>(Label::attack)];
    }
};

inline Confusion confusion_of(const std::vector<Prediction>& preds, int n_labels) {
    Confusion c(n_labels);
    for (const auto& p : preds) {
        const int g = static_cast<int>(p.pair.gold);
        if (g >= n_labels)
            throw std::invalid_argument("evaluate: gold label " + std::string(label_name(p.pair.gold)) +
                                        " outside n_labels=" + std::to_string(n_labels));
        if (p.predicted < 0 || p.predicted >= n_labels)
            throw std::invalid_argument("evaluate: predicted label outside n_labels");
        c.add(g, p.predicted);
    }
    return c;
}

inline EvalReport evaluate(const std::vector<Prediction>& preds, int n_labels) {
    if (preds.empty()) throw std::invalid_argument("evaluate: empty prediction list");
    EvalReport r;
    r.n_labels = n_labels;
    r.confusion = confusion_of(preds, n_labels);
    for (int l = 0; l < n_labels; ++l) r.per_label_f1.push_back(r.confusion.f1(l));
    r.macro_f1 = r.confusion.macro_f1();
    return r;
}

inline int pair_distance(const Prediction& p, DistanceUnit unit) {
    return unit == DistanceUnit::propositions
               ? std::abs(p.pair.head_index - p.pair.tail_index)
               : p.pair.token_distance;
}

// Buckets are [0,e1), [e1,e2), ..., [ek,inf); edges strictly increasing.
inline std::vector<BucketRow> distance_bucket_report(const std::vector<Prediction>& preds,
                                                     int n_labels, DistanceUnit unit,
                                                     const std::vector<int>& edges) {
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (edges[i] <= edges[i - 1])
            throw ConfigError("bucket edges must be strictly increasing");
    std::vector<BucketRow> rows;
    int lo = 0;
    for (int e : edges) {
        BucketRow b;
        b.lo = lo;
        b.hi = e;
        b.confusion = Confusion(n_labels);
        rows.push_back(std::move(b));
        lo = e;
    }
    BucketRow last;
    last.lo = lo;
    last.hi = -1;
    last.confusion = Confusion(n_labels);
    rows.push_back(std::move(last));

    for (const auto& p : preds) {
        const int d = pair_distance(p, unit);
        std::size_t k = rows.size() - 1;
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (d >= rows[i].lo && (rows[i].hi < 0 || d < rows[i].hi)) {
                k = i;
                break;
            }
        rows[k].confusion.add(static_cast<int>(p.pair.gold), p.predicted);
        ++rows[k].n;
    }
    for (auto& b : rows) b.macro_f1 = b.n == 0 ? 0.0 : b.confusion.macro_f1();
    return rows;
}

// A pair is "with marker" iff the head or the tail text contains a match.
inline MarkerSplit marker_split_report(const std::vector<Prediction>& preds, int n_labels,
                                       const Corpus& corpus, const MarkerLexicon& lexicon) {
    std::map<std::string, const Document*> by_id;
    for (const auto& d : corpus) by_id[d.id] = &d;
    MarkerSplit ms;
    ms.with_confusion = Confusion(n_labels);
    ms.without_confusion = Confusion(n_labels);
    // marker presence is per proposition; memoize by (doc, index)
    std::map<std::pair<std::string, int>, bool> memo;
    auto has_marker = [&](const std::string& doc_id, int index) {
        const auto key = std::make_pair(doc_id, index);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        auto dit = by_id.find(doc_id);
        if (dit == by_id.end())
            throw std::invalid_argument("marker_split_report: unknown document " + doc_id);
        const bool v = contains_marker(dit->second->prop(index).text, lexicon);
        memo[key] = v;
        return v;
    };
    for (const auto& p : preds) {
        const bool with = has_marker(p.pair.window->doc_id, p.pair.head_index) ||
                          has_marker(p.pair.window->doc_id, p.pair.tail_index);
        Confusion& c = with ? ms.with_confusion : ms.without_confusion;
        c.add(static_cast<int>(p.pair.gold), p.predicted);
        if (with)
            ++ms.n_with;
        else
            ++ms.n_without;
    }
    ms.with_f1 = ms.n_with == 0 ? 0.0 : ms.with_confusion.macro_f1();
    ms.without_f1 = ms.n_without == 0 ? 0.0 : ms.without_confusion.macro_f1();
    return ms;
}

inline std::vector<int> default_prop_bucket_edges() { return {2, 4, 7}; }

inline EvalReport full_report(const std::vector<Prediction>& preds, int n_labels,
                              const Corpus& corpus, const MarkerLexicon& lexicon,
                              DistanceUnit unit = DistanceUnit::propositions,
                              std::vector<int> edges = {}) {
    EvalReport r = evaluate(preds, n_labels);
    if (edges.empty()) edges = default_prop_bucket_edges();
    r.distance_buckets = distance_bucket_report(preds, n_labels, unit, edges);
    r.marker_split = marker_split_report(preds, n_labels, corpus, lexicon);
    return r;
}

// ---------------------------------------------------------------------------
// Seed aggregation: flatten each report to named metrics, mean/stdev each.
// Population standard deviation, so one report aggregates to stdev 0.
// ---------------------------------------------------------------------------
struct MetricStat {
    std::string name;
    double mean = 0.0;
    double stdev = 0.0;
};

struct AggregateReport {
    int n_reports = 0;
    std::vector<MetricStat> metrics;

    double mean_of(const std::string& name) const {
        for (const auto& m : metrics)
            if (m.name == name) return m.mean;
        throw std::invalid_argument("no aggregated metric named " + name);
    }
    double stdev_of(const std::string& name) const {
        for (const auto& m : metrics)
            if (m.name == name) return m.stdev;
        throw std::invalid_argument("no aggregated metric named " + name);
    }
};

inline std::vector<std::pair<std::string, double>> flatten_metrics(const EvalReport& r) {
    std::vector<std::pair<std::string, double>> out;
    out.emplace_back("macro_f1", r.macro_f1);
    for (int l = 0; l < r.n_labels; ++l)
        out.emplace_back("f1." + std::string(label_name(static_cast<Label>(l))),
                         r.per_label_f1[static_cast<std::size_t>(l)]);
    for (const auto& b : r.distance_buckets)
        out.emplace_back("bucket." + b.range_name() + ".macro_f1", b.macro_f1);
    if (r.marker_split.n_with + r.marker_split.n_without > 0) {
        out.emplace_back("marker.with.macro_f1", r.marker_split.with_f1);
        out.emplace_back("marker.without.macro_f1", r.marker_split.without_f1);
    }
    return out;
}

inline AggregateReport aggregate_seeds(const std::vector<EvalReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("aggregate_seeds: no reports");
    const auto first = flatten_metrics(reports.front());
    std::vector<std::vector<double>> columns(first.size());
    for (const auto& r : reports) {
        if (r.n_labels != reports.front().n_labels)
            throw std::invalid_argument("aggregate_seeds: mismatched label sets");
        const auto flat = flatten_metrics(r);
        if (flat.size() != first.size())
            throw std::invalid_argument("aggregate_seeds: mismatched report structure");
        for (std::size_t i = 0; i < flat.size(); ++i) {
            if (flat[i].first != first[i].first)
                throw std::invalid_argument("aggregate_seeds: mismatched metric " + flat[i].first);
            columns[i].push_back(flat[i].second);
        }
    }
    AggregateReport agg;
    agg.n_reports = static_cast<int>(reports.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        MetricStat st;
        st.name = first[i].first;
        const auto& col = columns[i];
        double mean = 0.0;
        for (double v : col) mean += v;
        mean /= static_cast<double>(col.size());
        double var = 0.0;
        for (double v : col) var += (v - mean) * (v - mean);
        var /= static_cast<double>(col.size());
        st.mean = mean;
        st.stdev = std::sqrt(var);
        agg.metrics.push_back(std::move(st));
    }
    return agg;
}

// ---------------------------------------------------------------------------
// Serialization.
// ---------------------------------------------------------------------------
inline nlohmann::json confusion_to_json(const Confusion& c) {
    nlohmann::json rows = nlohmann::json::array();
    for (int g = 0; g < c.n_labels; ++g) {
        nlohmann::json row = nlohmann::json::array();
        for (int p = 0; p < c.n_labels; ++p) row.push_back(c.at(g, p));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["seed"] = r.seed;
    j["n_labels"] = r.n_labels;
    j["macro_f1"] = r.macro_f1;
    nlohmann::json f1 = nlohmann::json::object();
    for (int l = 0; l < r.n_labels; ++l)
        f1[label_name(static_cast<Label>(l))] = r.per_label_f1[static_cast<std::size_t>(l)];
    j["per_label_f1"] = std::move(f1);
    j["confusion"] = confusion_to_json(r.confusion);
    nlohmann::json buckets = nlohmann::json::array();
    for (const auto& b : r.distance_buckets)
        buckets.push_back({{"range", b.range_name()},
                           {"lo", b.lo},
                           {"hi", b.hi},
                           {"macro_f1", b.macro_f1},
                           {"n", b.n}});
    j["distance_buckets"] = std::move(buckets);
    j["marker_split"] = {{"with", r.marker_split.with_f1},
                         {"without", r.marker_split.without_f1},
                         {"n_with", r.marker_split.n_with},
                         {"n_without", r.marker_split.n_without}};
    return j;
}

inline std::string report_to_csv(const EvalReport& r) {
    std::ostringstream ss;
    ss << "metric,value\n";
    for (const auto& [name, value] : flatten_metrics(r)) ss << name << "," << value << "\n";
    return ss.str();
}

inline std::string aggregate_to_csv(const AggregateReport& a) {
    std::ostringstream ss;
    ss << "metric,mean,stdev\n";
    for (const auto& m : a.metrics) ss << m.name << "," << m.mean << "," << m.stdev << "\n";
    return ss.str();
}

inline nlohmann::json aggregate_to_json(const AggregateReport& a) {
    nlohmann::json j;
    j["n_reports"] = a.n_reports;
    nlohmann::json ms = nlohmann::json::array();
    for (const auto& m : a.metrics)
        ms.push_back({{"name", m.name}, {"mean", m.mean}, {"stdev", m.stdev}});
    j["metrics"] = std::move(ms);
    return j;
}

}  // namespace ecase
