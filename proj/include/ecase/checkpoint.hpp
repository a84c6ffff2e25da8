// Self-describing binary containers for model checkpoints and exported
// encoder backbones: a JSON header (configs, tokenizer info, lexicon hash)
// followed by named double tensors, written little-endian so a file's bytes
// and hence its hash are reproducible.
#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecase/common.hpp"
#include "ecase/model.hpp"
#include "ecase/tensor.hpp"
#include "ecase/tokenizer.hpp"

namespace ecase {

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
    const std::string& bytes;
    std::size_t pos = 0;
    explicit Reader(const std::string& b) : bytes(b) {}

    void need(std::size_t n) const {
        if (pos + n > bytes.size()) throw DataError("checkpoint: truncated file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + static_cast<std::size_t>(i)])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + static_cast<std::size_t>(i)])) << (8 * i);
        pos += 8;
        return v;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
};

inline void put_tensor(std::string& out, const std::string& name, const Mat& m) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(m.rows));
    put_u32(out, static_cast<std::uint32_t>(m.cols));
    for (double d : m.a) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        put_u64(out, bits);
    }
}

inline std::pair<std::string, Mat> get_tensor(Reader& r) {
    const std::uint32_t nlen = r.u32();
    std::string name = r.str(nlen);
    const int rows = static_cast<int>(r.u32());
    const int cols = static_cast<int>(r.u32());
    Mat m(rows, cols);
    for (auto& d : m.a) {
        const std::uint64_t bits = r.u64();
        std::memcpy(&d, &bits, 8);
    }
    return {std::move(name), std::move(m)};
}

inline std::string serialize_container(const char* magic, const nlohmann::json& header,
                                       const std::vector<const Tensor*>& tensors) {
    std::string out = magic;
    const std::string hj = header.dump();
    put_u32(out, static_cast<std::uint32_t>(hj.size()));
    out += hj;
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const Tensor* t : tensors) put_tensor(out, t->name, t->w);
    return out;
}

struct Container {
    nlohmann::json header;
    std::map<std::string, Mat> tensors;
};

inline Container parse_container(const char* magic, const std::string& bytes,
                                 const std::string& what) {
    Reader r(bytes);
    const std::size_t mlen = std::strlen(magic);
    if (r.str(mlen) != magic) throw DataError(what + ": bad magic");
    const std::uint32_t hlen = r.u32();
    Container c;
    try {
        c.header = nlohmann::json::parse(r.str(hlen));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(what + ": corrupt header: " + e.what());
    }
    const std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        auto [name, m] = get_tensor(r);
        c.tensors.emplace(std::move(name), std::move(m));
    }
    return c;
}

inline void load_tensors_into(std::vector<Tensor*> params, const Container& c,
                              const std::string& what) {
    for (Tensor* t : params) {
        auto it = c.tensors.find(t->name);
        if (it == c.tensors.end()) throw DataError(what + ": missing tensor " + t->name);
        if (!(it->second.rows == t->w.rows && it->second.cols == t->w.cols))
            throw DataError(what + ": tensor " + t->name + " has wrong shape");
        t->w = it->second;
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Model checkpoint.
// ---------------------------------------------------------------------------
struct Checkpoint {
    nlohmann::json config;  // model/window/aug/loss/train configs + tokenizer info
    std::string lexicon_hash;
    std::map<std::string, Mat> tensors;

    static constexpr const char* magic = "ECKP1\n";

    std::string serialize() const {
        nlohmann::json header = config;
        header["lexicon_hash"] = lexicon_hash;
        std::vector<Tensor> owned;
        owned.reserve(tensors.size());
        for (const auto& [name, m] : tensors) {
            Tensor t(name, m.rows, m.cols);
            t.w = m;
            owned.push_back(std::move(t));
        }
        std::vector<const Tensor*> ptrs;
        ptrs.reserve(owned.size());
        for (const auto& t : owned) ptrs.push_back(&t);
        return detail::serialize_container(magic, header, ptrs);
    }

    void save(const std::string& path) const { write_file(path, serialize()); }

    static Checkpoint load(const std::string& path) {
        auto c = detail::parse_container(magic, read_file(path), "checkpoint " + path);
        Checkpoint ck;
        ck.config = c.header;
        ck.lexicon_hash = c.header.value("lexicon_hash", "");
        ck.tensors = std::move(c.tensors);
        return ck;
    }

    std::string hash() const {
        const std::string bytes = serialize();
        return hex64(fnv1a64(bytes.data(), bytes.size()));
    }
};

inline Checkpoint make_checkpoint(EcaseModel& model, nlohmann::json config,
                                  std::uint64_t lexicon_hash_value) {
    Checkpoint ck;
    ck.config = std::move(config);
    ck.lexicon_hash = hex64(lexicon_hash_value);
    ck.config["lexicon_hash"] = ck.lexicon_hash;
    for (Tensor* t : model.params()) ck.tensors[t->name] = t->w;
    return ck;
}

inline void restore_model(EcaseModel& model, const Checkpoint& ck) {
    std::vector<Tensor*> params = model.params();
    detail::Container c;
    c.tensors = ck.tensors;
    detail::load_tensors_into(params, c, "checkpoint");
}

// ---------------------------------------------------------------------------
// Exported encoder backbone (backend=pretrained): encoder config + weights
// plus the word vocabulary its ids were built from.
// ---------------------------------------------------------------------------
struct Backbone {
    EncoderConfig cfg;
    std::vector<std::string> vocab_words;
    std::map<std::string, Mat> tensors;

    static constexpr const char* magic = "ECBB1\n";
};

inline void save_backbone(const std::string& path, Encoder& enc,
                          const std::vector<std::string>& vocab_words) {
    nlohmann::json header;
    header["n_layers"] = enc.cfg.n_layers;
    header["dim"] = enc.cfg.dim;
    header["n_heads"] = enc.cfg.n_heads;
    header["vocab"] = enc.cfg.vocab;
    header["max_positions"] = enc.cfg.max_positions;
    header["use_positions"] = enc.cfg.use_positions;
    header["vocab_words"] = vocab_words;
    std::vector<Tensor*> params;
    enc.collect(params);
    std::vector<const Tensor*> ptrs(params.begin(), params.end());
    write_file(path, detail::serialize_container(Backbone::magic, header, ptrs));
}

inline Backbone load_backbone(const std::string& path) {
    auto c = detail::parse_container(Backbone::magic, read_file(path), "backbone " + path);
    Backbone b;
    b.cfg.n_layers = c.header.at("n_layers").get<int>();
    b.cfg.dim = c.header.at("dim").get<int>();
    b.cfg.n_heads = c.header.at("n_heads").get<int>();
    b.cfg.vocab = c.header.at("vocab").get<int>();
    b.cfg.max_positions = c.header.at("max_positions").get<int>();
    b.cfg.use_positions = c.header.value("use_positions", true);
    b.vocab_words = c.header.value("vocab_words", std::vector<std::string>{});
    b.tensors = std::move(c.tensors);
    return b;
}

// Resolve a backbone path against ECASE_CACHE when relative and not found.
inline std::string resolve_backbone_path(const std::string& name) {
    namespace fs = std::filesystem;
    if (fs::exists(name)) return name;
    if (const char* cache = std::getenv("ECASE_CACHE")) {
        const fs::path p = fs::path(cache) / name;
        if (fs::exists(p)) return p.string();
    }
    throw DataError("backbone file not found: " + name +
                    " (also tried ECASE_CACHE)");
}

}  // namespace ecase
