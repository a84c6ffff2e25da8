// Shared basics: labels, error types, deterministic RNG, hashing.
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ecase {

// Relation label of a (head, tail) pair. no_rel must stay 0: the similarity
// loss branches on y == 0.
enum class Label : int { no_rel = 0, support = 1, attack = 2 };

inline const char* label_name(Label y) {
    switch (y) {
        case Label::no_rel: return "no_rel";
        case Label::support: return "support";
        case Label::attack: return "attack";
    }
    return "?";
}

inline Label label_from_name(const std::string& s) {
    if (s == "no_rel" || s == "no-rel" || s == "none") return Label::no_rel;
    if (s == "support" || s == "supports") return Label::support;
    if (s == "attack" || s == "attacks") return Label::attack;
    throw std::invalid_argument("unknown label: " + s);
}

// ---------------------------------------------------------------------------
// Errors. CLI maps these onto exit codes (config=2, data=3, numeric=4).
// ---------------------------------------------------------------------------
struct EcaseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : EcaseError {
    using EcaseError::EcaseError;
};
struct DataError : EcaseError {
    using EcaseError::EcaseError;
};
struct NumericError : EcaseError {
    using EcaseError::EcaseError;
};

// ---------------------------------------------------------------------------
// Hashing (FNV-1a 64). Used for token hashing, checkpoint hashes and
// per-parameter seed derivation; must stay platform independent.
// ---------------------------------------------------------------------------
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    return fnv1a64(s.data(), s.size());
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// ---------------------------------------------------------------------------
// SeededRandom: xoshiro256** with hand-rolled distributions so draws are
// bit-identical across standard libraries and platforms. Parallel consumers
// derive independent streams via derive().
// ---------------------------------------------------------------------------
class SeededRandom {
public:
    explicit SeededRandom(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : state_) w = splitmix64(s += 0x9e3779b97f4a7c15ULL);
    }

    std::uint64_t next_u64() {
        std::uint64_t* s = state_;
        const std::uint64_t r = rotl(s[1] * 5, 7) * 9;
        const std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return r;
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Integer in [0, n).
    std::size_t below(std::size_t n) {
        return n == 0 ? 0 : static_cast<std::size_t>(next_u64() % n);
    }

    // Standard normal via Box-Muller (deterministic, no libstdc++ dependence).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // Stream derivation: one base seed, many independent consumers.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                std::uint64_t c = 0) {
        std::uint64_t h = splitmix64(seed);
        h = splitmix64(h ^ splitmix64(a + 0x517cc1b727220a95ULL));
        h = splitmix64(h ^ splitmix64(b + 0x2545f4914f6cdd1dULL));
        h = splitmix64(h ^ splitmix64(c + 0x9e3779b97f4a7c15ULL));
        return h;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4]{};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Small file helpers.
// ---------------------------------------------------------------------------
inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("file not found: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write: " + path);
}

inline std::string file_fnv_hex(const std::string& path) {
    const std::string bytes = read_file(path);
    return hex64(fnv1a64(bytes.data(), bytes.size()));
}

inline bool finite(double v) { return std::isfinite(v); }

}  // namespace ecase
