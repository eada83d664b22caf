#pragma once
// Shared primitives: error types, stable hashing, string helpers, tokenizer.
//
// Everything downstream (sampling, option shuffles, report digests) leans on
// fnv1a64 for cross-platform stable hashing. Do not swap it for std::hash,
// which is free to differ between standard libraries.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hopbench {

inline constexpr const char* kToolVersion = "0.1.0";

// Version tag for the free-form answer extraction rule; echoed in reports so
// downstream consumers know which parser produced the choice indices.
inline constexpr const char* kParseRuleVersion = "parse-choice/1";

// ---------------------------------------------------------------------------
// Errors

// Raised when an input file violates its declared format.
class LoadError : public std::runtime_error {
public:
    explicit LoadError(const std::string& msg) : std::runtime_error(msg) {}
};

class MalformedLineError : public LoadError {
public:
    MalformedLineError(const std::string& file, std::size_t line_no, const std::string& why)
        : LoadError(file + ":" + std::to_string(line_no) + ": malformed line: " + why),
          line_no(line_no) {}
    std::size_t line_no;
};

class UnlabeledIdError : public LoadError {
public:
    explicit UnlabeledIdError(const std::string& id)
        : LoadError("id referenced by a triple has no label entry: " + id), id(id) {}
    std::string id;
};

class DuplicateMetaError : public LoadError {
public:
    explicit DuplicateMetaError(const std::string& entity)
        : LoadError("duplicate meta entry for entity: " + entity), entity(entity) {}
    std::string entity;
};

class MissingLabelError : public std::runtime_error {
public:
    explicit MissingLabelError(const std::string& id)
        : std::runtime_error("no label for id: " + id), id(id) {}
    std::string id;
};

class AnchorIneligibleError : public std::runtime_error {
public:
    explicit AnchorIneligibleError(const std::string& anchor, const std::string& why)
        : std::runtime_error("anchor " + anchor + " ineligible: " + why) {}
};

class DuplicateOptionError : public std::runtime_error {
public:
    explicit DuplicateOptionError(const std::string& text)
        : std::runtime_error("duplicate option text: " + text), text(text) {}
    std::string text;
};

class BrokenPathError : public std::runtime_error {
public:
    explicit BrokenPathError(const std::string& why)
        : std::runtime_error("broken path: " + why) {}
};

// Remote call could not complete after the configured retries.
class TransportError : public std::runtime_error {
public:
    explicit TransportError(const std::string& why) : std::runtime_error(why) {}
};

// Remote call completed but the reply envelope is not what the protocol
// promises (bad status, unparseable body, missing fields).
class ProtocolError : public std::runtime_error {
public:
    explicit ProtocolError(const std::string& why) : std::runtime_error(why) {}
};

// ---------------------------------------------------------------------------
// Stable hashing (FNV-1a, 64-bit)

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t hash_combine(std::uint64_t h, std::string_view part) {
    h = fnv1a64(part, h);
    h = fnv1a64("\x1f", h);  // separator so ("ab","c") != ("a","bc")
    return h;
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    return hash_combine(h, std::string_view(buf, 8));
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

// ---------------------------------------------------------------------------
// String helpers

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// Lowercase + collapse whitespace runs to single spaces + trim.
inline std::string normalize_answer(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_ws = true;  // swallow leading whitespace
    for (char ch : s) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            in_ws = true;
        } else {
            if (in_ws && !out.empty()) out.push_back(' ');
            in_ws = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    return out;
}

// Closes a fragment as a sentence without doubling a period the text already
// carries (labels like "S.p.A." end with one).
inline std::string close_sentence(std::string s) {
    if (s.empty() || s.back() != '.') s.push_back('.');
    return s;
}

inline bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    std::string h = to_lower(haystack);
    std::string n = to_lower(needle);
    return h.find(n) != std::string::npos;
}

// Token is non-empty and carries no whitespace; the id format all graph files use.
inline bool is_valid_id_token(std::string_view s) {
    if (s.empty()) return false;
    for (char ch : s) {
        if (std::isspace(static_cast<unsigned char>(ch))) return false;
    }
    return true;
}

// Tokenizer shared by the diversity metrics and prefix histograms:
// lowercase, split on whitespace, strip leading/trailing punctuation.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < n && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) {
            std::size_t b = i, e = j;
            while (b < e && std::ispunct(static_cast<unsigned char>(text[b]))) ++b;
            while (e > b && std::ispunct(static_cast<unsigned char>(text[e - 1]))) --e;
            if (e > b) {
                std::string tok;
                tok.reserve(e - b);
                for (std::size_t k = b; k < e; ++k) {
                    tok.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[k]))));
                }
                tokens.push_back(std::move(tok));
            }
        }
        i = j;
    }
    return tokens;
}

}  // namespace hopbench
