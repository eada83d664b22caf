#pragma once
// Uniform answering interface. Every model under test, remote or local stub,
// is an Answerer: request in, AnswerRecord out. The harness treats answerers
// as black boxes; the AnswerRequest carries a privileged pointer to the full
// instance that only diagnostic stubs (oracle, role pickers) may touch.

#include <cctype>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hopbench/common.hpp"

namespace hopbench {

struct MCQInstance;

inline constexpr int kInvalidChoice = -1;

struct AnswerRecord {
    std::string raw_text;
    int choice_index = kInvalidChoice;  // 0..3, or kInvalidChoice
    // The chosen option's text; raw_text when no options were supplied or no
    // choice could be extracted.
    std::string canonical_answer;
};

struct AnswerRequest {
    std::string question;
    std::vector<std::string> option_texts;  // empty = question-only mode
    std::optional<std::string> image_ref;   // absent = question-only mode
    // Privileged handle for local diagnostic stubs. Honest answerers must
    // ignore it; remote answerers never see it.
    const MCQInstance* instance = nullptr;
};

class Answerer {
public:
    virtual ~Answerer() = default;
    virtual AnswerRecord answer(const AnswerRequest& req) = 0;
    virtual std::string name() const = 0;
    virtual bool deterministic() const { return true; }
};

// Free-form reply to option index. Resolution order (versioned as
// kParseRuleVersion):
//   1a. leading standalone letter A-D, optionally wrapped in punctuation
//   1b. otherwise, a letter token marked by punctuation or final position,
//       accepted when exactly one distinct letter is marked
//   2.  whole reply equals an option text (case-insensitive, trailing period
//       tolerated)
//   3.  exactly one option text occurs as a case-insensitive substring
// Letter markers beat text matches so options quoting other options cannot
// hijack the parse.
inline int parse_choice(std::string_view raw, const std::vector<std::string>& options) {
    auto letter_index = [](char c) -> int {
        if (c >= 'A' && c <= 'D') return c - 'A';
        if (c >= 'a' && c <= 'd') return c - 'a';
        return -1;
    };
    const int n = static_cast<int>(options.size());

    // 1a
    {
        std::size_t i = 0;
        while (i < raw.size() && (std::isspace(static_cast<unsigned char>(raw[i])) ||
                                  std::ispunct(static_cast<unsigned char>(raw[i])))) {
            ++i;
        }
        if (i < raw.size()) {
            int idx = letter_index(raw[i]);
            if (idx >= 0 && idx < n &&
                (i + 1 == raw.size() || !std::isalnum(static_cast<unsigned char>(raw[i + 1])))) {
                return idx;
            }
        }
    }

    // 1b
    {
        std::vector<std::string_view> toks;
        std::size_t i = 0;
        while (i < raw.size()) {
            while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
            std::size_t j = i;
            while (j < raw.size() && !std::isspace(static_cast<unsigned char>(raw[j]))) ++j;
            if (j > i) toks.push_back(raw.substr(i, j - i));
            i = j;
        }
        std::set<int> marked;
        for (std::size_t k = 0; k < toks.size(); ++k) {
            std::string_view t = toks[k];
            std::size_t b = 0, e = t.size();
            while (b < e && std::ispunct(static_cast<unsigned char>(t[b]))) ++b;
            while (e > b && std::ispunct(static_cast<unsigned char>(t[e - 1]))) --e;
            if (e - b != 1) continue;
            int idx = letter_index(t[b]);
            if (idx < 0 || idx >= n) continue;
            if (b > 0 || e < t.size() || k + 1 == toks.size()) marked.insert(idx);
        }
        if (marked.size() == 1) return *marked.begin();
    }

    // 2
    {
        std::string t = trim(raw);
        std::string t_nodot = t;
        if (!t_nodot.empty() && t_nodot.back() == '.') t_nodot.pop_back();
        std::set<int> hits;
        for (int i = 0; i < n; ++i) {
            std::string o = to_lower(options[i]);
            if (to_lower(t) == o || to_lower(t_nodot) == o) hits.insert(i);
        }
        if (hits.size() == 1) return *hits.begin();
    }

    // 3
    {
        std::string lraw = to_lower(raw);
        std::set<int> hits;
        for (int i = 0; i < n; ++i) {
            if (lraw.find(to_lower(options[i])) != std::string::npos) hits.insert(i);
        }
        if (hits.size() == 1) return *hits.begin();
    }

    return kInvalidChoice;
}

inline AnswerRecord make_answer_record(std::string raw_text, const std::vector<std::string>& options) {
    AnswerRecord rec;
    rec.raw_text = std::move(raw_text);
    rec.choice_index = options.empty() ? kInvalidChoice : parse_choice(rec.raw_text, options);
    rec.canonical_answer =
        rec.choice_index >= 0 ? options[static_cast<std::size_t>(rec.choice_index)] : rec.raw_text;
    return rec;
}

// Wraps a flaky answerer so batch runs keep going: transport and protocol
// failures become Invalid records and are counted instead of thrown.
class FailSoftAnswerer : public Answerer {
public:
    explicit FailSoftAnswerer(Answerer& inner) : inner_(inner) {}

    AnswerRecord answer(const AnswerRequest& req) override {
        ++calls_;
        try {
            return inner_.answer(req);
        } catch (const TransportError& e) {
            ++transport_failures_;
            return failed_record(e.what());
        } catch (const ProtocolError& e) {
            ++protocol_failures_;
            return failed_record(e.what());
        }
    }

    std::string name() const override { return inner_.name(); }
    bool deterministic() const override { return inner_.deterministic(); }

    std::size_t calls() const { return calls_; }
    std::size_t transport_failures() const { return transport_failures_; }
    std::size_t protocol_failures() const { return protocol_failures_; }
    bool all_calls_failed() const {
        return calls_ > 0 && transport_failures_ + protocol_failures_ == calls_;
    }

private:
    static AnswerRecord failed_record(const std::string& why) {
        AnswerRecord rec;
        rec.raw_text = "[error] " + why;
        rec.choice_index = kInvalidChoice;
        rec.canonical_answer = rec.raw_text;
        return rec;
    }

    Answerer& inner_;
    std::size_t calls_ = 0;
    std::size_t transport_failures_ = 0;
    std::size_t protocol_failures_ = 0;
};

// Memoizes replies keyed on (question, image_ref, option texts) so repeated
// requests cost one inner call; meant for remote answerers, where identical
// questions recur across evaluation and intervention runs.
class CachingAnswerer : public Answerer {
public:
    explicit CachingAnswerer(Answerer& inner) : inner_(inner) {}

    AnswerRecord answer(const AnswerRequest& req) override {
        std::string key = req.question;
        key += '\x1f';
        if (req.image_ref) key += *req.image_ref;
        for (const std::string& t : req.option_texts) {
            key += '\x1f';
            key += t;
        }
        std::lock_guard<std::mutex> lock(mu_);
        auto it = cache_.find(key);
        if (it != cache_.end()) {
            ++hits_;
            return it->second;
        }
        AnswerRecord rec = inner_.answer(req);
        ++misses_;
        cache_.emplace(std::move(key), rec);
        return rec;
    }

    std::string name() const override { return inner_.name(); }
    bool deterministic() const override { return inner_.deterministic(); }

    std::size_t hits() const { return hits_; }
    std::size_t misses() const { return misses_; }

private:
    Answerer& inner_;
    std::mutex mu_;
    std::unordered_map<std::string, AnswerRecord> cache_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

}  // namespace hopbench
