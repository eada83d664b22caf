#pragma once
// Accuracy / option-role evaluation plus deterministic corpus statistics:
// MATTR (windowed type-token ratio), MTLD (bidirectional factor count with a
// partial trailing factor), HD-D (hypergeometric type coverage), and
// question-prefix histograms. All four share the common tokenizer.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "hopbench/common.hpp"
#include "hopbench/dataset.hpp"
#include "hopbench/gateway.hpp"

namespace hopbench {

class EmptyInputError : public std::runtime_error {
public:
    EmptyInputError() : std::runtime_error("metric input must be non-empty") {}
};

class TooFewTokensError : public std::runtime_error {
public:
    TooFewTokensError(std::size_t have, std::size_t need)
        : std::runtime_error("need at least " + std::to_string(need) + " tokens, got " +
                             std::to_string(have)) {}
};

// ---------------------------------------------------------------------------
// Evaluation

struct EvalReport {
    std::string answerer;
    std::string split;
    std::size_t n_total = 0;
    std::size_t n_2hop = 0;
    std::size_t n_3hop = 0;
    double accuracy_overall = 0.0;
    double accuracy_2hop = 0.0;  // 0 when the bucket is empty
    double accuracy_3hop = 0.0;
    std::map<std::string, double> role_distribution;  // all four roles present
    double invalid_rate = 0.0;
};

// One answerer query per instance of the chosen split ("all" = every split).
// Accuracy counts exact answer_index hits; the distribution buckets answers
// by the chosen option's role, with invalid answers in their own bucket.
inline EvalReport evaluate(Answerer& answerer, const Dataset& ds, const std::string& split) {
    std::vector<const MCQInstance*> picked;
    for (const MCQInstance& inst : ds.instances) {
        if (split == "all" || inst.split == split) picked.push_back(&inst);
    }
    if (picked.empty()) throw std::invalid_argument("split '" + split + "' has no instances");

    EvalReport rep;
    rep.answerer = answerer.name();
    rep.split = split;
    rep.n_total = picked.size();

    std::size_t correct = 0, correct2 = 0, correct3 = 0, invalid = 0;
    std::map<std::string, std::size_t> role_hits;
    for (OptionRole r : {OptionRole::GroundTruth, OptionRole::LanguageBias, OptionRole::VisionBias,
                         OptionRole::SemanticMisleading}) {
        role_hits[role_name(r)] = 0;
    }

    for (const MCQInstance* inst : picked) {
        const bool is2 = inst->hop_count == 2;
        (is2 ? rep.n_2hop : rep.n_3hop)++;
        AnswerRecord rec = answerer.answer(request_for(*inst));
        if (rec.choice_index == kInvalidChoice) {
            ++invalid;
            continue;
        }
        const Option& chosen = inst->options[static_cast<std::size_t>(rec.choice_index)];
        role_hits[role_name(chosen.role)]++;
        if (rec.choice_index == inst->answer_index) {
            ++correct;
            (is2 ? correct2 : correct3)++;
        }
    }

    const double n = static_cast<double>(rep.n_total);
    rep.accuracy_overall = static_cast<double>(correct) / n;
    rep.accuracy_2hop = rep.n_2hop ? static_cast<double>(correct2) / static_cast<double>(rep.n_2hop) : 0.0;
    rep.accuracy_3hop = rep.n_3hop ? static_cast<double>(correct3) / static_cast<double>(rep.n_3hop) : 0.0;
    for (const auto& [role, hits] : role_hits) {
        rep.role_distribution[role] = static_cast<double>(hits) / n;
    }
    rep.invalid_rate = static_cast<double>(invalid) / n;
    return rep;
}

// ---------------------------------------------------------------------------
// Lexical diversity

// Mean type-token ratio over all contiguous windows; plain TTR when the text
// is shorter than the window.
inline double mattr(const std::vector<std::string>& tokens, std::size_t window) {
    if (window < 1) throw std::invalid_argument("window must be at least 1");
    if (tokens.empty()) throw EmptyInputError();
    const std::size_t n = tokens.size();
    if (n < window) {
        std::unordered_map<std::string, std::size_t> counts;
        for (const auto& t : tokens) counts[t]++;
        return static_cast<double>(counts.size()) / static_cast<double>(n);
    }
    std::unordered_map<std::string, std::size_t> counts;
    std::size_t distinct = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (counts[tokens[i]]++ == 0) ++distinct;
        if (i + 1 >= window) {
            sum += static_cast<double>(distinct) / static_cast<double>(window);
            const std::string& out = tokens[i + 1 - window];
            if (--counts[out] == 0) {
                counts.erase(out);
                --distinct;
            }
        }
    }
    return sum / static_cast<double>(n - window + 1);
}

namespace detail {
template <typename It>
double mtld_direction(It begin, It end, double threshold) {
    double factors = 0.0;
    std::unordered_map<std::string, std::size_t> types;
    std::size_t seg_tokens = 0;
    double ttr = 1.0;
    std::size_t total = 0;
    for (It it = begin; it != end; ++it) {
        ++total;
        ++seg_tokens;
        types[*it]++;
        ttr = static_cast<double>(types.size()) / static_cast<double>(seg_tokens);
        if (ttr < threshold) {
            factors += 1.0;
            types.clear();
            seg_tokens = 0;
            ttr = 1.0;
        }
    }
    if (seg_tokens > 0) factors += (1.0 - ttr) / (1.0 - threshold);
    if (factors == 0.0) return static_cast<double>(total);
    return static_cast<double>(total) / factors;
}
}  // namespace detail

// Bidirectional MTLD. A direction whose running TTR never crosses the
// threshold has zero factors; the definition's division is undefined there,
// so that direction contributes token_count (finite and monotone with text
// length, matching the all-distinct limit).
inline double mtld(const std::vector<std::string>& tokens, double threshold = 0.72) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw std::invalid_argument("threshold must lie strictly between 0 and 1");
    }
    if (tokens.empty()) throw EmptyInputError();
    double fwd = detail::mtld_direction(tokens.begin(), tokens.end(), threshold);
    double rev = detail::mtld_direction(tokens.rbegin(), tokens.rend(), threshold);
    return (fwd + rev) / 2.0;
}

// HD-D: sum over types of the probability that the type appears in a random
// draw of sample_size tokens, scaled by 1/sample_size.
inline double hdd(const std::vector<std::string>& tokens, std::size_t sample_size = 42) {
    if (sample_size < 1) throw std::invalid_argument("sample_size must be at least 1");
    if (tokens.empty()) throw EmptyInputError();
    if (tokens.size() < sample_size) throw TooFewTokensError(tokens.size(), sample_size);
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& t : tokens) counts[t]++;
    const std::size_t n = tokens.size();
    double sum = 0.0;
    for (const auto& [type, c] : counts) {
        double p_zero = 0.0;
        if (n - c >= sample_size) {
            // P(no occurrence) = C(n-c, s) / C(n, s) as a stable running product
            p_zero = 1.0;
            for (std::size_t i = 0; i < sample_size; ++i) {
                p_zero *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
            }
        }
        sum += (1.0 - p_zero) / static_cast<double>(sample_size);
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Question-prefix histogram

inline std::map<std::string, std::size_t> prefix_histogram(const std::vector<std::string>& questions,
                                                           std::size_t depth) {
    if (depth < 1) throw std::invalid_argument("depth must be at least 1");
    std::map<std::string, std::size_t> out;
    for (const std::string& q : questions) {
        std::vector<std::string> toks = tokenize(q);
        if (toks.empty()) continue;
        std::string prefix;
        const std::size_t take = toks.size() < depth ? toks.size() : depth;
        for (std::size_t i = 0; i < take; ++i) {
            if (i) prefix += ' ';
            prefix += toks[i];
        }
        out[prefix]++;
    }
    return out;
}

}  // namespace hopbench
