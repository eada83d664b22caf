#pragma once
// Lexical retrieval over a passage corpus rendered from the graph, one
// passage per triple. BM25 scoring (k1=1.2, b=0.75, idf floored at zero via
// the +1 form) with ties broken by passage id so rankings are stable.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <unordered_map>
#include <vector>

#include "hopbench/common.hpp"
#include "hopbench/kg.hpp"

namespace hopbench {

struct Passage {
    std::string id;
    std::string text;

    bool operator==(const Passage&) const = default;
};

using Corpus = std::vector<Passage>;

// One passage per triple, in canonical triple order; ids are stable across
// runs on the same graph.
inline Corpus triples_to_corpus(const KnowledgeGraph& g) {
    Corpus corpus;
    corpus.reserve(g.triple_count());
    std::size_t n = 0;
    for (const Triple& t : g.triples()) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "p%07zu", ++n);
        corpus.push_back({buf, close_sentence(g.label_of(t.head) + " " + g.label_of(t.relation) +
                                              " " + g.label_of(t.tail))});
    }
    return corpus;
}

struct ScoredPassage {
    std::string id;
    std::string text;
    double score = 0.0;
};

class Bm25Index {
public:
    explicit Bm25Index(Corpus corpus, double k1 = 1.2, double b = 0.75)
        : corpus_(std::move(corpus)), k1_(k1), b_(b) {
        doc_tf_.resize(corpus_.size());
        doc_len_.resize(corpus_.size());
        double total_len = 0.0;
        for (std::size_t d = 0; d < corpus_.size(); ++d) {
            for (const std::string& tok : tokenize(corpus_[d].text)) {
                if (doc_tf_[d][tok]++ == 0) df_[tok]++;
                doc_len_[d]++;
            }
            total_len += static_cast<double>(doc_len_[d]);
        }
        avg_len_ = corpus_.empty() ? 0.0 : total_len / static_cast<double>(corpus_.size());
    }

    std::size_t size() const { return corpus_.size(); }
    const Corpus& corpus() const { return corpus_; }

    // Top-k by BM25 score, score ties resolved by ascending passage id.
    // Zero-score passages are dropped unless allow_zero_score is set.
    std::vector<ScoredPassage> search(const std::string& query, std::size_t k,
                                      bool allow_zero_score = false) const {
        std::vector<ScoredPassage> scored;
        if (corpus_.empty() || k == 0) return scored;

        std::vector<std::string> terms = tokenize(query);
        std::sort(terms.begin(), terms.end());
        terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

        const double n_docs = static_cast<double>(corpus_.size());
        for (std::size_t d = 0; d < corpus_.size(); ++d) {
            double score = 0.0;
            for (const std::string& t : terms) {
                auto tf_it = doc_tf_[d].find(t);
                if (tf_it == doc_tf_[d].end()) continue;
                const double df = static_cast<double>(df_.at(t));
                const double idf = std::log((n_docs - df + 0.5) / (df + 0.5) + 1.0);
                const double tf = static_cast<double>(tf_it->second);
                const double dl = static_cast<double>(doc_len_[d]);
                score += idf * tf * (k1_ + 1.0) /
                         (tf + k1_ * (1.0 - b_ + b_ * (avg_len_ > 0.0 ? dl / avg_len_ : 0.0)));
            }
            if (score > 0.0 || allow_zero_score) {
                scored.push_back({corpus_[d].id, corpus_[d].text, score});
            }
        }
        std::sort(scored.begin(), scored.end(), [](const ScoredPassage& a, const ScoredPassage& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.id < b.id;
        });
        if (scored.size() > k) scored.resize(k);
        return scored;
    }

private:
    Corpus corpus_;
    double k1_;
    double b_;
    double avg_len_ = 0.0;
    std::vector<std::unordered_map<std::string, std::size_t>> doc_tf_;
    std::vector<std::size_t> doc_len_;
    std::unordered_map<std::string, std::size_t> df_;
};

}  // namespace hopbench
