// Independent reference implementations used only by tests. They work from
// the raw definitions (brute-force enumeration over the triple list, naive
// per-window set counting, lgamma hypergeometric) and deliberately share no
// code with the library side beyond plain data structs.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "hopbench/sampler.hpp"

namespace oracles {

struct RawTriple {
    std::string h, r, t;
    bool operator<(const RawTriple& o) const {
        return std::tie(h, r, t) < std::tie(o.h, o.r, o.t);
    }
};

inline std::vector<RawTriple> parse_triples_tsv(const std::string& text) {
    std::set<RawTriple> seen;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto tab1 = line.find('\t');
        auto tab2 = line.find('\t', tab1 + 1);
        seen.insert({line.substr(0, tab1), line.substr(tab1 + 1, tab2 - tab1 - 1),
                     line.substr(tab2 + 1)});
    }
    return {seen.begin(), seen.end()};
}

// Every valid query path of length n from the anchor, found by exhaustive
// enumeration: simple paths, terminal reached by exactly one length-n path,
// one result per relation that is single-valued on both endpoints with
// distinct objects.
inline std::vector<hopbench::QueryPath> brute_force_query_paths(
    const std::vector<RawTriple>& triples, const std::string& anchor, int n) {
    using Path = std::vector<RawTriple>;
    std::vector<Path> paths;
    if (n == 1) {
        for (const auto& e : triples)
            if (e.h == anchor && e.t != anchor) paths.push_back({e});
    } else {
        for (const auto& e1 : triples) {
            if (e1.h != anchor || e1.t == anchor) continue;
            for (const auto& e2 : triples) {
                if (e2.h != e1.t || e2.t == anchor || e2.t == e1.t) continue;
                paths.push_back({e1, e2});
            }
        }
    }

    std::map<std::string, int> terminal_count;
    for (const auto& p : paths) ++terminal_count[p.back().t];

    auto objects = [&](const std::string& e, const std::string& r) {
        std::set<std::string> out;
        for (const auto& tr : triples)
            if (tr.h == e && tr.r == r) out.insert(tr.t);
        return out;
    };
    auto relations = [&](const std::string& e) {
        std::set<std::string> out;
        for (const auto& tr : triples)
            if (tr.h == e) out.insert(tr.r);
        return out;
    };

    std::vector<hopbench::QueryPath> out;
    for (const auto& p : paths) {
        const std::string& terminal = p.back().t;
        if (terminal_count[terminal] != 1) continue;
        auto anchor_rels = relations(anchor);
        for (const auto& r : relations(terminal)) {
            if (!anchor_rels.count(r)) continue;
            auto from_anchor = objects(anchor, r);
            auto from_terminal = objects(terminal, r);
            if (from_anchor.size() != 1 || from_terminal.size() != 1) continue;
            if (*from_anchor.begin() == *from_terminal.begin()) continue;
            hopbench::QueryPath qp;
            qp.anchor = anchor;
            for (const auto& e : p) qp.hops.push_back({e.r, e.t});
            qp.shared_relation = r;
            qp.ground_truth = *from_terminal.begin();
            qp.misleading = *from_anchor.begin();
            qp.hop_count = n + 1;
            out.push_back(std::move(qp));
        }
    }
    return out;
}

inline std::string path_key(const hopbench::QueryPath& p) {
    std::string k = p.anchor;
    for (const auto& h : p.hops) k += "|" + h.relation + "|" + h.entity;
    k += "|" + p.shared_relation + "|" + p.ground_truth + "|" + p.misleading + "|" +
         std::to_string(p.hop_count);
    return k;
}

inline std::vector<std::string> sorted_keys(const std::vector<hopbench::QueryPath>& paths) {
    std::vector<std::string> keys;
    keys.reserve(paths.size());
    for (const auto& p : paths) keys.push_back(path_key(p));
    std::sort(keys.begin(), keys.end());
    return keys;
}

inline double mattr_oracle(const std::vector<std::string>& tokens, std::size_t window) {
    if (tokens.size() < window) {
        std::set<std::string> types(tokens.begin(), tokens.end());
        return static_cast<double>(types.size()) / static_cast<double>(tokens.size());
    }
    double sum = 0;
    std::size_t n_windows = tokens.size() - window + 1;
    for (std::size_t start = 0; start < n_windows; ++start) {
        std::set<std::string> types(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                                    tokens.begin() + static_cast<std::ptrdiff_t>(start + window));
        sum += static_cast<double>(types.size()) / static_cast<double>(window);
    }
    return sum / static_cast<double>(n_windows);
}

template <typename It>
double mtld_direction_oracle(It begin, It end, double threshold) {
    double factors = 0;
    It seg_start = begin;
    It cur = begin;
    double last_ttr = 1.0;
    while (cur != end) {
        ++cur;
        std::set<std::string> types(seg_start, cur);
        last_ttr = static_cast<double>(types.size()) /
                   static_cast<double>(std::distance(seg_start, cur));
        if (last_ttr < threshold) {
            factors += 1;
            seg_start = cur;
            last_ttr = 1.0;
        }
    }
    if (seg_start != end) factors += (1.0 - last_ttr) / (1.0 - threshold);
    double count = static_cast<double>(std::distance(begin, end));
    if (factors == 0) return count;
    return count / factors;
}

inline double mtld_oracle(const std::vector<std::string>& tokens, double threshold) {
    return (mtld_direction_oracle(tokens.begin(), tokens.end(), threshold) +
            mtld_direction_oracle(tokens.rbegin(), tokens.rend(), threshold)) /
           2.0;
}

inline double hdd_oracle(const std::vector<std::string>& tokens, std::size_t sample_size) {
    std::map<std::string, std::size_t> counts;
    for (const auto& t : tokens) ++counts[t];
    auto log_choose = [](double n, double k) {
        return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1);
    };
    double n = static_cast<double>(tokens.size());
    double s = static_cast<double>(sample_size);
    double sum = 0;
    for (const auto& [type, c] : counts) {
        double p_zero = 0;
        if (n - static_cast<double>(c) >= s)
            p_zero = std::exp(log_choose(n - static_cast<double>(c), s) - log_choose(n, s));
        sum += (1.0 - p_zero) / s;
    }
    return sum;
}

}  // namespace oracles
