#pragma once
// Multi-hop path sampling. A query path is a simple directed path of length
// n in {1,2} from an image-bearing anchor entity, kept only when
//  (a) it is the single length-n path from anchor to its terminal, and
//  (b) anchor and terminal share a relation that is single-valued for both
//      and points at two different objects.
// The terminal-side object becomes the ground truth, the anchor-side object
// the semantically misleading distractor. One QueryPath per (path, shared
// relation) pair.

#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "hopbench/common.hpp"
#include "hopbench/kg.hpp"
#include "hopbench/rng.hpp"

namespace hopbench {

struct QueryHop {
    std::string relation;
    std::string entity;

    bool operator==(const QueryHop&) const = default;
};

struct QueryPath {
    std::string anchor;
    std::vector<QueryHop> hops;  // n entries, n in {1,2}; terminal = hops.back().entity
    std::string shared_relation;
    std::string ground_truth;   // unique object of (terminal, shared_relation)
    std::string misleading;     // unique object of (anchor, shared_relation)
    int hop_count = 0;          // n + 1: the shared relation is the final hop

    const std::string& terminal() const { return hops.back().entity; }

    bool operator==(const QueryPath&) const = default;
};

struct SharedRelation {
    std::string relation;
    std::string anchor_object;
    std::string terminal_object;

    bool operator==(const SharedRelation&) const = default;
};

inline constexpr std::size_t kUnboundedCount = std::numeric_limits<std::size_t>::max();

namespace detail {

struct SharedRelationIdx {
    KnowledgeGraph::Idx relation;
    KnowledgeGraph::Idx anchor_object;
    KnowledgeGraph::Idx terminal_object;
};

// Relations single-valued on both endpoints with distinct objects, in
// relation-index order (== token order).
inline std::vector<SharedRelationIdx> shared_relations_idx(const KnowledgeGraph& g,
                                                           KnowledgeGraph::Idx anchor,
                                                           KnowledgeGraph::Idx terminal) {
    std::vector<SharedRelationIdx> out;
    auto run = g.edges_of(anchor);
    std::size_t i = 0;
    while (i < run.size()) {
        const KnowledgeGraph::Idx rel = run[i].rel;
        std::size_t j = i;
        while (j < run.size() && run[j].rel == rel) ++j;
        if (j - i == 1) {
            auto t_run = g.edges_of(terminal, rel);
            if (t_run.size() == 1 && t_run[0].tail != run[i].tail) {
                out.push_back({rel, run[i].tail, t_run[0].tail});
            }
        }
        i = j;
    }
    return out;
}

inline std::size_t count_edges_between(const KnowledgeGraph& g, KnowledgeGraph::Idx head,
                                       KnowledgeGraph::Idx tail) {
    std::size_t n = 0;
    for (const auto& e : g.edges_of(head)) {
        if (e.tail == tail) ++n;
    }
    return n;
}

// Number of simple directed paths of length exactly n from anchor to
// terminal, counting parallel edges under different relations separately.
inline std::size_t count_paths(const KnowledgeGraph& g, KnowledgeGraph::Idx anchor,
                               KnowledgeGraph::Idx terminal, int n) {
    if (anchor == terminal) return 0;  // a simple path cannot revisit its start
    if (n == 1) return count_edges_between(g, anchor, terminal);
    std::size_t total = 0;
    KnowledgeGraph::Idx last_mid = 0;
    bool have_mid = false;
    std::size_t mid_fanin = 0;
    for (const auto& e : g.edges_of(anchor)) {
        if (e.tail == anchor || e.tail == terminal) continue;
        if (!have_mid || e.tail != last_mid) {
            last_mid = e.tail;
            have_mid = true;
            mid_fanin = count_edges_between(g, e.tail, terminal);
        }
        total += mid_fanin;
    }
    return total;
}

}  // namespace detail

inline std::vector<SharedRelation> find_shared_relations(const KnowledgeGraph& g,
                                                         std::string_view anchor,
                                                         std::string_view terminal) {
    std::vector<SharedRelation> out;
    auto a = g.entity_index(anchor);
    auto t = g.entity_index(terminal);
    if (!a || !t || *a == *t) return out;
    for (const auto& sr : detail::shared_relations_idx(g, *a, *t)) {
        out.push_back({g.relation_token(sr.relation), g.entity_token(sr.anchor_object),
                       g.entity_token(sr.terminal_object)});
    }
    return out;
}

inline bool check_path_uniqueness(const KnowledgeGraph& g, std::string_view anchor,
                                  std::string_view terminal, int n) {
    auto a = g.entity_index(anchor);
    auto t = g.entity_index(terminal);
    if (!a || !t) return false;
    return detail::count_paths(g, *a, *t, n) == 1;
}

// All valid QueryPaths for one anchor, in canonical enumeration order
// (edge order, then shared-relation order), then uniformly subsampled to
// max_count without replacement. Canonical order is preserved in the output
// so a given seed reproduces bit-identically across platforms.
inline std::vector<QueryPath> sample_query_paths(const KnowledgeGraph& g, std::string_view anchor,
                                                 int n, std::uint64_t rng_seed,
                                                 std::size_t max_count = kUnboundedCount) {
    auto a = g.entity_index(anchor);
    if (!a) throw AnchorIneligibleError(std::string(anchor), "not in graph");
    if (!g.anchor_eligible(*a)) {
        throw AnchorIneligibleError(std::string(anchor), "needs a type_label and at least one image");
    }
    if (n != 1 && n != 2) throw std::invalid_argument("path length must be 1 or 2");
    if (max_count == 0) throw std::invalid_argument("max_count must be at least 1");

    using Idx = KnowledgeGraph::Idx;
    std::vector<QueryPath> all;
    std::unordered_map<Idx, bool> unique_memo;
    auto is_unique = [&](Idx terminal) {
        auto it = unique_memo.find(terminal);
        if (it != unique_memo.end()) return it->second;
        bool u = detail::count_paths(g, *a, terminal, n) == 1;
        unique_memo.emplace(terminal, u);
        return u;
    };

    auto emit = [&](Idx terminal, std::vector<QueryHop>&& hops) {
        if (!is_unique(terminal)) return;
        for (const auto& sr : detail::shared_relations_idx(g, *a, terminal)) {
            QueryPath p;
            p.anchor = g.entity_token(*a);
            p.hops = hops;
            p.shared_relation = g.relation_token(sr.relation);
            p.ground_truth = g.entity_token(sr.terminal_object);
            p.misleading = g.entity_token(sr.anchor_object);
            p.hop_count = n + 1;
            all.push_back(std::move(p));
        }
    };

    for (const auto& e1 : g.edges_of(*a)) {
        if (e1.tail == *a) continue;
        if (n == 1) {
            emit(e1.tail, {{g.relation_token(e1.rel), g.entity_token(e1.tail)}});
        } else {
            for (const auto& e2 : g.edges_of(e1.tail)) {
                if (e2.tail == *a || e2.tail == e1.tail) continue;
                emit(e2.tail, {{g.relation_token(e1.rel), g.entity_token(e1.tail)},
                               {g.relation_token(e2.rel), g.entity_token(e2.tail)}});
            }
        }
    }

    if (all.size() <= max_count) return all;

    Rng rng(rng_seed);
    std::vector<std::size_t> keep = sample_indices(all.size(), max_count, rng);
    std::sort(keep.begin(), keep.end());
    std::vector<QueryPath> out;
    out.reserve(keep.size());
    for (std::size_t k : keep) out.push_back(std::move(all[k]));
    return out;
}

}  // namespace hopbench
