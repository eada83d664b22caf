#pragma once
// Knowledge graph store: load, index, query.
//
// Layout:
// - Entities and relations are dictionary-encoded to dense u32 indices.
//   Index order == lexicographic order of the id tokens, which makes every
//   iteration over the graph canonical and seed-reproducible.
// - Triples live in one CSR-style array sorted by (head, rel, tail);
//   objects_of is a binary search, no per-key hash maps.
// - The graph is immutable after load; concurrent reads are safe.
//
// Input formats:
//   triples: UTF-8 TSV, one `head<TAB>relation<TAB>tail` per line
//   labels:  `id<TAB>label` (first tab splits; label may contain anything)
//   meta:    JSON Lines, {"entity": ..., "type_label": ..., "image_refs": [...]}

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "hopbench/common.hpp"

namespace hopbench {

struct Triple {
    std::string head;
    std::string relation;
    std::string tail;

    bool operator==(const Triple&) const = default;
};

struct EntityMeta {
    std::string entity;
    std::string type_label;                // empty = unknown, entity cannot anchor
    std::vector<std::string> image_refs;   // opaque ids; may be empty
};

struct LoadOptions {
    // When set, entities whose meta lacks a type_label fall back to the label
    // of the unique object under this relation.
    std::optional<std::string> instance_of_relation;
};

class KnowledgeGraph {
public:
    using Idx = std::uint32_t;

    struct Edge {
        Idx rel;
        Idx tail;
        friend bool operator<(const Edge& a, const Edge& b) {
            return a.rel != b.rel ? a.rel < b.rel : a.tail < b.tail;
        }
        friend bool operator==(const Edge& a, const Edge& b) {
            return a.rel == b.rel && a.tail == b.tail;
        }
    };

    static KnowledgeGraph load(std::istream& triples_in, std::istream& labels_in,
                               std::istream& meta_in, const LoadOptions& opts = {}) {
        KnowledgeGraph g;
        g.do_load(triples_in, labels_in, meta_in, opts);
        return g;
    }

    static KnowledgeGraph load_files(const std::string& triples_path,
                                     const std::string& labels_path,
                                     const std::string& meta_path,
                                     const LoadOptions& opts = {}) {
        std::ifstream t(triples_path), l(labels_path), m(meta_path);
        if (!t) throw LoadError("cannot open triples file: " + triples_path);
        if (!l) throw LoadError("cannot open labels file: " + labels_path);
        if (!m) throw LoadError("cannot open meta file: " + meta_path);
        return load(t, l, m, opts);
    }

    std::size_t entity_count() const { return entity_tokens_.size(); }
    std::size_t relation_count() const { return relation_tokens_.size(); }
    std::size_t triple_count() const { return edges_.size(); }

    std::optional<Idx> entity_index(std::string_view token) const {
        return find_sorted(entity_tokens_, token);
    }
    std::optional<Idx> relation_index(std::string_view token) const {
        return find_sorted(relation_tokens_, token);
    }

    const std::string& entity_token(Idx e) const { return entity_tokens_[e]; }
    const std::string& relation_token(Idx r) const { return relation_tokens_[r]; }
    const std::string& entity_label(Idx e) const { return entity_labels_[e]; }
    const std::string& relation_label(Idx r) const { return relation_labels_[r]; }

    // Label lookup by raw id token; throws MissingLabelError for unknown ids.
    const std::string& label_of(std::string_view token) const {
        if (auto e = entity_index(token)) return entity_labels_[*e];
        if (auto r = relation_index(token)) return relation_labels_[*r];
        throw MissingLabelError(std::string(token));
    }

    // All outgoing edges of head, sorted by (rel, tail).
    std::span<const Edge> edges_of(Idx head) const {
        return {edges_.data() + head_offsets_[head],
                edges_.data() + head_offsets_[head + 1]};
    }

    // The contiguous run of edges under (head, rel); empty when absent.
    std::span<const Edge> edges_of(Idx head, Idx rel) const {
        const Edge* first = edges_.data() + head_offsets_[head];
        const Edge* last = edges_.data() + head_offsets_[head + 1];
        const Edge* b = std::lower_bound(first, last, Edge{rel, 0});
        const Edge* e = std::upper_bound(first, last, Edge{rel, ~Idx{0}});
        return {b, e};
    }

    std::size_t out_degree(Idx head) const { return edges_of(head).size(); }

    bool has_edge(Idx head, Idx rel, Idx tail) const {
        auto run = edges_of(head, rel);
        return std::binary_search(run.begin(), run.end(), Edge{rel, tail});
    }

    // objects_of over raw tokens; unknown ids yield the empty set.
    std::vector<std::string> objects_of(std::string_view entity, std::string_view relation) const {
        std::vector<std::string> out;
        auto e = entity_index(entity);
        auto r = relation_index(relation);
        if (!e || !r) return out;
        for (const Edge& edge : edges_of(*e, *r)) out.push_back(entity_tokens_[edge.tail]);
        return out;
    }

    // Relations with at least one object for this entity; sorted by token.
    std::vector<std::string> relations_of(std::string_view entity) const {
        std::vector<std::string> out;
        auto e = entity_index(entity);
        if (!e) return out;
        Idx last = ~Idx{0};
        for (const Edge& edge : edges_of(*e)) {
            if (edge.rel != last) {
                out.push_back(relation_tokens_[edge.rel]);
                last = edge.rel;
            }
        }
        return out;
    }

    bool has_triple(std::string_view h, std::string_view r, std::string_view t) const {
        auto he = entity_index(h);
        auto re = relation_index(r);
        auto te = entity_index(t);
        return he && re && te && has_edge(*he, *re, *te);
    }

    const EntityMeta* meta_of(Idx e) const {
        return has_meta_[e] ? &meta_[e] : nullptr;
    }
    const EntityMeta* meta_of(std::string_view token) const {
        auto e = entity_index(token);
        return e ? meta_of(*e) : nullptr;
    }

    bool anchor_eligible(Idx e) const {
        const EntityMeta* m = meta_of(e);
        return m && !m->type_label.empty() && !m->image_refs.empty();
    }

    // Materialized triple list in canonical (head, rel, tail) order.
    // Desk-scale helper for corpus building and brute-force checks.
    std::vector<Triple> triples() const {
        std::vector<Triple> out;
        out.reserve(edges_.size());
        for (Idx h = 0; h < entity_tokens_.size(); ++h) {
            for (const Edge& e : edges_of(h)) {
                out.push_back({entity_tokens_[h], relation_tokens_[e.rel], entity_tokens_[e.tail]});
            }
        }
        return out;
    }

private:
    template <typename Vec>
    static std::optional<Idx> find_sorted(const Vec& sorted, std::string_view token) {
        auto it = std::lower_bound(sorted.begin(), sorted.end(), token,
                                   [](const std::string& a, std::string_view b) { return a < b; });
        if (it == sorted.end() || *it != token) return std::nullopt;
        return static_cast<Idx>(it - sorted.begin());
    }

    static bool next_line(std::istream& in, std::string& line) {
        if (!std::getline(in, line)) return false;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    }

    void do_load(std::istream& triples_in, std::istream& labels_in,
                 std::istream& meta_in, const LoadOptions& opts) {
        // Labels first: triple ids must all be covered.
        std::unordered_map<std::string, std::string> labels;
        {
            std::string line;
            std::size_t line_no = 0;
            while (next_line(labels_in, line)) {
                ++line_no;
                if (line.empty()) continue;
                auto tab = line.find('\t');
                if (tab == std::string::npos) {
                    throw MalformedLineError("labels", line_no, "expected id<TAB>label");
                }
                std::string id = line.substr(0, tab);
                if (!is_valid_id_token(id)) {
                    throw MalformedLineError("labels", line_no, "bad id token '" + id + "'");
                }
                labels[std::move(id)] = line.substr(tab + 1);
            }
        }

        // Stream triples, interning tokens in first-seen order; remapped to
        // lexicographic order below.
        std::unordered_map<std::string, Idx> ent_tmp;
        std::unordered_map<std::string, Idx> rel_tmp;
        std::vector<std::string> ent_names;
        std::vector<std::string> rel_names;
        struct RawTriple { Idx h, r, t; };
        std::vector<RawTriple> raw;

        auto intern = [&labels](std::unordered_map<std::string, Idx>& map,
                                std::vector<std::string>& names, std::string&& tok) -> Idx {
            auto it = map.find(tok);
            if (it != map.end()) return it->second;
            if (!labels.count(tok)) throw UnlabeledIdError(tok);
            Idx idx = static_cast<Idx>(names.size());
            names.push_back(tok);
            map.emplace(std::move(tok), idx);
            return idx;
        };

        {
            std::string line;
            std::size_t line_no = 0;
            while (next_line(triples_in, line)) {
                ++line_no;
                if (line.empty()) continue;
                auto t1 = line.find('\t');
                auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
                if (t1 == std::string::npos || t2 == std::string::npos ||
                    line.find('\t', t2 + 1) != std::string::npos) {
                    throw MalformedLineError("triples", line_no, "expected head<TAB>relation<TAB>tail");
                }
                std::string h = line.substr(0, t1);
                std::string r = line.substr(t1 + 1, t2 - t1 - 1);
                std::string t = line.substr(t2 + 1);
                if (!is_valid_id_token(h) || !is_valid_id_token(r) || !is_valid_id_token(t)) {
                    throw MalformedLineError("triples", line_no, "ids must be non-empty whitespace-free tokens");
                }
                RawTriple rt;
                rt.h = intern(ent_tmp, ent_names, std::move(h));
                rt.r = intern(rel_tmp, rel_names, std::move(r));
                rt.t = intern(ent_tmp, ent_names, std::move(t));
                raw.push_back(rt);
            }
        }

        // Dictionary order = token order.
        auto sort_remap = [](std::vector<std::string>& names) {
            std::vector<Idx> old_to_new(names.size());
            std::vector<Idx> order(names.size());
            for (Idx i = 0; i < names.size(); ++i) order[i] = i;
            std::sort(order.begin(), order.end(),
                      [&](Idx a, Idx b) { return names[a] < names[b]; });
            std::vector<std::string> sorted(names.size());
            for (Idx pos = 0; pos < order.size(); ++pos) {
                sorted[pos] = std::move(names[order[pos]]);
                old_to_new[order[pos]] = pos;
            }
            names = std::move(sorted);
            return old_to_new;
        };
        std::vector<Idx> ent_map = sort_remap(ent_names);
        std::vector<Idx> rel_map = sort_remap(rel_names);
        ent_tmp.clear();
        rel_tmp.clear();

        entity_tokens_ = std::move(ent_names);
        relation_tokens_ = std::move(rel_names);
        entity_labels_.resize(entity_tokens_.size());
        for (std::size_t i = 0; i < entity_tokens_.size(); ++i) {
            entity_labels_[i] = labels.at(entity_tokens_[i]);
        }
        relation_labels_.resize(relation_tokens_.size());
        for (std::size_t i = 0; i < relation_tokens_.size(); ++i) {
            relation_labels_[i] = labels.at(relation_tokens_[i]);
        }

        // Remap, sort, dedupe (set semantics), then CSR offsets.
        struct FullTriple { Idx h; Edge e; };
        std::vector<FullTriple> full;
        full.reserve(raw.size());
        for (const RawTriple& rt : raw) {
            full.push_back({ent_map[rt.h], {rel_map[rt.r], ent_map[rt.t]}});
        }
        raw.clear();
        raw.shrink_to_fit();
        std::sort(full.begin(), full.end(), [](const FullTriple& a, const FullTriple& b) {
            if (a.h != b.h) return a.h < b.h;
            return a.e < b.e;
        });
        full.erase(std::unique(full.begin(), full.end(),
                               [](const FullTriple& a, const FullTriple& b) {
                                   return a.h == b.h && a.e == b.e;
                               }),
                   full.end());

        edges_.reserve(full.size());
        head_offsets_.assign(entity_tokens_.size() + 1, 0);
        for (const FullTriple& ft : full) head_offsets_[ft.h + 1]++;
        for (std::size_t i = 1; i < head_offsets_.size(); ++i) head_offsets_[i] += head_offsets_[i - 1];
        for (const FullTriple& ft : full) edges_.push_back(ft.e);

        // Meta rows. Rows for entities outside the graph are dropped after the
        // duplicate check; they can never anchor a question.
        meta_.assign(entity_tokens_.size(), EntityMeta{});
        has_meta_.assign(entity_tokens_.size(), 0);
        {
            std::unordered_map<std::string, bool> seen;
            std::string line;
            std::size_t line_no = 0;
            while (next_line(meta_in, line)) {
                ++line_no;
                if (line.empty()) continue;
                nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
                if (j.is_discarded() || !j.is_object() || !j.contains("entity") ||
                    !j["entity"].is_string()) {
                    throw MalformedLineError("meta", line_no, "expected a JSON object with an 'entity' string");
                }
                EntityMeta m;
                m.entity = j["entity"].get<std::string>();
                if (!is_valid_id_token(m.entity)) {
                    throw MalformedLineError("meta", line_no, "bad entity token '" + m.entity + "'");
                }
                if (seen.count(m.entity)) throw DuplicateMetaError(m.entity);
                seen.emplace(m.entity, true);
                if (j.contains("type_label") && j["type_label"].is_string()) {
                    m.type_label = j["type_label"].get<std::string>();
                }
                if (j.contains("image_refs")) {
                    if (!j["image_refs"].is_array()) {
                        throw MalformedLineError("meta", line_no, "image_refs must be an array");
                    }
                    for (const auto& ref : j["image_refs"]) {
                        if (!ref.is_string()) {
                            throw MalformedLineError("meta", line_no, "image_refs entries must be strings");
                        }
                        m.image_refs.push_back(ref.get<std::string>());
                    }
                }
                if (auto e = entity_index(m.entity)) {
                    meta_[*e] = std::move(m);
                    has_meta_[*e] = 1;
                }
            }
        }

        // type_label fallback through the configured instance-of relation.
        if (opts.instance_of_relation) {
            auto rel = relation_index(*opts.instance_of_relation);
            if (rel) {
                for (Idx e = 0; e < entity_tokens_.size(); ++e) {
                    if (!has_meta_[e] || !meta_[e].type_label.empty()) continue;
                    auto run = edges_of(e, *rel);
                    if (run.size() == 1) meta_[e].type_label = entity_labels_[run[0].tail];
                }
            }
        }
    }

    std::vector<std::string> entity_tokens_;
    std::vector<std::string> entity_labels_;
    std::vector<std::string> relation_tokens_;
    std::vector<std::string> relation_labels_;
    std::vector<Edge> edges_;
    std::vector<std::uint64_t> head_offsets_;
    std::vector<EntityMeta> meta_;
    std::vector<char> has_meta_;
};

}  // namespace hopbench
