// Shared test corpora. pt_cruiser_source is the small hand-checked graph the
// unit tests pin exact strings against; synthetic_source generates arbitrarily
// many anchors with a regular path structure so intervention pairs of every
// kind exist in bulk. Synthetic labels are single unique tokens, which keeps
// retrieval behaviour easy to reason about in agent-loop tests.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hopbench/kg.hpp"

namespace fixtures {

struct GraphSource {
    std::string triples;
    std::string labels;
    std::string meta;

    hopbench::KnowledgeGraph load(const hopbench::LoadOptions& opts = {}) const {
        std::istringstream t(triples), l(labels), m(meta);
        return hopbench::KnowledgeGraph::load(t, l, m, opts);
    }

    void write(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        std::ofstream(dir / "triples.tsv") << triples;
        std::ofstream(dir / "labels.tsv") << labels;
        std::ofstream(dir / "meta.jsonl") << meta;
    }
};

inline GraphSource pt_cruiser_source() {
    GraphSource s;
    s.triples =
        "pt_cruiser\tfollowed_by\tfiat_500x\n"
        "pt_cruiser\tbrand\tchrysler_corp\n"
        "fiat_500x\tbrand\tfiat_spa\n";
    s.labels =
        "pt_cruiser\tChrysler PT Cruiser\n"
        "fiat_500x\tFiat 500X\n"
        "chrysler_corp\tThe Chrysler Corporation\n"
        "fiat_spa\tFiat Automobiles S.p.A.\n"
        "followed_by\tfollowed by\n"
        "brand\tbrand\n";
    s.meta =
        "{\"entity\":\"pt_cruiser\",\"type_label\":\"vehicle\",\"image_refs\":"
        "[\"img/pt1.jpg\",\"img/pt2.jpg\"]}\n";
    return s;
}

struct SynthConfig {
    std::size_t anchors = 8;
    std::size_t one_hop_paths = 4;
    std::size_t two_hop_paths = 4;
    std::size_t images_per_anchor = 2;
};

// Per anchor i: one_hop_paths chains  a_i -hop_p-> t_i_p  with shared
// relation attr_p (a_i -attr_p-> m_i_p, t_i_p -attr_p-> g_i_p), and
// two_hop_paths chains  a_i -step_q-> u_i_q -step2_q-> w_i_q  with shared
// relation attr2_q (a_i -attr2_q-> mm_i_q, w_i_q -attr2_q-> gg_i_q).
// Relation ids are shared across anchors so questions coincide textually,
// every gt/mis target is a leaf, and all labels are unique single tokens.
inline GraphSource synthetic_source(const SynthConfig& cfg = {}) {
    std::string triples, labels, meta;
    triples.reserve(cfg.anchors * 160);
    labels.reserve(cfg.anchors * 320);
    meta.reserve(cfg.anchors * 120);
    char buf[160];
    auto put = [&buf](std::string& out, const char* fmt, auto... args) {
        std::snprintf(buf, sizeof(buf), fmt, args...);
        out += buf;
    };
    for (std::size_t p = 0; p < cfg.one_hop_paths; ++p) {
        put(labels, "hop%zu\thoprel%zu\n", p, p);
        put(labels, "attr%zu\tattr%zu\n", p, p);
    }
    for (std::size_t q = 0; q < cfg.two_hop_paths; ++q) {
        put(labels, "step%zu\tsteprel%zu\n", q, q);
        put(labels, "step2%zu\tstep2rel%zu\n", q, q);
        put(labels, "attr2_%zu\tfarattr%zu\n", q, q);
    }
    for (std::size_t i = 0; i < cfg.anchors; ++i) {
        put(labels, "a%zu\tanchor%zux\n", i, i);
        put(meta, "{\"entity\":\"a%zu\",\"type_label\":\"gadget\",\"image_refs\":[", i);
        for (std::size_t v = 0; v < cfg.images_per_anchor; ++v) {
            if (v) meta += ',';
            put(meta, "\"img/a%zu_%zu.png\"", i, v);
        }
        meta += "]}\n";
        for (std::size_t p = 0; p < cfg.one_hop_paths; ++p) {
            put(triples, "a%zu\thop%zu\tt%zup%zu\n", i, p, i, p);
            put(triples, "a%zu\tattr%zu\tm%zup%zu\n", i, p, i, p);
            put(triples, "t%zup%zu\tattr%zu\tg%zup%zu\n", i, p, p, i, p);
            put(labels, "t%zup%zu\ttarget%zux%zu\n", i, p, i, p);
            put(labels, "m%zup%zu\tmis%zux%zu\n", i, p, i, p);
            put(labels, "g%zup%zu\tgt%zux%zu\n", i, p, i, p);
        }
        for (std::size_t q = 0; q < cfg.two_hop_paths; ++q) {
            put(triples, "a%zu\tstep%zu\tu%zuq%zu\n", i, q, i, q);
            put(triples, "u%zuq%zu\tstep2%zu\tw%zuq%zu\n", i, q, q, i, q);
            put(triples, "a%zu\tattr2_%zu\tmm%zuq%zu\n", i, q, i, q);
            put(triples, "w%zuq%zu\tattr2_%zu\tgg%zuq%zu\n", i, q, q, i, q);
            put(labels, "u%zuq%zu\tmid%zux%zu\n", i, q, i, q);
            put(labels, "w%zuq%zu\tfar%zux%zu\n", i, q, i, q);
            put(labels, "mm%zuq%zu\tfarmis%zux%zu\n", i, q, i, q);
            put(labels, "gg%zuq%zu\tfargt%zux%zu\n", i, q, i, q);
        }
    }
    return GraphSource{std::move(triples), std::move(labels), std::move(meta)};
}

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("hopbench_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace fixtures
