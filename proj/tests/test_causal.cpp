#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "fixtures.hpp"
#include "hopbench/answerers.hpp"
#include "hopbench/causal.hpp"
#include "hopbench/dataset.hpp"
#include "hopbench/serialize.hpp"

using namespace hopbench;

namespace {

struct GraphAndData {
    KnowledgeGraph g;
    Dataset ds;
};

GraphAndData synthetic_corpus(std::size_t anchors, std::size_t train, std::size_t dev,
                        std::size_t test, std::uint64_t seed) {
    GraphAndData c{fixtures::synthetic_source({anchors, 4, 4, 2}).load(), {}};
    StubLanguageBiasAnswerer stub;
    BuildConfig cfg;
    cfg.train = train;
    cfg.dev = dev;
    cfg.test = test;
    c.ds = build_dataset(c.g, cfg, seed, stub);
    return c;
}

AnswerRecord record_of(const std::string& text, int choice) {
    AnswerRecord r;
    r.raw_text = text;
    r.choice_index = choice;
    r.canonical_answer = text;
    return r;
}

class EchoParaphraser : public Answerer {
public:
    AnswerRecord answer(const AnswerRequest& req) override {
        const std::string tag = "preserving its meaning: ";
        auto at = req.question.find(tag);
        AnswerRecord rec;
        rec.raw_text = "Could you tell me: " + req.question.substr(at + tag.size());
        rec.choice_index = kInvalidChoice;
        rec.canonical_answer = rec.raw_text;
        return rec;
    }
    std::string name() const override { return "echo-paraphraser"; }
};

}  // namespace

TEST_CASE("delta_cp compares canonical answers with an Invalid sentinel") {
    CHECK(delta_cp(record_of("Tesla", 1), record_of("Tesla", 1)) == 0);
    CHECK(delta_cp(record_of("Tesla", 1), record_of("Fiat Automobiles S.p.A.", 0)) == 1);
    CHECK(delta_cp(record_of("no idea", kInvalidChoice), record_of("Tesla", 1)) == 1);
    CHECK(delta_cp(record_of("no idea", kInvalidChoice),
                   record_of("different nonsense", kInvalidChoice)) == 0);
    CHECK(delta_cp(record_of("  TESLA ", 1), record_of("tesla", 1)) == 0);
}

TEST_CASE("every built pair passes its kind invariants") {
    auto c = synthetic_corpus(20, 80, 24, 24, 41);
    for (InterventionKind kind : kAllKinds) {
        bool shortage = false;
        auto pairs = build_intervention_pairs(c.g, c.ds, kind, 41, 100, {}, &shortage);
        INFO(kind_name(kind));
        CHECK_FALSE(pairs.empty());
        for (const auto& p : pairs) {
            auto v = check_pair(p, c.g);
            if (!v.empty()) { INFO(v.front()); }
            CHECK(v.empty());
            CHECK(p.kind == kind);
            if (kind_changes_ground_truth(kind)) {
                CHECK(p.pre.path.ground_truth != p.post.path.ground_truth);
            } else {
                CHECK(p.pre.path.ground_truth == p.post.path.ground_truth);
            }
        }
    }
}

TEST_CASE("pair building is deterministic and honors the count") {
    auto c = synthetic_corpus(20, 80, 24, 24, 41);
    bool shortage = true;
    auto pairs = build_intervention_pairs(c.g, c.ds, InterventionKind::DCE_C, 9, 100, {}, &shortage);
    CHECK(pairs.size() == 100);
    CHECK_FALSE(shortage);

    auto replay = build_intervention_pairs(c.g, c.ds, InterventionKind::DCE_C, 9, 100);
    REQUIRE(replay.size() == pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        CHECK(replay[i].pre == pairs[i].pre);
        CHECK(replay[i].post == pairs[i].post);
    }

    bool small_shortage = false;
    auto few = build_intervention_pairs(c.g, c.ds, InterventionKind::DCE_C, 9, 100000, {},
                                        &small_shortage);
    CHECK(small_shortage);
    CHECK(few.size() == c.ds.instances.size());

    std::set<std::string> pre_ids;
    for (const auto& p : pairs) pre_ids.insert(p.pre.id + "|" + p.post.id);
    CHECK(pre_ids.size() == pairs.size());
}

TEST_CASE("single-image datasets have no DCE_C pairs") {
    auto g = fixtures::synthetic_source({6, 4, 4, 1}).load();
    StubLanguageBiasAnswerer stub;
    BuildConfig cfg;
    cfg.train = 24;
    cfg.dev = 8;
    cfg.test = 8;
    Dataset ds = build_dataset(g, cfg, 3, stub);
    CHECK_THROWS_AS(build_intervention_pairs(g, ds, InterventionKind::DCE_C, 3, 100),
                    NoEligiblePairsError);

    CausalConfig ccfg;
    ccfg.seed = 3;
    OracleAnswerer oracle(g);
    CausalEffectReport rep = causal_report(oracle, g, ds, ccfg);
    const KindReport* kr = rep.find(InterventionKind::DCE_C);
    REQUIRE(kr != nullptr);
    CHECK(kr->pair_count == 0);
    CHECK(kr->shortage);
    CHECK(kr->note == "no eligible pairs");
}

TEST_CASE("oracle scores the extreme sensitivity/robustness profile") {
    auto c = synthetic_corpus(20, 80, 24, 24, 41);
    OracleAnswerer oracle(c.g);
    CausalConfig cfg;
    cfg.seed = 7;
    CausalEffectReport rep = causal_report(oracle, c.g, c.ds, cfg);
    REQUIRE(rep.kinds.size() == 4);
    for (const auto& kr : rep.kinds) CHECK(kr.pair_count > 0);
    CHECK(rep.find(InterventionKind::TCE_Q)->mean_delta == 1.0);
    CHECK(rep.find(InterventionKind::DCE_T)->mean_delta == 0.0);
    CHECK(rep.find(InterventionKind::TCE_I)->mean_delta == 1.0);
    CHECK(rep.find(InterventionKind::DCE_C)->mean_delta == 0.0);
    CHECK(rep.tce_q_minus_dce_t() == 1.0);
}

TEST_CASE("vision-biased answers ignore everything but the image entity") {
    auto c = synthetic_corpus(20, 80, 24, 24, 41);
    VisionBiasedAnswerer vb(c.g);
    CausalConfig cfg;
    cfg.seed = 7;
    CausalEffectReport rep = causal_report(vb, c.g, c.ds, cfg);
    CHECK(rep.find(InterventionKind::TCE_Q)->mean_delta == 0.0);
    CHECK(rep.find(InterventionKind::DCE_T)->mean_delta == 0.0);
    CHECK(rep.find(InterventionKind::TCE_I)->mean_delta == 1.0);
    CHECK(rep.find(InterventionKind::DCE_C)->mean_delta == 0.0);
}

TEST_CASE("estimate_effect means are exact fractions of recorded deltas") {
    auto c = synthetic_corpus(12, 40, 12, 12, 8);
    auto pairs = build_intervention_pairs(c.g, c.ds, InterventionKind::DCE_T, 8, 37);
    RandomAnswerer rnd(123);
    EffectEstimate est = estimate_effect(rnd, pairs);
    REQUIRE(est.outcomes.size() == pairs.size());
    std::size_t sum = 0;
    for (const auto& o : est.outcomes) {
        CHECK((o.delta == 0 || o.delta == 1));
        CHECK(o.delta == delta_cp(o.pre, o.post));
        sum += static_cast<std::size_t>(o.delta);
    }
    CHECK(est.mean_delta == static_cast<double>(sum) / static_cast<double>(pairs.size()));
    CHECK(est.mean_delta >= 0.0);
    CHECK(est.mean_delta <= 1.0);
    CHECK_THROWS_AS(estimate_effect(rnd, {}), std::invalid_argument);
}

TEST_CASE("random-answerer reports replay byte-identically") {
    auto c = synthetic_corpus(12, 40, 12, 12, 8);
    RandomAnswerer rnd(55);
    CausalConfig cfg;
    cfg.seed = 21;
    Provenance prov;
    prov.seed = 21;
    std::string a = causal_report_json(causal_report(rnd, c.g, c.ds, cfg), prov).dump();
    std::string b = causal_report_json(causal_report(rnd, c.g, c.ds, cfg), prov).dump();
    CHECK(a == b);
}

TEST_CASE("TCE_I pattern relaxation admits cross-type pairs") {
    fixtures::GraphSource src = fixtures::synthetic_source({20, 4, 4, 2});
    for (std::size_t i = 0; i < 20; i += 2) {
        std::string from = "\"entity\":\"a" + std::to_string(i) + "\",\"type_label\":\"gadget\"";
        std::string to = "\"entity\":\"a" + std::to_string(i) + "\",\"type_label\":\"widget\"";
        auto at = src.meta.find(from);
        REQUIRE(at != std::string::npos);
        src.meta.replace(at, from.size(), to);
    }
    GraphAndData c{src.load(), {}};
    StubLanguageBiasAnswerer stub;
    BuildConfig cfg;
    cfg.train = 80;
    cfg.dev = 24;
    cfg.test = 24;
    c.ds = build_dataset(c.g, cfg, 41, stub);

    bool s1 = false, s2 = false;
    auto strict = build_intervention_pairs(c.g, c.ds, InterventionKind::TCE_I, 5, 100000, {}, &s1);
    PairBuildOptions relaxed;
    relaxed.tcei_pattern_match = true;
    auto loose =
        build_intervention_pairs(c.g, c.ds, InterventionKind::TCE_I, 5, 100000, relaxed, &s2);
    CHECK(loose.size() > strict.size());
    for (const auto& p : strict) CHECK(p.pre.question == p.post.question);
    bool cross_type = false;
    for (const auto& p : loose) {
        CHECK(check_pair(p, c.g, relaxed).empty());
        CHECK(p.pre.template_variant == p.post.template_variant);
        if (p.pre.question != p.post.question) cross_type = true;
    }
    CHECK(cross_type);
}

TEST_CASE("DCE_T paraphrase mode swaps the rephraser") {
    auto c = synthetic_corpus(8, 30, 8, 8, 4);
    EchoParaphraser para;
    PairBuildOptions opts;
    opts.paraphraser = &para;
    auto pairs = build_intervention_pairs(c.g, c.ds, InterventionKind::DCE_T, 4, 20, opts);
    REQUIRE_FALSE(pairs.empty());
    for (const auto& p : pairs) {
        CHECK(p.post.question == "Could you tell me: " + p.pre.question);
        CHECK(p.post.template_variant == p.pre.template_variant);
        CHECK(check_pair(p, c.g, opts).empty());
    }

    OracleAnswerer oracle(c.g);
    EffectEstimate est = estimate_effect(oracle, pairs);
    CHECK(est.mean_delta == 0.0);
}

TEST_CASE("normal-approximation intervals appear only when requested") {
    auto c = synthetic_corpus(12, 40, 12, 12, 8);
    RandomAnswerer rnd(55);
    CausalConfig cfg;
    cfg.seed = 21;
    CausalEffectReport plain = causal_report(rnd, c.g, c.ds, cfg);
    for (const auto& kr : plain.kinds) CHECK_FALSE(kr.interval.has_value());

    cfg.normal_interval = true;
    CausalEffectReport with = causal_report(rnd, c.g, c.ds, cfg);
    for (const auto& kr : with.kinds) {
        if (kr.pair_count == 0) continue;
        REQUIRE(kr.interval.has_value());
        CHECK((*kr.interval)[0] >= 0.0);
        CHECK((*kr.interval)[0] <= kr.mean_delta);
        CHECK((*kr.interval)[1] >= kr.mean_delta);
        CHECK((*kr.interval)[1] <= 1.0);
    }
    Provenance prov;
    prov.seed = 21;
    json j = causal_report_json(with, prov);
    CHECK(j["per_kind"]["DCE_C"].contains("interval"));
}

TEST_CASE("report serialization carries summary and parse-rule version") {
    auto c = synthetic_corpus(12, 40, 12, 12, 8);
    OracleAnswerer oracle(c.g);
    CausalConfig cfg;
    cfg.seed = 2;
    Provenance prov;
    prov.seed = 2;
    prov.input_digests["dataset"] = "x";
    json j = causal_report_json(causal_report(oracle, c.g, c.ds, cfg), prov);
    CHECK(j.at("answerer") == "oracle");
    CHECK(j.at("parse_rule") == kParseRuleVersion);
    CHECK(j.at("summary").at("sensitivity").at("TCE_Q") == 1.0);
    CHECK(j.at("summary").at("robustness").at("DCE_T") == 0.0);
    CHECK(j.at("summary").at("tce_q_minus_dce_t") == 1.0);
    CHECK(j.at("per_kind").at("TCE_Q").at("pairs").is_array());
    CHECK(j.at("provenance").at("tool_version") == kToolVersion);

    std::string csv = causal_report_csv(causal_report(oracle, c.g, c.ds, cfg));
    CHECK(csv.find("kind,mean_delta,pair_count,shortage") == 0);
    CHECK(csv.find("TCE_Q,1.0,") != std::string::npos);
}
