#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "fixtures.hpp"
#include "hopbench/answerers.hpp"
#include "hopbench/dataset.hpp"
#include "hopbench/sampler.hpp"

using namespace hopbench;

namespace {

const std::vector<std::string> kFixtureOptions = {
    "Fiat Automobiles S.p.A.", "Tesla", "Chrysler PT Cruiser", "The Chrysler Corporation"};

MCQInstance make_fixture_instance(const KnowledgeGraph& g) {
    QueryPath p = sample_query_paths(g, "pt_cruiser", 1, 7)[0];
    MCQInstance inst;
    inst.id = "train-000001";
    inst.image_ref = "img/pt1.jpg";
    inst.entity = "pt_cruiser";
    inst.hop_count = p.hop_count;
    inst.template_variant = 0;
    inst.question = render_question(g, p, "vehicle", 0);
    auto built = build_options(g, p, "Tesla", 7);
    inst.options = built.options;
    inst.answer_index = built.answer_index;
    inst.rationale = generate_rationale(g, p);
    inst.path = std::move(p);
    inst.split = "train";
    return inst;
}

class AlwaysThrowAnswerer : public Answerer {
public:
    AnswerRecord answer(const AnswerRequest&) override {
        throw TransportError("wire is down");
    }
    std::string name() const override { return "always-throw"; }
};

}  // namespace

TEST_CASE("parse_choice resolves a leading standalone letter") {
    CHECK(parse_choice("B", kFixtureOptions) == 1);
    CHECK(parse_choice("b", kFixtureOptions) == 1);
    CHECK(parse_choice("  (a) because of the image", kFixtureOptions) == 0);
    CHECK(parse_choice("D.", kFixtureOptions) == 3);
    CHECK(parse_choice("A and B both look plausible", kFixtureOptions) == 0);
    CHECK(parse_choice("Beyond doubt", kFixtureOptions) == kInvalidChoice);
}

TEST_CASE("parse_choice finds a unique marked letter anywhere") {
    CHECK(parse_choice("The answer is (c).", kFixtureOptions) == 2);
    CHECK(parse_choice("The answer is C", kFixtureOptions) == 2);
    CHECK(parse_choice("I pick [b] here", kFixtureOptions) == 1);
    CHECK(parse_choice("it could be (a) or (b)", kFixtureOptions) == kInvalidChoice);
}

TEST_CASE("parse_choice matches whole option text, tolerating one trailing period") {
    CHECK(parse_choice("Tesla", kFixtureOptions) == 1);
    CHECK(parse_choice("  tesla  ", kFixtureOptions) == 1);
    CHECK(parse_choice("Tesla.", kFixtureOptions) == 1);
    CHECK(parse_choice("Fiat Automobiles S.p.A.", kFixtureOptions) == 0);
    CHECK(parse_choice("The Chrysler Corporation", kFixtureOptions) == 3);
}

TEST_CASE("parse_choice falls back to a unique substring") {
    CHECK(parse_choice("I believe it is Fiat Automobiles S.p.A.", kFixtureOptions) == 0);
    CHECK(parse_choice("my best guess: the chrysler corporation, final answer",
                       kFixtureOptions) == 3);
    // "Chrysler PT Cruiser" and "The Chrysler Corporation" both appear.
    CHECK(parse_choice("Chrysler PT Cruiser or The Chrysler Corporation", kFixtureOptions) ==
          kInvalidChoice);
    CHECK(parse_choice("no idea", kFixtureOptions) == kInvalidChoice);
    CHECK(parse_choice("", kFixtureOptions) == kInvalidChoice);
}

TEST_CASE("make_answer_record canonicalizes onto the chosen option") {
    AnswerRecord rec = make_answer_record("The answer is (c).", kFixtureOptions);
    CHECK(rec.choice_index == 2);
    CHECK(rec.canonical_answer == "Chrysler PT Cruiser");
    CHECK(rec.raw_text == "The answer is (c).");

    AnswerRecord inv = make_answer_record("no idea", kFixtureOptions);
    CHECK(inv.choice_index == kInvalidChoice);
    CHECK(inv.canonical_answer == "no idea");

    AnswerRecord bare = make_answer_record("free text", {});
    CHECK(bare.choice_index == kInvalidChoice);
    CHECK(bare.canonical_answer == "free text");
}

TEST_CASE("oracle answers the fixture instance correctly and deterministically") {
    auto g = fixtures::pt_cruiser_source().load();
    MCQInstance inst = make_fixture_instance(g);
    OracleAnswerer oracle(g);
    AnswerRecord rec = oracle.answer(request_for(inst));
    CHECK(rec.canonical_answer == "Fiat Automobiles S.p.A.");
    CHECK(rec.choice_index == inst.answer_index);
    AnswerRecord again = oracle.answer(request_for(inst));
    CHECK(again.choice_index == rec.choice_index);
    CHECK(again.raw_text == rec.raw_text);
    CHECK(oracle.deterministic());
}

TEST_CASE("oracle reports broken paths against a graph missing the edges") {
    auto g = fixtures::pt_cruiser_source().load();
    MCQInstance inst = make_fixture_instance(g);

    auto no_hop = fixtures::pt_cruiser_source();
    no_hop.triples = "pt_cruiser\tbrand\tchrysler_corp\nfiat_500x\tbrand\tfiat_spa\n";
    auto g_no_hop = no_hop.load();
    OracleAnswerer oracle_no_hop(g_no_hop);
    CHECK_THROWS_AS(oracle_no_hop.answer(request_for(inst)), BrokenPathError);

    auto no_shared = fixtures::pt_cruiser_source();
    no_shared.triples = "pt_cruiser\tfollowed_by\tfiat_500x\npt_cruiser\tbrand\tchrysler_corp\n";
    auto g_no_shared = no_shared.load();
    OracleAnswerer oracle_no_shared(g_no_shared);
    CHECK_THROWS_AS(oracle_no_shared.answer(request_for(inst)), BrokenPathError);
}

TEST_CASE("vision-biased answerer picks the anchor label and ignores the question") {
    auto g = fixtures::pt_cruiser_source().load();
    MCQInstance inst = make_fixture_instance(g);
    VisionBiasedAnswerer vb(g);
    AnswerRecord rec = vb.answer(request_for(inst));
    CHECK(rec.canonical_answer == "Chrysler PT Cruiser");

    AnswerRequest req = request_for(inst);
    req.question = "Completely different question?";
    CHECK(vb.answer(req).choice_index == rec.choice_index);

    AnswerRequest absent = request_for(inst);
    absent.option_texts = {"w", "x", "y", "z"};
    CHECK(vb.answer(absent).choice_index == kInvalidChoice);
}

TEST_CASE("role picker returns the tagged option") {
    auto g = fixtures::pt_cruiser_source().load();
    MCQInstance inst = make_fixture_instance(g);
    for (OptionRole r : {OptionRole::GroundTruth, OptionRole::LanguageBias, OptionRole::VisionBias,
                         OptionRole::SemanticMisleading}) {
        RolePickerAnswerer picker(r);
        AnswerRecord rec = picker.answer(request_for(inst));
        CHECK(rec.choice_index == inst.index_of_role(r));
    }
    RolePickerAnswerer gt(OptionRole::GroundTruth);
    CHECK(gt.answer(request_for(inst)).choice_index == inst.answer_index);
}

TEST_CASE("random answerer replays by seed and spreads over options") {
    auto g = fixtures::synthetic_source({10, 4, 4, 2}).load();
    StubLanguageBiasAnswerer stub;
    BuildConfig cfg;
    cfg.train = 40;
    cfg.dev = 0;
    cfg.test = 0;
    Dataset ds = build_dataset(g, cfg, 17, stub);
    REQUIRE(ds.instances.size() == 40);

    RandomAnswerer r1(5), r2(5), r3(6);
    std::map<int, int> hist;
    bool seed_matters = false;
    for (const auto& inst : ds.instances) {
        AnswerRecord a = r1.answer(request_for(inst));
        AnswerRecord b = r2.answer(request_for(inst));
        CHECK(a.choice_index == b.choice_index);
        hist[a.choice_index]++;
        if (r3.answer(request_for(inst)).choice_index != a.choice_index) seed_matters = true;
    }
    CHECK(hist.size() == 4);
    CHECK(seed_matters);
}

TEST_CASE("hash answerer depends only on the question text") {
    auto g = fixtures::pt_cruiser_source().load();
    MCQInstance inst = make_fixture_instance(g);
    HashAnswerer h;
    AnswerRecord rec = h.answer(request_for(inst));
    CHECK(rec.choice_index == static_cast<int>(fnv1a64(inst.question) % 4));

    QueryPath p = inst.path;
    std::string q0 = render_question(g, p, "vehicle", 0);
    std::string q1 = render_question(g, p, "vehicle", 1);
    AnswerRequest req = request_for(inst);
    req.question = q1;
    bool collide = fnv1a64(q0) % 4 == fnv1a64(q1) % 4;
    CHECK((h.answer(req).choice_index == rec.choice_index) == collide);

    AnswerRequest other = request_for(inst);
    other.image_ref = "img/pt2.jpg";
    CHECK(h.answer(other).choice_index == rec.choice_index);
}

TEST_CASE("language-bias stub is deterministic per question and never empty") {
    StubLanguageBiasAnswerer stub;
    AnswerRequest req;
    req.question = "What is the brand of the entity that this vehicle is followed by?";
    AnswerRecord a = stub.answer(req);
    AnswerRecord b = stub.answer(req);
    CHECK(a.raw_text == b.raw_text);
    CHECK_FALSE(a.canonical_answer.empty());
    CHECK(a.raw_text.rfind("Stub answer ", 0) == 0);

    req.question = "A different question entirely?";
    CHECK(stub.answer(req).raw_text != a.raw_text);
}

TEST_CASE("answerer registry builds every stub by name") {
    auto g = fixtures::pt_cruiser_source().load();
    CHECK(make_stub_answerer("oracle", &g, 1)->name() == "oracle");
    CHECK(make_stub_answerer("vision_biased", &g, 1)->name() == "vision_biased");
    CHECK(make_stub_answerer("random", nullptr, 1)->name() == "random");
    CHECK(make_stub_answerer("hash", nullptr, 1)->name() == "hash");
    CHECK(make_stub_answerer("stub", nullptr, 1)->name() == "stub");
    CHECK(make_stub_answerer("role:GroundTruth", nullptr, 1)->name() == "role:GroundTruth");
    CHECK_THROWS_AS(make_stub_answerer("oracle", nullptr, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_stub_answerer("role:Nope", nullptr, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_stub_answerer("martian", nullptr, 1), std::invalid_argument);
}

TEST_CASE("fail-soft wrapper turns failures into Invalid records and counts them") {
    AlwaysThrowAnswerer bad;
    FailSoftAnswerer safe(bad);
    AnswerRequest req;
    req.question = "anything?";
    req.option_texts = kFixtureOptions;
    AnswerRecord rec = safe.answer(req);
    CHECK(rec.choice_index == kInvalidChoice);
    CHECK(rec.raw_text.find("wire is down") != std::string::npos);
    safe.answer(req);
    CHECK(safe.calls() == 2);
    CHECK(safe.transport_failures() == 2);
    CHECK(safe.all_calls_failed());

    auto g = fixtures::pt_cruiser_source().load();
    OracleAnswerer oracle(g);
    FailSoftAnswerer fine(oracle);
    MCQInstance inst = make_fixture_instance(g);
    CHECK(fine.answer(request_for(inst)).choice_index == inst.answer_index);
    CHECK_FALSE(fine.all_calls_failed());
    CHECK(fine.name() == "oracle");
}
