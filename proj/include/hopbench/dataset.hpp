#pragma once
// Multiple-choice instance construction. Every instance carries four
// role-tagged options:
//   GroundTruth        label of the path's terminal object
//   LanguageBias       what a question-only answerer said
//   VisionBias         label of the image entity itself
//   SemanticMisleading the anchor-side object of the shared relation
// Questions are rendered from two fixed template variants with the anchor
// anonymized as "this {type_label}"; rationales are rule-generated sentence
// chains along the path.

#include <array>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hopbench/common.hpp"
#include "hopbench/gateway.hpp"
#include "hopbench/kg.hpp"
#include "hopbench/rng.hpp"
#include "hopbench/sampler.hpp"

namespace hopbench {

enum class OptionRole { GroundTruth, LanguageBias, VisionBias, SemanticMisleading };

inline const char* role_name(OptionRole r) {
    switch (r) {
        case OptionRole::GroundTruth: return "GroundTruth";
        case OptionRole::LanguageBias: return "LanguageBias";
        case OptionRole::VisionBias: return "VisionBias";
        case OptionRole::SemanticMisleading: return "SemanticMisleading";
    }
    return "?";
}

inline std::optional<OptionRole> parse_role(std::string_view s) {
    for (OptionRole r : {OptionRole::GroundTruth, OptionRole::LanguageBias, OptionRole::VisionBias,
                         OptionRole::SemanticMisleading}) {
        if (s == role_name(r)) return r;
    }
    return std::nullopt;
}

struct Option {
    std::string text;
    OptionRole role;

    bool operator==(const Option&) const = default;
};

struct MCQInstance {
    std::string id;
    std::string image_ref;
    std::string entity;  // anchor entity id
    int hop_count = 0;
    std::string question;
    int template_variant = 0;
    QueryPath path;
    std::vector<Option> options;  // exactly 4
    int answer_index = 0;
    std::string rationale;
    std::string split;

    std::vector<std::string> option_texts() const {
        std::vector<std::string> out;
        out.reserve(options.size());
        for (const Option& o : options) out.push_back(o.text);
        return out;
    }

    int index_of_role(OptionRole r) const {
        for (std::size_t i = 0; i < options.size(); ++i) {
            if (options[i].role == r) return static_cast<int>(i);
        }
        return -1;
    }

    bool operator==(const MCQInstance&) const = default;
};

// The visible request an answerer sees for an instance; the privileged
// instance pointer rides along for diagnostic stubs.
inline AnswerRequest request_for(const MCQInstance& inst) {
    AnswerRequest req;
    req.question = inst.question;
    req.option_texts = inst.option_texts();
    req.image_ref = inst.image_ref;
    req.instance = &inst;
    return req;
}

struct Dataset {
    std::vector<MCQInstance> instances;
    bool corpus_exhausted = false;
    bool instance_level_split = false;
    std::vector<std::string> warnings;

    std::map<std::string, std::size_t> split_counts() const {
        std::map<std::string, std::size_t> out;
        for (const auto& inst : instances) out[inst.split]++;
        return out;
    }
};

// ---------------------------------------------------------------------------
// Question rendering

inline std::string render_question(const KnowledgeGraph& g, const QueryPath& path,
                                   const std::string& type_label, int variant) {
    if (variant != 0 && variant != 1) throw std::invalid_argument("template variant must be 0 or 1");
    const std::string& sr = g.label_of(path.shared_relation);
    const std::string& r1 = g.label_of(path.hops.at(0).relation);

    std::string subject = "the entity that this " + type_label + " is " + r1;
    if (path.hops.size() == 2) {
        const std::string& r2 = g.label_of(path.hops[1].relation);
        subject = "the entity that " + subject + " is " + r2;
    }
    if (variant == 0) return "What is the " + sr + " of " + subject + "?";
    return "Regarding " + subject + ", what is its " + sr + "?";
}

// ---------------------------------------------------------------------------
// Options

struct BuiltOptions {
    std::vector<Option> options;
    int answer_index = 0;
};

inline BuiltOptions build_options(const KnowledgeGraph& g, const QueryPath& path,
                                  const std::string& language_bias_text, std::uint64_t rng_seed) {
    if (language_bias_text.empty()) {
        throw std::invalid_argument("language_bias_text must be non-empty");
    }
    std::vector<Option> opts = {
        {g.label_of(path.ground_truth), OptionRole::GroundTruth},
        {language_bias_text, OptionRole::LanguageBias},
        {g.label_of(path.anchor), OptionRole::VisionBias},
        {g.label_of(path.misleading), OptionRole::SemanticMisleading},
    };
    for (std::size_t i = 0; i < opts.size(); ++i) {
        for (std::size_t j = i + 1; j < opts.size(); ++j) {
            if (opts[i].text == opts[j].text) throw DuplicateOptionError(opts[i].text);
        }
    }
    Rng rng(rng_seed);
    shuffle(opts, rng);
    BuiltOptions out;
    out.options = std::move(opts);
    for (std::size_t i = 0; i < out.options.size(); ++i) {
        if (out.options[i].role == OptionRole::GroundTruth) {
            out.answer_index = static_cast<int>(i);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rationale

inline std::string generate_rationale(const KnowledgeGraph& g, const QueryPath& path) {
    std::vector<std::string> sentences;
    sentences.push_back(close_sentence("The entity in the image is " + g.label_of(path.anchor)));
    std::string prev = path.anchor;
    for (const QueryHop& hop : path.hops) {
        sentences.push_back(close_sentence(g.label_of(prev) + " " + g.label_of(hop.relation) +
                                                   " " + g.label_of(hop.entity)));
        prev = hop.entity;
    }
    sentences.push_back(close_sentence(g.label_of(path.terminal()) + " " +
                                               g.label_of(path.shared_relation) + " " +
                                               g.label_of(path.ground_truth)));
    sentences.push_back(close_sentence("So the answer is " + g.label_of(path.ground_truth)));
    std::string out;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (i) out += " ";
        out += sentences[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Validation

inline std::vector<std::string> validate_instance(const MCQInstance& inst, const KnowledgeGraph& g) {
    std::vector<std::string> v;
    auto fail = [&v](std::string msg) { v.push_back(std::move(msg)); };

    if (inst.options.size() != 4) {
        fail("OptionCount: expected 4 options, got " + std::to_string(inst.options.size()));
    }
    for (std::size_t i = 0; i < inst.options.size(); ++i) {
        for (std::size_t j = i + 1; j < inst.options.size(); ++j) {
            if (inst.options[i].text == inst.options[j].text) {
                fail("DuplicateOption: '" + inst.options[i].text + "'");
            }
        }
    }
    for (OptionRole r : {OptionRole::GroundTruth, OptionRole::LanguageBias, OptionRole::VisionBias,
                         OptionRole::SemanticMisleading}) {
        std::size_t count = 0;
        for (const Option& o : inst.options) {
            if (o.role == r) ++count;
        }
        if (count != 1) {
            fail("RoleMultiplicity: role " + std::string(role_name(r)) + " appears " +
                 std::to_string(count) + " times");
        }
    }
    if (inst.answer_index < 0 || inst.answer_index >= static_cast<int>(inst.options.size())) {
        fail("AnswerIndex: out of range");
    } else if (inst.options[static_cast<std::size_t>(inst.answer_index)].role != OptionRole::GroundTruth) {
        fail("AnswerIndex: option at answer_index is not the GroundTruth option");
    }

    if (inst.entity != inst.path.anchor) fail("EntityMismatch: instance entity differs from path anchor");
    if (inst.template_variant != 0 && inst.template_variant != 1) {
        fail("TemplateVariant: " + std::to_string(inst.template_variant));
    }
    if (inst.path.hops.empty() || inst.path.hops.size() > 2) {
        fail("HopLength: path has " + std::to_string(inst.path.hops.size()) + " hops");
        return v;  // the remaining checks assume a sane path
    }
    if (inst.hop_count != static_cast<int>(inst.path.hops.size()) + 1 ||
        inst.hop_count != inst.path.hop_count) {
        fail("HopCount: inconsistent with path length");
    }

    // Path edges and role texts need the graph.
    std::string prev = inst.path.anchor;
    for (const QueryHop& hop : inst.path.hops) {
        if (!g.has_triple(prev, hop.relation, hop.entity)) {
            fail("BrokenPath: missing edge (" + prev + ", " + hop.relation + ", " + hop.entity + ")");
        }
        prev = hop.entity;
    }
    auto gt_objs = g.objects_of(inst.path.terminal(), inst.path.shared_relation);
    if (gt_objs.size() != 1 || gt_objs[0] != inst.path.ground_truth) {
        fail("SharedRelation: ground truth is not the unique terminal object");
    }
    auto mis_objs = g.objects_of(inst.path.anchor, inst.path.shared_relation);
    if (mis_objs.size() != 1 || mis_objs[0] != inst.path.misleading) {
        fail("SharedRelation: misleading is not the unique anchor object");
    }
    if (inst.path.ground_truth == inst.path.misleading) {
        fail("SharedRelation: ground truth equals misleading");
    }
    if (!check_path_uniqueness(g, inst.path.anchor, inst.path.terminal(),
                               static_cast<int>(inst.path.hops.size()))) {
        fail("PathUniqueness: competing path from anchor to terminal");
    }

    auto safe_label = [&g](const std::string& id) -> std::optional<std::string> {
        try {
            return g.label_of(id);
        } catch (const MissingLabelError&) {
            return std::nullopt;
        }
    };
    auto check_role_text = [&](OptionRole r, const std::string& id, const char* what) {
        int idx = inst.index_of_role(r);
        if (idx < 0) return;  // RoleMultiplicity already fired
        auto lbl = safe_label(id);
        if (!lbl) {
            fail(std::string("BrokenPath: ") + what + " id '" + id + "' not in graph");
        } else if (inst.options[static_cast<std::size_t>(idx)].text != *lbl) {
            fail(std::string("RoleText: ") + role_name(r) + " option differs from label of " + what);
        }
    };
    check_role_text(OptionRole::GroundTruth, inst.path.ground_truth, "ground truth");
    check_role_text(OptionRole::VisionBias, inst.path.anchor, "anchor");
    check_role_text(OptionRole::SemanticMisleading, inst.path.misleading, "misleading entity");

    // Question form, anonymization slot, anchor-label leakage.
    if (inst.question.empty() || inst.question.back() != '?') fail("QuestionForm: must end with '?'");
    const EntityMeta* meta = g.meta_of(inst.path.anchor);
    if (!meta || meta->type_label.empty()) {
        fail("QuestionSlot: anchor has no type_label");
    } else {
        if (inst.question.find("this " + meta->type_label) == std::string::npos) {
            fail("QuestionSlot: missing 'this " + meta->type_label + "'");
        }
        bool found = false;
        for (const std::string& ref : meta->image_refs) {
            if (ref == inst.image_ref) found = true;
        }
        if (!found) fail("ImageRef: not among the anchor's image_refs");
    }
    if (auto lbl = safe_label(inst.path.anchor); lbl && contains_ci(inst.question, *lbl)) {
        fail("QuestionAnonymity: question contains the anchor label");
    }

    return v;
}

// ---------------------------------------------------------------------------
// Dataset assembly

struct BuildConfig {
    std::size_t train = 10000;
    std::size_t dev = 1000;
    std::size_t test = 1000;
    double hop2_fraction = 0.5;     // share of 2-hop instances in the total
    std::size_t per_anchor_cap = 16;  // max candidate paths per anchor per n
};

// Deterministic dataset assembly:
// - anchors iterate in a seed-shuffled canonical order;
// - each anchor's accepted instances land in a single split (anchor-disjoint
//   splits) while per-hop quotas and split targets have room;
// - unused valid instances feed an instance-level fallback pass when anchors
//   run out, and hop quotas are relaxed last; both fallbacks warn.
// Instance ids are assigned after assembly, per split, in acceptance order.
inline Dataset build_dataset(const KnowledgeGraph& g, const BuildConfig& cfg, std::uint64_t seed,
                             Answerer& language_bias_answerer) {
    if (cfg.hop2_fraction < 0.0 || cfg.hop2_fraction > 1.0) {
        throw std::invalid_argument("hop2_fraction must lie in [0,1]");
    }
    if (cfg.per_anchor_cap == 0) throw std::invalid_argument("per_anchor_cap must be at least 1");

    Dataset ds;
    const std::size_t total = cfg.train + cfg.dev + cfg.test;
    if (total == 0) return ds;

    std::array<std::size_t, 3> deficit = {cfg.train, cfg.dev, cfg.test};
    static const char* kSplits[3] = {"train", "dev", "test"};
    std::array<std::size_t, 2> hop_quota;  // [0]: 2-hop (n=1), [1]: 3-hop (n=2)
    hop_quota[0] = static_cast<std::size_t>(cfg.hop2_fraction * static_cast<double>(total) + 0.5);
    if (hop_quota[0] > total) hop_quota[0] = total;
    hop_quota[1] = total - hop_quota[0];

    std::vector<std::string> anchors;
    for (KnowledgeGraph::Idx e = 0; e < g.entity_count(); ++e) {
        if (g.anchor_eligible(e)) anchors.push_back(g.entity_token(e));
    }
    Rng order_rng(derive_seed(seed, "anchors"));
    shuffle(anchors, order_rng);

    std::size_t dropped = 0;
    auto make_candidates = [&](const std::string& anchor) {
        std::vector<MCQInstance> out;
        const EntityMeta* meta = g.meta_of(anchor);
        for (int n : {1, 2}) {
            std::uint64_t path_seed = hash_combine(derive_seed(seed, "paths", anchor),
                                                   static_cast<std::uint64_t>(n));
            auto paths = sample_query_paths(g, anchor, n, path_seed, cfg.per_anchor_cap);
            for (QueryPath& p : paths) {
                std::uint64_t key = derive_seed(0, "path", p.anchor);
                for (const QueryHop& h : p.hops) {
                    key = hash_combine(key, h.relation);
                    key = hash_combine(key, h.entity);
                }
                key = hash_combine(key, p.shared_relation);
                const std::string path_key = hex64(key);

                MCQInstance inst;
                inst.entity = p.anchor;
                inst.hop_count = p.hop_count;
                inst.template_variant =
                    static_cast<int>(derive_seed(seed, "variant", path_key) % 2);
                inst.image_ref = meta->image_refs[derive_seed(seed, "image", path_key) %
                                                  meta->image_refs.size()];
                inst.question = render_question(g, p, meta->type_label, inst.template_variant);

                AnswerRequest req;
                req.question = inst.question;
                AnswerRecord lb = language_bias_answerer.answer(req);
                std::string lb_text = trim(lb.canonical_answer);
                if (lb_text.empty()) {
                    ++dropped;
                    continue;
                }
                BuiltOptions built;
                try {
                    built = build_options(g, p, lb_text, derive_seed(seed, "options", path_key));
                } catch (const DuplicateOptionError&) {
                    ++dropped;
                    continue;
                }
                inst.options = std::move(built.options);
                inst.answer_index = built.answer_index;
                inst.rationale = generate_rationale(g, p);
                inst.path = std::move(p);
                if (!validate_instance(inst, g).empty()) {
                    ++dropped;
                    continue;
                }
                out.push_back(std::move(inst));
            }
        }
        return out;
    };

    auto pick_split = [&deficit]() -> int {
        int best = -1;
        for (int s = 0; s < 3; ++s) {
            if (deficit[static_cast<std::size_t>(s)] == 0) continue;
            if (best < 0 ||
                deficit[static_cast<std::size_t>(s)] > deficit[static_cast<std::size_t>(best)]) {
                best = s;
            }
        }
        return best;
    };

    std::vector<MCQInstance> accepted;
    std::vector<MCQInstance> leftovers;
    auto hop_slot = [](const MCQInstance& inst) { return inst.hop_count == 2 ? 0u : 1u; };

    for (const std::string& anchor : anchors) {
        int s = pick_split();
        if (s < 0) break;
        std::vector<MCQInstance> group = make_candidates(anchor);
        for (MCQInstance& inst : group) {
            std::size_t slot = hop_slot(inst);
            if (deficit[static_cast<std::size_t>(s)] > 0 && hop_quota[slot] > 0) {
                inst.split = kSplits[s];
                deficit[static_cast<std::size_t>(s)]--;
                hop_quota[slot]--;
                accepted.push_back(std::move(inst));
            } else {
                leftovers.push_back(std::move(inst));
            }
        }
    }

    auto deficits_remain = [&deficit]() { return deficit[0] + deficit[1] + deficit[2] > 0; };

    if (deficits_remain() && !leftovers.empty()) {
        ds.instance_level_split = true;
        ds.warnings.push_back("anchor-disjoint split targets unmet; fell back to instance-level splitting");
        std::vector<MCQInstance> still_left;
        for (MCQInstance& inst : leftovers) {
            int s = pick_split();
            std::size_t slot = hop_slot(inst);
            if (s >= 0 && hop_quota[slot] > 0) {
                inst.split = kSplits[s];
                deficit[static_cast<std::size_t>(s)]--;
                hop_quota[slot]--;
                accepted.push_back(std::move(inst));
            } else {
                still_left.push_back(std::move(inst));
            }
        }
        leftovers = std::move(still_left);
        if (deficits_remain() && !leftovers.empty()) {
            ds.warnings.push_back("hop mix relaxed to meet split targets");
            for (MCQInstance& inst : leftovers) {
                int s = pick_split();
                if (s < 0) break;
                inst.split = kSplits[s];
                deficit[static_cast<std::size_t>(s)]--;
                if (hop_quota[hop_slot(inst)] > 0) hop_quota[hop_slot(inst)]--;
                accepted.push_back(std::move(inst));
            }
        }
    }

    if (deficits_remain()) {
        ds.corpus_exhausted = true;
        ds.warnings.push_back("corpus exhausted: short by " + std::to_string(deficit[0]) +
                              " train, " + std::to_string(deficit[1]) + " dev, " +
                              std::to_string(deficit[2]) + " test");
    }
    if (dropped > 0) {
        ds.warnings.push_back(std::to_string(dropped) + " candidate instance(s) dropped during validation");
    }

    for (int s = 0; s < 3; ++s) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < accepted.size(); ++i) {
            if (accepted[i].split == kSplits[s]) members.push_back(i);
        }
        std::size_t counter = 0;
        for (std::size_t i : members) {
            ++counter;
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%06zu", counter);
            accepted[i].id = std::string(kSplits[s]) + "-" + buf;
            ds.instances.push_back(std::move(accepted[i]));
        }
    }
    return ds;
}

}  // namespace hopbench
