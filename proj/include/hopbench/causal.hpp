#pragma once
// Causal-effect estimation via controlled interventions on dataset
// instances. Four intervention kinds:
//   TCE_Q  swap in a different question about the same image  (total, question)
//   DCE_T  rephrase the question, meaning fixed               (direct, surface text)
//   TCE_I  same question, different image entity              (total, image)
//   DCE_C  different image of the same entity                 (direct, visual context)
// The effect is the mean of the answer-change indicator delta_cp over
// sampled pairs: TCE kinds change the ground truth, so high means indicate
// sensitivity; DCE kinds preserve it, so low means indicate robustness.
// The direct effect of the entity itself is not estimable from answer
// changes alone and is deliberately not represented.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hopbench/answerers.hpp"
#include "hopbench/common.hpp"
#include "hopbench/dataset.hpp"
#include "hopbench/gateway.hpp"
#include "hopbench/kg.hpp"
#include "hopbench/rng.hpp"

namespace hopbench {

enum class InterventionKind { TCE_Q, DCE_T, TCE_I, DCE_C };

inline constexpr InterventionKind kAllKinds[4] = {InterventionKind::TCE_Q, InterventionKind::DCE_T,
                                                  InterventionKind::TCE_I, InterventionKind::DCE_C};

inline const char* kind_name(InterventionKind k) {
    switch (k) {
        case InterventionKind::TCE_Q: return "TCE_Q";
        case InterventionKind::DCE_T: return "DCE_T";
        case InterventionKind::TCE_I: return "TCE_I";
        case InterventionKind::DCE_C: return "DCE_C";
    }
    return "?";
}

inline std::optional<InterventionKind> parse_kind(std::string_view s) {
    for (InterventionKind k : kAllKinds) {
        if (s == kind_name(k)) return k;
    }
    return std::nullopt;
}

// Ground truth changes under total-effect interventions only.
inline bool kind_changes_ground_truth(InterventionKind k) {
    return k == InterventionKind::TCE_Q || k == InterventionKind::TCE_I;
}

class NoEligiblePairsError : public std::runtime_error {
public:
    explicit NoEligiblePairsError(InterventionKind k)
        : std::runtime_error(std::string("no eligible pairs for ") + kind_name(k)), kind(k) {}
    InterventionKind kind;
};

struct InterventionPair {
    InterventionKind kind;
    MCQInstance pre;
    MCQInstance post;
    std::string constraint_note;
};

// Answer-change indicator. Invalid answers form their own sentinel value:
// two Invalids count as unchanged whatever their raw texts.
inline int delta_cp(const AnswerRecord& pre, const AnswerRecord& post) {
    const bool pre_invalid = pre.choice_index == kInvalidChoice;
    const bool post_invalid = post.choice_index == kInvalidChoice;
    if (pre_invalid || post_invalid) return pre_invalid == post_invalid ? 0 : 1;
    return normalize_answer(pre.canonical_answer) == normalize_answer(post.canonical_answer) ? 0 : 1;
}

struct PairBuildOptions {
    // TCE_I normally requires exact question-string equality; true relaxes it
    // to template-pattern equality (variant + relation chain + shared rel).
    bool tcei_pattern_match = false;
    // When set, DCE_T rephrases through this answerer instead of flipping the
    // template variant; replies that are empty or echo the question are
    // skipped. The reply must still be a valid question for the instance.
    Answerer* paraphraser = nullptr;
};

namespace detail {

inline std::string tcei_key(const MCQInstance& inst, bool pattern_match) {
    if (!pattern_match) return inst.question;
    std::uint64_t h = fnv1a64("pattern");
    h = hash_combine(h, static_cast<std::uint64_t>(inst.template_variant));
    for (const QueryHop& hop : inst.path.hops) h = hash_combine(h, hop.relation);
    h = hash_combine(h, inst.path.shared_relation);
    return hex64(h);
}

// Indices of dataset instances grouped by key, groups and members in dataset
// order.
inline std::vector<std::vector<std::size_t>> group_by(const std::vector<MCQInstance>& insts,
                                                      const std::vector<std::string>& keys) {
    std::map<std::string, std::size_t> slot;
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < insts.size(); ++i) {
        auto it = slot.find(keys[i]);
        if (it == slot.end()) {
            slot.emplace(keys[i], groups.size());
            groups.push_back({i});
        } else {
            groups[it->second].push_back(i);
        }
    }
    return groups;
}

}  // namespace detail

// Checks one pair against its kind's invariants; empty result = conforming.
inline std::vector<std::string> check_pair(const InterventionPair& p, const KnowledgeGraph& g,
                                           const PairBuildOptions& opts = {}) {
    std::vector<std::string> v;
    auto fail = [&v](std::string m) { v.push_back(std::move(m)); };

    for (const std::string& s : validate_instance(p.pre, g)) fail("pre: " + s);
    for (const std::string& s : validate_instance(p.post, g)) fail("post: " + s);

    switch (p.kind) {
        case InterventionKind::TCE_Q:
            if (p.pre.image_ref != p.post.image_ref) fail("TCE_Q: image_ref changed");
            if (p.pre.entity != p.post.entity) fail("TCE_Q: image entity changed");
            if (p.pre.question == p.post.question) fail("TCE_Q: question unchanged");
            if (p.pre.path.ground_truth == p.post.path.ground_truth) {
                fail("TCE_Q: ground truth unchanged");
            }
            break;
        case InterventionKind::DCE_T:
            if (!(p.pre.path == p.post.path)) fail("DCE_T: path changed");
            if (!(p.pre.options == p.post.options)) fail("DCE_T: options changed");
            if (p.pre.answer_index != p.post.answer_index) fail("DCE_T: answer_index changed");
            if (p.pre.image_ref != p.post.image_ref) fail("DCE_T: image_ref changed");
            if (p.pre.question == p.post.question) fail("DCE_T: question unchanged");
            if (opts.paraphraser == nullptr) {
                if (p.pre.template_variant + p.post.template_variant != 1) {
                    fail("DCE_T: not a template-variant flip");
                }
            } else if (p.pre.template_variant != p.post.template_variant) {
                fail("DCE_T: variant changed under paraphrase mode");
            }
            break;
        case InterventionKind::TCE_I:
            if (detail::tcei_key(p.pre, opts.tcei_pattern_match) !=
                detail::tcei_key(p.post, opts.tcei_pattern_match)) {
                fail("TCE_I: questions do not match");
            }
            if (p.pre.entity == p.post.entity) fail("TCE_I: image entity unchanged");
            if (p.pre.path.ground_truth == p.post.path.ground_truth) {
                fail("TCE_I: ground truth unchanged");
            }
            break;
        case InterventionKind::DCE_C:
            if (!(p.pre.path == p.post.path)) fail("DCE_C: path changed");
            if (!(p.pre.options == p.post.options)) fail("DCE_C: options changed");
            if (p.pre.question != p.post.question) fail("DCE_C: question changed");
            if (p.pre.template_variant != p.post.template_variant) fail("DCE_C: variant changed");
            if (p.pre.image_ref == p.post.image_ref) fail("DCE_C: image_ref unchanged");
            break;
    }
    return v;
}

// All eligible pairs for a kind, in canonical dataset order, uniformly
// subsampled to `count` without replacement. graph is needed to re-render
// questions (DCE_T) and pick alternate images (DCE_C).
inline std::vector<InterventionPair> build_intervention_pairs(
    const KnowledgeGraph& g, const Dataset& ds, InterventionKind kind, std::uint64_t rng_seed,
    std::size_t count, const PairBuildOptions& opts = {}, bool* shortage = nullptr) {
    if (count < 1) throw std::invalid_argument("pair count must be at least 1");
    const auto& insts = ds.instances;
    std::vector<InterventionPair> all;

    auto add = [&](MCQInstance pre, MCQInstance post, std::string note) {
        all.push_back({kind, std::move(pre), std::move(post), std::move(note)});
    };

    switch (kind) {
        case InterventionKind::TCE_Q: {
            std::vector<std::string> keys;
            keys.reserve(insts.size());
            for (const auto& inst : insts) keys.push_back(inst.image_ref + "\x1f" + inst.entity);
            for (const auto& grp : detail::group_by(insts, keys)) {
                for (std::size_t a = 0; a < grp.size(); ++a) {
                    for (std::size_t b = a + 1; b < grp.size(); ++b) {
                        const MCQInstance& x = insts[grp[a]];
                        const MCQInstance& y = insts[grp[b]];
                        if (x.question == y.question) continue;
                        if (x.path.ground_truth == y.path.ground_truth) continue;
                        add(x, y, "same image, different question");
                    }
                }
            }
            break;
        }
        case InterventionKind::DCE_T: {
            for (const auto& inst : insts) {
                const EntityMeta* meta = g.meta_of(inst.path.anchor);
                if (!meta || meta->type_label.empty()) continue;
                MCQInstance post = inst;
                std::string note;
                if (opts.paraphraser) {
                    AnswerRequest req;
                    req.question =
                        "Rephrase this question, preserving its meaning: " + inst.question;
                    post.question = trim(opts.paraphraser->answer(req).raw_text);
                    if (post.question.empty()) continue;
                    if (!validate_instance(post, g).empty()) continue;
                    note = "paraphrased rephrase";
                } else {
                    post.template_variant = 1 - inst.template_variant;
                    post.question =
                        render_question(g, post.path, meta->type_label, post.template_variant);
                    note = "template-variant rephrase";
                }
                post.id = inst.id + "+T";
                if (post.question == inst.question) continue;
                add(inst, std::move(post), std::move(note));
            }
            break;
        }
        case InterventionKind::TCE_I: {
            std::vector<std::string> keys;
            keys.reserve(insts.size());
            for (const auto& inst : insts) keys.push_back(detail::tcei_key(inst, opts.tcei_pattern_match));
            for (const auto& grp : detail::group_by(insts, keys)) {
                for (std::size_t a = 0; a < grp.size(); ++a) {
                    for (std::size_t b = a + 1; b < grp.size(); ++b) {
                        const MCQInstance& x = insts[grp[a]];
                        const MCQInstance& y = insts[grp[b]];
                        if (x.entity == y.entity) continue;
                        if (x.path.ground_truth == y.path.ground_truth) continue;
                        add(x, y, "same question, different image entity");
                    }
                }
            }
            break;
        }
        case InterventionKind::DCE_C: {
            for (const auto& inst : insts) {
                const EntityMeta* meta = g.meta_of(inst.path.anchor);
                if (!meta || meta->image_refs.size() < 2) continue;
                std::size_t at = meta->image_refs.size();
                for (std::size_t i = 0; i < meta->image_refs.size(); ++i) {
                    if (meta->image_refs[i] == inst.image_ref) at = i;
                }
                if (at == meta->image_refs.size()) continue;
                MCQInstance post = inst;
                post.image_ref = meta->image_refs[(at + 1) % meta->image_refs.size()];
                post.id = inst.id + "+C";
                add(inst, std::move(post), "alternate image of the same entity");
            }
            break;
        }
    }

    if (all.empty()) throw NoEligiblePairsError(kind);
    if (shortage) *shortage = all.size() < count;
    if (all.size() <= count) return all;

    Rng rng(derive_seed(rng_seed, "pairs", kind_name(kind)));
    std::vector<std::size_t> keep = sample_indices(all.size(), count, rng);
    std::sort(keep.begin(), keep.end());
    std::vector<InterventionPair> out;
    out.reserve(keep.size());
    for (std::size_t k : keep) out.push_back(std::move(all[k]));
    return out;
}

struct PairOutcome {
    std::string pre_id;
    std::string post_id;
    AnswerRecord pre;
    AnswerRecord post;
    int delta = 0;
};

struct EffectEstimate {
    double mean_delta = 0.0;
    std::vector<PairOutcome> outcomes;
};

inline EffectEstimate estimate_effect(Answerer& answerer, const std::vector<InterventionPair>& pairs) {
    if (pairs.empty()) throw std::invalid_argument("estimate_effect needs at least one pair");
    EffectEstimate est;
    std::size_t sum = 0;
    for (const InterventionPair& p : pairs) {
        PairOutcome o;
        o.pre_id = p.pre.id;
        o.post_id = p.post.id;
        o.pre = answerer.answer(request_for(p.pre));
        o.post = answerer.answer(request_for(p.post));
        o.delta = delta_cp(o.pre, o.post);
        sum += static_cast<std::size_t>(o.delta);
        est.outcomes.push_back(std::move(o));
    }
    est.mean_delta = static_cast<double>(sum) / static_cast<double>(pairs.size());
    return est;
}

struct CausalConfig {
    std::uint64_t seed = 0;
    std::size_t count = 100;  // pairs per kind
    PairBuildOptions pair_options;
    bool normal_interval = false;  // adds a 95% normal-approximation interval
};

struct KindReport {
    std::string kind;
    double mean_delta = 0.0;
    std::size_t pair_count = 0;
    bool shortage = false;
    std::string note;  // set when no pairs were eligible
    std::optional<std::array<double, 2>> interval;
    std::vector<PairOutcome> outcomes;
};

struct CausalEffectReport {
    std::string answerer;
    std::uint64_t seed = 0;
    std::size_t requested_count = 0;
    std::vector<KindReport> kinds;  // TCE_Q, DCE_T, TCE_I, DCE_C

    const KindReport* find(InterventionKind k) const {
        for (const auto& kr : kinds) {
            if (kr.kind == kind_name(k)) return &kr;
        }
        return nullptr;
    }

    // Side-by-side sensitivity/robustness contrast; a heuristic readout, not
    // an estimator of the semantics effect.
    double tce_q_minus_dce_t() const {
        const KindReport* a = find(InterventionKind::TCE_Q);
        const KindReport* b = find(InterventionKind::DCE_T);
        return (a && a->pair_count ? a->mean_delta : 0.0) -
               (b && b->pair_count ? b->mean_delta : 0.0);
    }
};

// Full per-kind pipeline: build pairs, re-check their invariants (a failed
// check is a logic fault, not data noise), estimate, aggregate.
inline CausalEffectReport causal_report(Answerer& answerer, const KnowledgeGraph& g,
                                        const Dataset& ds, const CausalConfig& cfg) {
    CausalEffectReport report;
    report.answerer = answerer.name();
    report.seed = cfg.seed;
    report.requested_count = cfg.count;
    for (InterventionKind kind : kAllKinds) {
        KindReport kr;
        kr.kind = kind_name(kind);
        try {
            bool shortage = false;
            auto pairs = build_intervention_pairs(g, ds, kind, cfg.seed, cfg.count,
                                                  cfg.pair_options, &shortage);
            for (const InterventionPair& p : pairs) {
                auto violations = check_pair(p, g, cfg.pair_options);
                if (!violations.empty()) {
                    throw std::logic_error(std::string("intervention pair violates ") + kr.kind +
                                           " invariants: " + violations.front());
                }
            }
            auto est = estimate_effect(answerer, pairs);
            kr.mean_delta = est.mean_delta;
            kr.pair_count = pairs.size();
            kr.shortage = shortage;
            kr.outcomes = std::move(est.outcomes);
            if (cfg.normal_interval) {
                double n = static_cast<double>(kr.pair_count);
                double half = 1.959963984540054 *
                              std::sqrt(kr.mean_delta * (1.0 - kr.mean_delta) / n);
                kr.interval = {std::max(0.0, kr.mean_delta - half),
                               std::min(1.0, kr.mean_delta + half)};
            }
        } catch (const NoEligiblePairsError&) {
            kr.shortage = true;
            kr.note = "no eligible pairs";
        }
        report.kinds.push_back(std::move(kr));
    }
    return report;
}

}  // namespace hopbench
