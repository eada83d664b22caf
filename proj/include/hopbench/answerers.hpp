#pragma once
// Local deterministic answerers. The oracle and the bias stubs double as
// measurement instruments: their accuracy and causal-effect profiles are
// known in closed form, which is what the harness tests calibrate against.

#include <memory>
#include <stdexcept>
#include <string>

#include "hopbench/common.hpp"
#include "hopbench/dataset.hpp"
#include "hopbench/gateway.hpp"
#include "hopbench/kg.hpp"
#include "hopbench/rng.hpp"

namespace hopbench {

namespace detail {
inline AnswerRecord pick_option(const std::vector<std::string>& options, int idx,
                                std::string raw_when_absent) {
    AnswerRecord rec;
    if (idx >= 0 && idx < static_cast<int>(options.size())) {
        rec.raw_text = options[static_cast<std::size_t>(idx)];
        rec.choice_index = idx;
        rec.canonical_answer = rec.raw_text;
    } else {
        rec.raw_text = std::move(raw_when_absent);
        rec.choice_index = kInvalidChoice;
        rec.canonical_answer = rec.raw_text;
    }
    return rec;
}

inline const MCQInstance& require_instance(const AnswerRequest& req, const char* who) {
    if (!req.instance) {
        throw std::invalid_argument(std::string(who) + " needs privileged instance access");
    }
    return *req.instance;
}
}  // namespace detail

// Walks the instance's stored path through the graph and answers with the
// label of the terminal's unique shared-relation object.
class OracleAnswerer : public Answerer {
public:
    explicit OracleAnswerer(const KnowledgeGraph& g) : g_(g) {}

    AnswerRecord answer(const AnswerRequest& req) override {
        const MCQInstance& inst = detail::require_instance(req, "oracle");
        std::string cur = inst.path.anchor;
        for (const QueryHop& hop : inst.path.hops) {
            if (!g_.has_triple(cur, hop.relation, hop.entity)) {
                throw BrokenPathError("missing edge (" + cur + ", " + hop.relation + ", " +
                                      hop.entity + ")");
            }
            cur = hop.entity;
        }
        auto objs = g_.objects_of(cur, inst.path.shared_relation);
        if (objs.size() != 1) {
            throw BrokenPathError("shared relation has " + std::to_string(objs.size()) +
                                  " objects at the terminal");
        }
        const std::string& label = g_.label_of(objs[0]);
        int idx = kInvalidChoice;
        for (std::size_t i = 0; i < req.option_texts.size(); ++i) {
            if (req.option_texts[i] == label) idx = static_cast<int>(i);
        }
        return detail::pick_option(req.option_texts, idx, label);
    }

    std::string name() const override { return "oracle"; }

private:
    const KnowledgeGraph& g_;
};

// Answers with the image entity's own label, ignoring the question entirely.
class VisionBiasedAnswerer : public Answerer {
public:
    explicit VisionBiasedAnswerer(const KnowledgeGraph& g) : g_(g) {}

    AnswerRecord answer(const AnswerRequest& req) override {
        const MCQInstance& inst = detail::require_instance(req, "vision_biased");
        const std::string& label = g_.label_of(inst.entity);
        int idx = kInvalidChoice;
        for (std::size_t i = 0; i < req.option_texts.size(); ++i) {
            if (req.option_texts[i] == label) idx = static_cast<int>(i);
        }
        return detail::pick_option(req.option_texts, idx, label);
    }

    std::string name() const override { return "vision_biased"; }

private:
    const KnowledgeGraph& g_;
};

// Always picks the option holding a fixed role tag. Test instrument only.
class RolePickerAnswerer : public Answerer {
public:
    explicit RolePickerAnswerer(OptionRole role) : role_(role) {}

    AnswerRecord answer(const AnswerRequest& req) override {
        const MCQInstance& inst = detail::require_instance(req, "role picker");
        int idx = inst.index_of_role(role_);
        std::vector<std::string> texts = req.option_texts.empty() ? inst.option_texts()
                                                                  : req.option_texts;
        return detail::pick_option(texts, idx, std::string(role_name(role_)) + " option absent");
    }

    std::string name() const override { return std::string("role:") + role_name(role_); }

private:
    OptionRole role_;
};

// Uniform choice, derived from the seed and the full visible request so that
// replays are identical but unrelated requests draw independently.
class RandomAnswerer : public Answerer {
public:
    explicit RandomAnswerer(std::uint64_t seed) : seed_(seed) {}

    AnswerRecord answer(const AnswerRequest& req) override {
        std::uint64_t h = derive_seed(seed_, "random-answer");
        h = hash_combine(h, req.question);
        h = hash_combine(h, req.image_ref ? *req.image_ref : "");
        for (const std::string& o : req.option_texts) h = hash_combine(h, o);
        if (req.option_texts.empty()) {
            AnswerRecord rec;
            rec.raw_text = "pick " + std::to_string(h % 1000);
            rec.canonical_answer = rec.raw_text;
            return rec;
        }
        // One extra mixing step; h already folds the inputs.
        int idx = static_cast<int>(Rng(h).below(req.option_texts.size()));
        return detail::pick_option(req.option_texts, idx, "");
    }

    std::string name() const override { return "random"; }

private:
    std::uint64_t seed_;
};

// Choice depends on the question text alone: index = hash(question) mod 4.
// Models answering driven purely by surface wording.
class HashAnswerer : public Answerer {
public:
    AnswerRecord answer(const AnswerRequest& req) override {
        std::uint64_t h = fnv1a64(req.question);
        if (req.option_texts.empty()) {
            AnswerRecord rec;
            rec.raw_text = "hash " + hex64(h);
            rec.canonical_answer = rec.raw_text;
            return rec;
        }
        int idx = static_cast<int>(h % req.option_texts.size());
        return detail::pick_option(req.option_texts, idx, "");
    }

    std::string name() const override { return "hash"; }
};

// Question-only text source for LanguageBias options: deterministic, never
// empty, and shaped so it is unlikely to collide with entity labels.
class StubLanguageBiasAnswerer : public Answerer {
public:
    AnswerRecord answer(const AnswerRequest& req) override {
        AnswerRecord rec;
        rec.raw_text = "Stub answer " + std::to_string(fnv1a64(req.question) % 1000);
        if (!req.option_texts.empty()) {
            rec.choice_index = parse_choice(rec.raw_text, req.option_texts);
            if (rec.choice_index >= 0) {
                rec.canonical_answer = req.option_texts[static_cast<std::size_t>(rec.choice_index)];
                return rec;
            }
        }
        rec.canonical_answer = rec.raw_text;
        return rec;
    }

    std::string name() const override { return "stub"; }
};

// Name-based construction shared by the CLI and the tests. Names: oracle,
// vision_biased, random, hash, stub, role:<RoleName>. The graph is required
// only by the graph-walking stubs.
inline std::unique_ptr<Answerer> make_stub_answerer(const std::string& name,
                                                    const KnowledgeGraph* g, std::uint64_t seed) {
    auto need_graph = [&g, &name]() -> const KnowledgeGraph& {
        if (!g) throw std::invalid_argument("answerer '" + name + "' requires a loaded graph");
        return *g;
    };
    if (name == "oracle") return std::make_unique<OracleAnswerer>(need_graph());
    if (name == "vision_biased") return std::make_unique<VisionBiasedAnswerer>(need_graph());
    if (name == "random") return std::make_unique<RandomAnswerer>(seed);
    if (name == "hash") return std::make_unique<HashAnswerer>();
    if (name == "stub") return std::make_unique<StubLanguageBiasAnswerer>();
    if (name.rfind("role:", 0) == 0) {
        auto role = parse_role(name.substr(5));
        if (!role) throw std::invalid_argument("unknown option role in '" + name + "'");
        return std::make_unique<RolePickerAnswerer>(*role);
    }
    throw std::invalid_argument("unknown answerer '" + name + "'");
}

}  // namespace hopbench
