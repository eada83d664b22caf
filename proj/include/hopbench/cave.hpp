#pragma once
// The decompose / reflect / verify answering loop:
//  1. decompose the question into subquestions;
//  2. check the decomposition is stable under a meaning-preserving rephrase
//     and an alternate image of the same entity, re-decomposing otherwise;
//  3. resolve subquestions in order: the first through image lookup, the
//     rest through the answerer with retrieved passages as context, each
//     resolution verified against the retrieved evidence (one reformulated
//     retry, then accepted with a low-confidence mark);
//  4. map the last resolution onto the options.
// Every step lands in an AgentTrace; with deterministic tools a trace
// replays exactly.

#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hopbench/common.hpp"
#include "hopbench/dataset.hpp"
#include "hopbench/gateway.hpp"
#include "hopbench/kg.hpp"
#include "hopbench/retrieval.hpp"

namespace hopbench {

class DecompositionUnparseableError : public std::runtime_error {
public:
    explicit DecompositionUnparseableError(const std::string& why)
        : std::runtime_error("cannot decompose question: " + why) {}
};

// ---------------------------------------------------------------------------
// Tools

class TextRetriever {
public:
    virtual ~TextRetriever() = default;
    virtual std::vector<ScoredPassage> retrieve(const std::string& query, std::size_t k) = 0;
    virtual std::string name() const = 0;
};

class Bm25Retriever : public TextRetriever {
public:
    explicit Bm25Retriever(Corpus corpus) : index_(std::move(corpus)) {}

    std::vector<ScoredPassage> retrieve(const std::string& query, std::size_t k) override {
        return index_.search(query, k);
    }

    std::string name() const override { return "bm25"; }

    const Bm25Index& index() const { return index_; }

private:
    Bm25Index index_;
};

class ImageResolver {
public:
    virtual ~ImageResolver() = default;
    // Ranked entity-label candidates for an image reference; empty = unknown.
    virtual std::vector<std::string> resolve(const std::string& image_ref) = 0;
    virtual std::string name() const = 0;
};

// Manifest lookup: image_ref back to the labels of the entities listing it.
// Deterministic stand-in for a real reverse image search.
class ManifestImageResolver : public ImageResolver {
public:
    explicit ManifestImageResolver(const KnowledgeGraph& g) {
        for (KnowledgeGraph::Idx e = 0; e < g.entity_count(); ++e) {
            const EntityMeta* meta = g.meta_of(e);
            if (!meta) continue;
            for (const std::string& ref : meta->image_refs) {
                map_[ref].push_back(g.entity_label(e));
            }
        }
    }

    std::vector<std::string> resolve(const std::string& image_ref) override {
        auto it = map_.find(image_ref);
        return it == map_.end() ? std::vector<std::string>{} : it->second;
    }

    std::string name() const override { return "manifest"; }

private:
    std::unordered_map<std::string, std::vector<std::string>> map_;
};

struct ToolSet {
    TextRetriever* text_retriever = nullptr;
    ImageResolver* image_resolver = nullptr;
};

// ---------------------------------------------------------------------------
// Decomposition

class Decomposer {
public:
    virtual ~Decomposer() = default;
    // feedback carries the previous round's instability reason; empty on the
    // first round.
    virtual std::vector<std::string> decompose(const std::string& question,
                                               const std::optional<std::string>& image_ref,
                                               const std::string& feedback) = 0;
    virtual std::string name() const = 0;
};

namespace detail {

struct ParsedQuestion {
    std::string type_label;
    std::vector<std::string> relations;  // path relations, in hop order
    std::string shared_relation;
};

// Inverts the two question templates back to (type_label, relations,
// shared_relation). Both variants of the same path parse identically, which
// is exactly what makes the template decomposer stable under rephrasing.
inline ParsedQuestion parse_template_question(const std::string& q) {
    auto fail = [&q]() -> ParsedQuestion {
        throw DecompositionUnparseableError("'" + q + "' does not match a known template");
    };
    if (q.empty() || q.back() != '?') return fail();
    const std::string body = q.substr(0, q.size() - 1);

    std::string sr, subject;
    static const std::string kV0Head = "What is the ";
    static const std::string kV0Mid = " of the entity that ";
    static const std::string kV1Head = "Regarding ";
    static const std::string kV1Mid = ", what is its ";
    if (body.rfind(kV0Head, 0) == 0) {
        const std::string rest = body.substr(kV0Head.size());
        auto mid = rest.find(kV0Mid);
        if (mid == std::string::npos) return fail();
        sr = rest.substr(0, mid);
        subject = rest.substr(mid + kV0Mid.size());
    } else if (body.rfind(kV1Head, 0) == 0) {
        auto mid = body.rfind(kV1Mid);
        if (mid == std::string::npos) return fail();
        sr = body.substr(mid + kV1Mid.size());
        subject = body.substr(kV1Head.size(), mid - kV1Head.size());
        static const std::string kEntityThat = "the entity that ";
        if (subject.rfind(kEntityThat, 0) != 0) return fail();
        subject = subject.substr(kEntityThat.size());
    } else {
        return fail();
    }

    // subject is now "this {type} is {r1}" or
    // "the entity that this {type} is {r1} is {r2}".
    ParsedQuestion out;
    out.shared_relation = sr;
    static const std::string kThis = "this ";
    static const std::string kNested = "the entity that this ";
    std::string chain;
    bool two_hops = false;
    if (subject.rfind(kNested, 0) == 0) {
        chain = subject.substr(kNested.size());
        two_hops = true;
    } else if (subject.rfind(kThis, 0) == 0) {
        chain = subject.substr(kThis.size());
    } else {
        return fail();
    }

    static const std::string kIs = " is ";
    auto first_is = chain.find(kIs);
    if (first_is == std::string::npos) return fail();
    out.type_label = chain.substr(0, first_is);
    std::string rels = chain.substr(first_is + kIs.size());
    if (two_hops) {
        auto last_is = rels.rfind(kIs);
        if (last_is == std::string::npos) return fail();
        out.relations.push_back(rels.substr(0, last_is));
        out.relations.push_back(rels.substr(last_is + kIs.size()));
    } else {
        out.relations.push_back(rels);
    }
    if (out.type_label.empty() || out.shared_relation.empty()) return fail();
    for (const std::string& r : out.relations) {
        if (r.empty()) return fail();
    }
    return out;
}

}  // namespace detail

// Rule-based decomposer over the question templates: first identify the
// pictured entity, then chase one relation per subquestion, folding the
// shared relation into the last one.
class TemplateDecomposer : public Decomposer {
public:
    std::vector<std::string> decompose(const std::string& question,
                                       const std::optional<std::string>&,
                                       const std::string&) override {
        detail::ParsedQuestion p = detail::parse_template_question(question);
        std::vector<std::string> out;
        out.push_back("What is this " + p.type_label + "?");
        for (std::size_t i = 0; i + 1 < p.relations.size(); ++i) {
            out.push_back("What is the entity that <ANSWER_" + std::to_string(i + 1) + "> is " +
                          p.relations[i] + "?");
        }
        out.push_back("What is the " + p.shared_relation + " of the entity that <ANSWER_" +
                      std::to_string(p.relations.size()) + "> is " + p.relations.back() + "?");
        return out;
    }

    std::string name() const override { return "template"; }
};

// LLM-backed decomposition: asks the answerer for a numbered list.
class AnswererDecomposer : public Decomposer {
public:
    explicit AnswererDecomposer(Answerer& answerer) : answerer_(answerer) {}

    std::vector<std::string> decompose(const std::string& question,
                                       const std::optional<std::string>& image_ref,
                                       const std::string& feedback) override {
        AnswerRequest req;
        req.question =
            "Break the following question about an image into the minimal ordered list of "
            "subquestions needed to answer it, one per line, numbered \"1.\", \"2.\", ... . "
            "Refer to an earlier answer as <ANSWER_i>.";
        if (!feedback.empty()) req.question += "\nPrevious attempt was rejected: " + feedback;
        req.question += "\nQuestion: " + question;
        req.image_ref = image_ref;
        AnswerRecord rec = answerer_.answer(req);

        std::vector<std::string> out;
        std::size_t pos = 0;
        const std::string& text = rec.raw_text;
        while (pos <= text.size()) {
            auto eol = text.find('\n', pos);
            std::string line = trim(text.substr(pos, eol == std::string::npos ? eol : eol - pos));
            pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
            std::size_t i = 0;
            while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
            if (i == 0 || i >= line.size()) continue;
            if (line[i] != '.' && line[i] != ')') continue;
            std::string body = trim(line.substr(i + 1));
            if (!body.empty()) out.push_back(std::move(body));
        }
        if (out.empty()) {
            throw DecompositionUnparseableError("no numbered subquestions in reply");
        }
        return out;
    }

    std::string name() const override { return "answerer:" + answerer_.name(); }

private:
    Answerer& answerer_;
};

// ---------------------------------------------------------------------------
// Stability reflection

// Case-fold, collapse whitespace, canonicalize answer slots: <ANSWER_3> and
// <ANSWER_1> both become <answer>, so renumbering alone never counts as a
// changed decomposition.
inline std::string normalize_subquestion(std::string_view s) {
    std::string folded = normalize_answer(s);
    static const std::string kSlot = "<answer_";
    std::string out;
    std::size_t pos = 0;
    while (pos < folded.size()) {
        auto hit = folded.find(kSlot, pos);
        if (hit == std::string::npos) {
            out.append(folded, pos, std::string::npos);
            break;
        }
        std::size_t end = hit + kSlot.size();
        while (end < folded.size() && std::isdigit(static_cast<unsigned char>(folded[end]))) ++end;
        if (end < folded.size() && folded[end] == '>' && end > hit + kSlot.size()) {
            out.append(folded, pos, hit - pos);
            out += "<answer>";
            pos = end + 1;
        } else {
            out.append(folded, pos, hit + kSlot.size() - pos);
            pos = hit + kSlot.size();
        }
    }
    return out;
}

inline std::vector<std::string> normalize_decomposition(const std::vector<std::string>& subqs) {
    std::vector<std::string> out;
    out.reserve(subqs.size());
    for (const std::string& s : subqs) out.push_back(normalize_subquestion(s));
    return out;
}

struct StabilityVerdict {
    bool stable = true;
    std::string reason;
    bool image_check_vacuous = false;

    std::string to_string() const { return stable ? "Stable" : "Unstable: " + reason; }
};

// Re-decomposes under (a) the sibling template variant and (b) an alternate
// image of the same entity; Stable iff both match the original after
// normalization. Entities with a single image pass the image check vacuously.
inline StabilityVerdict stability_check(Decomposer& decomposer, const MCQInstance& inst,
                                        const KnowledgeGraph& g) {
    StabilityVerdict verdict;
    std::vector<std::string> base;
    try {
        base = normalize_decomposition(decomposer.decompose(inst.question, inst.image_ref, ""));
    } catch (const DecompositionUnparseableError& e) {
        verdict.stable = false;
        verdict.reason = e.what();
        return verdict;
    }

    const EntityMeta* meta = g.meta_of(inst.path.anchor);
    if (meta && !meta->type_label.empty()) {
        std::string rephrased =
            render_question(g, inst.path, meta->type_label, 1 - inst.template_variant);
        try {
            auto alt = normalize_decomposition(decomposer.decompose(rephrased, inst.image_ref, ""));
            if (alt != base) {
                verdict.stable = false;
                verdict.reason = "decomposition changed under rephrasing";
                return verdict;
            }
        } catch (const DecompositionUnparseableError&) {
            verdict.stable = false;
            verdict.reason = "rephrased question failed to decompose";
            return verdict;
        }
    }

    if (meta && meta->image_refs.size() >= 2) {
        std::size_t at = 0;
        for (std::size_t i = 0; i < meta->image_refs.size(); ++i) {
            if (meta->image_refs[i] == inst.image_ref) at = i;
        }
        const std::string& alt_ref = meta->image_refs[(at + 1) % meta->image_refs.size()];
        try {
            auto alt = normalize_decomposition(decomposer.decompose(inst.question, alt_ref, ""));
            if (alt != base) {
                verdict.stable = false;
                verdict.reason = "decomposition changed under an alternate image";
                return verdict;
            }
        } catch (const DecompositionUnparseableError&) {
            verdict.stable = false;
            verdict.reason = "alternate-image question failed to decompose";
            return verdict;
        }
    } else {
        verdict.image_check_vacuous = true;
    }
    return verdict;
}

// ---------------------------------------------------------------------------
// The loop

struct SubQuestion {
    int index = 0;  // 1-based
    std::string text;
    std::string resolved_answer;
    bool resolved = false;
    bool low_confidence = false;
    std::vector<std::string> evidence;  // tool-call ids
};

struct TraceRound {
    std::vector<std::string> decomposition;
    std::string stability_verdict;
};

struct ToolCallRecord {
    std::string id;
    std::string tool;
    std::string query;
    std::string result_digest;
};

struct AgentTrace {
    std::string instance_id;
    std::vector<TraceRound> rounds;
    std::vector<ToolCallRecord> tool_calls;
    std::vector<SubQuestion> subquestions;
    std::string final_answer;
    int final_choice = kInvalidChoice;
    bool unstable_final = false;
    std::vector<std::string> notes;
};

struct CaveConfig {
    int max_reflection_rounds = 3;
    std::size_t retrieval_k = 3;
    // Hands the resolved subquestions back to the answerer for a free-form
    // final reply instead of mapping the last resolution onto the options.
    bool llm_synthesis = false;
};

namespace detail {

inline std::string fill_slots(std::string text, const std::vector<SubQuestion>& resolved) {
    for (const SubQuestion& sq : resolved) {
        if (!sq.resolved) continue;
        const std::string slot = "<ANSWER_" + std::to_string(sq.index) + ">";
        std::size_t pos;
        while ((pos = text.find(slot)) != std::string::npos) {
            text.replace(pos, slot.size(), sq.resolved_answer);
        }
    }
    return text;
}

inline std::string digest_of(const std::vector<std::string>& parts) {
    std::uint64_t h = fnv1a64("tool-result");
    for (const std::string& p : parts) h = hash_combine(h, p);
    return hex64(h);
}

}  // namespace detail

inline std::pair<AnswerRecord, AgentTrace> run_cave(const KnowledgeGraph& g,
                                                    const MCQInstance& inst, const ToolSet& tools,
                                                    Answerer& answerer, Decomposer& decomposer,
                                                    const CaveConfig& cfg = {}) {
    AgentTrace trace;
    trace.instance_id = inst.id;
    std::size_t tool_counter = 0;
    auto record_tool = [&](const std::string& tool, const std::string& query,
                           const std::vector<std::string>& results) {
        ToolCallRecord rec;
        rec.id = "tc" + std::to_string(++tool_counter);
        rec.tool = tool;
        rec.query = query;
        rec.result_digest = detail::digest_of(results);
        trace.tool_calls.push_back(rec);
        return rec.id;
    };

    // Decompose until stable or the round budget runs out.
    std::vector<std::string> decomposition;
    std::string feedback;
    bool stable = false;
    for (int round = 0; round < cfg.max_reflection_rounds; ++round) {
        try {
            decomposition = decomposer.decompose(inst.question, inst.image_ref, feedback);
        } catch (const DecompositionUnparseableError& e) {
            trace.notes.push_back(std::string("ToolFailure: ") + e.what());
            break;
        }
        StabilityVerdict verdict = stability_check(decomposer, inst, g);
        if (verdict.image_check_vacuous) {
            trace.notes.push_back("stability: image check vacuous (single image)");
        }
        trace.rounds.push_back({decomposition, verdict.to_string()});
        if (verdict.stable) {
            stable = true;
            break;
        }
        feedback = verdict.reason;
    }
    if (!stable && !trace.rounds.empty()) trace.unstable_final = true;

    AnswerRecord final_rec;
    const std::vector<std::string> option_texts = inst.option_texts();

    if (decomposition.empty()) {
        // Degraded mode: no usable decomposition, answer directly.
        trace.notes.push_back("degraded: answering without decomposition");
        final_rec = answerer.answer(request_for(inst));
        trace.final_answer = final_rec.canonical_answer;
        trace.final_choice = final_rec.choice_index;
        return {final_rec, trace};
    }

    // Resolve subquestions in order.
    for (std::size_t i = 0; i < decomposition.size(); ++i) {
        SubQuestion sq;
        sq.index = static_cast<int>(i) + 1;
        sq.text = decomposition[i];
        const std::string filled = detail::fill_slots(sq.text, trace.subquestions);

        if (i == 0) {
            std::vector<std::string> candidates;
            if (tools.image_resolver) {
                candidates = tools.image_resolver->resolve(inst.image_ref);
                sq.evidence.push_back(
                    record_tool("image_resolver", inst.image_ref, candidates));
            }
            if (!candidates.empty()) {
                sq.resolved_answer = candidates.front();
                sq.resolved = true;
            } else {
                trace.notes.push_back("ToolFailure: image resolver returned no candidates");
                AnswerRequest req;
                req.question = filled;
                req.image_ref = inst.image_ref;
                req.instance = &inst;
                AnswerRecord rec = answerer.answer(req);
                sq.resolved_answer = rec.canonical_answer;
                sq.resolved = true;
                sq.low_confidence = true;
            }
            trace.subquestions.push_back(std::move(sq));
            continue;
        }

        std::vector<ScoredPassage> passages;
        if (tools.text_retriever) {
            passages = tools.text_retriever->retrieve(filled, cfg.retrieval_k);
            std::vector<std::string> ids;
            for (const auto& p : passages) ids.push_back(p.id);
            sq.evidence.push_back(record_tool("text_retriever", filled, ids));
        } else {
            trace.notes.push_back("ToolFailure: no text retriever configured");
        }

        AnswerRequest req;
        req.question = filled;
        if (!passages.empty()) {
            std::string ctx = "Context:";
            for (const auto& p : passages) ctx += "\n- " + p.text;
            req.question = ctx + "\nQuestion: " + filled;
        }
        req.instance = &inst;
        AnswerRecord rec = answerer.answer(req);
        sq.resolved_answer = rec.canonical_answer;
        sq.resolved = true;

        // Verification: the answer must be visible in the retrieved evidence;
        // one reformulated retry, then accept with a low-confidence mark.
        if (tools.text_retriever) {
            auto supported = [&sq](const std::vector<ScoredPassage>& ps) {
                for (const auto& p : ps) {
                    if (contains_ci(p.text, sq.resolved_answer)) return true;
                }
                return false;
            };
            if (!supported(passages)) {
                const std::string requery = filled + " " + sq.resolved_answer;
                auto retry = tools.text_retriever->retrieve(requery, cfg.retrieval_k);
                std::vector<std::string> ids;
                for (const auto& p : retry) ids.push_back(p.id);
                sq.evidence.push_back(record_tool("text_retriever", requery, ids));
                if (!supported(retry)) {
                    sq.low_confidence = true;
                    trace.notes.push_back("verification failed for subquestion " +
                                          std::to_string(sq.index));
                }
            }
        }
        trace.subquestions.push_back(std::move(sq));
    }

    if (cfg.llm_synthesis) {
        std::string prompt = "Answer the question using these verified findings:";
        for (const SubQuestion& sq : trace.subquestions) {
            prompt += "\n- " + detail::fill_slots(sq.text, trace.subquestions) + " -> " +
                      sq.resolved_answer;
        }
        prompt += "\nQuestion: " + inst.question;
        AnswerRequest req;
        req.question = prompt;
        req.option_texts = option_texts;
        req.image_ref = inst.image_ref;
        req.instance = &inst;
        final_rec = answerer.answer(req);
        trace.notes.push_back("synthesis: answerer");
    } else {
        const std::string& last = trace.subquestions.back().resolved_answer;
        final_rec = make_answer_record(last, option_texts);
    }
    trace.final_answer = final_rec.canonical_answer;
    trace.final_choice = final_rec.choice_index;
    return {final_rec, trace};
}

}  // namespace hopbench
