#pragma once
// Artifact IO. Datasets and traces are JSON Lines; reports are single JSON
// documents with a CSV summary next to them. Nothing here writes timestamps
// or machine-local data: identical inputs and seeds must produce
// byte-identical files. Line-oriented artifacts get their provenance in a
// `<file>.meta.json` sidecar so the data lines keep their declared schema.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hopbench/causal.hpp"
#include "hopbench/cave.hpp"
#include "hopbench/common.hpp"
#include "hopbench/dataset.hpp"
#include "hopbench/eval.hpp"

namespace hopbench {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Provenance

struct Provenance {
    std::uint64_t seed = 0;
    std::map<std::string, std::string> input_digests;  // file role -> digest
};

inline std::string content_digest(const std::string& content) {
    return hex64(fnv1a64(content));
}

inline std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open for digest: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return content_digest(ss.str());
}

inline json provenance_json(const Provenance& prov) {
    json j;
    j["tool_version"] = kToolVersion;
    j["seed"] = prov.seed;
    j["input_digests"] = json::object();
    for (const auto& [name, digest] : prov.input_digests) j["input_digests"][name] = digest;
    return j;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot open for writing: " + path);
    out << content;
    if (!out) throw LoadError("write failed: " + path);
}

inline void write_sidecar(const std::string& artifact_path, const Provenance& prov,
                          json extra = json::object()) {
    json j = provenance_json(prov);
    for (auto& [k, v] : extra.items()) j[k] = v;
    write_text_file(artifact_path + ".meta.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Dataset JSONL

inline json instance_to_json(const MCQInstance& inst) {
    json j;
    j["id"] = inst.id;
    j["image_ref"] = inst.image_ref;
    j["entity"] = inst.entity;
    j["hop_count"] = inst.hop_count;
    j["question"] = inst.question;
    j["template_variant"] = inst.template_variant;
    j["options"] = json::array();
    for (const Option& o : inst.options) {
        j["options"].push_back({{"text", o.text}, {"role", role_name(o.role)}});
    }
    j["answer_index"] = inst.answer_index;
    j["rationale"] = inst.rationale;
    j["path"] = {{"anchor", inst.path.anchor},
                 {"hops", json::array()},
                 {"shared_relation", inst.path.shared_relation},
                 {"ground_truth", inst.path.ground_truth},
                 {"misleading", inst.path.misleading}};
    for (const QueryHop& h : inst.path.hops) {
        j["path"]["hops"].push_back({{"relation", h.relation}, {"entity", h.entity}});
    }
    j["split"] = inst.split;
    return j;
}

inline MCQInstance instance_from_json(const json& j) {
    MCQInstance inst;
    inst.id = j.at("id").get<std::string>();
    inst.image_ref = j.at("image_ref").get<std::string>();
    inst.entity = j.at("entity").get<std::string>();
    inst.hop_count = j.at("hop_count").get<int>();
    inst.question = j.at("question").get<std::string>();
    inst.template_variant = j.at("template_variant").get<int>();
    for (const auto& o : j.at("options")) {
        auto role = parse_role(o.at("role").get<std::string>());
        if (!role) throw LoadError("unknown option role: " + o.at("role").get<std::string>());
        inst.options.push_back({o.at("text").get<std::string>(), *role});
    }
    inst.answer_index = j.at("answer_index").get<int>();
    inst.rationale = j.at("rationale").get<std::string>();
    const json& p = j.at("path");
    inst.path.anchor = p.at("anchor").get<std::string>();
    for (const auto& h : p.at("hops")) {
        inst.path.hops.push_back(
            {h.at("relation").get<std::string>(), h.at("entity").get<std::string>()});
    }
    inst.path.shared_relation = p.at("shared_relation").get<std::string>();
    inst.path.ground_truth = p.at("ground_truth").get<std::string>();
    inst.path.misleading = p.at("misleading").get<std::string>();
    inst.path.hop_count = inst.hop_count;
    inst.split = j.at("split").get<std::string>();
    return inst;
}

inline std::string dataset_to_jsonl(const Dataset& ds) {
    std::string out;
    for (const MCQInstance& inst : ds.instances) {
        out += instance_to_json(inst).dump();
        out += '\n';
    }
    return out;
}

inline void write_dataset_jsonl(const std::string& path, const Dataset& ds, const Provenance& prov) {
    write_text_file(path, dataset_to_jsonl(ds));
    json extra;
    extra["corpus_exhausted"] = ds.corpus_exhausted;
    extra["instance_level_split"] = ds.instance_level_split;
    extra["warnings"] = ds.warnings;
    json counts = json::object();
    for (const auto& [split, n] : ds.split_counts()) counts[split] = n;
    extra["split_counts"] = counts;
    write_sidecar(path, prov, extra);
}

inline Dataset read_dataset_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open dataset: " + path);
    Dataset ds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw MalformedLineError(path, line_no, "not a JSON object");
        }
        try {
            ds.instances.push_back(instance_from_json(j));
        } catch (const json::exception& e) {
            throw MalformedLineError(path, line_no, e.what());
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Reports

inline json answer_record_json(const AnswerRecord& rec) {
    return {{"raw_text", rec.raw_text},
            {"choice_index", rec.choice_index},
            {"canonical_answer", rec.canonical_answer}};
}

inline json causal_report_json(const CausalEffectReport& report, const Provenance& prov) {
    json j;
    j["answerer"] = report.answerer;
    j["seed"] = report.seed;
    j["requested_count"] = report.requested_count;
    j["parse_rule"] = kParseRuleVersion;
    j["provenance"] = provenance_json(prov);
    j["per_kind"] = json::object();
    for (const KindReport& kr : report.kinds) {
        json k;
        k["mean_delta"] = kr.mean_delta;
        k["pair_count"] = kr.pair_count;
        k["shortage"] = kr.shortage;
        if (!kr.note.empty()) k["note"] = kr.note;
        if (kr.interval) k["interval"] = {(*kr.interval)[0], (*kr.interval)[1]};
        k["pairs"] = json::array();
        for (const PairOutcome& o : kr.outcomes) {
            k["pairs"].push_back({{"pre_id", o.pre_id},
                                  {"post_id", o.post_id},
                                  {"pre", answer_record_json(o.pre)},
                                  {"post", answer_record_json(o.post)},
                                  {"delta", o.delta}});
        }
        j["per_kind"][kr.kind] = std::move(k);
    }
    auto mean_of = [&report](InterventionKind k) {
        const KindReport* kr = report.find(k);
        return kr && kr->pair_count ? json(kr->mean_delta) : json();
    };
    j["summary"] = {
        {"sensitivity",
         {{"TCE_Q", mean_of(InterventionKind::TCE_Q)}, {"TCE_I", mean_of(InterventionKind::TCE_I)}}},
        {"robustness",
         {{"DCE_T", mean_of(InterventionKind::DCE_T)}, {"DCE_C", mean_of(InterventionKind::DCE_C)}}},
        // Heuristic contrast of two readouts, not an estimator of the
        // question-semantics effect.
        {"tce_q_minus_dce_t", report.tce_q_minus_dce_t()}};
    return j;
}

inline std::string causal_report_csv(const CausalEffectReport& report) {
    std::string out = "kind,mean_delta,pair_count,shortage\n";
    for (const KindReport& kr : report.kinds) {
        out += kr.kind + "," + json(kr.mean_delta).dump() + "," + std::to_string(kr.pair_count) +
               "," + (kr.shortage ? "true" : "false") + "\n";
    }
    return out;
}

inline json eval_report_json(const EvalReport& rep, const Provenance& prov) {
    json j;
    j["answerer"] = rep.answerer;
    j["split"] = rep.split;
    j["n_total"] = rep.n_total;
    j["n_2hop"] = rep.n_2hop;
    j["n_3hop"] = rep.n_3hop;
    j["accuracy_overall"] = rep.accuracy_overall;
    j["accuracy_2hop"] = rep.accuracy_2hop;
    j["accuracy_3hop"] = rep.accuracy_3hop;
    j["role_distribution"] = json::object();
    for (const auto& [role, frac] : rep.role_distribution) j["role_distribution"][role] = frac;
    j["invalid_rate"] = rep.invalid_rate;
    j["parse_rule"] = kParseRuleVersion;
    j["provenance"] = provenance_json(prov);
    return j;
}

inline std::string eval_report_csv(const EvalReport& rep) {
    std::string out = "metric,value\n";
    auto row = [&out](const std::string& k, double v) { out += k + "," + json(v).dump() + "\n"; };
    row("accuracy_overall", rep.accuracy_overall);
    row("accuracy_2hop", rep.accuracy_2hop);
    row("accuracy_3hop", rep.accuracy_3hop);
    for (const auto& [role, frac] : rep.role_distribution) row("share_" + role, frac);
    row("invalid_rate", rep.invalid_rate);
    return out;
}

// ---------------------------------------------------------------------------
// Agent traces

inline json trace_to_json(const AgentTrace& trace) {
    json j;
    j["instance_id"] = trace.instance_id;
    j["rounds"] = json::array();
    for (const TraceRound& r : trace.rounds) {
        j["rounds"].push_back(
            {{"decomposition", r.decomposition}, {"stability_verdict", r.stability_verdict}});
    }
    j["tool_calls"] = json::array();
    for (const ToolCallRecord& tc : trace.tool_calls) {
        j["tool_calls"].push_back(
            {{"id", tc.id}, {"tool", tc.tool}, {"query", tc.query}, {"result_digest", tc.result_digest}});
    }
    j["subquestions"] = json::array();
    for (const SubQuestion& sq : trace.subquestions) {
        j["subquestions"].push_back({{"index", sq.index},
                                     {"text", sq.text},
                                     {"resolved_answer", sq.resolved_answer},
                                     {"resolved", sq.resolved},
                                     {"low_confidence", sq.low_confidence},
                                     {"evidence", sq.evidence}});
    }
    j["final_answer"] = trace.final_answer;
    j["final_choice"] = trace.final_choice;
    j["unstable_final"] = trace.unstable_final;
    j["notes"] = trace.notes;
    return j;
}

inline void write_traces_jsonl(const std::string& path, const std::vector<AgentTrace>& traces,
                               const Provenance& prov, json extra = json::object()) {
    std::string out;
    for (const AgentTrace& t : traces) {
        out += trace_to_json(t).dump();
        out += '\n';
    }
    write_text_file(path, out);
    write_sidecar(path, prov, std::move(extra));
}

}  // namespace hopbench
