// Command-line front end over the hopbench headers. One subcommand per
// pipeline stage: ingest, sample, build, evaluate, intervene, cave, stats.
// Runs are strictly sequential so a fixed seed reproduces byte-identically.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 every remote call
// failed (partial transport failures surface as Invalid records instead).

#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hopbench/hopbench.hpp"

namespace {

using namespace hopbench;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Shared flag groups

struct GraphArgs {
    std::string graph;
    std::string labels;
    std::string meta;
    std::string instance_of;
};

void add_graph_flags(CLI::App* sub, GraphArgs& a, bool required) {
    auto* g = sub->add_option("--graph", a.graph, "triples TSV (head<TAB>relation<TAB>tail)");
    auto* l = sub->add_option("--labels", a.labels, "entity and relation labels TSV");
    auto* m = sub->add_option("--meta", a.meta, "entity metadata JSONL");
    if (required) {
        g->required();
        l->required();
        m->required();
    }
    sub->add_option("--instance-of", a.instance_of,
                    "relation used as a type_label fallback for entities without one");
}

bool graph_flags_given(const GraphArgs& a) { return !a.graph.empty(); }

KnowledgeGraph load_graph(const GraphArgs& a, Provenance& prov) {
    LoadOptions opts;
    if (!a.instance_of.empty()) opts.instance_of_relation = a.instance_of;
    prov.input_digests["graph"] = file_digest(a.graph);
    prov.input_digests["labels"] = file_digest(a.labels);
    prov.input_digests["meta"] = file_digest(a.meta);
    return KnowledgeGraph::load_files(a.graph, a.labels, a.meta, opts);
}

// ---------------------------------------------------------------------------
// Answerer wiring

// Owns an answerer plus the wrappers remote endpoints need. `use` is the
// answering surface; `soft` is non-null only for http-backed answerers.
struct AnswererBox {
    std::unique_ptr<Answerer> owned;
    std::unique_ptr<CachingAnswerer> caching;
    std::unique_ptr<FailSoftAnswerer> soft;
    Answerer* use = nullptr;
};

// "http:<config.json>" builds a fail-soft (optionally caching) remote client;
// anything else is resolved by the stub registry.
AnswererBox make_answerer(const std::string& name, const KnowledgeGraph* g, std::uint64_t seed,
                          bool question_only) {
    AnswererBox box;
    if (name.rfind("http:", 0) == 0) {
        EndpointConfig cfg = load_endpoint_config(name.substr(5));
        box.owned = std::make_unique<HttpAnswerer>(
            cfg, question_only ? HttpMode::QuestionOnly : HttpMode::Multimodal);
        Answerer* inner = box.owned.get();
        if (cfg.cache) {
            box.caching = std::make_unique<CachingAnswerer>(*inner);
            inner = box.caching.get();
        }
        box.soft = std::make_unique<FailSoftAnswerer>(*inner);
        box.use = box.soft.get();
    } else {
        box.owned = make_stub_answerer(name, g, seed);
        box.use = box.owned.get();
    }
    return box;
}

// ---------------------------------------------------------------------------
// Output helpers

void emit_json(const std::string& out, const json& j) {
    if (out.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        write_text_file(out, j.dump(2) + "\n");
    }
}

void emit_csv(const std::string& path, const std::string& csv, const Provenance& prov) {
    write_text_file(path, csv);
    write_sidecar(path, prov);
}

// ---------------------------------------------------------------------------
// Subcommands

struct IngestArgs {
    GraphArgs g;
    std::string out;
};

int run_ingest(const IngestArgs& a) {
    Provenance prov;
    KnowledgeGraph g = load_graph(a.g, prov);
    std::size_t eligible = 0;
    for (KnowledgeGraph::Idx e = 0; e < g.entity_count(); ++e) {
        if (g.anchor_eligible(e)) ++eligible;
    }
    json j;
    j["entities"] = g.entity_count();
    j["relations"] = g.relation_count();
    j["triples"] = g.triple_count();
    j["anchor_eligible"] = eligible;
    j["provenance"] = provenance_json(prov);
    emit_json(a.out, j);
    return 0;
}

struct SampleArgs {
    GraphArgs g;
    std::string anchor;
    int hops = 1;
    std::uint64_t seed = 0;
    std::size_t max_count = 0;  // 0 = unbounded
    std::string out;
};

json path_to_json(const QueryPath& p) {
    json j;
    j["anchor"] = p.anchor;
    j["hops"] = json::array();
    for (const QueryHop& h : p.hops) j["hops"].push_back({{"relation", h.relation}, {"entity", h.entity}});
    j["shared_relation"] = p.shared_relation;
    j["ground_truth"] = p.ground_truth;
    j["misleading"] = p.misleading;
    j["hop_count"] = p.hop_count;
    return j;
}

int run_sample(const SampleArgs& a) {
    Provenance prov;
    prov.seed = a.seed;
    KnowledgeGraph g = load_graph(a.g, prov);
    std::size_t cap = a.max_count == 0 ? kUnboundedCount : a.max_count;
    std::vector<QueryPath> paths = sample_query_paths(g, a.anchor, a.hops, a.seed, cap);
    json j;
    j["anchor"] = a.anchor;
    j["hops"] = a.hops;
    j["paths"] = json::array();
    for (const QueryPath& p : paths) j["paths"].push_back(path_to_json(p));
    j["provenance"] = provenance_json(prov);
    emit_json(a.out, j);
    return 0;
}

struct BuildArgs {
    GraphArgs g;
    std::size_t train = 0;
    std::size_t dev = 0;
    std::size_t test = 0;
    std::uint64_t seed = 0;
    std::string lang_bias = "stub";
    double hop2_fraction = 0.5;
    std::size_t per_anchor_cap = 16;
    bool question_only = false;
    std::string out;
};

int run_build(const BuildArgs& a) {
    Provenance prov;
    prov.seed = a.seed;
    KnowledgeGraph g = load_graph(a.g, prov);
    AnswererBox lb = make_answerer(a.lang_bias, &g, a.seed, a.question_only);
    BuildConfig cfg;
    cfg.train = a.train;
    cfg.dev = a.dev;
    cfg.test = a.test;
    cfg.hop2_fraction = a.hop2_fraction;
    cfg.per_anchor_cap = a.per_anchor_cap;
    Dataset ds = build_dataset(g, cfg, a.seed, *lb.use);
    if (lb.soft && lb.soft->all_calls_failed()) {
        std::cerr << "error: every language-bias request failed\n";
        return 3;
    }
    for (const std::string& w : ds.warnings) std::cerr << "warning: " << w << "\n";
    write_dataset_jsonl(a.out, ds, prov);
    auto counts = ds.split_counts();
    std::cerr << "wrote " << ds.instances.size() << " instances (train " << counts["train"]
              << ", dev " << counts["dev"] << ", test " << counts["test"] << ") to " << a.out
              << "\n";
    return 0;
}

struct EvaluateArgs {
    GraphArgs g;
    std::string dataset;
    std::string answerer = "oracle";
    std::string split = "all";
    std::uint64_t seed = 0;
    bool question_only = false;
    std::string out;
    std::string csv;
};

int run_evaluate(const EvaluateArgs& a) {
    Provenance prov;
    prov.seed = a.seed;
    prov.input_digests["dataset"] = file_digest(a.dataset);
    Dataset ds = read_dataset_jsonl(a.dataset);
    std::optional<KnowledgeGraph> g;
    if (graph_flags_given(a.g)) g = load_graph(a.g, prov);
    AnswererBox box = make_answerer(a.answerer, g ? &*g : nullptr, a.seed, a.question_only);
    EvalReport rep = evaluate(*box.use, ds, a.split);
    if (box.soft && box.soft->all_calls_failed()) {
        std::cerr << "error: every answerer request failed\n";
        return 3;
    }
    emit_json(a.out, eval_report_json(rep, prov));
    if (!a.csv.empty()) emit_csv(a.csv, eval_report_csv(rep), prov);
    return 0;
}

struct InterveneArgs {
    GraphArgs g;
    std::string dataset;
    std::string answerer = "oracle";
    std::uint64_t seed = 0;
    std::size_t count = 100;
    bool tcei_pattern_match = false;
    std::string paraphraser;
    bool interval = false;
    bool question_only = false;
    std::string out;
    std::string csv;
};

int run_intervene(const InterveneArgs& a) {
    Provenance prov;
    prov.seed = a.seed;
    prov.input_digests["dataset"] = file_digest(a.dataset);
    KnowledgeGraph g = load_graph(a.g, prov);
    Dataset ds = read_dataset_jsonl(a.dataset);
    AnswererBox box = make_answerer(a.answerer, &g, a.seed, a.question_only);
    AnswererBox para;
    CausalConfig cfg;
    cfg.seed = a.seed;
    cfg.count = a.count;
    cfg.pair_options.tcei_pattern_match = a.tcei_pattern_match;
    cfg.normal_interval = a.interval;
    if (!a.paraphraser.empty()) {
        para = make_answerer(a.paraphraser, &g, a.seed, a.question_only);
        cfg.pair_options.paraphraser = para.use;
    }
    CausalEffectReport rep = causal_report(*box.use, g, ds, cfg);
    bool answerer_dead = box.soft && box.soft->all_calls_failed();
    bool para_dead = para.soft && para.soft->all_calls_failed();
    if (answerer_dead || para_dead) {
        std::cerr << "error: every " << (answerer_dead ? "answerer" : "paraphraser")
                  << " request failed\n";
        return 3;
    }
    emit_json(a.out, causal_report_json(rep, prov));
    if (!a.csv.empty()) emit_csv(a.csv, causal_report_csv(rep), prov);
    return 0;
}

struct CaveArgs {
    GraphArgs g;
    std::string dataset;
    std::string answerer = "oracle";
    std::string decomposer = "template";
    std::string split = "dev";
    std::uint64_t seed = 0;
    int max_rounds = 3;
    std::size_t retrieval_k = 3;
    bool llm_synthesis = false;
    bool question_only = false;
    std::string out;
    std::string summary;
};

int run_cave(const CaveArgs& a) {
    Provenance prov;
    prov.seed = a.seed;
    prov.input_digests["dataset"] = file_digest(a.dataset);
    KnowledgeGraph g = load_graph(a.g, prov);
    Dataset ds = read_dataset_jsonl(a.dataset);
    if (a.split != "all" && a.split != "train" && a.split != "dev" && a.split != "test") {
        throw std::invalid_argument("unknown split: " + a.split);
    }

    AnswererBox box = make_answerer(a.answerer, &g, a.seed, a.question_only);
    AnswererBox decomposer_box;
    TemplateDecomposer template_decomposer;
    std::unique_ptr<AnswererDecomposer> answerer_decomposer;
    Decomposer* decomposer = &template_decomposer;
    if (a.decomposer != "template") {
        decomposer_box = make_answerer(a.decomposer, &g, a.seed, a.question_only);
        answerer_decomposer = std::make_unique<AnswererDecomposer>(*decomposer_box.use);
        decomposer = answerer_decomposer.get();
    }

    Bm25Retriever retriever(triples_to_corpus(g));
    ManifestImageResolver resolver(g);
    ToolSet tools{&retriever, &resolver};
    CaveConfig cfg;
    cfg.max_reflection_rounds = a.max_rounds;
    cfg.retrieval_k = a.retrieval_k;
    cfg.llm_synthesis = a.llm_synthesis;

    std::vector<AgentTrace> traces;
    std::size_t n = 0;
    std::size_t correct = 0;
    for (const MCQInstance& inst : ds.instances) {
        if (a.split != "all" && inst.split != a.split) continue;
        auto [rec, trace] = run_cave(g, inst, tools, *box.use, *decomposer, cfg);
        if (rec.choice_index == inst.answer_index) ++correct;
        traces.push_back(std::move(trace));
        ++n;
    }
    if (n == 0) throw std::invalid_argument("no instances in split: " + a.split);
    if (box.soft && box.soft->all_calls_failed()) {
        std::cerr << "error: every answerer request failed\n";
        return 3;
    }

    double accuracy = static_cast<double>(correct) / static_cast<double>(n);
    json summary;
    summary["answerer"] = box.use->name();
    summary["decomposer"] = decomposer->name();
    summary["split"] = a.split;
    summary["n"] = n;
    summary["accuracy"] = accuracy;
    summary["provenance"] = provenance_json(prov);
    write_traces_jsonl(a.out, traces, prov,
                       {{"answerer", box.use->name()},
                        {"decomposer", decomposer->name()},
                        {"split", a.split},
                        {"n", n},
                        {"accuracy", accuracy}});
    emit_json(a.summary, summary);
    return 0;
}

struct StatsArgs {
    std::string dataset;
    std::string split = "all";
    std::size_t window = 50;
    double threshold = 0.72;
    std::size_t sample_size = 42;
    std::size_t prefix_depth = 3;
    std::string out;
};

int run_stats(const StatsArgs& a) {
    Provenance prov;
    prov.input_digests["dataset"] = file_digest(a.dataset);
    Dataset ds = read_dataset_jsonl(a.dataset);
    if (a.split != "all" && a.split != "train" && a.split != "dev" && a.split != "test") {
        throw std::invalid_argument("unknown split: " + a.split);
    }
    std::vector<std::string> questions;
    std::vector<std::string> tokens;
    for (const MCQInstance& inst : ds.instances) {
        if (a.split != "all" && inst.split != a.split) continue;
        questions.push_back(inst.question);
        for (std::string& t : tokenize(inst.question)) tokens.push_back(std::move(t));
    }
    if (questions.empty()) throw std::invalid_argument("no instances in split: " + a.split);

    json j;
    j["split"] = a.split;
    j["n_questions"] = questions.size();
    j["n_tokens"] = tokens.size();
    j["mattr"] = mattr(tokens, a.window);
    j["mtld"] = mtld(tokens, a.threshold);
    j["hdd"] = hdd(tokens, a.sample_size);
    j["prefix_histogram"] = json::object();
    for (const auto& [prefix, count] : prefix_histogram(questions, a.prefix_depth)) {
        j["prefix_histogram"][prefix] = count;
    }
    j["fluency"] = "n/a";  // needs a judge model, out of scope here
    j["provenance"] = provenance_json(prov);
    emit_json(a.out, j);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hopbench: synthesize, probe, and explain multi-hop visual MCQ benchmarks"};
    app.require_subcommand(1);

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "load a graph and report corpus statistics");
    add_graph_flags(ingest, ingest_args.g, true);
    ingest->add_option("--out", ingest_args.out, "summary JSON path (default: stdout)");

    SampleArgs sample_args;
    auto* sample = app.add_subcommand("sample", "enumerate unique query paths from one anchor");
    add_graph_flags(sample, sample_args.g, true);
    sample->add_option("--anchor", sample_args.anchor, "anchor entity token")->required();
    sample->add_option("--hops", sample_args.hops, "relation hops before the shared relation (1 or 2)")
        ->required();
    sample->add_option("--seed", sample_args.seed, "subsampling seed")->required();
    sample->add_option("--max-count", sample_args.max_count, "cap on returned paths (0 = all)");
    sample->add_option("--out", sample_args.out, "paths JSON path (default: stdout)");

    BuildArgs build_args;
    auto* build = app.add_subcommand("build", "synthesize a role-tagged MCQ dataset");
    add_graph_flags(build, build_args.g, true);
    build->add_option("--train", build_args.train, "train split size")->required();
    build->add_option("--dev", build_args.dev, "dev split size")->required();
    build->add_option("--test", build_args.test, "test split size")->required();
    build->add_option("--seed", build_args.seed, "build seed")->required();
    build->add_option("--lang-bias", build_args.lang_bias,
                      "language-bias answerer (stub default; http:<config.json> for a remote model)");
    build->add_option("--hop2-fraction", build_args.hop2_fraction, "share of 2-hop instances");
    build->add_option("--per-anchor-cap", build_args.per_anchor_cap, "max candidate paths per anchor");
    build->add_flag("--question-only", build_args.question_only,
                    "remote requests omit the image reference");
    build->add_option("--out", build_args.out, "dataset JSONL path")->required();

    EvaluateArgs eval_args;
    auto* evaluate = app.add_subcommand("evaluate", "score an answerer on a dataset");
    add_graph_flags(evaluate, eval_args.g, false);
    evaluate->add_option("--dataset", eval_args.dataset, "dataset JSONL")->required();
    evaluate->add_option("--answerer", eval_args.answerer,
                         "oracle|vision_biased|random|hash|stub|role:<Role>|http:<config.json>");
    evaluate->add_option("--split", eval_args.split, "train|dev|test|all");
    evaluate->add_option("--seed", eval_args.seed, "answerer seed");
    evaluate->add_flag("--question-only", eval_args.question_only,
                       "remote requests omit the image reference");
    evaluate->add_option("--out", eval_args.out, "report JSON path (default: stdout)");
    evaluate->add_option("--csv", eval_args.csv, "metrics CSV path");

    InterveneArgs intervene_args;
    auto* intervene = app.add_subcommand("intervene", "estimate causal effects via paired interventions");
    add_graph_flags(intervene, intervene_args.g, true);
    intervene->add_option("--dataset", intervene_args.dataset, "dataset JSONL")->required();
    intervene->add_option("--answerer", intervene_args.answerer, "answerer under test");
    intervene->add_option("--count", intervene_args.count, "pairs per intervention kind");
    intervene->add_option("--seed", intervene_args.seed, "pair-subsampling seed")->required();
    intervene->add_flag("--tcei-pattern-match", intervene_args.tcei_pattern_match,
                        "relax image-swap pairing to template-pattern equality");
    intervene->add_option("--paraphraser", intervene_args.paraphraser,
                          "rephrase questions through this answerer instead of flipping templates");
    intervene->add_flag("--interval", intervene_args.interval, "add 95% normal intervals");
    intervene->add_flag("--question-only", intervene_args.question_only,
                        "remote requests omit the image reference");
    intervene->add_option("--out", intervene_args.out, "report JSON path (default: stdout)");
    intervene->add_option("--csv", intervene_args.csv, "per-kind CSV path");

    CaveArgs cave_args;
    auto* cave = app.add_subcommand("cave", "run the decompose-reflect-verify agent loop");
    add_graph_flags(cave, cave_args.g, true);
    cave->add_option("--dataset", cave_args.dataset, "dataset JSONL")->required();
    cave->add_option("--answerer", cave_args.answerer, "answerer backing the agent");
    cave->add_option("--decomposer", cave_args.decomposer,
                     "template, or an answerer name to decompose through");
    cave->add_option("--split", cave_args.split, "train|dev|test|all");
    cave->add_option("--seed", cave_args.seed, "answerer seed");
    cave->add_option("--max-rounds", cave_args.max_rounds, "reflection round cap");
    cave->add_option("--retrieval-k", cave_args.retrieval_k, "passages per retrieval call");
    cave->add_flag("--llm-synthesis", cave_args.llm_synthesis,
                   "synthesize the final answer through the answerer");
    cave->add_flag("--question-only", cave_args.question_only,
                   "remote requests omit the image reference");
    cave->add_option("--out", cave_args.out, "trace JSONL path")->required();
    cave->add_option("--summary", cave_args.summary, "summary JSON path (default: stdout)");

    StatsArgs stats_args;
    auto* stats = app.add_subcommand("stats", "lexical-diversity and prefix statistics over questions");
    stats->add_option("--dataset", stats_args.dataset, "dataset JSONL")->required();
    stats->add_option("--split", stats_args.split, "train|dev|test|all");
    stats->add_option("--window", stats_args.window, "moving-average TTR window");
    stats->add_option("--threshold", stats_args.threshold, "TTR factor threshold");
    stats->add_option("--sample-size", stats_args.sample_size, "hypergeometric sample size");
    stats->add_option("--prefix-depth", stats_args.prefix_depth, "question prefix length in tokens");
    stats->add_option("--out", stats_args.out, "stats JSON path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        auto parsed = app.get_subcommands();
        if (parsed.empty()) {
            std::cerr << app.help();
        } else {
            for (const CLI::App* sub : parsed) std::cerr << sub->help();
        }
        return 1;
    }

    try {
        if (ingest->parsed()) return run_ingest(ingest_args);
        if (sample->parsed()) return run_sample(sample_args);
        if (build->parsed()) return run_build(build_args);
        if (evaluate->parsed()) return run_evaluate(eval_args);
        if (intervene->parsed()) return run_intervene(intervene_args);
        if (cave->parsed()) return run_cave(cave_args);
        if (stats->parsed()) return run_stats(stats_args);
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
