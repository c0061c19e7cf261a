#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "attrgen/config.hpp"
#include "attrgen/corpus.hpp"
#include "attrgen/dataset.hpp"
#include "attrgen/gateway.hpp"
#include "attrgen/generator.hpp"
#include "attrgen/grounding.hpp"
#include "attrgen/html_report.hpp"
#include "attrgen/metrics.hpp"
#include "attrgen/pipeline.hpp"
#include "attrgen/unicode.hpp"
#include "json_helpers.hpp"

namespace {

using nlohmann::json;
using namespace attrgen;

constexpr int kExitOk = 0;
constexpr int kExitHard = 1;
constexpr int kExitPartial = 2;

struct RunOpts {
  std::string config_path;
  std::string task = "mds";
  std::string input;
  std::string output;
  std::string mode = "stepwise";
  std::string mock;
  int jobs = 1;
  bool trace = false;
  bool no_trace = false;
};

int cmd_run(const RunOpts& o) {
  RunConfig cfg =
      o.config_path.empty() ? default_config(task_from_name(o.task)) : load_config(o.config_path);
  if (!o.mock.empty()) {
    cfg.backend.lm = "scripted";
    cfg.backend.mock_script = o.mock;
  }
  if (o.trace) cfg.gen.keep_trace = true;
  if (o.no_trace) cfg.gen.keep_trace = false;
  const PipelineMode mode = pipeline_mode_from_name(o.mode);

  const std::vector<Instance> instances = load_instances(o.input);
  const DemoPools pools = load_demo_pools(cfg.fewshot);

  std::vector<MockScriptLine> script;
  if (cfg.backend.lm == "scripted") {
    if (cfg.backend.mock_script.empty()) {
      throw std::runtime_error("scripted backend needs a mock script (--mock or config)");
    }
    script = load_mock_script(cfg.backend.mock_script);
  } else if (cfg.backend.lm == "http") {
    // fail before the run, not once per instance
    (void)HttpLmClient::from_env();
  } else if (cfg.backend.lm != "echo") {
    throw std::runtime_error("unknown lm backend: " + cfg.backend.lm);
  }

  auto make_client = [&](const Instance& inst) -> std::unique_ptr<LmClient> {
    if (cfg.backend.lm == "scripted") {
      std::vector<MockScriptLine> mine;
      for (const MockScriptLine& line : script) {
        if (!line.instance || *line.instance == inst.id) mine.push_back(line);
      }
      return std::make_unique<ScriptedLmClient>(mine);
    }
    if (cfg.backend.lm == "echo") return std::make_unique<EchoLmClient>();
    return HttpLmClient::from_env();
  };

  std::vector<std::string> lines(instances.size());
  std::vector<std::string> failures(instances.size());
  std::atomic<std::size_t> cursor{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= instances.size()) break;
      try {
        const std::unique_ptr<LmClient> client = make_client(instances[i]);
        const AttributedOutput out = run_pipeline(instances[i], *client, cfg, mode, pools);
        lines[i] = output_to_json_line(out, instances[i].docs, cfg.gen.keep_trace);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  const int jobs = std::max(1, o.jobs);
  if (jobs == 1 || instances.size() < 2) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < jobs; ++t) threads.emplace_back(work);
    for (std::thread& t : threads) t.join();
  }

  std::ofstream out(o.output);
  if (!out) throw std::runtime_error("cannot write " + o.output);
  std::size_t written = 0, failed = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!failures[i].empty()) {
      std::cerr << "instance '" << instances[i].id << "': " << failures[i] << "\n";
      ++failed;
      continue;
    }
    out << lines[i] << '\n';
    ++written;
  }
  out.flush();
  std::cout << "wrote " << written << " outputs to " << o.output;
  if (failed > 0) std::cout << " (" << failed << " failed)";
  std::cout << "\n";
  return failed == 0 ? kExitOk : kExitPartial;
}

struct RefEntry {
  std::optional<std::string> text;
  std::vector<Highlight> highlights;
  Plan plan;
  bool has_plan = false;
};

std::map<std::string, RefEntry> load_refs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open references: " + path);
  std::map<std::string, RefEntry> refs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      RefEntry ref;
      if (j.contains("text")) ref.text = j.at("text").get<std::string>();
      if (j.contains("highlights")) {
        for (const json& hj : j.at("highlights")) {
          ref.highlights.push_back(jsonh::highlight_from_json(hj));
        }
      }
      if (j.contains("plan")) {
        ref.has_plan = true;
        for (const json& cj : j.at("plan")) {
          ref.plan.clusters.push_back(Cluster{cj.get<std::vector<int>>()});
        }
      }
      refs[j.at("id").get<std::string>()] = std::move(ref);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return refs;
}

std::map<std::string, double> load_external_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open external scores: " + path);
  std::map<std::string, double> scores;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const json j = json::parse(line);
    scores[j.at("id").get<std::string>()] = j.at("score").get<double>();
  }
  return scores;
}

// Exact cited-token count without the source documents: fragment texts are
// recovered from the stored highlight surfaces (fragments joined by one
// space), then merged per document in offset space.
double citation_length_from_texts(const LoadedOutput& loaded) {
  const AttributedOutput& out = loaded.output;
  if (out.sentences.empty()) return 0.0;
  std::map<int, std::size_t> pos_of;
  for (std::size_t i = 0; i < out.highlights.size(); ++i) {
    pos_of[out.highlights[i].index] = i;
  }
  double total = 0.0;
  for (const AttributedSentence& sentence : out.sentences) {
    // char at each cited code-point position, per document
    std::map<std::string, std::map<std::size_t, char32_t>> covered;
    for (int id : sentence.citations) {
      auto it = pos_of.find(id);
      if (it == pos_of.end()) {
        throw std::runtime_error("output '" + out.instance_id + "' cites highlight " +
                                 std::to_string(id) + " which it does not carry");
      }
      const Highlight& h = out.highlights[it->second];
      const std::u32string text = to_u32(loaded.highlight_texts[it->second]);
      std::size_t offset = 0;
      for (const Span& frag : h.fragments) {
        const std::size_t len = frag.end - frag.start;
        if (offset + len > text.size()) {
          throw std::runtime_error("output '" + out.instance_id + "' highlight " +
                                   std::to_string(id) + " text shorter than its fragments");
        }
        auto& chars = covered[frag.doc_id];
        for (std::size_t k = 0; k < len; ++k) chars[frag.start + k] = text[offset + k];
        offset += len + 1;  // the joining space
      }
    }
    for (const auto& [doc_id, chars] : covered) {
      std::u32string run;
      std::size_t prev = 0;
      bool first = true;
      for (const auto& [pos, cp] : chars) {
        if (!first && pos != prev + 1) run += U' ';
        run += cp;
        prev = pos;
        first = false;
      }
      total += static_cast<double>(count_words(run));
    }
  }
  return total / static_cast<double>(out.sentences.size());
}

struct EvalOpts {
  std::string outputs;
  std::string refs;
  std::string docs;
  std::string report_path;
  std::string csv_path;
  std::string nli = "containment";
  std::string label = "run";
  std::string external_scores;
  std::vector<std::string> correlate;
  int bootstrap_samples = 1000;
  int bootstrap_size = 150;
  std::uint64_t bootstrap_seed = 13;
};

int cmd_eval(const EvalOpts& o) {
  const std::vector<LoadedOutput> outputs = load_outputs(o.outputs);
  const std::map<std::string, RefEntry> refs = load_refs(o.refs);

  std::vector<std::string> unmatched;
  for (const LoadedOutput& lo : outputs) {
    if (!refs.count(lo.output.instance_id)) unmatched.push_back(lo.output.instance_id);
  }
  {
    std::map<std::string, bool> seen;
    for (const LoadedOutput& lo : outputs) seen[lo.output.instance_id] = true;
    for (const auto& [id, ref] : refs) {
      if (!seen.count(id)) unmatched.push_back(id);
    }
  }
  if (!unmatched.empty()) {
    std::cerr << "ids do not join across outputs and references:";
    for (const std::string& id : unmatched) std::cerr << " " << id;
    std::cerr << "\n";
    return kExitHard;
  }

  std::map<std::string, DocumentSet> docs_by_id;
  if (!o.docs.empty()) {
    for (Instance& inst : load_instances(o.docs)) docs_by_id[inst.id] = std::move(inst.docs);
  }
  std::unique_ptr<NliClient> nli;
  if (o.nli == "containment") {
    nli = std::make_unique<ContainmentNliClient>();
  } else if (o.nli == "http") {
    nli = HttpNliClient::from_env();
  } else if (o.nli != "none") {
    throw std::runtime_error("unknown nli backend: " + o.nli);
  }

  EvalReport report;
  report.label = o.label;
  std::size_t failed = 0;
  for (const LoadedOutput& lo : outputs) {
    const AttributedOutput& out = lo.output;
    const RefEntry& ref = refs.at(out.instance_id);
    try {
      InstanceEval ev;
      ev.id = out.instance_id;
      ev.sentence_count = static_cast<int>(out.sentences.size());
      for (const AttributedSentence& s : out.sentences) {
        if (s.citations.empty()) ++ev.uncited_sentences;
      }
      ev.no_attribution_pct = no_attribution_rate(out);

      const DocumentSet* docs = nullptr;
      auto dit = docs_by_id.find(out.instance_id);
      if (dit != docs_by_id.end()) docs = &dit->second;

      ev.citation_length_tokens =
          docs ? citation_length(out, *docs) : citation_length_from_texts(lo);

      if (ref.text) {
        std::string candidate;
        for (const AttributedSentence& s : out.sentences) {
          if (!candidate.empty()) candidate += ' ';
          candidate += s.text;
        }
        ev.rouge = rouge_l(candidate, *ref.text);
      }
      if (ref.has_plan) {
        Plan pred;
        for (const AttributedSentence& s : out.sentences) {
          if (!s.citations.empty()) pred.clusters.push_back(Cluster{s.citations});
        }
        ev.pair_f1 = cluster_pair_f1(ref.plan, pred);
      }
      if (!ref.highlights.empty()) {
        auto flatten = [](const std::vector<Highlight>& hs) {
          std::vector<Span> spans;
          for (const Highlight& h : hs) {
            spans.insert(spans.end(), h.fragments.begin(), h.fragments.end());
          }
          return spans;
        };
        ev.span_iou = span_iou(flatten(ref.highlights), flatten(out.highlights));
      }
      if (docs && nli) {
        try {
          ev.autoais_span_pct = autoais(out, *docs, *nli, AutoAisMode::span);
          ev.autoais_full_pct = autoais(out, *docs, *nli, AutoAisMode::full_sentence);
        } catch (const std::exception& e) {
          ev.autoais_span_pct.reset();
          ev.autoais_full_pct.reset();
          ev.warnings.push_back(std::string("entailment judge failed, unscored: ") + e.what());
        }
      }
      report.instances.push_back(std::move(ev));
    } catch (const std::exception& e) {
      std::cerr << "instance '" << out.instance_id << "': " << e.what() << "\n";
      ++failed;
    }
  }
  report.aggregate = aggregate_instances(report.instances);

  if (!o.external_scores.empty() && !o.correlate.empty()) {
    const std::map<std::string, double> external = load_external_scores(o.external_scores);
    const BootstrapConfig bootstrap{o.bootstrap_samples, o.bootstrap_size, o.bootstrap_seed};
    for (const std::string& metric : o.correlate) {
      for (const CorrelationMethod method :
           {CorrelationMethod::kendall, CorrelationMethod::spearman}) {
        report.correlations.push_back(
            correlate_metric(report, metric, external, method, bootstrap));
      }
    }
  }

  {
    std::ofstream out(o.report_path);
    if (!out) throw std::runtime_error("cannot write " + o.report_path);
    out << report_to_json(report) << "\n";
  }
  if (!o.csv_path.empty()) {
    std::ofstream out(o.csv_path);
    if (!out) throw std::runtime_error("cannot write " + o.csv_path);
    out << report_to_csv({report});
  }
  std::cout << "scored " << report.instances.size() << " instances";
  if (failed > 0) std::cout << " (" << failed << " failed)";
  std::cout << "\n";
  return failed == 0 ? kExitOk : kExitPartial;
}

struct ReportOpts {
  std::string outputs;
  std::string docs;
  std::string html;
};

int cmd_report(const ReportOpts& o) {
  const std::vector<LoadedOutput> loaded = load_outputs(o.outputs);
  std::map<std::string, DocumentSet> docs_by_id;
  for (Instance& inst : load_instances(o.docs)) docs_by_id[inst.id] = std::move(inst.docs);
  std::vector<AttributedOutput> outputs;
  std::vector<DocumentSet> doc_sets;
  std::vector<std::string> missing;
  for (const LoadedOutput& lo : loaded) {
    auto it = docs_by_id.find(lo.output.instance_id);
    if (it == docs_by_id.end()) {
      missing.push_back(lo.output.instance_id);
      continue;
    }
    outputs.push_back(lo.output);
    doc_sets.push_back(it->second);
  }
  if (!missing.empty()) {
    std::cerr << "no documents for:";
    for (const std::string& id : missing) std::cerr << " " << id;
    std::cerr << "\n";
    return kExitHard;
  }
  std::ofstream out(o.html);
  if (!out) throw std::runtime_error("cannot write " + o.html);
  out << render_html_report(outputs, doc_sets);
  std::cout << "rendered " << outputs.size() << " instances to " << o.html << "\n";
  return kExitOk;
}

struct DeriveOpts {
  std::string alignments;
  std::string out_dir;
  bool lfqa_filter = false;
};

int cmd_derive(const DeriveOpts& o) {
  std::vector<AlignmentRecord> records = load_alignment_records(o.alignments);
  const std::size_t loaded = records.size();
  std::vector<std::string> log;
  if (o.lfqa_filter) records = filter_lfqa_records(records, &log);
  const StepDatasets data = derive_step_datasets(records);
  write_step_datasets(data, o.out_dir);
  for (const std::string& line : log) std::cerr << line << "\n";
  for (const std::string& line : data.log) std::cerr << line << "\n";
  std::cout << "kept " << records.size() << " of " << loaded << " records; wrote "
            << data.selection.size() << " selection, " << data.planning.size()
            << " planning, " << data.fusion.size() << " fusion examples to " << o.out_dir
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attribute-first grounded generation: run, score, and inspect"};
  app.require_subcommand(1);

  RunOpts run_opts;
  CLI::App* run = app.add_subcommand("run", "generate attributed outputs for a corpus");
  run->add_option("--config", run_opts.config_path, "config JSON; defaults from --task");
  run->add_option("--task", run_opts.task, "mds or lfqa, used without --config")
      ->check(CLI::IsMember({"mds", "lfqa"}));
  run->add_option("--input", run_opts.input, "instances JSONL")->required();
  run->add_option("--output", run_opts.output, "attributed outputs JSONL")->required();
  run->add_option("--mode", run_opts.mode, "stepwise, cot, or from_gold_plan")
      ->check(CLI::IsMember({"stepwise", "cot", "from_gold_plan"}));
  run->add_option("--mock", run_opts.mock, "scripted responses JSONL, forces mock backend");
  run->add_option("--jobs", run_opts.jobs, "parallel instances")->check(CLI::PositiveNumber);
  run->add_flag("--trace", run_opts.trace, "keep prompts and responses in outputs");
  run->add_flag("--no-trace", run_opts.no_trace, "drop prompts and responses from outputs");

  EvalOpts eval_opts;
  CLI::App* eval = app.add_subcommand("eval", "score outputs against references");
  eval->add_option("--outputs", eval_opts.outputs, "attributed outputs JSONL")->required();
  eval->add_option("--refs", eval_opts.refs, "references JSONL")->required();
  eval->add_option("--docs", eval_opts.docs, "instances JSONL for source-side metrics");
  eval->add_option("--report", eval_opts.report_path, "report JSON path")->required();
  eval->add_option("--csv", eval_opts.csv_path, "aggregate CSV path");
  eval->add_option("--nli", eval_opts.nli, "containment, http, or none")
      ->check(CLI::IsMember({"containment", "http", "none"}));
  eval->add_option("--label", eval_opts.label, "method name for the report row");
  eval->add_option("--external-scores", eval_opts.external_scores,
                   "JSONL of {id, score} to correlate against");
  eval->add_option("--correlate", eval_opts.correlate,
                   "per-instance metric to correlate with the external scores");
  eval->add_option("--bootstrap-samples", eval_opts.bootstrap_samples, "resample count");
  eval->add_option("--bootstrap-size", eval_opts.bootstrap_size, "resample size");
  eval->add_option("--bootstrap-seed", eval_opts.bootstrap_seed, "resample seed");

  ReportOpts report_opts;
  CLI::App* report = app.add_subcommand("report", "render outputs as a highlighted page");
  report->add_option("--outputs", report_opts.outputs, "attributed outputs JSONL")->required();
  report->add_option("--docs", report_opts.docs, "instances JSONL with the documents")
      ->required();
  report->add_option("--html", report_opts.html, "page path")->required();

  DeriveOpts derive_opts;
  CLI::App* derive = app.add_subcommand("derive-data", "split alignments into step datasets");
  derive->add_option("--alignments", derive_opts.alignments, "alignment records JSONL")
      ->required();
  derive->add_option("--out-dir", derive_opts.out_dir, "directory for the three JSONL files")
      ->required();
  derive->add_flag("--lfqa-filter", derive_opts.lfqa_filter,
                   "drop unsupported or low-utility records first");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opts);
    if (eval->parsed()) return cmd_eval(eval_opts);
    if (report->parsed()) return cmd_report(report_opts);
    if (derive->parsed()) return cmd_derive(derive_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitHard;
  }
  return kExitHard;
}
