#include "attrgen/pipeline.hpp"

#include <algorithm>

#include "attrgen/unicode.hpp"

namespace attrgen {

const char* pipeline_mode_name(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::stepwise: return "stepwise";
    case PipelineMode::cot: return "cot";
    case PipelineMode::from_gold_plan: return "from_gold_plan";
  }
  return "stepwise";
}

PipelineMode pipeline_mode_from_name(std::string_view name) {
  if (name == "stepwise") return PipelineMode::stepwise;
  if (name == "cot") return PipelineMode::cot;
  if (name == "from_gold_plan") return PipelineMode::from_gold_plan;
  throw std::runtime_error("unknown pipeline mode: " + std::string(name));
}

DemoPools load_demo_pools(const FewshotPaths& paths) {
  DemoPools pools;
  if (!paths.selection.empty()) pools.selection = load_selection_demos(paths.selection);
  if (!paths.planning.empty()) pools.planning = load_planning_demos(paths.planning);
  if (!paths.fusion.empty()) pools.fusion = load_fusion_demos(paths.fusion);
  return pools;
}

namespace {

SelectionResult run_selection(const Instance& instance, LmClient& lm, const RunConfig& cfg,
                              const DemoPools& demos, AttributedOutput& out) {
  SelectionOptions opts;
  opts.task = cfg.task;
  opts.markup = cfg.markup;
  opts.policy = cfg.policy;
  opts.lm = cfg.params.selection;
  opts.demos = demos.selection;
  opts.max_doc_words = cfg.gen.max_doc_words;
  SelectionResult result;
  try {
    result = select_content(instance.docs, lm, opts);
  } catch (const std::exception& e) {
    throw PipelineError("selection", e.what());
  }
  out.trace.push_back({"selection", result.prompt, result.response});
  out.warnings.insert(out.warnings.end(), result.warnings.begin(), result.warnings.end());
  if (result.highlights.empty()) {
    throw PipelineError("selection", "no highlights grounded from model output");
  }
  return result;
}

void run_fusion_loop(const Instance& instance, LmClient& lm, const RunConfig& cfg,
                     const DemoPools& demos, const Plan& plan,
                     const std::vector<Highlight>& highlights, AttributedOutput& out) {
  FusionOptions opts;
  opts.task = cfg.task.kind;
  opts.markup = cfg.markup;
  opts.lm = cfg.params.fusion;
  opts.demos = demos.fusion;
  opts.use_prefix = cfg.gen.use_prefix;
  opts.truncate_docs = cfg.gen.truncate_docs;
  opts.retries = cfg.gen.fusion_retries;
  std::vector<std::string> prefix;
  for (std::size_t i = 0; i < plan.clusters.size(); ++i) {
    FusionResult fused;
    try {
      fused = generate_next_sentence(prefix, plan.clusters[i], highlights, instance.docs,
                                     lm, opts);
    } catch (const std::exception& e) {
      throw PipelineError("fusion[" + std::to_string(i + 1) + "]", e.what());
    }
    for (const auto& [prompt, response] : fused.calls) {
      out.trace.push_back({"fusion[" + std::to_string(i + 1) + "]", prompt, response});
    }
    out.sentences.push_back({fused.sentence, plan.clusters[i].highlight_ids});
    prefix.push_back(fused.sentence);
  }
}

std::string cot_instructions(const RunConfig& cfg) {
  const bool mds = cfg.task.kind == TaskKind::mds;
  const char* output_name = mds ? "summary" : "answer";
  const PlanLimits limits = plan_limits(cfg.plan_mode);
  std::string s;
  if (mds) {
    s += "In this task, you are presented with several passages, where some parts are ";
  } else {
    s += "In this task, you are presented with a question and several passages, where "
         "some parts are ";
  }
  s += "\"highlighted\" (namely, there are " + cfg.markup.highlight_start + " and " +
       cfg.markup.highlight_end + " tokens before and after each such span). Your job is "
       "to generate a coherent " + std::string(output_name) +
       (mds ? "" : " to the question") +
       " that covers all and only the \"highlighted\" spans. Build the " + output_name +
       " iteratively, where each time you cluster highlights to build the next sentence. "
       "Make sure ALL highlights are included. IMPORTANT: make sure that the final " +
       output_name + " consists of approximately " +
       std::to_string(cfg.task.budget_avg_words) + " words";
  if (limits.min_clusters > 0) {
    s += ", and at least " + std::to_string(limits.min_clusters) + " sentences";
  }
  s += std::string(
           ". IMPORTANT: The clustering steps must be of the form: \"Highlights "
           "{comma-delimited highlight indices} are combined to form sentence "
           "{sentence_id}: {sentence_text}\". Additionally, before generating the final ") +
       output_name + ", say \"So the final " + output_name + " is:\".";
  return s;
}

std::string cot_combined_marker() { return "The highlighted spans are combined as follows:"; }

std::string cot_block(const DocumentSet& docs, const std::vector<Highlight>& highlights,
                      const RunConfig& cfg) {
  const auto by_doc = merged_fragments_by_doc(highlights);
  static const std::vector<TextSpan> kNone;
  std::string block = cot_instructions(cfg);
  block += "\n\n";
  if (docs.query) block += "Question: " + *docs.query + "\n\n";
  for (std::size_t i = 0; i < docs.docs.size(); ++i) {
    const Document& doc = docs.docs[i];
    auto it = by_doc.find(doc.id());
    const std::vector<TextSpan>& spans = it == by_doc.end() ? kNone : it->second;
    if (i > 0) block += "\n\n";
    block += "Document [" + std::to_string(i + 1) + "]: ";
    block += render_doc_highlighted(doc, spans, cfg.markup, /*truncate=*/true);
  }
  block += "\n\nThe highlighted spans are:\n";
  block += enumerate_highlights(highlights, docs);
  block += "\n\nAnswer:\n";
  block += cot_combined_marker();
  block += "\n";
  return block;
}

std::string build_cot_prompt(const DocumentSet& docs, const std::vector<Highlight>& highlights,
                             const RunConfig& cfg, const DemoPools& demos) {
  const char* output_name = cfg.task.kind == TaskKind::mds ? "summary" : "answer";
  std::string prompt;
  std::size_t used = 0;
  const std::size_t want = cfg.params.cot.fewshot_k < 0
                               ? 0
                               : static_cast<std::size_t>(cfg.params.cot.fewshot_k);
  for (const PlanningDemo& demo : demos.planning) {
    if (used >= want) break;
    if (demo.sentences.size() != demo.plan.clusters.size() || demo.sentences.empty()) {
      continue;  // no worked sentences to show
    }
    prompt += cot_block(demo.docs, demo.highlights, cfg);
    for (std::size_t i = 0; i < demo.plan.clusters.size(); ++i) {
      const Cluster& c = demo.plan.clusters[i];
      prompt += "Highlights ";
      for (std::size_t k = 0; k < c.highlight_ids.size(); ++k) {
        if (k > 0) prompt += ',';
        prompt += std::to_string(c.highlight_ids[k]);
      }
      prompt += " are combined to form sentence " + std::to_string(i + 1) + ": ";
      prompt += demo.sentences[i];
      prompt += "\n";
    }
    prompt += "So the final " + std::string(output_name) + " is: ";
    for (std::size_t i = 0; i < demo.sentences.size(); ++i) {
      if (i > 0) prompt += ' ';
      prompt += demo.sentences[i];
    }
    prompt += "\n\n\n";
    ++used;
  }
  prompt += cot_block(docs, highlights, cfg);
  return prompt;
}

void run_cot(const Instance& instance, LmClient& lm, const RunConfig& cfg,
             const DemoPools& demos, const std::vector<Highlight>& highlights,
             AttributedOutput& out) {
  const std::string prompt = build_cot_prompt(instance.docs, highlights, cfg, demos);
  CotOutput cot;
  std::string last_error;
  bool parsed = false;
  const int attempts = 1 + std::max(0, cfg.gen.parse_retries);
  for (int attempt = 0; attempt < attempts && !parsed; ++attempt) {
    const std::string response = lm.complete("cot", prompt, cfg.params.cot);
    out.trace.push_back({"cot", prompt, response});
    try {
      cot = parse_cot_output(response, static_cast<int>(highlights.size()), &out.warnings);
      parsed = true;
    } catch (const std::exception& e) {
      last_error = e.what();
      out.warnings.push_back("chain-of-thought parse attempt " +
                             std::to_string(attempt + 1) + " failed: " + last_error);
    }
  }
  if (!parsed) throw PipelineError("cot", last_error);

  const std::u32string final_chars = to_u32(cot.final_text);
  const std::vector<SentenceSpan> spans =
      segment_sentences(std::u32string_view(final_chars));
  if (spans.size() != cot.plan.clusters.size()) {
    out.warnings.push_back("final text has " + std::to_string(spans.size()) +
                           " sentences but the plan has " +
                           std::to_string(cot.plan.clusters.size()) + " clusters");
  }
  for (std::size_t i = 0; i < spans.size(); ++i) {
    AttributedSentence sentence;
    sentence.text = to_utf8(
        std::u32string_view(final_chars).substr(spans[i].start, spans[i].end - spans[i].start));
    if (i < cot.plan.clusters.size()) {
      sentence.citations = cot.plan.clusters[i].highlight_ids;
    }
    out.sentences.push_back(std::move(sentence));
  }
}

}  // namespace

AttributedOutput run_pipeline(const Instance& instance, LmClient& lm, const RunConfig& cfg,
                              PipelineMode mode, const DemoPools& demos) {
  AttributedOutput out;
  out.instance_id = instance.id;
  out.mode = pipeline_mode_name(mode);
  try {
    validate_markup(cfg.markup, instance.docs);
  } catch (const std::exception& e) {
    throw PipelineError("input", e.what());
  }

  if (mode == PipelineMode::from_gold_plan) {
    if (instance.gold_highlights.empty() || instance.gold_plan.empty()) {
      throw PipelineError("plan", "instance '" + instance.id +
                                      "' carries no highlights/plan to fuse from");
    }
    for (const Highlight& h : instance.gold_highlights) {
      validate_highlight(h, instance.docs);
    }
    out.highlights = instance.gold_highlights;
    Plan plan;
    for (const std::vector<int>& ids : instance.gold_plan) {
      if (ids.empty()) throw PipelineError("plan", "empty cluster in gold plan");
      plan.clusters.push_back(Cluster{ids});
    }
    run_fusion_loop(instance, lm, cfg, demos, plan, out.highlights, out);
    return out;
  }

  const SelectionResult selected = run_selection(instance, lm, cfg, demos, out);
  out.highlights = selected.highlights;

  if (mode == PipelineMode::cot) {
    run_cot(instance, lm, cfg, demos, out.highlights, out);
    return out;
  }

  PlanningOptions popts;
  popts.task = cfg.task.kind;
  popts.mode = cfg.plan_mode;
  popts.markup = cfg.markup;
  popts.lm = cfg.params.planning;
  popts.demos = demos.planning;
  popts.parse_retries = cfg.gen.parse_retries;
  PlanningResult planned;
  try {
    planned = plan_sentences(out.highlights, instance.docs, lm, popts);
  } catch (const std::exception& e) {
    throw PipelineError("planning", e.what());
  }
  for (const auto& [prompt, response] : planned.calls) {
    out.trace.push_back({"planning", prompt, response});
  }
  out.warnings.insert(out.warnings.end(), planned.warnings.begin(), planned.warnings.end());

  run_fusion_loop(instance, lm, cfg, demos, planned.plan, out.highlights, out);
  return out;
}

}  // namespace attrgen
