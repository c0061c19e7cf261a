#include <string>
#include <vector>

#include "attrgen/planner.hpp"
#include "doctest.h"

using namespace attrgen;

namespace {

Plan make_plan(std::vector<std::vector<int>> clusters) {
  Plan p;
  for (auto& c : clusters) p.clusters.push_back({std::move(c)});
  return p;
}

DocumentSet small_docs() {
  DocumentSet docs;
  docs.docs.emplace_back("a", "alpha beta gamma delta");
  docs.docs.emplace_back("b", "epsilon zeta eta theta");
  return docs;
}

std::vector<Highlight> small_highlights() {
  std::vector<Highlight> hs;
  Highlight h;
  h.index = 1;
  h.fragments = {{"a", 0, 5}};  // alpha
  hs.push_back(h);
  h.index = 2;
  h.fragments = {{"a", 6, 10}};  // beta
  hs.push_back(h);
  h.index = 3;
  h.fragments = {{"b", 0, 7}};  // epsilon
  hs.push_back(h);
  return hs;
}

}  // namespace

TEST_CASE("clustering limits per mode") {
  CHECK(plan_limits(PlanMode::icl_mds).min_clusters == 7);
  CHECK(plan_limits(PlanMode::icl_mds).max_highlights_per_cluster == 6);
  CHECK(plan_limits(PlanMode::icl_lfqa).min_clusters == 0);
  CHECK(plan_limits(PlanMode::icl_lfqa).max_highlights_per_cluster == 0);
  CHECK(plan_limits(PlanMode::fine_tuned).min_clusters == 0);
  CHECK(plan_limits(PlanMode::fine_tuned).max_highlights_per_cluster == 2);
}

TEST_CASE("parse_plan finds the list inside prose") {
  const std::string text =
      "Answer: The highlighted spans are clustered as follows:\n"
      "[{\"cluster\": [1, 3]}, {\"cluster\": [2]}]\n"
      "That is the grouping.";
  const Plan plan = parse_plan(text, 3);
  CHECK(plan == make_plan({{1, 3}, {2}}));
}

TEST_CASE("parse_plan drops invalid ids and empty clusters") {
  std::vector<std::string> warnings;
  const Plan plan = parse_plan(
      "[{\"cluster\": [1, 9]}, {\"cluster\": [12]}, {\"cluster\": [2]}]", 3, &warnings);
  CHECK(plan == make_plan({{1}, {2}}));
  CHECK(!warnings.empty());
}

TEST_CASE("parse_plan failure modes") {
  CHECK_THROWS(parse_plan("no json here", 3));
  CHECK_THROWS(parse_plan("[]", 3));
  // every id invalid -> nothing usable
  CHECK_THROWS(parse_plan("[{\"cluster\": [7, 8]}]", 3));
  // wrong shapes are skipped until a well-formed list appears
  const Plan plan = parse_plan(
      "[1, 2] then [{\"group\": [1]}] then [{\"cluster\": [2]}]", 3);
  CHECK(plan == make_plan({{2}}));
}

TEST_CASE("serialize_plan round trips through parse_plan") {
  const Plan plan = make_plan({{1, 2}, {3}});
  const std::string wire = serialize_plan(plan);
  CHECK(wire == "[{\"cluster\":[1,2]},{\"cluster\":[3]}]");
  CHECK(parse_plan(wire, 3) == plan);
}

TEST_CASE("parse_cot_output reads combination lines and the final text") {
  const std::string text =
      "The highlighted spans are combined as follows:\n"
      "Highlights 1 are combined to form sentence 1: First fused line.\n"
      "Highlights 2,3 are combined to form sentence 2: Second fused line.\n"
      "So the final summary is: First fused line. Second fused line.";
  std::vector<std::string> warnings;
  const CotOutput out = parse_cot_output(text, 3, &warnings);
  CHECK(out.plan == make_plan({{1}, {2, 3}}));
  REQUIRE(out.sentences.size() == 2);
  CHECK(out.sentences[0] == "First fused line.");
  CHECK(out.sentences[1] == "Second fused line.");
  CHECK(out.final_text == "First fused line. Second fused line.");
  CHECK(warnings.empty());
}

TEST_CASE("parse_cot_output tolerates variant phrasing") {
  const std::string text =
      "Highlight 2 is combined to form sentence 1: Only line here.\n"
      "So, the final answer is:\nThe complete answer text.";
  const CotOutput out = parse_cot_output(text, 2);
  CHECK(out.plan == make_plan({{2}}));
  CHECK(out.final_text == "The complete answer text.");
}

TEST_CASE("parse_cot_output drops lines whose ids are all invalid") {
  std::vector<std::string> warnings;
  const CotOutput out = parse_cot_output(
      "Highlights 9 are combined to form sentence 1: Bogus.\n"
      "Highlights 1 are combined to form sentence 2: Real.\n"
      "So the final summary is: Real.",
      2, &warnings);
  CHECK(out.plan == make_plan({{1}}));
  REQUIRE(out.sentences.size() == 1);
  CHECK(out.sentences[0] == "Real.");
  CHECK(!warnings.empty());
}

TEST_CASE("parse_cot_output without a final marker joins the sentences") {
  std::vector<std::string> warnings;
  const CotOutput out = parse_cot_output(
      "Highlights 1 are combined to form sentence 1: One.\n"
      "Highlights 2 are combined to form sentence 2: Two.",
      2, &warnings);
  CHECK(out.final_text == "One. Two.");
  bool found = false;
  for (const std::string& w : warnings) {
    if (w.find("no final-answer marker") != std::string::npos) found = true;
  }
  CHECK(found);
}

TEST_CASE("parse_cot_output with no combination lines throws") {
  CHECK_THROWS(parse_cot_output("So the final summary is: text only.", 3));
}

TEST_CASE("validate_plan reports limit violations") {
  // too few clusters for the summarization preset
  const Plan small = make_plan({{1}, {2}, {3}});
  CHECK(!validate_plan(small, PlanMode::icl_mds).empty());

  // seven clusters of one satisfy it
  const Plan seven = make_plan({{1}, {2}, {3}, {4}, {5}, {6}, {7}});
  CHECK(validate_plan(seven, PlanMode::icl_mds).empty());

  // an oversized cluster trips the per-cluster cap
  const Plan fat = make_plan({{1, 2, 3}, {4}, {5}, {6}, {7}, {8}, {9}});
  CHECK(validate_plan(fat, PlanMode::fine_tuned).size() == 1);
  CHECK(validate_plan(fat, PlanMode::icl_lfqa).empty());
}

TEST_CASE("unclustered_highlights lists the ids no cluster uses") {
  const Plan plan = make_plan({{1, 3}});
  CHECK(unclustered_highlights(plan, 4) == std::vector<int>{2, 4});
  CHECK(unclustered_highlights(make_plan({{1}, {2}}), 2).empty());
}

TEST_CASE("planning prompt quotes highlights and ends at the answer marker") {
  PlanningOptions opts;
  opts.lm = default_params(Step::planning, TaskKind::mds);
  opts.lm.fewshot_k = 1;

  PlanningDemo demo;
  demo.docs.docs.emplace_back("d", "one two three");
  Highlight dh;
  dh.index = 1;
  dh.fragments = {{"d", 0, 3}};
  demo.highlights = {dh};
  demo.plan = make_plan({{1}});
  opts.demos = {demo};

  const std::string prompt =
      build_planning_prompt(small_docs(), small_highlights(), opts);

  // demo answer carries its serialized plan
  CHECK(prompt.find("[{\"cluster\":[1]}]") != std::string::npos);
  // target highlights are enumerated with their ordinals
  CHECK(prompt.find(" 1. alpha") != std::string::npos);
  CHECK(prompt.find(" 3. epsilon") != std::string::npos);
  // the prompt ends at the marker the parser scans for
  const std::string marker = "Answer: The highlighted spans are clustered as follows:";
  const std::size_t last = prompt.rfind(marker);
  REQUIRE(last != std::string::npos);
  CHECK(last + marker.size() + 1 >= prompt.size());
}

TEST_CASE("plan_sentences retries parse failures then succeeds") {
  PlanningOptions opts;
  opts.mode = PlanMode::icl_lfqa;
  opts.parse_retries = 2;
  ScriptedLmClient lm({
      {"planning", std::nullopt, "I cannot produce a grouping."},
      {"planning", std::nullopt, "[{\"cluster\": [1]}, {\"cluster\": [2, 3]}]"},
  });
  const PlanningResult r = plan_sentences(small_highlights(), small_docs(), lm, opts);
  CHECK(r.plan == make_plan({{1}, {2, 3}}));
  CHECK(r.calls.size() == 2);
  bool warned = false;
  for (const std::string& w : r.warnings) {
    if (w.find("parse") != std::string::npos) warned = true;
  }
  CHECK(warned);
}

TEST_CASE("plan_sentences throws after exhausting retries") {
  PlanningOptions opts;
  opts.parse_retries = 1;
  ScriptedLmClient lm({
      {"planning", std::nullopt, "nope"},
      {"planning", std::nullopt, "still nope"},
  });
  CHECK_THROWS(plan_sentences(small_highlights(), small_docs(), lm, opts));
}

TEST_CASE("fine-tuned plan wire format round trips") {
  const DocumentSet docs = small_docs();
  const std::vector<Highlight> hs = small_highlights();
  const MarkupConfig cfg;

  // cluster 1 mixes documents, cluster 2 is one highlight
  const Plan plan = make_plan({{1, 3}, {2}});
  const std::string wire = serialize_plan_ft(plan, hs, docs, cfg);
  CHECK(wire ==
        "alpha<doc-sep>epsilon<cluster_separator>beta");

  const std::vector<std::vector<std::string>> surfaces = parse_plan_ft(wire, cfg);
  REQUIRE(surfaces.size() == 2);
  CHECK(surfaces[0] == std::vector<std::string>{"alpha", "epsilon"});
  CHECK(surfaces[1] == std::vector<std::string>{"beta"});

  const Plan back = plan_from_surfaces(surfaces, hs, docs);
  CHECK(back == plan);
}

TEST_CASE("same-document highlights join with the highlight separator") {
  const DocumentSet docs = small_docs();
  const std::vector<Highlight> hs = small_highlights();
  const MarkupConfig cfg;
  const Plan plan = make_plan({{1, 2}});
  const std::string wire = serialize_plan_ft(plan, hs, docs, cfg);
  CHECK(wire == "alpha<highlight_separator>beta");
  CHECK(plan_from_surfaces(parse_plan_ft(wire, cfg), hs, docs) == plan);
}

TEST_CASE("plan_from_surfaces folds case and drops unknown surfaces") {
  const DocumentSet docs = small_docs();
  const std::vector<Highlight> hs = small_highlights();
  std::vector<std::string> warnings;
  const Plan plan = plan_from_surfaces(
      {{"ALPHA", "no such text"}, {"beta"}}, hs, docs, &warnings);
  CHECK(plan == make_plan({{1}, {2}}));
  REQUIRE(!warnings.empty());
  CHECK(warnings[0].find("no such text") != std::string::npos);
}
