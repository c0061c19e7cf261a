#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "attrgen/dataset.hpp"
#include "attrgen/generator.hpp"
#include "attrgen/selection.hpp"
#include "doctest.h"

using namespace attrgen;

namespace {

std::string data_path(const std::string& name) {
  return std::string(ATTRGEN_TEST_DATA_DIR) + "/" + name;
}

AlignmentRecord two_doc_record() {
  AlignmentRecord rec;
  rec.id = "r";
  rec.docs.docs.emplace_back("d1", "alpha beta gamma delta epsilon");
  rec.docs.docs.emplace_back("d2", "zeta eta theta iota kappa");
  rec.sentences = {"First.", "Second.", "Third."};
  rec.alignments = {
      {0, {Span{"d1", 0, 10}}},
      {1, {Span{"d1", 11, 16}, Span{"d2", 0, 8}}},
      {2, {Span{"d2", 9, 14}}},
  };
  return rec;
}

}  // namespace

TEST_CASE("fully_supported recognizes label variants") {
  CHECK(fully_supported({{"Full Support"}, ""}));
  CHECK(fully_supported({{"full_support"}, ""}));
  CHECK(fully_supported({{}, "FULL SUPPORT"}));
  CHECK(fully_supported({{}, "  full  "}));
  CHECK(fully_supported({{"Partial Support", "Full Support"}, ""}));
  CHECK(!fully_supported({{"Partial Support"}, "Partial Support"}));
  CHECK(!fully_supported({{"No Support"}, ""}));
  CHECK(!fully_supported({{}, ""}));
  CHECK(!fully_supported({{"fullish"}, ""}));
}

TEST_CASE("validate_record pinpoints bad alignments") {
  AlignmentRecord rec = two_doc_record();
  CHECK_NOTHROW(validate_record(rec));

  AlignmentRecord bad_sentence = rec;
  bad_sentence.alignments[0].sentence_index = 3;
  CHECK_THROWS_WITH_AS(validate_record(bad_sentence),
                       doctest::Contains("sentence 3"), std::runtime_error);

  AlignmentRecord bad_doc = rec;
  bad_doc.alignments[0].spans[0].doc_id = "missing";
  CHECK_THROWS_WITH_AS(validate_record(bad_doc), doctest::Contains("missing"),
                       std::runtime_error);

  AlignmentRecord overlong = rec;
  overlong.alignments[0].spans[0].end = 999;
  CHECK_THROWS_WITH_AS(validate_record(overlong), doctest::Contains("out of range"),
                       std::runtime_error);

  AlignmentRecord inverted = rec;
  inverted.alignments[0].spans[0] = Span{"d1", 5, 5};
  CHECK_THROWS(validate_record(inverted));
}

TEST_CASE("toy alignment record splits into the three step datasets") {
  const std::vector<AlignmentRecord> records =
      load_alignment_records(data_path("alignments_toy.jsonl"));
  REQUIRE(records.size() == 1);
  const AlignmentRecord& rec = records[0];
  CHECK(rec.id == "rec-1");
  CHECK(rec.utility == -1);
  CHECK(rec.support.empty());

  const StepDatasets data = derive_step_datasets(records);
  CHECK(data.log.empty());

  REQUIRE(data.selection.size() == 1);
  const SelectionExample& sel = data.selection[0];
  CHECK(sel.record_id == "rec-1");
  REQUIRE(sel.spans.size() == 4);
  CHECK(sel.spans[0] == Span{"eco-a", 0, 30});
  CHECK(sel.spans[1] == Span{"eco-a", 31, 64});
  CHECK(sel.spans[2] == Span{"eco-b", 0, 39});
  CHECK(sel.spans[3] == Span{"eco-b", 40, 73});

  REQUIRE(data.planning.size() == 1);
  const PlanningExample& plan = data.planning[0];
  REQUIRE(plan.highlights.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(plan.highlights[i].index == i + 1);
  CHECK(plan.highlights[1].fragments[0] == Span{"eco-a", 31, 64});
  REQUIRE(plan.plan.clusters.size() == 3);
  CHECK(plan.plan.clusters[0].highlight_ids == std::vector<int>{1});
  CHECK(plan.plan.clusters[1].highlight_ids == std::vector<int>{2, 3});
  CHECK(plan.plan.clusters[2].highlight_ids == std::vector<int>{4});
  CHECK(plan.sentences == rec.sentences);

  REQUIRE(data.fusion.size() == 3);
  CHECK(data.fusion[0].prefix.empty());
  CHECK(data.fusion[0].target == "Wolves came back to the valley.");
  REQUIRE(data.fusion[1].cluster.size() == 2);
  // clusters renumber from 1 regardless of table ids
  CHECK(data.fusion[1].cluster[0].index == 1);
  CHECK(data.fusion[1].cluster[1].index == 2);
  CHECK(data.fusion[1].cluster[0].fragments[0] == Span{"eco-a", 31, 64});
  CHECK(data.fusion[1].cluster[1].fragments[0] == Span{"eco-b", 0, 39});
  CHECK(data.fusion[1].prefix == std::vector<std::string>{"Wolves came back to the valley."});
  CHECK(data.fusion[2].prefix.size() == 2);
  CHECK(data.fusion[2].target == "Beavers returned within ten years.");
}

TEST_CASE("a span aligned to two sentences keeps one highlight id") {
  AlignmentRecord rec = two_doc_record();
  rec.alignments[2].spans.push_back(Span{"d1", 0, 10});  // also sentence 0's span

  const StepDatasets data = derive_step_datasets({rec});
  const PlanningExample& plan = data.planning[0];
  CHECK(plan.highlights.size() == 4);  // not 5
  CHECK(plan.plan.clusters[0].highlight_ids == std::vector<int>{1});
  CHECK(plan.plan.clusters[2].highlight_ids == std::vector<int>{1, 4});
}

TEST_CASE("unaligned sentences are logged out of planning and fusion") {
  AlignmentRecord rec = two_doc_record();
  rec.alignments.erase(rec.alignments.begin() + 1);  // sentence 1 loses its spans

  const StepDatasets data = derive_step_datasets({rec});
  REQUIRE(data.log.size() == 1);
  CHECK(data.log[0].find("sentence 2") != std::string::npos);
  CHECK(data.log[0].find("'r'") != std::string::npos);

  const PlanningExample& plan = data.planning[0];
  CHECK(plan.plan.clusters.size() == 2);
  CHECK(plan.sentences == std::vector<std::string>{"First.", "Third."});

  // the dropped sentence still belongs to later prefixes
  REQUIRE(data.fusion.size() == 2);
  CHECK(data.fusion[1].prefix == std::vector<std::string>{"First.", "Second."});
  CHECK(data.fusion[1].target == "Third.");
}

TEST_CASE("overlapping spans merge for selection but stay distinct highlights") {
  AlignmentRecord rec;
  rec.id = "r";
  rec.docs.docs.emplace_back("d", "one two three four five six");
  rec.sentences = {"A.", "B."};
  rec.alignments = {
      {0, {Span{"d", 0, 13}}},
      {1, {Span{"d", 8, 18}}},
  };

  const StepDatasets data = derive_step_datasets({rec});
  REQUIRE(data.selection[0].spans.size() == 1);
  CHECK(data.selection[0].spans[0] == Span{"d", 0, 18});
  CHECK(data.planning[0].highlights.size() == 2);
}

TEST_CASE("deriving an invalid record throws") {
  AlignmentRecord rec = two_doc_record();
  rec.alignments[0].spans[0].end = 400;
  CHECK_THROWS(derive_step_datasets({rec}));
}

TEST_CASE("lfqa filter keeps fully supported high-utility records") {
  const std::vector<AlignmentRecord> records =
      load_alignment_records(data_path("lfqa_filter_fixture.jsonl"));
  REQUIRE(records.size() == 6);

  std::vector<std::string> log;
  const std::vector<AlignmentRecord> kept = filter_lfqa_records(records, &log);
  std::vector<std::string> kept_ids;
  for (const AlignmentRecord& rec : kept) kept_ids.push_back(rec.id);
  CHECK(kept_ids == std::vector<std::string>{"rec-1", "rec-4", "rec-6"});

  REQUIRE(log.size() == 3);
  CHECK(log[0].find("rec-2") != std::string::npos);
  CHECK(log[0].find("utility 3") != std::string::npos);
  CHECK(log[1].find("rec-3") != std::string::npos);
  CHECK(log[1].find("labels 1 statements for 2 sentences") != std::string::npos);
  CHECK(log[2].find("rec-5") != std::string::npos);
  CHECK(log[2].find("statement 2 is not fully supported") != std::string::npos);
}

TEST_CASE("lfqa filter drops records whose evidence does not align") {
  AlignmentRecord rec = two_doc_record();
  rec.alignments[0].spans[0].end = 400;
  std::vector<std::string> log;
  CHECK(filter_lfqa_records({rec}, &log).empty());
  REQUIRE(log.size() == 1);
  CHECK(log[0].find("does not align") != std::string::npos);

  // null log is fine
  CHECK(filter_lfqa_records({rec}, nullptr).empty());
}

TEST_CASE("written step datasets load back as demo pools") {
  const std::vector<AlignmentRecord> records =
      load_alignment_records(data_path("alignments_toy.jsonl"));
  const StepDatasets data = derive_step_datasets(records);

  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "attrgen_step_datasets";
  std::filesystem::remove_all(dir);
  write_step_datasets(data, dir.string());

  const auto selection = load_selection_demos((dir / "selection.jsonl").string());
  REQUIRE(selection.size() == 1);
  CHECK(selection[0].docs.docs.size() == 2);
  CHECK(selection[0].docs.docs[0].text() == records[0].docs.docs[0].text());
  CHECK(selection[0].gold_spans == data.selection[0].spans);

  const auto planning = load_planning_demos((dir / "planning.jsonl").string());
  REQUIRE(planning.size() == 1);
  REQUIRE(planning[0].highlights.size() == 4);
  CHECK(planning[0].highlights[2].index == 3);
  CHECK(planning[0].highlights[2].fragments == data.planning[0].highlights[2].fragments);
  REQUIRE(planning[0].plan.clusters.size() == 3);
  CHECK(planning[0].plan.clusters[1].highlight_ids == std::vector<int>{2, 3});
  CHECK(planning[0].sentences == data.planning[0].sentences);

  const auto fusion = load_fusion_demos((dir / "fusion.jsonl").string());
  REQUIRE(fusion.size() == 3);
  CHECK(fusion[1].cluster.size() == 2);
  CHECK(fusion[1].cluster[0].index == 1);
  CHECK(fusion[1].prefix == data.fusion[1].prefix);
  CHECK(fusion[1].target == data.fusion[1].target);
  CHECK(fusion[2].prefix.size() == 2);

  std::filesystem::remove_all(dir);
}

TEST_CASE("alignment loader reports the failing line") {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "attrgen_bad_alignments";
  std::filesystem::create_directories(dir);
  const std::filesystem::path file = dir / "bad.jsonl";
  {
    std::ofstream out(file);
    out << R"({"id": "ok", "docs": [{"id": "d", "text": "x y z"}], "sentences": ["S."], "alignments": []})"
        << "\n";
    out << "not json\n";
  }
  CHECK_THROWS_WITH_AS(load_alignment_records(file.string()), doctest::Contains(":2:"),
                       std::runtime_error);
  CHECK_THROWS(load_alignment_records((dir / "absent.jsonl").string()));
  std::filesystem::remove_all(dir);
}
