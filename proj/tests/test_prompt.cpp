#include <fstream>
#include <set>

#include "doctest.h"
#include "superb/errors.hpp"
#include "superb/prompt.hpp"
#include "superb/util.hpp"
#include "support/tmpdir.hpp"

using namespace superb;
using superb::test::TmpDir;

namespace {

PromptBindings one_item(const std::string& query, const std::string& title,
                        const std::string& desc) {
  PromptBindings b;
  b.query = query;
  b.items.push_back({title, desc});
  return b;
}

}  // namespace

TEST_SUITE_BEGIN("prompt");

TEST_CASE("template ids round-trip through their names") {
  for (auto id : kAllTemplateIds) {
    CHECK(template_id_from_string(to_string(id)) == id);
  }
  CHECK_THROWS_AS(template_id_from_string("nope"), ValidationError);
}

TEST_CASE("pointwise prompt carries the taxonomy and brackets the item with the query") {
  auto prompt = render(TemplateId::pointwise, one_item("best shoes", "trail shoes", "grippy"));
  CHECK(prompt.find("Categories:") != std::string::npos);
  CHECK(prompt.find("3. Overall Best") != std::string::npos);
  CHECK(prompt.find("2. Almost Best") != std::string::npos);
  CHECK(prompt.find("1. Relevant But Not Best") != std::string::npos);
  CHECK(prompt.find("0. Not Relevant") != std::string::npos);
  CHECK(prompt.find("Title: trail shoes Description: grippy") != std::string::npos);
  auto first = prompt.find("User Query: best shoes");
  auto last = prompt.rfind("User Query: best shoes");
  CHECK(first != std::string::npos);
  CHECK(first < last);
}

TEST_CASE("listwise templates state the exact item count") {
  PromptBindings b;
  b.query = "best kettle";
  for (int i = 0; i < 25; ++i) {
    b.items.push_back({"kettle " + std::to_string(i), "steel"});
  }
  auto annotate = render(TemplateId::listwise_annotate, b);
  CHECK(annotate.find("i.e. exactly 25.") != std::string::npos);
  CHECK(annotate.find("Item 1 Description: Title: kettle 0") != std::string::npos);
  CHECK(annotate.find("Item 25 Description: Title: kettle 24") != std::string::npos);

  auto ranked = render(TemplateId::listwise_rank, b);
  CHECK(ranked.find("i.e. exactly 25.") != std::string::npos);
  CHECK(ranked.find("something like 8 3 9 1 2...") != std::string::npos);
}

TEST_CASE("deliberation prompt demands structured output") {
  PromptBindings b;
  b.query = "best laptop for his 15 year old son";
  auto prompt = render(TemplateId::deliberate_attrs, b);
  CHECK(prompt.find("Return your output as a json") != std::string::npos);
  CHECK(prompt.find("best laptop for his 15 year old son") != std::string::npos);
}

TEST_CASE("superlative template renders literal json braces") {
  PromptBindings b;
  b.query = "diaper backpack";
  auto prompt = render(TemplateId::superlative_gen, b);
  CHECK(prompt.find("{{") == std::string::npos);
  CHECK(prompt.find("\"superlatives\"") != std::string::npos);
  CHECK(prompt.find("Input Query: diaper backpack") != std::string::npos);
}

TEST_CASE("attribute-conditioned templates require attributes") {
  auto bindings = one_item("best shoes", "shoes", "desc");
  CHECK_THROWS_AS(render(TemplateId::pointwise_confidence, bindings), ParseError);
  bindings.attributes = {"cushioned sole", "durable"};
  auto prompt = render(TemplateId::pointwise_confidence, bindings);
  CHECK(prompt.find("cushioned sole, durable") != std::string::npos);
  CHECK(prompt.find("confidence score for your prediction") != std::string::npos);
  CHECK(prompt.find("2 8 some explanation or 3 4 some explanation") != std::string::npos);
}

TEST_CASE("render rejects empty item blocks and bad overrides") {
  PromptBindings no_items;
  no_items.query = "q";
  CHECK_THROWS_AS(render(TemplateId::listwise_rank, no_items), ParseError);
  CHECK_THROWS_AS(render(TemplateId::pairwise, one_item("q", "t", "d")), ParseError);

  TemplateSet custom = TemplateSet::defaults();
  custom.set_body(TemplateId::pointwise, "User Query: {query}\n{title} {description} {bogus}");
  CHECK_THROWS_AS(render(custom, TemplateId::pointwise, one_item("q", "t", "d")), ParseError);

  // Item templates must repeat the query around the item block.
  custom.set_body(TemplateId::pointwise, "User Query: {query}\n{title} {description}");
  CHECK_THROWS_WITH_AS(render(custom, TemplateId::pointwise, one_item("q", "t", "d")),
                       doctest::Contains("before and after"), ParseError);
}

TEST_CASE("template overrides load from a directory") {
  TmpDir dir("templates");
  {
    std::ofstream out(dir.file("pointwise.txt"));
    out << "Q {query}\nItem: {title} :: {description}\nQ {query}\n";
  }
  TemplateSet custom = TemplateSet::defaults();
  custom.load_overrides(dir.path());
  auto prompt = render(custom, TemplateId::pointwise, one_item("x", "t", "d"));
  CHECK(prompt == "Q x\nItem: t :: d\nQ x");
  // Untouched ids keep their defaults.
  CHECK(custom.body(TemplateId::listwise_rank) ==
        TemplateSet::defaults().body(TemplateId::listwise_rank));
}

TEST_CASE("render is injective over distinct products") {
  std::set<std::string> prompts;
  for (int i = 0; i < 20; ++i) {
    auto p = render(TemplateId::pointwise,
                    one_item("best shoes", "shoes " + std::to_string(i), "desc"));
    CHECK(prompts.insert(p).second);
  }
}

TEST_CASE("parse_point_label follows the strict first-token grammar") {
  auto ok = parse_point_label("2\nscores high on most parameters");
  CHECK(ok.label == 2);
  CHECK(ok.explanation == "scores high on most parameters");

  auto bare = parse_point_label("0\n");
  CHECK(bare.label == 0);
  CHECK(bare.explanation.empty());

  CHECK_THROWS_AS(parse_point_label("Label: 3 - best overall"), ParseError);
  CHECK_THROWS_AS(parse_point_label("5\nout of range"), ParseError);
  CHECK_THROWS_AS(parse_point_label(""), ParseError);
  CHECK_THROWS_AS(parse_point_label("best"), ParseError);
}

TEST_CASE("parse_point_label_confidence reads label, confidence, explanation") {
  auto r = parse_point_label_confidence("2 8 some explanation");
  CHECK(r.label == 2);
  CHECK(r.confidence == 8);
  CHECK(r.explanation == "some explanation");

  auto s = parse_point_label_confidence("3 4 some explanation");
  CHECK(s.label == 3);
  CHECK(s.confidence == 4);

  CHECK_THROWS_AS(parse_point_label_confidence("2 12 text"), ParseError);
  CHECK_THROWS_AS(parse_point_label_confidence("2"), ParseError);
  CHECK_THROWS_AS(parse_point_label_confidence("2 emphatic"), ParseError);
}

TEST_CASE("parse_label_sequence is exact and ignores trailing prose") {
  CHECK(parse_label_sequence("3 2 2 0", 4) == std::vector<int>{3, 2, 2, 0});
  CHECK(parse_label_sequence("3 2 2 0 because the first item excels", 4) ==
        std::vector<int>{3, 2, 2, 0});
  CHECK(parse_label_sequence("1", 1) == std::vector<int>{1});
  CHECK_THROWS_AS(parse_label_sequence("3 2", 4), ParseError);
  CHECK_THROWS_AS(parse_label_sequence("3 2 9 0", 4), ParseError);
  CHECK_THROWS_AS(parse_label_sequence("sure: 3 2 2 0", 4), ParseError);
}

TEST_CASE("text_after_tokens returns the shared explanation") {
  CHECK(text_after_tokens("3 1\nthe first is better", 2) == "the first is better");
  CHECK(text_after_tokens("3 1 inline reason", 2) == "inline reason");
  CHECK(text_after_tokens("3 1", 2).empty());
}

TEST_CASE("parse_rank_permutation accepts clean permutations without repair") {
  auto r = parse_rank_permutation("8 3 9 1 2 4 5 6 7 10", 10);
  CHECK(r.order == std::vector<int>{8, 3, 9, 1, 2, 4, 5, 6, 7, 10});
  CHECK_FALSE(r.repaired);

  auto with_prose = parse_rank_permutation("2 1 3\nbecause the second item leads", 3);
  CHECK(with_prose.order == std::vector<int>{2, 1, 3});
  CHECK_FALSE(with_prose.repaired);
}

TEST_CASE("parse_rank_permutation repairs duplicates, gaps, and prose") {
  auto dup = parse_rank_permutation("3 1 3 2", 4);
  CHECK(dup.order == std::vector<int>{3, 1, 2, 4});
  CHECK(dup.repaired);

  auto prose = parse_rank_permutation("the best is item 2", 3);
  CHECK(prose.order == std::vector<int>{2, 1, 3});
  CHECK(prose.repaired);

  auto out_of_range = parse_rank_permutation("7 2 1", 3);
  CHECK(out_of_range.order == std::vector<int>{2, 1, 3});
  CHECK(out_of_range.repaired);

  auto punctuated = parse_rank_permutation("2, 3, 1.", 3);
  CHECK(punctuated.order == std::vector<int>{2, 3, 1});

  CHECK_THROWS_AS(parse_rank_permutation("no ids here", 3), ParseError);
  CHECK_THROWS_AS(parse_rank_permutation("", 3), ParseError);
}

TEST_CASE("parse_rank_permutation always yields a full permutation on fuzzed input") {
  static const char* tokens[] = {"1", "2", "3", "7", "0", "-1", "item", "best,", "4.", "x9"};
  SplitMix64 rng(512);
  for (int round = 0; round < 300; ++round) {
    const std::size_t n = 1 + rng.below(9);
    std::string text;
    const std::size_t len = rng.below(14);
    for (std::size_t i = 0; i < len; ++i) {
      if (!text.empty()) text += ' ';
      text += tokens[rng.below(std::size(tokens))];
    }
    try {
      auto r = parse_rank_permutation(text, n);
      REQUIRE(r.order.size() == n);
      std::set<int> seen(r.order.begin(), r.order.end());
      REQUIRE(seen.size() == n);
      CHECK(*seen.begin() == 1);
      CHECK(*seen.rbegin() == static_cast<int>(n));
    } catch (const ParseError&) {
      // fatal is fine; partial results are not
    }
  }
}

TEST_CASE("parse_attributes scans for the outermost object") {
  auto attrs = parse_attributes(R"({"attributes": ["large RAM", "best GPUs", "good speakers"]})");
  CHECK(attrs == std::vector<std::string>{"large RAM", "best GPUs", "good speakers"});

  auto with_prose = parse_attributes(
      "Here you go.\n{\"attributes\": [\" padded straps \", \"\"]}\nHope that helps.");
  CHECK(with_prose == std::vector<std::string>{"padded straps"});

  auto other_key = parse_attributes(R"({"ideal": ["quiet motor"]})");
  CHECK(other_key == std::vector<std::string>{"quiet motor"});

  CHECK_THROWS_AS(parse_attributes(R"({"attributes": []})"), ParseError);
  CHECK_THROWS_AS(parse_attributes("no structure at all"), ParseError);
  CHECK_THROWS_AS(parse_attributes("{\"attributes\": [\"\"]}"), ParseError);
}

TEST_CASE("parse_superlatives requires its key") {
  auto queries = parse_superlatives(
      R"({"superlatives": ["best running shoes for flat feet", " best diaper backpack for twins "]})");
  REQUIRE(queries.size() == 2);
  CHECK(queries[0] == "best running shoes for flat feet");
  CHECK(queries[1] == "best diaper backpack for twins");

  CHECK_THROWS_AS(parse_superlatives(R"({"other": ["x"]})"), ParseError);
  CHECK_THROWS_AS(parse_superlatives("just words"), ParseError);
}

TEST_CASE("prompt_hash is a stable sha256 hex digest") {
  CHECK(prompt_hash("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(prompt_hash("a") != prompt_hash("b"));
  CHECK(prompt_hash("same") == prompt_hash("same"));
}

TEST_SUITE_END();
