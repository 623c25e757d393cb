#include "consult/smartfill/smart_fill.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <set>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "consult/common/error.hpp"

namespace consult::smartfill {
namespace {

using nlohmann::json;
using ::testing::ElementsAre;
using ::testing::HasSubstr;
namespace qn = questionnaire;

DatasetCatalogEntry entry(std::string name, std::string description, std::vector<std::string> cols) {
  DatasetCatalogEntry e{std::move(name), std::move(description), {}, 1000, "file:///data/x.jsonl"};
  for (auto& c : cols) e.columns.push_back({std::move(c), ColumnKind::kCategorical});
  return e;
}

std::vector<DatasetCatalogEntry> claims_catalog() {
  return {entry("claims_2023", "pharmacy claims records", {"member_id", "ndc_code", "paid_amount"}),
          entry("web_logs", "http access logs", {"ts", "url", "status"})};
}

// Independent oracle: Jaccard over lowercase alphanumeric runs.
std::set<std::string> oracle_tokens(const std::string& s) {
  std::set<std::string> out;
  std::string cur;
  for (char ch : s + " ") {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    } else if (!cur.empty()) {
      out.insert(cur);
      cur.clear();
    }
  }
  return out;
}

double oracle_score(const std::string& desc, const DatasetCatalogEntry& e) {
  auto a = oracle_tokens(desc);
  std::string all = e.name + " " + e.description;
  for (const auto& c : e.columns) all += " " + c.name;
  auto b = oracle_tokens(all);
  std::size_t inter = 0;
  for (const auto& t : a) inter += b.count(t);
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::unique_ptr<llm::Gateway> gateway_with(std::vector<std::string> replies) {
  llm::GatewayConfig config;
  config.retry_backoff = std::chrono::milliseconds(0);
  return std::make_unique<llm::Gateway>(
      std::shared_ptr<llm::ScriptedBackend>(llm::ScriptedBackend::from_texts(replies)), config);
}

TEST(Discover, PharmacyClaimsOracle) {
  const std::string desc = "classify pharmacy claims";
  const auto catalog = claims_catalog();
  // Hand count: {classify, pharmacy, claims} vs 10 entry tokens, 2 shared -> 2/11.
  EXPECT_DOUBLE_EQ(oracle_score(desc, catalog[0]), 2.0 / 11.0);
  EXPECT_DOUBLE_EQ(oracle_score(desc, catalog[1]), 0.0);

  const auto ranked = discover_datasets(desc, catalog, 5);
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_EQ(ranked[0].entry.name, "claims_2023");
  EXPECT_DOUBLE_EQ(ranked[0].score, 2.0 / 11.0);
  EXPECT_EQ(ranked[1].entry.name, "web_logs");
  EXPECT_DOUBLE_EQ(ranked[1].score, 0.0);
}

TEST(Discover, EmptyCatalogGivesEmptyList) {
  EXPECT_TRUE(discover_datasets("anything", {}, 3).empty());
}

TEST(Discover, TopMBelowOneRejected) {
  EXPECT_THROW(discover_datasets("x", claims_catalog(), 0), Error);
}

TEST(Discover, IdenticalEntriesTieBrokenByName) {
  std::vector<DatasetCatalogEntry> catalog = {entry("zeta", "sales orders", {"amount"}),
                                              entry("alpha", "sales orders", {"amount"})};
  const auto ranked = discover_datasets("weekly sales forecast", catalog, 2);
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_DOUBLE_EQ(ranked[0].score, ranked[1].score);
  EXPECT_EQ(ranked[0].entry.name, "alpha");
  EXPECT_EQ(ranked[1].entry.name, "zeta");
}

TEST(DiscoverProperty, PermutationInvariantSortedBoundedAndMatchesOracle) {
  std::vector<std::string> words = {"sales", "claims", "logs", "churn", "images", "text", "pharmacy",
                                    "orders", "users", "events", "price", "label"};
  std::mt19937 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<DatasetCatalogEntry> catalog;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      std::string d;
      for (int w = 0; w < 3; ++w) d += words[rng() % words.size()] + " ";
      catalog.push_back(entry("ds" + std::to_string(i), d, {words[rng() % words.size()]}));
    }
    std::string desc;
    for (int w = 0; w < 4; ++w) desc += words[rng() % words.size()] + " ";
    const int m = 1 + static_cast<int>(rng() % 5);

    const auto a = discover_datasets(desc, catalog, m);
    auto shuffled = catalog;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto b = discover_datasets(desc, shuffled, m);

    ASSERT_LE(a.size(), static_cast<std::size_t>(m));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].entry.name, b[i].entry.name);
      EXPECT_DOUBLE_EQ(a[i].score, oracle_score(desc, a[i].entry));
      EXPECT_GE(a[i].score, 0.0);
      EXPECT_LE(a[i].score, 1.0);
      if (i > 0) EXPECT_GE(a[i - 1].score, a[i].score);
    }
  }
}

TEST(Discover, RerankUsesOneCallAndRankScores) {
  auto gw = gateway_with({R"({"ranking": ["web_logs", "claims_2023"]})"});
  const auto ranked = discover_datasets("classify pharmacy claims", claims_catalog(), 2, gw.get());
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_EQ(ranked[0].entry.name, "web_logs");
  EXPECT_DOUBLE_EQ(ranked[0].score, 1.0);
  EXPECT_DOUBLE_EQ(ranked[1].score, 0.5);
  EXPECT_EQ(gw->audit_size(), 1u);
}

TEST(Catalog, RoundTripAndValidation) {
  const auto catalog = claims_catalog();
  const auto text = serialize_catalog(catalog);
  EXPECT_EQ(load_catalog(text), catalog);
  EXPECT_THROW(load_catalog(R"({"catalog_version": 2})"), Error);
  const std::string dup = std::string(R"({"catalog_version": 1})") + "\n" +
                          R"({"name":"a","description":"","columns":[],"row_count":1,"location_uri":"file:///a"})" +
                          "\n" +
                          R"({"name":"a","description":"","columns":[],"row_count":1,"location_uri":"file:///a"})";
  EXPECT_THROW(load_catalog(dup), Error);
  const std::string negative = std::string(R"({"catalog_version": 1})") + "\n" +
                               R"({"name":"a","description":"","columns":[],"row_count":-1,"location_uri":"file:///a"})";
  EXPECT_THROW(load_catalog(negative), Error);
}

qn::AnswerSet with_description(std::string d) {
  qn::AnswerSet a;
  a.project_description = std::move(d);
  return a;
}

qn::AnswerSet answer_all_but(const qn::QuestionnaireSchema& schema, std::set<std::string> skip) {
  auto a = with_description("classify pharmacy claims for fraud");
  for (const auto* q : schema.all_questions()) {
    if (skip.count(q->id)) continue;
    qn::AnswerValue v;
    switch (q->kind) {
      case qn::AnswerKind::kFreeText: v = std::string("x"); break;
      case qn::AnswerKind::kSingleChoice: v = q->options.front(); break;
      case qn::AnswerKind::kMultiChoice: v = std::vector<std::string>{q->options.front()}; break;
      case qn::AnswerKind::kNumeric: v = 1.0; break;
      case qn::AnswerKind::kBoolean: v = true; break;
    }
    a.answers[q->id] = {q->id, v, qn::AnswerSource::kUser};
  }
  return a;
}

TEST(Suggest, AllAnsweredMakesNoCalls) {
  const auto& schema = qn::default_schema();
  auto gw = gateway_with({});
  const auto result = suggest_answers(schema, answer_all_but(schema, {}), claims_catalog(), *gw);
  EXPECT_TRUE(result.suggestions.empty());
  EXPECT_EQ(gw->audit_size(), 0u);
}

TEST(Suggest, EmptyDescriptionRejected) {
  const auto& schema = qn::default_schema();
  auto gw = gateway_with({});
  EXPECT_THROW(suggest_answers(schema, with_description("  "), {}, *gw), Error);
}

TEST(Suggest, MetricSuggestionFromKnowledge) {
  const auto& schema = qn::default_schema();
  auto gw = gateway_with(
      {R"({"answers":[{"question_id":"metrics","value":"AUC-ROC","rationale":"imbalanced binary labels"}]})"});
  const auto result = suggest_answers(schema, answer_all_but(schema, {"metrics"}), claims_catalog(), *gw);
  ASSERT_EQ(result.suggestions.size(), 1u);
  const auto& s = result.suggestions[0];
  EXPECT_EQ(s.question_id, "metrics");
  EXPECT_EQ(std::get<std::string>(s.proposed_value), "AUC-ROC");
  EXPECT_EQ(s.provenance.kind, Provenance::Kind::kInternalKnowledge);
  EXPECT_FALSE(result.partial);
  EXPECT_EQ(gw->audit_size(), 1u);
}

TEST(Suggest, DataQuestionCarriesCatalogProvenance) {
  const auto& schema = qn::default_schema();
  auto gw = gateway_with(
      {R"({"answers":[{"question_id":"training_data_available","value":"yes, claims_2023","datasets":["claims_2023"]}]})"});
  const auto result =
      suggest_answers(schema, answer_all_but(schema, {"training_data_available"}), claims_catalog(), *gw);
  ASSERT_EQ(result.suggestions.size(), 1u);
  EXPECT_EQ(result.suggestions[0].provenance.kind, Provenance::Kind::kCatalog);
  EXPECT_THAT(result.suggestions[0].provenance.entries, ElementsAre("claims_2023"));
  const auto& prompt = gw->audit_log().front().user_text;
  EXPECT_THAT(prompt, HasSubstr("claims_2023"));
}

TEST(Suggest, DataQuestionWithoutNamedDatasetsFallsBackToDiscovered) {
  const auto& schema = qn::default_schema();
  auto gw = gateway_with(
      {R"({"answers":[{"question_id":"labeled_examples","value":5000,"datasets":["made_up"]}]})"});
  const auto result =
      suggest_answers(schema, answer_all_but(schema, {"labeled_examples"}), claims_catalog(), *gw);
  ASSERT_EQ(result.suggestions.size(), 1u);
  EXPECT_EQ(result.suggestions[0].provenance.kind, Provenance::Kind::kCatalog);
  EXPECT_FALSE(result.suggestions[0].provenance.entries.empty());
  for (const auto& name : result.suggestions[0].provenance.entries) EXPECT_NE(name, "made_up");
}

TEST(Suggest, NeverOverwritesAndDropsBadProposals) {
  const auto& schema = qn::default_schema();
  auto gw = gateway_with({R"({"answers":[
      {"question_id":"metrics","value":"f1"},
      {"question_id":"kpis","value":"fraud caught"},
      {"question_id":"cost_sensitivity","value":"extreme"},
      {"question_id":"latency_budget_ms","value":"fast"},
      {"question_id":"nonexistent","value":"x"}]})"});
  const auto result = suggest_answers(
      schema, answer_all_but(schema, {"kpis", "cost_sensitivity", "latency_budget_ms"}), {}, *gw);
  ASSERT_EQ(result.suggestions.size(), 1u);
  EXPECT_EQ(result.suggestions[0].question_id, "kpis");
  EXPECT_EQ(result.warnings.size(), 4u);
}

TEST(Suggest, PartialResultWhenDataCallFails) {
  const auto& schema = qn::default_schema();
  // First call succeeds; the second call's three attempts are all malformed.
  auto gw = gateway_with({R"({"answers":[{"question_id":"metrics","value":"accuracy"}]})", "nope",
                          "still nope", "no"});
  const auto result = suggest_answers(
      schema, answer_all_but(schema, {"metrics", "training_data_available"}), claims_catalog(), *gw);
  EXPECT_TRUE(result.partial);
  ASSERT_EQ(result.suggestions.size(), 1u);
  EXPECT_EQ(result.suggestions[0].question_id, "metrics");
  ASSERT_EQ(result.errors.size(), 1u);
  EXPECT_THAT(result.errors[0], HasSubstr("structured_output"));
}

TEST(Suggest, AllCallsFailingPropagates) {
  const auto& schema = qn::default_schema();
  auto gw = gateway_with({"a", "b", "c"});
  try {
    suggest_answers(schema, answer_all_but(schema, {"metrics"}), {}, *gw);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStructuredOutput);
  }
}

TEST(Suggest, DeterministicForFixedTranscript) {
  const auto& schema = qn::default_schema();
  const std::vector<std::string> replies = {
      R"({"answers":[{"question_id":"kpis","value":"k"},{"question_id":"metrics","value":"m"}]})",
      R"({"answers":[{"question_id":"eval_data_available","value":"no","datasets":["web_logs"]}]})"};
  const auto answers = answer_all_but(schema, {"metrics", "kpis", "eval_data_available"});
  auto g1 = gateway_with(replies);
  auto g2 = gateway_with(replies);
  const json a = suggest_answers(schema, answers, claims_catalog(), *g1);
  const json b = suggest_answers(schema, answers, claims_catalog(), *g2);
  EXPECT_EQ(a, b);
  // Schema order: kpis precedes eval_data_available precedes metrics.
  EXPECT_EQ(a["suggestions"][0]["question_id"], "kpis");
  EXPECT_EQ(a["suggestions"][1]["question_id"], "eval_data_available");
  EXPECT_EQ(a["suggestions"][2]["question_id"], "metrics");
}

SmartFillSuggestion metric_suggestion(std::string v) {
  return {"metrics", std::move(v), {}, ""};
}

TEST(Apply, UneditedGetsSmartfillSource) {
  const auto& schema = qn::default_schema();
  const auto base = with_description("d");
  const auto out = apply_suggestions(schema, base, {metric_suggestion("accuracy")}, {});
  EXPECT_EQ(out.answers.at("metrics").source, qn::AnswerSource::kSmartFill);
  EXPECT_EQ(std::get<std::string>(out.answers.at("metrics").value), "accuracy");
}

TEST(Apply, EditedGetsSmartfillEditedSource) {
  const auto& schema = qn::default_schema();
  const auto out = apply_suggestions(schema, with_description("d"), {metric_suggestion("accuracy")},
                                     {{"metrics", std::string("precision")}});
  EXPECT_EQ(out.answers.at("metrics").source, qn::AnswerSource::kSmartFillEdited);
  EXPECT_EQ(std::get<std::string>(out.answers.at("metrics").value), "precision");
}

TEST(Apply, EmptyAcceptedIsIdentity) {
  const auto& schema = qn::default_schema();
  const auto base = answer_all_but(schema, {"metrics"});
  const auto out = apply_suggestions(schema, base, {}, {});
  EXPECT_EQ(qn::answers_to_json(out), qn::answers_to_json(base));
}

TEST(Apply, WrongTypedEditNamesQuestion) {
  const auto& schema = qn::default_schema();
  try {
    apply_suggestions(schema, with_description("d"), {metric_suggestion("accuracy")},
                      {{"metrics", 3.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTypeError);
    EXPECT_THAT(e.what(), HasSubstr("metrics"));
  }
}

TEST(Apply, UnknownQuestionRejected) {
  const auto& schema = qn::default_schema();
  EXPECT_THROW(apply_suggestions(schema, with_description("d"), {{"nope", std::string("x"), {}, ""}}, {}),
               Error);
}

TEST(Apply, OtherAnswersUntouched) {
  const auto& schema = qn::default_schema();
  const auto base = answer_all_but(schema, {"metrics"});
  const auto out = apply_suggestions(schema, base, {metric_suggestion("accuracy")}, {});
  for (const auto& [id, a] : base.answers) {
    EXPECT_EQ(out.answers.at(id).source, a.source);
  }
}

TEST(SuggestionJson, RoundTrip) {
  const auto& schema = qn::default_schema();
  SmartFillSuggestion s{"training_data_available", std::string("yes"),
                        {Provenance::Kind::kCatalog, {"claims_2023"}}, "r"};
  json j = s;
  EXPECT_EQ(suggestion_from_json(j, schema), s);
}

}  // namespace
}  // namespace consult::smartfill
