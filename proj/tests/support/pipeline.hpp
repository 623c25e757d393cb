#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace consult::testing {

// A complete offline run: questionnaire answers, two smart-fill proposals,
// two search queries over three papers (one shared), three summaries and a
// final recommendation. The transcript replays model calls in this order:
//   smartfill general, smartfill data, queries, shortlist, summary x3, recommendation
struct PipelineFixture {
  std::filesystem::path root;
  std::filesystem::path cassette_dir;
  std::filesystem::path transcript_path;
  std::filesystem::path catalog_path;
  nlohmann::json user_answers;                    // save_answers body
  std::vector<std::string> suggestion_ids;        // expected smart-fill question ids
  std::string recommendation_markdown;            // the scripted final reply
  nlohmann::json expected_recommendation;         // hand-assembled parse
  std::vector<std::string> paper_ids;             // canonical ids, shortlist order

  // Service config with a scripted model and cassette replay.
  nlohmann::json service_config(const std::filesystem::path& data_dir) const;
};

// recommendation_delay_ms stalls the final model reply (crash tests).
PipelineFixture build_pipeline_fixture(const std::filesystem::path& root, int recommendation_delay_ms = 0);

}  // namespace consult::testing
