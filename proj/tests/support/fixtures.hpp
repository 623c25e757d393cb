#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace consult::testing {

// Independent writers used to build archive fixtures; the production code
// only ever reads these formats.
std::string make_tar(const std::vector<std::pair<std::string, std::string>>& files);
std::string gzip(std::string_view data);
std::string make_pdf(std::string_view title);

struct FeedEntry {
  std::string id;
  std::string title;
  std::string abstract;
  std::vector<std::string> authors = {"Jane Doe"};
  std::string published = "2023-03-01T00:00:00Z";
};
std::string atom_feed(const std::vector<FeedEntry>& entries);

std::string read_fixture(const std::string& relative);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& child) const { return path_ / child; }

 private:
  std::filesystem::path path_;
};

}  // namespace consult::testing
