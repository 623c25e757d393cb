#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>

namespace consult {

// Maps storage URIs onto local paths. file:// is built in; other schemes can
// be registered (e.g. an object-store mount point).
class UriResolver {
 public:
  using Handler = std::function<std::filesystem::path(std::string_view rest)>;

  UriResolver();

  void register_scheme(std::string scheme, Handler handler);
  std::filesystem::path resolve(std::string_view uri) const;

  static const UriResolver& global();

 private:
  std::map<std::string, Handler, std::less<>> handlers_;
};

std::filesystem::path resolve_uri(std::string_view uri);
std::string file_uri(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

// Write to a sibling temp file, fsync, then rename over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

void append_line(const std::filesystem::path& path, std::string_view line);

}  // namespace consult
