#include "consult/common/storage.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "consult/common/error.hpp"
#include "consult/common/text.hpp"

namespace consult {

namespace fs = std::filesystem;

UriResolver::UriResolver() {
  register_scheme("file", [](std::string_view rest) {
    // file:///abs/path and file://relative/path are both accepted.
    return fs::path(std::string(rest));
  });
}

void UriResolver::register_scheme(std::string scheme, Handler handler) {
  handlers_[std::move(scheme)] = std::move(handler);
}

fs::path UriResolver::resolve(std::string_view uri) const {
  const auto sep = uri.find("://");
  if (sep == std::string_view::npos) return fs::path(std::string(uri));
  const auto scheme = to_lower(uri.substr(0, sep));
  const auto it = handlers_.find(scheme);
  if (it == handlers_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "unsupported storage URI scheme: " + scheme,
                {std::string(uri)});
  }
  return it->second(uri.substr(sep + 3));
}

const UriResolver& UriResolver::global() {
  static const UriResolver resolver;
  return resolver;
}

fs::path resolve_uri(std::string_view uri) { return UriResolver::global().resolve(uri); }

std::string file_uri(const fs::path& path) {
  return "file://" + fs::absolute(path).lexically_normal().string();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp." + random_id().substr(0, 8);
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw Error(ErrorCode::kIoError, "cannot write file: " + tmp.string());
  std::size_t written = 0;
  while (written < content.size()) {
    const auto n = ::write(fd, content.data() + written, content.size() - written);
    if (n < 0) {
      ::close(fd);
      fs::remove(tmp);
      throw Error(ErrorCode::kIoError, "write failed: " + tmp.string());
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  fs::rename(tmp, path);
}

void append_line(const fs::path& path, std::string_view line) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot append to file: " + path.string());
  out << line << '\n';
}

}  // namespace consult
