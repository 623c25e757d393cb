#include "fixtures.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace consult::testing {

namespace {

void put_octal(char* dst, std::size_t width, std::uint64_t value) {
  const auto s = fmt::format("{:0{}o}", value, width - 1);
  std::memcpy(dst, s.data(), width - 1);
  dst[width - 1] = '\0';
}

std::string header_block(const std::string& name, std::size_t size, char type) {
  std::string h(512, '\0');
  std::memcpy(h.data(), name.data(), std::min<std::size_t>(name.size(), 100));
  put_octal(h.data() + 100, 8, 0644);
  put_octal(h.data() + 108, 8, 0);
  put_octal(h.data() + 116, 8, 0);
  put_octal(h.data() + 124, 12, size);
  put_octal(h.data() + 136, 12, 1700000000);
  h[156] = type;
  std::memcpy(h.data() + 257, "ustar", 6);
  std::memcpy(h.data() + 263, "00", 2);
  std::memset(h.data() + 148, ' ', 8);
  unsigned sum = 0;
  for (const char c : h) sum += static_cast<unsigned char>(c);
  const auto chk = fmt::format("{:06o}", sum);
  std::memcpy(h.data() + 148, chk.data(), 6);
  h[154] = '\0';
  h[155] = ' ';
  return h;
}

void append_padded(std::string& out, std::string_view body) {
  out += body;
  out.append((512 - body.size() % 512) % 512, '\0');
}

}  // namespace

std::string make_tar(const std::vector<std::pair<std::string, std::string>>& files) {
  std::string out;
  for (const auto& [name, content] : files) {
    if (name.size() > 100) {
      out += header_block("././@LongLink", name.size() + 1, 'L');
      append_padded(out, name + '\0');
    }
    out += header_block(name, content.size(), '0');
    append_padded(out, content);
  }
  out.append(1024, '\0');
  return out;
}

std::string gzip(std::string_view data) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw std::runtime_error("deflateInit2 failed");
  }
  std::string out(deflateBound(&zs, data.size()) + 64, '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  if (deflate(&zs, Z_FINISH) != Z_STREAM_END) throw std::runtime_error("deflate failed");
  out.resize(zs.total_out);
  deflateEnd(&zs);
  return out;
}

std::string make_pdf(std::string_view title) {
  return fmt::format("%PDF-1.4\n1 0 obj << /Title ({}) >> endobj\ntrailer << /Root 1 0 R >>\n%%EOF\n", title);
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string atom_feed(const std::vector<FeedEntry>& entries) {
  std::string xml =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<feed xmlns=\"http://www.w3.org/2005/Atom\">\n"
      "  <title type=\"html\">ArXiv Query</title>\n  <id>http://arxiv.org/api/fixture</id>\n";
  for (const auto& e : entries) {
    xml += fmt::format("  <entry>\n    <id>http://arxiv.org/abs/{}</id>\n    <published>{}</published>\n"
                       "    <title>{}</title>\n    <summary>{}</summary>\n",
                       e.id, e.published, xml_escape(e.title), xml_escape(e.abstract));
    for (const auto& a : e.authors) xml += fmt::format("    <author><name>{}</name></author>\n", xml_escape(a));
    xml += "  </entry>\n";
  }
  xml += "</feed>\n";
  return xml;
}

std::string read_fixture(const std::string& relative) {
  std::ifstream in(std::filesystem::path(CONSULT_FIXTURE_DIR) / relative, std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + relative);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

TempDir::TempDir() {
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() / fmt::format("consult-test-{:08x}{:08x}", rd(), rd());
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace consult::testing
