#include "consult/arxiv/archive.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>

#include <fmt/format.h>

#include "consult/common/error.hpp"
#include "consult/common/text.hpp"

namespace consult::arxiv {

bool is_gzip(std::string_view data) {
  return data.size() >= 2 && static_cast<unsigned char>(data[0]) == 0x1f &&
         static_cast<unsigned char>(data[1]) == 0x8b;
}

std::string gunzip(std::string_view data, std::size_t max_output) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) {
    throw Error(ErrorCode::kParseError, "zlib initialisation failed");
  }
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());

  std::string out;
  char buffer[64 * 1024];
  int rc = Z_OK;
  while (true) {
    zs.next_out = reinterpret_cast<Bytef*>(buffer);
    zs.avail_out = sizeof(buffer);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error(ErrorCode::kParseError, fmt::format("corrupt gzip stream (zlib {})", rc));
    }
    out.append(buffer, sizeof(buffer) - zs.avail_out);
    if (out.size() > max_output) {
      inflateEnd(&zs);
      throw Error(ErrorCode::kParseError, "gzip payload exceeds size limit");
    }
    if (rc == Z_STREAM_END) {
      // Concatenated members: continue only if another gzip header follows.
      if (zs.avail_in >= 2 && zs.next_in[0] == 0x1f && zs.next_in[1] == 0x8b) {
        inflateReset(&zs);
        continue;
      }
      break;
    }
    if (zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw Error(ErrorCode::kParseError, "truncated gzip stream");
    }
  }
  inflateEnd(&zs);
  return out;
}

namespace {

constexpr std::size_t kBlock = 512;

std::string field(std::string_view header, std::size_t offset, std::size_t len) {
  const auto raw = header.substr(offset, len);
  const auto nul = raw.find('\0');
  return std::string(raw.substr(0, nul));
}

std::optional<std::uint64_t> parse_numeric(std::string_view raw) {
  if (!raw.empty() && (static_cast<unsigned char>(raw[0]) & 0x80)) {
    // base-256 (GNU) encoding for large values
    std::uint64_t v = static_cast<unsigned char>(raw[0]) & 0x7f;
    for (std::size_t i = 1; i < raw.size(); ++i) v = (v << 8) | static_cast<unsigned char>(raw[i]);
    return v;
  }
  std::uint64_t v = 0;
  bool any = false;
  for (const char c : raw) {
    if (c == '\0' || c == ' ') {
      if (any) break;
      continue;
    }
    if (c < '0' || c > '7') return std::nullopt;
    v = v * 8 + static_cast<std::uint64_t>(c - '0');
    any = true;
  }
  return v;
}

bool checksum_ok(std::string_view header) {
  const auto stored = parse_numeric(header.substr(148, 8));
  if (!stored) return false;
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < kBlock; ++i) {
    sum += (i >= 148 && i < 156) ? static_cast<unsigned char>(' ')
                                 : static_cast<unsigned char>(header[i]);
  }
  return sum == *stored;
}

bool all_zero(std::string_view block) {
  return std::all_of(block.begin(), block.end(), [](char c) { return c == '\0'; });
}

std::optional<std::string> pax_path(std::string_view records) {
  // Each record: "<len> <key>=<value>\n"
  std::size_t pos = 0;
  std::optional<std::string> path;
  while (pos < records.size()) {
    const auto space = records.find(' ', pos);
    if (space == std::string_view::npos) break;
    const auto len = std::stoul(std::string(records.substr(pos, space - pos)));
    if (len == 0 || pos + len > records.size()) break;
    const auto record = records.substr(space + 1, len - (space + 1 - pos) - 1);
    if (record.rfind("path=", 0) == 0) path = std::string(record.substr(5));
    pos += len;
  }
  return path;
}

}  // namespace

bool looks_like_tar(std::string_view data) {
  return data.size() >= kBlock && !all_zero(data.substr(0, kBlock)) && checksum_ok(data.substr(0, kBlock));
}

std::vector<ArchiveMember> read_tar(std::string_view data) {
  std::vector<ArchiveMember> members;
  std::optional<std::string> pending_name;
  std::size_t pos = 0;
  while (pos + kBlock <= data.size()) {
    const auto header = data.substr(pos, kBlock);
    if (all_zero(header)) break;
    if (!checksum_ok(header)) {
      throw Error(ErrorCode::kParseError, fmt::format("bad tar header checksum at offset {}", pos));
    }
    const auto size = parse_numeric(header.substr(124, 12));
    if (!size) throw Error(ErrorCode::kParseError, "bad tar member size");
    const char type = header[156];
    const auto body_start = pos + kBlock;
    if (body_start + *size > data.size()) {
      throw Error(ErrorCode::kParseError, "tar member extends past end of archive");
    }
    const auto body = data.substr(body_start, *size);
    pos = body_start + ((*size + kBlock - 1) / kBlock) * kBlock;

    if (type == 'L') {
      pending_name = std::string(body.substr(0, body.find('\0')));
      continue;
    }
    if (type == 'x') {
      if (auto p = pax_path(body)) pending_name = *p;
      continue;
    }
    if (type == 'g') continue;

    std::string name;
    if (pending_name) {
      name = std::move(*pending_name);
      pending_name.reset();
    } else {
      name = field(header, 0, 100);
      if (header.substr(257, 5) == "ustar") {
        const auto prefix = field(header, 345, 155);
        if (!prefix.empty()) name = prefix + "/" + name;
      }
    }
    if (type != '0' && type != '\0' && type != '7') continue;
    if (name.rfind("./", 0) == 0) name = name.substr(2);
    members.push_back({std::move(name), std::string(body)});
  }
  return members;
}

bool is_tex_member(std::string_view name) { return ends_with_icase(name, ".tex"); }

bool looks_like_latex(std::string_view text) {
  return text.find("\\documentclass") != std::string_view::npos ||
         text.find("\\begin{document}") != std::string_view::npos ||
         text.find("\\section") != std::string_view::npos;
}

std::size_t marker_overhead(std::string_view member_name) {
  return kFileMarkerPrefix.size() + member_name.size() + 1 + 1;
}

std::optional<LatexConcat> concat_latex(std::vector<ArchiveMember> members) {
  std::erase_if(members, [](const ArchiveMember& m) { return !is_tex_member(m.name); });
  if (members.empty()) return std::nullopt;
  std::stable_sort(members.begin(), members.end(),
            [](const ArchiveMember& a, const ArchiveMember& b) { return a.name < b.name; });
  // Duplicate names (re-appended members) keep the last copy, as tar does.
  std::vector<ArchiveMember> unique;
  for (auto& m : members) {
    if (!unique.empty() && unique.back().name == m.name) {
      unique.back() = std::move(m);
    } else {
      unique.push_back(std::move(m));
    }
  }
  LatexConcat out;
  for (const auto& m : unique) {
    out.text += kFileMarkerPrefix;
    out.text += m.name;
    out.text += '\n';
    out.text += m.content;
    out.text += '\n';
    out.manifest.push_back(m.name);
  }
  return out;
}

}  // namespace consult::arxiv
