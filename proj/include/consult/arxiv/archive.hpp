#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace consult::arxiv {

struct ArchiveMember {
  std::string name;
  std::string content;
};

bool is_gzip(std::string_view data);
// Inflates one or more concatenated gzip members. Throws kParseError on
// corrupt input or when the output would exceed max_output bytes.
std::string gunzip(std::string_view data, std::size_t max_output = std::size_t{1} << 30);

// True when the first 512-byte block is a tar header with a valid checksum.
bool looks_like_tar(std::string_view data);
// Regular-file members in archive order. Understands ustar prefixes, GNU
// long names ('L') and pax 'path' records; directories and links are skipped.
std::vector<ArchiveMember> read_tar(std::string_view data);

bool is_tex_member(std::string_view name);
bool looks_like_latex(std::string_view text);

inline constexpr std::string_view kFileMarkerPrefix = "%% FILE: ";

// Bytes added per member around its content: marker line plus the newline
// that terminates the member's block.
std::size_t marker_overhead(std::string_view member_name);

struct LatexConcat {
  std::string text;
  std::vector<std::string> manifest;  // lexicographic
};

// Concatenates every .tex member in lexicographic name order as
//   "%% FILE: <name>\n<content>\n"
// Returns nullopt when there is no .tex member.
std::optional<LatexConcat> concat_latex(std::vector<ArchiveMember> members);

}  // namespace consult::arxiv
