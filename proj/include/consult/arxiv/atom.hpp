#pragma once

#include <string_view>
#include <vector>

#include "consult/arxiv/types.hpp"

namespace consult::arxiv {

// Parses an arXiv API Atom 1.0 feed, preserving entry order. Malformed XML
// and API error entries raise kFeedParse.
std::vector<PaperMetadata> parse_atom_feed(std::string_view xml);

}  // namespace consult::arxiv
