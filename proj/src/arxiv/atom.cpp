#include "consult/arxiv/atom.hpp"

#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <fmt/format.h>

#include "consult/common/error.hpp"
#include "consult/common/text.hpp"

namespace consult::arxiv {

namespace pt = boost::property_tree;

std::vector<PaperMetadata> parse_atom_feed(std::string_view xml) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::kFeedParse, fmt::format("malformed Atom feed: {}", e.what()),
                {std::string(xml.substr(0, 512))});
  }
  const auto feed = tree.get_child_optional("feed");
  if (!feed) throw Error(ErrorCode::kFeedParse, "document has no <feed> root");

  std::vector<PaperMetadata> papers;
  for (const auto& [tag, entry] : *feed) {
    if (tag != "entry") continue;
    const auto raw_id = collapse_whitespace(entry.get("id", ""));
    if (raw_id.find("/api/errors") != std::string::npos) {
      throw Error(ErrorCode::kFeedParse,
                  "arXiv API reported an error: " + collapse_whitespace(entry.get("summary", "")));
    }
    auto id = ArxivId::parse(raw_id);
    if (!id) {
      throw Error(ErrorCode::kFeedParse, fmt::format("entry id '{}' is not an arXiv id", raw_id));
    }
    PaperMetadata p;
    p.id = *id;
    p.title = collapse_whitespace(entry.get("title", ""));
    p.abstract = collapse_whitespace(entry.get("summary", ""));
    p.url = p.id.abs_url();
    p.published = collapse_whitespace(entry.get("published", ""));
    for (const auto& [child_tag, child] : entry) {
      if (child_tag == "author") p.authors.push_back(collapse_whitespace(child.get("name", "")));
    }
    papers.push_back(std::move(p));
  }
  return papers;
}

}  // namespace consult::arxiv
