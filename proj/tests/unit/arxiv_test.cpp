#include <chrono>
#include <random>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "consult/arxiv/archive.hpp"
#include "consult/arxiv/atom.hpp"
#include "consult/arxiv/connector.hpp"
#include "consult/common/error.hpp"
#include "fixtures.hpp"

namespace consult::arxiv {
namespace {

using consult::testing::TempDir;
using ::testing::ElementsAre;
using ::testing::HasSubstr;

Error capture(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected an Error";
  return Error(ErrorCode::kInvalidArgument, "none");
}

TEST(ArxivId, ParsesBothGrammarsAndUrls) {
  const auto a = ArxivId::parse("2101.01234v2");
  ASSERT_TRUE(a);
  EXPECT_EQ(a->base(), "2101.01234");
  EXPECT_EQ(a->version(), 2);
  EXPECT_EQ(a->canonical(), "2101.01234v2");
  EXPECT_EQ(a->abs_url(), "https://arxiv.org/abs/2101.01234v2");

  EXPECT_EQ(ArxivId::parse("http://arxiv.org/abs/2005.11401v4")->canonical(), "2005.11401v4");
  EXPECT_EQ(ArxivId::parse("arXiv:0704.0001")->base(), "0704.0001");
  EXPECT_EQ(ArxivId::parse("hep-th/9901001v1")->base(), "hep-th/9901001");
  EXPECT_EQ(ArxivId::parse("math.GT/0309136")->base(), "math.GT/0309136");
  EXPECT_FALSE(ArxivId::parse("2101.123"));
  EXPECT_FALSE(ArxivId::parse("not an id"));
  EXPECT_FALSE(ArxivId::parse("2101.01234v"));
}

TEST(AtomFeed, FixtureWithTwoEntries) {
  const auto papers = parse_atom_feed(consult::testing::read_fixture("atom/two_entries.xml"));
  ASSERT_EQ(papers.size(), 2u);
  EXPECT_EQ(papers[0].title, "Retrieval-Augmented Generation for Knowledge-Intensive NLP Tasks");
  EXPECT_EQ(papers[1].title, "A Classic Old-Style Identifier Paper");
  EXPECT_EQ(papers[0].id.canonical(), "2005.11401v4");
  EXPECT_EQ(papers[0].url, "https://arxiv.org/abs/2005.11401v4");
  EXPECT_THAT(papers[0].authors, ElementsAre("Patrick Lewis", "Ethan Perez"));
  EXPECT_THAT(papers[0].abstract, HasSubstr("in their parameters. We explore"));
  EXPECT_EQ(papers[1].abstract, "An abstract with an ampersand & an angle <bracket>.");
}

TEST(AtomFeed, EmptyTruncatedAndErrorFeeds) {
  EXPECT_TRUE(parse_atom_feed(consult::testing::read_fixture("atom/empty.xml")).empty());
  EXPECT_EQ(capture([] { parse_atom_feed(consult::testing::read_fixture("atom/truncated.xml")); }).code(),
            ErrorCode::kFeedParse);
  EXPECT_EQ(capture([] { parse_atom_feed(consult::testing::read_fixture("atom/api_error.xml")); }).code(),
            ErrorCode::kFeedParse);
}

struct Harness {
  TempDir dir;
  std::shared_ptr<CassetteTransport> cassettes =
      std::make_shared<CassetteTransport>(dir.path(), CassetteTransport::Mode::kReplay);
  ConnectorConfig config = [] {
    ConnectorConfig c;
    c.retry_backoff = std::chrono::milliseconds(0);
    return c;
  }();

  ArxivConnector connector(std::shared_ptr<MarkdownConverter> converter = nullptr) {
    return ArxivConnector(cassettes, config, std::move(converter));
  }
  void put(const std::string& url, int status, std::string body) {
    cassettes->store(url, HttpResponse{status, {}, std::move(body)});
  }
  void put_eprint(const std::string& id, std::string body) {
    put(config.eprint_url + id, 200, std::move(body));
  }
};

TEST(Search, ParsesRecordedFeedViaCassette) {
  Harness h;
  auto c = h.connector();
  h.put(c.search_url("ti:retrieval", 2), 200, consult::testing::read_fixture("atom/two_entries.xml"));
  const auto papers = c.search("ti:retrieval", 2);
  ASSERT_EQ(papers.size(), 2u);
  EXPECT_EQ(papers[0].title, "Retrieval-Augmented Generation for Knowledge-Intensive NLP Tasks");
  EXPECT_EQ(h.cassettes->access_count(), 1u);
}

TEST(Search, DeduplicatesAndCapsResults) {
  Harness h;
  auto c = h.connector();
  h.put(c.search_url("q", 2), 200,
        consult::testing::atom_feed({{"2301.00001v1", "A", "a"}, {"2301.00001v2", "A2", "a"},
                                     {"2301.00002v1", "B", "b"}, {"2301.00003v1", "C", "c"}}));
  const auto papers = c.search("q", 2);
  ASSERT_EQ(papers.size(), 2u);
  EXPECT_EQ(papers[0].id.base(), "2301.00001");
  EXPECT_EQ(papers[1].id.base(), "2301.00002");
}

TEST(Search, StatusAndArgumentErrors) {
  Harness h;
  auto c = h.connector();
  h.put(c.search_url("q", 5), 503, "busy");
  const auto e = capture([&] { c.search("q", 5); });
  EXPECT_EQ(e.code(), ErrorCode::kHttpStatus);
  EXPECT_EQ(e.details().front(), "503");
  EXPECT_EQ(capture([&] { c.search("", 5); }).code(), ErrorCode::kInvalidArgument);
  EXPECT_EQ(capture([&] { c.search("q", 0); }).code(), ErrorCode::kInvalidArgument);
  EXPECT_EQ(capture([&] { c.search("q", 101); }).code(), ErrorCode::kInvalidArgument);
  // Missing cassette is a transport failure, retried then surfaced.
  EXPECT_EQ(capture([&] { c.search("never recorded", 5); }).code(), ErrorCode::kTransport);
}

TEST(FetchSource, ConcatenatesTexMembersLexicographically) {
  Harness h;
  h.put_eprint("2401.00001", consult::testing::gzip(consult::testing::make_tar(
                                 {{"b.tex", "B"}, {"fig.png", "\x89PNG"}, {"a.tex", "A"}})));
  auto c = h.connector();
  const auto bundle = c.fetch_source(ArxivId::parse_or_throw("2401.00001"));
  EXPECT_EQ(bundle.kind, SourceKind::kLatexConcat);
  EXPECT_EQ(bundle.text, "%% FILE: a.tex\nA\n%% FILE: b.tex\nB\n");
  EXPECT_THAT(bundle.manifest, ElementsAre("a.tex", "b.tex"));
}

TEST(FetchSource, SingleMember) {
  Harness h;
  h.put_eprint("2401.00002", consult::testing::gzip(consult::testing::make_tar({{"main.tex", "\\section{x}"}})));
  const auto bundle = h.connector().fetch_source(ArxivId::parse_or_throw("2401.00002"));
  EXPECT_EQ(bundle.text, "%% FILE: main.tex\n\\section{x}\n");
  EXPECT_EQ(bundle.manifest.size(), 1u);
}

TEST(FetchSource, BareGzippedLatexFile) {
  Harness h;
  h.put_eprint("2401.00003", consult::testing::gzip("\\documentclass{article}\nbody"));
  const auto bundle = h.connector().fetch_source(ArxivId::parse_or_throw("2401.00003"));
  EXPECT_EQ(bundle.kind, SourceKind::kLatexConcat);
  EXPECT_THAT(bundle.manifest, ElementsAre("2401.00003.tex"));
}

TEST(FetchSource, FiguresOnlyFallsBackToMarkdown) {
  Harness h;
  h.put_eprint("2401.00004", consult::testing::gzip(consult::testing::make_tar({{"fig1.png", "png"}})));
  h.put(h.config.pdf_url + "2401.00004", 200, consult::testing::make_pdf("x"));
  auto converter = std::make_shared<CommandConverter>(std::vector<std::string>{"sh", "-c", "printf '# Title'", "sh"});
  const auto bundle = h.connector(converter).fetch_source(ArxivId::parse_or_throw("2401.00004"));
  EXPECT_EQ(bundle.kind, SourceKind::kMarkdown);
  EXPECT_EQ(bundle.text, "# Title");
}

TEST(FetchSource, FiguresOnlyWithoutConverterKeepsPdfBytes) {
  Harness h;
  h.put_eprint("2401.00005", consult::testing::gzip(consult::testing::make_tar({{"fig1.png", "png"}})));
  h.put(h.config.pdf_url + "2401.00005", 200, consult::testing::make_pdf("x"));
  const auto bundle = h.connector().fetch_source(ArxivId::parse_or_throw("2401.00005"));
  EXPECT_EQ(bundle.kind, SourceKind::kPdfBytes);
  EXPECT_EQ(bundle.bytes.rfind("%PDF", 0), 0u);
}

TEST(FetchSource, BothPathsFailingListsBothCauses) {
  Harness h;
  h.put_eprint("2401.00006", "garbage that is not latex");
  h.put(h.config.pdf_url + "2401.00006", 404, "not found");
  const auto e = capture([&] { h.connector().fetch_source(ArxivId::parse_or_throw("2401.00006")); });
  EXPECT_EQ(e.code(), ErrorCode::kSourceUnavailable);
  ASSERT_EQ(e.details().size(), 2u);
  EXPECT_THAT(e.details()[0], HasSubstr("not LaTeX"));
  EXPECT_THAT(e.details()[1], HasSubstr("404"));
}

TEST(FetchPdf, MagicNumberAndStatusMapping) {
  Harness h;
  h.put(h.config.pdf_url + "2401.00007", 200, consult::testing::make_pdf("ok"));
  h.put(h.config.pdf_url + "2401.00008", 404, "missing");
  h.put(h.config.pdf_url + "2401.00009", 200, "<html><body>error</body></html>");
  auto c = h.connector();
  EXPECT_EQ(c.fetch_pdf(ArxivId::parse_or_throw("2401.00007")).substr(0, 4), "%PDF");
  const auto not_found = capture([&] { c.fetch_pdf(ArxivId::parse_or_throw("2401.00008")); });
  EXPECT_EQ(not_found.code(), ErrorCode::kHttpStatus);
  EXPECT_EQ(not_found.details().front(), "404");
  EXPECT_EQ(capture([&] { c.fetch_pdf(ArxivId::parse_or_throw("2401.00009")); }).code(),
            ErrorCode::kNonPdfPayload);
}

TEST(ToMarkdown, HookContract) {
  CommandConverter echo({"sh", "-c", "printf '# Title'", "sh"});
  EXPECT_EQ(to_markdown("%PDF", &echo), "# Title");
  EXPECT_EQ(capture([] { to_markdown("%PDF", nullptr); }).code(), ErrorCode::kConversionUnavailable);
  CommandConverter failing({"sh", "-c", "echo 'cannot parse xref' >&2; exit 3", "sh"});
  const auto e = capture([&] { to_markdown("%PDF", &failing); });
  EXPECT_EQ(e.code(), ErrorCode::kConversionFailed);
  EXPECT_THAT(e.what(), HasSubstr("cannot parse xref"));
}

TEST(ToMarkdown, ConverterReceivesThePdfPath) {
  CommandConverter cat({"cat"});
  EXPECT_EQ(to_markdown("%PDF-bytes", &cat), "%PDF-bytes");
}

class FakeTransport : public HttpTransport {
 public:
  HttpResponse get(const std::string& url) override {
    ++calls;
    return {200, {{"content-type", "text/plain"}}, "body of " + url};
  }
  int calls = 0;
};

TEST(Transport, PolitenessDelaySpacesSameHostRequests) {
  auto inner = std::make_shared<FakeTransport>();
  PoliteTransport polite(inner, std::chrono::milliseconds(60));
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 3; ++i) polite.get("https://export.arxiv.org/api/query?i=" + std::to_string(i));
  const auto same_host = std::chrono::steady_clock::now() - start;
  EXPECT_GE(same_host, std::chrono::milliseconds(120));

  const auto start2 = std::chrono::steady_clock::now();
  polite.get("https://a.example/x");
  polite.get("https://b.example/x");
  EXPECT_LT(std::chrono::steady_clock::now() - start2, std::chrono::milliseconds(60));
}

TEST(Transport, CassetteRecordThenReplay) {
  TempDir dir;
  auto live = std::make_shared<FakeTransport>();
  CassetteTransport recorder(dir.path(), CassetteTransport::Mode::kRecord, live);
  const auto recorded = recorder.get("https://export.arxiv.org/e-print/2401.00001");
  EXPECT_EQ(live->calls, 1);

  CassetteTransport replay(dir.path(), CassetteTransport::Mode::kReplay);
  const auto replayed = replay.get("https://export.arxiv.org/e-print/2401.00001");
  EXPECT_EQ(replayed.body, recorded.body);
  EXPECT_EQ(replayed.status, 200);
  EXPECT_EQ(replayed.headers.at("content-type"), "text/plain");
  EXPECT_EQ(live->calls, 1);
}

TEST(Archive, LongNamesAndCorruption) {
  const std::string long_name = std::string(120, 'd') + "/section.tex";
  const auto members = read_tar(consult::testing::make_tar({{long_name, "S"}, {"x.tex", "X"}}));
  ASSERT_EQ(members.size(), 2u);
  EXPECT_EQ(members[0].name, long_name);
  EXPECT_EQ(members[1].content, "X");

  auto tar = consult::testing::make_tar({{"a.tex", "A"}});
  tar[10] ^= 0x1;
  EXPECT_FALSE(looks_like_tar(tar));
  EXPECT_EQ(capture([&] { read_tar(tar); }).code(), ErrorCode::kParseError);

  const auto gz = consult::testing::gzip(std::string(5000, 'z'));
  EXPECT_EQ(gunzip(gz), std::string(5000, 'z'));
  EXPECT_EQ(capture([&] { gunzip(gz.substr(0, gz.size() / 2)); }).code(), ErrorCode::kParseError);
}

TEST(Archive, ConcatenationConservesContent) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ArchiveMember> members;
    std::size_t expected = 0;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      const auto name = "sec" + std::to_string(rng() % 1000) + "_" + std::to_string(i) + ".tex";
      std::string content(rng() % 200, 'a' + static_cast<char>(i));
      expected += content.size() + marker_overhead(name);
      members.push_back({name, content});
    }
    members.push_back({"logo.pdf", "%PDF"});
    const auto concat = concat_latex(members);
    ASSERT_TRUE(concat);
    EXPECT_EQ(concat->text.size(), expected);
    EXPECT_TRUE(std::is_sorted(concat->manifest.begin(), concat->manifest.end()));
    EXPECT_EQ(concat->manifest.size(), static_cast<std::size_t>(n));
  }
  EXPECT_FALSE(concat_latex({{"a.png", "x"}}));
}

}  // namespace
}  // namespace consult::arxiv
