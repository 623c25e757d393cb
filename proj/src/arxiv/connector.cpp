#include "consult/arxiv/connector.hpp"

#include <set>
#include <thread>

#include <boost/process.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "consult/arxiv/archive.hpp"
#include "consult/arxiv/atom.hpp"
#include "consult/common/error.hpp"
#include "consult/common/storage.hpp"
#include "consult/common/text.hpp"

namespace consult::arxiv {

namespace fs = std::filesystem;
namespace bp = boost::process;

CommandConverter::CommandConverter(std::vector<std::string> argv) : argv_(std::move(argv)) {
  if (argv_.empty()) throw Error(ErrorCode::kInvalidArgument, "converter command is empty");
}

std::string CommandConverter::convert(std::string_view pdf) {
  const auto work = fs::temp_directory_path() / ("consult-md-" + random_id());
  fs::create_directories(work);
  const auto input = work / "paper.pdf";
  const auto out_path = work / "stdout.txt";
  const auto err_path = work / "stderr.txt";
  write_file_atomic(input, pdf);

  std::vector<std::string> args(argv_.begin() + 1, argv_.end());
  args.push_back(input.string());
  const auto exe = argv_[0].find('/') == std::string::npos ? bp::search_path(argv_[0])
                                                           : boost::filesystem::path(argv_[0]);
  int exit_code = -1;
  try {
    if (exe.empty()) throw std::runtime_error("executable not found: " + argv_[0]);
    exit_code = bp::system(exe, bp::args = args, bp::std_out > out_path.string(),
                           bp::std_err > err_path.string(), bp::std_in < bp::null);
  } catch (const std::exception& e) {
    fs::remove_all(work);
    throw Error(ErrorCode::kConversionFailed, fmt::format("could not run converter: {}", e.what()));
  }
  const auto stdout_text = fs::exists(out_path) ? read_file(out_path) : std::string();
  const auto stderr_text = fs::exists(err_path) ? read_file(err_path) : std::string();
  fs::remove_all(work);
  if (exit_code != 0) {
    throw Error(ErrorCode::kConversionFailed,
                fmt::format("converter exited with status {}: {}", exit_code, trim(stderr_text)),
                {stderr_text});
  }
  return stdout_text;
}

std::string to_markdown(std::string_view pdf, MarkdownConverter* converter) {
  if (converter == nullptr) {
    throw Error(ErrorCode::kConversionUnavailable, "no PDF-to-Markdown converter configured");
  }
  return converter->convert(pdf);
}

ArxivConnector::ArxivConnector(std::shared_ptr<HttpTransport> transport, ConnectorConfig config,
                               std::shared_ptr<MarkdownConverter> converter)
    : transport_(std::move(transport)), config_(std::move(config)), converter_(std::move(converter)) {}

HttpResponse ArxivConnector::get_with_retry(const std::string& url) {
  for (int attempt = 0;; ++attempt) {
    try {
      return transport_->get(url);
    } catch (const Error& e) {
      if (!e.retryable() || attempt >= config_.max_transport_retries) throw;
      spdlog::warn("arxiv transport failure for {} (attempt {}): {}", url, attempt + 1, e.what());
      std::this_thread::sleep_for(config_.retry_backoff * (attempt + 1));
    }
  }
}

std::string ArxivConnector::search_url(const std::string& query, int max_results) const {
  return fmt::format("{}?search_query={}&start=0&max_results={}", config_.query_url,
                     url_encode(query), max_results);
}

std::vector<PaperMetadata> ArxivConnector::search(const std::string& query, int max_results) {
  if (trim(query).empty()) throw Error(ErrorCode::kInvalidArgument, "search query is empty");
  if (max_results < 1 || max_results > config_.max_results_cap) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("max_results must be in [1, {}]", config_.max_results_cap));
  }
  const auto url = search_url(query, max_results);
  const auto response = get_with_retry(url);
  if (response.status != 200) {
    throw Error(ErrorCode::kHttpStatus, fmt::format("arXiv query returned HTTP {}", response.status),
                {std::to_string(response.status), url});
  }
  auto papers = parse_atom_feed(response.body);
  std::vector<PaperMetadata> unique;
  std::set<std::string> seen;
  for (auto& p : papers) {
    if (static_cast<int>(unique.size()) >= max_results) break;
    if (seen.insert(p.id.base()).second) unique.push_back(std::move(p));
  }
  return unique;
}

std::string ArxivConnector::fetch_pdf(const ArxivId& id) {
  const auto url = config_.pdf_url + id.canonical();
  const auto response = get_with_retry(url);
  if (response.status != 200) {
    throw Error(ErrorCode::kHttpStatus, fmt::format("PDF download returned HTTP {}", response.status),
                {std::to_string(response.status), url});
  }
  if (response.body.rfind("%PDF", 0) != 0) {
    throw Error(ErrorCode::kNonPdfPayload, fmt::format("payload from {} is not a PDF", url),
                {response.body.substr(0, 64)});
  }
  return response.body;
}

namespace {

std::optional<LatexConcat> latex_from_eprint(std::string_view body, const ArxivId& id,
                                             std::string& cause) {
  std::string payload = is_gzip(body) ? gunzip(body) : std::string(body);
  if (looks_like_tar(payload)) {
    auto concat = concat_latex(read_tar(payload));
    if (!concat) cause = "e-print archive has no .tex member";
    return concat;
  }
  if (payload.rfind("%PDF", 0) == 0) {
    cause = "e-print is a PDF-only submission";
    return std::nullopt;
  }
  if (looks_like_latex(payload)) {
    return concat_latex({{id.base().substr(id.base().find('/') + 1) + ".tex", std::move(payload)}});
  }
  cause = "e-print is a bare file that is not LaTeX";
  return std::nullopt;
}

}  // namespace

SourceBundle ArxivConnector::fetch_source(const ArxivId& id) {
  std::string latex_cause;
  try {
    const auto url = config_.eprint_url + id.canonical();
    const auto response = get_with_retry(url);
    if (response.status != 200) {
      latex_cause = fmt::format("e-print download returned HTTP {}", response.status);
    } else if (auto concat = latex_from_eprint(response.body, id, latex_cause)) {
      return {id, SourceKind::kLatexConcat, std::move(concat->text), {}, std::move(concat->manifest)};
    }
  } catch (const Error& e) {
    latex_cause = e.what();
  }

  std::string pdf;
  try {
    pdf = fetch_pdf(id);
  } catch (const Error& e) {
    throw Error(ErrorCode::kSourceUnavailable,
                fmt::format("no usable source for {}", id.canonical()),
                {"latex: " + latex_cause, std::string("pdf: ") + e.what()});
  }
  if (converter_) {
    try {
      return {id, SourceKind::kMarkdown, to_markdown(pdf, converter_.get()), {}, {}};
    } catch (const Error& e) {
      spdlog::warn("markdown conversion failed for {}: {}", id.canonical(), e.what());
    }
  }
  return {id, SourceKind::kPdfBytes, {}, std::move(pdf), {}};
}

}  // namespace consult::arxiv
