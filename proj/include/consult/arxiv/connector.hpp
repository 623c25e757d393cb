#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "consult/arxiv/transport.hpp"
#include "consult/arxiv/types.hpp"

namespace consult::arxiv {

// Pluggable PDF-to-Markdown hook; the connector ships no converter of its own.
class MarkdownConverter {
 public:
  virtual ~MarkdownConverter() = default;
  virtual std::string convert(std::string_view pdf) = 0;
};

// Runs an external program as `argv... <pdf-path>` and returns its stdout.
class CommandConverter : public MarkdownConverter {
 public:
  explicit CommandConverter(std::vector<std::string> argv);
  std::string convert(std::string_view pdf) override;

 private:
  std::vector<std::string> argv_;
};

// Returns the converter's output verbatim; kConversionUnavailable when no
// converter is configured.
std::string to_markdown(std::string_view pdf, MarkdownConverter* converter);

// What the retrieval and context stages need from a literature backend.
class PaperSource {
 public:
  virtual ~PaperSource() = default;
  virtual std::vector<PaperMetadata> search(const std::string& query, int max_results) = 0;
  virtual SourceBundle fetch_source(const ArxivId& id) = 0;
  virtual std::string fetch_pdf(const ArxivId& id) = 0;
};

struct ConnectorConfig {
  std::string query_url = "https://export.arxiv.org/api/query";
  std::string eprint_url = "https://export.arxiv.org/e-print/";
  std::string pdf_url = "https://arxiv.org/pdf/";
  int max_results_cap = 100;
  int max_transport_retries = 2;
  std::chrono::milliseconds retry_backoff{1000};
};

class ArxivConnector : public PaperSource {
 public:
  ArxivConnector(std::shared_ptr<HttpTransport> transport, ConnectorConfig config = {},
                 std::shared_ptr<MarkdownConverter> converter = nullptr);

  std::vector<PaperMetadata> search(const std::string& query, int max_results) override;

  // e-print first: a gzipped tar with .tex members (or a bare LaTeX file)
  // yields latex_concat. Otherwise the PDF is fetched and converted to
  // Markdown; without a working converter the PDF bytes are returned.
  SourceBundle fetch_source(const ArxivId& id) override;
  std::string fetch_pdf(const ArxivId& id) override;

  std::string search_url(const std::string& query, int max_results) const;

 private:
  HttpResponse get_with_retry(const std::string& url);

  std::shared_ptr<HttpTransport> transport_;
  ConnectorConfig config_;
  std::shared_ptr<MarkdownConverter> converter_;
};

}  // namespace consult::arxiv
