#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "streetnet/distfit.hpp"
#include "streetnet/error.hpp"
#include "streetnet/geo.hpp"
#include "streetnet/graph.hpp"
#include "streetnet/measures.hpp"
#include "streetnet/osm.hpp"
#include "streetnet/overpass.hpp"

namespace streetnet::pipeline {

enum class SourceKind { Overpass, LocalFile };

struct SiteSpec {
  std::string site_id;
  geo::MultiPolygon boundary;
  double buffer_m = 500.0;
  osm::WayFilter filter = osm::WayFilter::drivable();
  SourceKind source = SourceKind::Overpass;
  std::filesystem::path source_path;  // LocalFile only
};

enum class AncSetting { Off, Exact, Sampled };

struct PipelineOptions {
  measures::MeasureOptions measures;
  AncSetting anc = AncSetting::Off;
  std::uint64_t sample_limit = 50'000;
  std::uint64_t seed = 0;
  /// Sites processed concurrently; 0 means the number of hardware threads.
  unsigned jobs = 0;
  io::OverpassOptions overpass;
};

struct CorpusManifest {
  std::vector<SiteSpec> sites;
  std::filesystem::path output_dir;
  PipelineOptions options;
};

/// Reads a JSON manifest. Relative paths are resolved against the manifest's directory.
/// Throws ConfigError for duplicate site ids, negative buffers or missing fields.
CorpusManifest load_manifest(const std::filesystem::path& path);

struct SiteOutput {
  net::StreetGraph graph;
  measures::MeasureReport report;
  /// Lengths of the undirected street segments, for distribution fitting.
  std::vector<double> segment_lengths;
  /// One fit per family; empty when there are fewer than 30 positive segment lengths.
  std::vector<distfit::FitResult> fits;
};

/// Buffers the boundary, loads and filters the data, builds, simplifies, counts streets per
/// node on the buffered network, truncates to the original boundary and measures. Local files
/// are clipped to ways with at least one node in the buffered boundary, matching what an
/// Overpass polygon query returns.
SiteOutput process_site(const SiteSpec& spec, const PipelineOptions& options);

/// process_site() plus persistence under output_dir/site_id/: graph.graphml, nodes.csv,
/// edges.csv, measures.json, fits.json and status.json. Errors propagate after status.json
/// records them.
SiteOutput run_site(const SiteSpec& spec, const PipelineOptions& options,
                    const std::filesystem::path& output_dir);

struct SiteRecord {
  std::string site_id;
  std::optional<measures::MeasureReport> report;
  std::optional<distfit::Family> best_family;
  std::optional<ErrorCode> error;
  std::string message;
};

struct SummaryRow {
  std::string measure;
  std::optional<distfit::StatsSummary> stats;  // empty when no site defines the measure
};

struct CorpusSummary {
  std::vector<SummaryRow> rows;  // one per MeasureReport field, canonical order
  std::optional<distfit::RegressionResult> regression;  // total street length vs node count
  std::map<std::string, double> fit_breakdown;          // family -> percent of fitted sites
  std::map<std::string, std::size_t> fit_counts;
  std::size_t sites_ok = 0;
  std::size_t sites_failed = 0;
};

/// Aggregates successful site reports into the summary table and L-vs-n regression.
CorpusSummary summarize_corpus(const std::vector<SiteRecord>& records);

/// Runs every site on a bounded pool; a failing site is recorded and the batch continues.
/// Writes measures.csv, summary.csv, regression.json, fits.csv and status.csv to output_dir.
CorpusSummary run_corpus(const CorpusManifest& manifest);

std::string measures_csv(const std::vector<SiteRecord>& records);
std::vector<SiteRecord> read_measures_csv(std::string_view text);
std::string summary_csv(const CorpusSummary& summary);
std::string regression_json(const CorpusSummary& summary);
std::string fits_breakdown_csv(const CorpusSummary& summary);
/// One row per fitted family: rank, family, k, log_likelihood, aic, converged, params.
std::string fit_results_csv(const std::vector<distfit::FitResult>& fits);
std::string fit_results_json(const std::vector<distfit::FitResult>& fits);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace streetnet::pipeline
