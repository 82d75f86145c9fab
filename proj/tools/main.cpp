// streetnet command-line interface.
//
// Exit codes: 0 success, 1 one or more sites failed (including the single site of
// build/measure/fit), 2 usage or configuration error.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "streetnet/distfit.hpp"
#include "streetnet/graphml.hpp"
#include "streetnet/measures.hpp"
#include "streetnet/overpass.hpp"
#include "streetnet/pipeline.hpp"
#include "streetnet/resilience.hpp"

namespace fs = std::filesystem;
using namespace streetnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;
constexpr int kExitFailure = 1;

struct CommonArgs {
  std::string boundary;
  double buffer_m = 500.0;
  bool include_service_roads = false;
  std::string betweenness = "length";
  std::string anc = "off";
  std::uint64_t sample_limit = 50'000;
  std::uint64_t seed = 0;
  std::string endpoint;
  bool offline = false;
  std::string cache_dir = ".streetnet-cache";
  std::string input;
  std::string output;
  std::string manifest;
  unsigned jobs = 0;
};

void emit(const std::string& text, const std::string& output) {
  if (output.empty() || output == "-") {
    std::cout << text;
  } else {
    pipeline::write_text_file(output, text);
  }
}

geo::MultiPolygon load_boundary(const std::string& path) {
  if (path.empty()) throw Error(ErrorCode::ConfigError, "--boundary is required");
  return geo::read_geojson_boundary(pipeline::read_text_file(path));
}

io::OverpassOptions overpass_options(const CommonArgs& a) {
  io::OverpassOptions o;
  if (!a.endpoint.empty()) o.endpoint = a.endpoint;
  o.offline = a.offline;
  o.cache_dir = a.cache_dir;
  return o;
}

pipeline::PipelineOptions pipeline_options(const CommonArgs& a) {
  pipeline::PipelineOptions o;
  o.measures.betweenness.weight =
      a.betweenness == "hops" ? measures::BetweennessWeight::Hops : measures::BetweennessWeight::Length;
  o.anc = a.anc == "exact"     ? pipeline::AncSetting::Exact
          : a.anc == "sampled" ? pipeline::AncSetting::Sampled
                               : pipeline::AncSetting::Off;
  o.sample_limit = a.sample_limit;
  o.seed = a.seed;
  o.jobs = a.jobs;
  o.overpass = overpass_options(a);
  return o;
}

bool is_graphml(const std::string& path) {
  if (fs::path(path).extension() == ".graphml") return true;
  return pipeline::read_text_file(path).find("<graphml") != std::string::npos;
}

pipeline::SiteSpec local_site(const CommonArgs& a, geo::MultiPolygon boundary) {
  pipeline::SiteSpec site;
  site.site_id = fs::path(a.input).stem().string();
  site.boundary = std::move(boundary);
  site.buffer_m = a.buffer_m;
  site.filter = osm::WayFilter::drivable(a.include_service_roads);
  site.source = pipeline::SourceKind::LocalFile;
  site.source_path = a.input;
  return site;
}

int cmd_fetch(const CommonArgs& a) {
  const geo::MultiPolygon buffered = geo::buffer(load_boundary(a.boundary), a.buffer_m);
  const osm::WayFilter filter = osm::WayFilter::drivable(a.include_service_roads);
  const io::OverpassOptions options = overpass_options(a);
  const io::FetchResult r = io::overpass_fetch(buffered, filter, options);
  const fs::path cached = options.cache_dir / (r.cache_key + ".json");
  if (!a.output.empty()) fs::copy_file(cached, a.output, fs::copy_options::overwrite_existing);
  std::cerr << "fetched " << r.data.nodes.size() << " nodes, " << r.data.ways.size() << " ways"
            << (r.from_cache ? " (cache)" : "") << "; cache entry " << cached.string() << '\n';
  return kExitOk;
}

int cmd_build(const CommonArgs& a) {
  net::StreetGraph g;
  if (!a.boundary.empty()) {
    g = pipeline::process_site(local_site(a, load_boundary(a.boundary)), [] {
          pipeline::PipelineOptions o;
          o.measures.compute_betweenness = false;
          return o;
        }()).graph;
  } else {
    const osm::RawOsmData raw = osm::resolve(osm::load_file(a.input));
    g = net::simplify(net::build_graph(osm::filter_drivable(raw, osm::WayFilter::drivable(a.include_service_roads)).data));
    net::compute_streets_per_node(g);
  }
  emit(io::export_graphml(g), a.output);
  return kExitOk;
}

int cmd_measure(const CommonArgs& a) {
  const geo::MultiPolygon boundary = load_boundary(a.boundary);
  const pipeline::PipelineOptions options = pipeline_options(a);
  measures::MeasureReport report;
  if (is_graphml(a.input)) {
    net::StreetGraph g = io::import_graphml(pipeline::read_text_file(a.input));
    if (std::any_of(g.nodes.begin(), g.nodes.end(),
                    [](const auto& kv) { return kv.second.streets_per_node == net::kStreetsUnset; })) {
      net::compute_streets_per_node(g);
    }
    report = measures::compute_measures(g, geo::area_km2(boundary), options.measures);
    if (options.anc != pipeline::AncSetting::Off) {
      resilience::AncOptions anc;
      anc.mode = options.anc == pipeline::AncSetting::Exact ? resilience::AncMode::Exact
                                                            : resilience::AncMode::Sampled;
      anc.sample_limit = options.sample_limit;
      anc.seed = options.seed;
      report.avg_node_connectivity = resilience::average_node_connectivity(g, anc).value;
    }
  } else {
    report = pipeline::process_site(local_site(a, boundary), options).report;
  }
  emit(report.to_json() + "\n", a.output);
  return kExitOk;
}

int cmd_fit(const CommonArgs& a) {
  const net::StreetGraph g = net::to_undirected(io::import_graphml(pipeline::read_text_file(a.input)));
  std::vector<double> lengths;
  for (const net::Edge& e : g.edges) {
    if (e.length_m > 0.0) lengths.push_back(e.length_m);
  }
  std::vector<distfit::FitResult> fits;
  for (distfit::Family f : distfit::kAllFamilies) fits.push_back(distfit::fit_family(lengths, f));
  emit(pipeline::fit_results_csv(fits), a.output);
  return kExitOk;
}

int cmd_batch(const CommonArgs& a, const CLI::App& sub) {
  pipeline::CorpusManifest manifest = pipeline::load_manifest(a.manifest);
  if (!a.output.empty()) manifest.output_dir = a.output;
  if (sub.count("--jobs")) manifest.options.jobs = a.jobs;
  if (sub.count("--offline")) manifest.options.overpass.offline = true;
  if (!a.endpoint.empty()) manifest.options.overpass.endpoint = a.endpoint;
  if (sub.count("--cache-dir")) manifest.options.overpass.cache_dir = a.cache_dir;
  if (sub.count("--seed")) manifest.options.seed = a.seed;
  if (sub.count("--sample-limit")) manifest.options.sample_limit = a.sample_limit;
  if (sub.count("--anc")) manifest.options.anc = pipeline_options(a).anc;
  if (sub.count("--betweenness")) manifest.options.measures.betweenness.weight = pipeline_options(a).measures.betweenness.weight;

  const pipeline::CorpusSummary summary = pipeline::run_corpus(manifest);
  std::cerr << summary.sites_ok << " sites ok, " << summary.sites_failed << " failed; outputs in "
            << manifest.output_dir.string() << '\n';
  return summary.sites_failed ? kExitPartial : kExitOk;
}

int cmd_stats(const CommonArgs& a) {
  const auto records = pipeline::read_measures_csv(pipeline::read_text_file(a.input));
  const pipeline::CorpusSummary summary = pipeline::summarize_corpus(records);
  const fs::path dir = a.output.empty() ? fs::path(".") : fs::path(a.output);
  pipeline::write_text_file(dir / "summary.csv", pipeline::summary_csv(summary));
  pipeline::write_text_file(dir / "regression.json", pipeline::regression_json(summary));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Street network acquisition, measurement and corpus statistics"};
  app.require_subcommand(1);
  CommonArgs a;

  const auto add_boundary = [&](CLI::App* s) {
    s->add_option("--boundary", a.boundary, "Boundary GeoJSON (Polygon or MultiPolygon)")->check(CLI::ExistingFile);
    s->add_option("--buffer-m", a.buffer_m, "Buffer distance in meters")->check(CLI::NonNegativeNumber);
    s->add_flag("--include-service-roads", a.include_service_roads, "Keep highway=service ways");
  };
  const auto add_network = [&](CLI::App* s) {
    s->add_option("--endpoint", a.endpoint, "Overpass endpoint (env " + std::string(io::kEndpointEnvVar) + ")");
    s->add_flag("--offline", a.offline, "Serve only from the cache");
    s->add_option("--cache-dir", a.cache_dir, "Response cache directory");
  };
  const auto add_measure = [&](CLI::App* s) {
    s->add_option("--betweenness", a.betweenness, "Betweenness weight")->check(CLI::IsMember({"length", "hops"}));
    s->add_option("--anc", a.anc, "Average node connectivity mode")->check(CLI::IsMember({"off", "exact", "sampled"}));
    s->add_option("--sample-limit", a.sample_limit, "Pairs sampled for ANC");
    s->add_option("--seed", a.seed, "Sampling seed");
  };

  CLI::App* fetch = app.add_subcommand("fetch", "Download the drivable network within a buffered boundary into the cache");
  add_boundary(fetch);
  add_network(fetch);
  fetch->add_option("-o,--output", a.output, "Copy the raw response here");

  CLI::App* build = app.add_subcommand("build", "Build a simplified graph from raw OSM data and write GraphML");
  build->add_option("--input", a.input, "OSM XML (.osm, .osm.gz) or Overpass JSON")->required()->check(CLI::ExistingFile);
  add_boundary(build);
  build->add_option("-o,--output", a.output, "GraphML output (stdout if omitted)");

  CLI::App* measure = app.add_subcommand("measure", "Compute the measure report for GraphML or raw OSM data");
  measure->add_option("--input", a.input, "GraphML or raw OSM file")->required()->check(CLI::ExistingFile);
  add_boundary(measure);
  add_measure(measure);
  measure->add_option("-o,--output", a.output, "JSON output (stdout if omitted)");

  CLI::App* fit = app.add_subcommand("fit", "Fit candidate distributions to street segment lengths");
  fit->add_option("--input", a.input, "GraphML file")->required()->check(CLI::ExistingFile);
  fit->add_option("-o,--output", a.output, "CSV output (stdout if omitted)");

  CLI::App* batch = app.add_subcommand("batch", "Run every site of a manifest and write corpus outputs");
  batch->add_option("--manifest", a.manifest, "Corpus manifest JSON")->required()->check(CLI::ExistingFile);
  batch->add_option("--jobs", a.jobs, "Sites processed concurrently (0 = cores)");
  batch->add_option("-o,--output", a.output, "Override the manifest's output directory");
  add_network(batch);
  add_measure(batch);

  CLI::App* stats = app.add_subcommand("stats", "Summarize a measures.csv into summary.csv and regression.json");
  stats->add_option("--input", a.input, "measures.csv")->required()->check(CLI::ExistingFile);
  stats->add_option("-o,--output", a.output, "Output directory (default: current directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fetch) return cmd_fetch(a);
    if (*build) return cmd_build(a);
    if (*measure) return cmd_measure(a);
    if (*fit) return cmd_fit(a);
    if (*batch) return cmd_batch(a, *batch);
    if (*stats) return cmd_stats(a);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
