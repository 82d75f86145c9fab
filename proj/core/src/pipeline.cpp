#include "streetnet/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "streetnet/format.hpp"
#include "streetnet/graphml.hpp"
#include "streetnet/resilience.hpp"

namespace streetnet::pipeline {
namespace {

std::string cell(std::optional<double> v) {
  return v && std::isfinite(*v) ? format_number(*v) : std::string();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string current;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(current);
      current.clear();
    } else if (ch != '\r') {
      current += ch;
    }
  }
  out.push_back(current);
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

osm::RawOsmData clip_to_boundary(const osm::RawOsmData& data, const geo::PreparedBoundary& area) {
  osm::RawOsmData out;
  out.provenance = data.provenance;
  out.unresolved_refs = data.unresolved_refs;
  std::map<osm::OsmId, bool> inside;
  for (const auto& [id, node] : data.nodes) inside[id] = area.contains(node.location);
  for (const osm::OsmWay& way : data.ways) {
    const bool touches = std::any_of(way.node_refs.begin(), way.node_refs.end(),
                                     [&](osm::OsmId ref) { return inside[ref]; });
    if (!touches) continue;
    for (osm::OsmId ref : way.node_refs) out.nodes.emplace(ref, data.nodes.at(ref));
    out.ways.push_back(way);
  }
  return out;
}

std::string nodes_csv(const net::StreetGraph& g) {
  std::string out = "id,lat,lon,streets_per_node\n";
  for (const auto& [id, attr] : g.nodes) {
    out += std::to_string(id) + ',' + format_number(attr.location.lat) + ',' +
           format_number(attr.location.lon) + ',' + std::to_string(attr.streets_per_node) + '\n';
  }
  return out;
}

std::string edges_csv(const net::StreetGraph& g) {
  std::string out = "edge_id,u,v,length_m,oneway,reversed_twin\n";
  for (const net::Edge& e : g.edges) {
    out += std::to_string(e.id) + ',' + std::to_string(e.u) + ',' + std::to_string(e.v) + ',' +
           format_number(e.length_m) + ',' + (e.oneway ? "true" : "false") + ',' +
           (e.reversed_twin ? std::to_string(*e.reversed_twin) : std::string()) + '\n';
  }
  return out;
}

std::string status_json(const std::string& site_id, const std::optional<ErrorCode>& code,
                        const std::string& message) {
  nlohmann::ordered_json j;
  j["site_id"] = site_id;
  j["status"] = code ? "error" : "ok";
  j["error"] = code ? nlohmann::ordered_json(std::string(to_string(*code))) : nlohmann::ordered_json(nullptr);
  j["message"] = message;
  return j.dump(2) + "\n";
}

constexpr std::size_t kMinFitSamples = 30;

std::vector<distfit::FitResult> fit_all(const std::vector<double>& lengths) {
  std::vector<distfit::FitResult> fits;
  for (distfit::Family f : distfit::kAllFamilies) fits.push_back(distfit::fit_family(lengths, f));
  return fits;
}

std::optional<distfit::Family> best_of(std::vector<distfit::FitResult> fits) {
  if (fits.empty()) return std::nullopt;
  std::erase_if(fits, [](const distfit::FitResult& r) { return !r.converged || !std::isfinite(r.aic); });
  if (fits.empty()) return std::nullopt;
  distfit::rank_fits(fits);
  return fits.front().family;
}

ErrorCode classify(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return err->code();
  return ErrorCode::IoError;
}

AncSetting parse_anc(const std::string& s) {
  if (s == "off") return AncSetting::Off;
  if (s == "exact") return AncSetting::Exact;
  if (s == "sampled") return AncSetting::Sampled;
  throw Error(ErrorCode::ConfigError, "anc must be off, exact or sampled");
}

measures::BetweennessWeight parse_weight(const std::string& s) {
  if (s == "length") return measures::BetweennessWeight::Length;
  if (s == "hops") return measures::BetweennessWeight::Hops;
  throw Error(ErrorCode::ConfigError, "betweenness must be length or hops");
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  const std::filesystem::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("manifest is not valid JSON: ") + e.what());
  }

  CorpusManifest m;
  try {
    m.output_dir = resolve(j.value("output_dir", "out"));
    const auto opts = j.value("options", nlohmann::json::object());
    PipelineOptions& o = m.options;
    o.anc = parse_anc(opts.value("anc", "off"));
    o.measures.betweenness.weight = parse_weight(opts.value("betweenness", "length"));
    o.measures.pagerank.damping = opts.value("pagerank_damping", 0.85);
    o.sample_limit = opts.value("sample_limit", std::uint64_t{50'000});
    o.seed = opts.value("seed", std::uint64_t{0});
    o.jobs = opts.value("jobs", 0u);
    o.overpass.endpoint = opts.value("endpoint", io::default_endpoint());
    o.overpass.offline = opts.value("offline", false);
    o.overpass.timeout_s = opts.value("timeout_s", 180.0);
    o.overpass.retries = opts.value("retries", 3);
    o.overpass.cache_dir = resolve(opts.value("cache_dir", ".streetnet-cache"));

    std::set<std::string> seen;
    for (const auto& s : j.at("sites")) {
      SiteSpec site;
      site.site_id = s.at("site_id").get<std::string>();
      if (site.site_id.empty() || site.site_id.find('/') != std::string::npos) {
        throw Error(ErrorCode::ConfigError, "invalid site_id '" + site.site_id + "'");
      }
      if (!seen.insert(site.site_id).second) {
        throw Error(ErrorCode::ConfigError, "duplicate site_id '" + site.site_id + "'");
      }
      site.boundary = geo::read_geojson_boundary(read_text_file(resolve(s.at("boundary").get<std::string>())));
      site.buffer_m = s.value("buffer_m", 500.0);
      if (!(site.buffer_m >= 0.0)) throw Error(ErrorCode::ConfigError, "buffer_m must be >= 0");
      site.filter = osm::WayFilter::drivable(s.value("include_service_roads", false));
      const std::string source = s.value("source", "overpass");
      if (source == "overpass") {
        site.source = SourceKind::Overpass;
      } else {
        site.source = SourceKind::LocalFile;
        site.source_path = resolve(source);
      }
      m.sites.push_back(std::move(site));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("manifest structure: ") + e.what());
  }
  if (m.sites.empty()) throw Error(ErrorCode::ConfigError, "manifest lists no sites");
  return m;
}

SiteOutput process_site(const SiteSpec& spec, const PipelineOptions& options) {
  const geo::MultiPolygon buffered = geo::buffer(spec.boundary, spec.buffer_m);
  const geo::PreparedBoundary buffered_area(buffered);

  osm::RawOsmData raw;
  if (spec.source == SourceKind::LocalFile) {
    raw = clip_to_boundary(osm::resolve(osm::load_file(spec.source_path.string())), buffered_area);
  } else {
    raw = osm::resolve(io::overpass_fetch(buffered, spec.filter, options.overpass).data);
  }
  const osm::FilterResult filtered = osm::filter_drivable(raw, spec.filter);

  net::StreetGraph g = net::simplify(net::build_graph(filtered.data));
  net::compute_streets_per_node(g);
  g = net::truncate(g, geo::PreparedBoundary(spec.boundary));

  SiteOutput out;
  out.report = measures::compute_measures(g, geo::area_km2(spec.boundary), options.measures);
  if (options.anc != AncSetting::Off && g.node_count() >= 2) {
    resilience::AncOptions anc;
    anc.mode = options.anc == AncSetting::Exact ? resilience::AncMode::Exact : resilience::AncMode::Sampled;
    anc.sample_limit = options.sample_limit;
    anc.seed = options.seed;
    anc.threads = options.measures.betweenness.threads;
    out.report.avg_node_connectivity = resilience::average_node_connectivity(g, anc).value;
  }
  for (const net::Edge& e : net::to_undirected(g).edges) {
    if (e.length_m > 0.0) out.segment_lengths.push_back(e.length_m);
  }
  if (out.segment_lengths.size() >= kMinFitSamples) out.fits = fit_all(out.segment_lengths);
  out.graph = std::move(g);
  return out;
}

SiteOutput run_site(const SiteSpec& spec, const PipelineOptions& options,
                    const std::filesystem::path& output_dir) {
  const std::filesystem::path dir = output_dir / spec.site_id;
  std::filesystem::create_directories(dir);
  std::filesystem::remove(dir / "measures.json");
  std::filesystem::remove(dir / "fits.json");
  try {
    SiteOutput out = process_site(spec, options);
    write_text_file(dir / "graph.graphml", io::export_graphml(out.graph));
    write_text_file(dir / "nodes.csv", nodes_csv(out.graph));
    write_text_file(dir / "edges.csv", edges_csv(out.graph));
    write_text_file(dir / "measures.json", out.report.to_json() + "\n");
    if (!out.fits.empty()) write_text_file(dir / "fits.json", fit_results_json(out.fits));
    write_text_file(dir / "status.json", status_json(spec.site_id, std::nullopt, ""));
    return out;
  } catch (const std::exception& e) {
    write_text_file(dir / "status.json", status_json(spec.site_id, classify(e), e.what()));
    throw;
  }
}

CorpusSummary summarize_corpus(const std::vector<SiteRecord>& records) {
  CorpusSummary s;
  std::vector<const measures::MeasureReport*> ok;
  for (const SiteRecord& r : records) {
    if (r.report) {
      ok.push_back(&*r.report);
      ++s.sites_ok;
    } else {
      ++s.sites_failed;
    }
  }

  for (std::string_view name : measures::MeasureReport::field_names()) {
    std::vector<double> values;
    for (const measures::MeasureReport* rep : ok) {
      for (const auto& f : rep->fields()) {
        if (f.name == name && f.value && std::isfinite(*f.value)) values.push_back(*f.value);
      }
    }
    SummaryRow row{std::string(name), std::nullopt};
    if (!values.empty()) row.stats = distfit::summarize(values);
    s.rows.push_back(std::move(row));
  }

  std::vector<double> xs, ys;
  for (const measures::MeasureReport* rep : ok) {
    xs.push_back(static_cast<double>(rep->n));
    ys.push_back(rep->total_street_length_km);
  }
  try {
    s.regression = distfit::linear_regression(xs, ys);
  } catch (const Error&) {
    s.regression.reset();
  }

  std::size_t fitted = 0;
  for (distfit::Family f : distfit::kAllFamilies) s.fit_counts[std::string(distfit::to_string(f))] = 0;
  for (const SiteRecord& r : records) {
    if (r.report && r.best_family) {
      ++s.fit_counts[std::string(distfit::to_string(*r.best_family))];
      ++fitted;
    }
  }
  for (const auto& [family, count] : s.fit_counts) {
    s.fit_breakdown[family] = fitted ? 100.0 * static_cast<double>(count) / static_cast<double>(fitted) : 0.0;
  }
  return s;
}

CorpusSummary run_corpus(const CorpusManifest& manifest) {
  const std::size_t count = manifest.sites.size();
  std::vector<SiteRecord> records(count);
  unsigned jobs = manifest.options.jobs ? manifest.options.jobs : std::thread::hardware_concurrency();
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));

  PipelineOptions options = manifest.options;
  if (jobs > 1) options.measures.betweenness.threads = 1;

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      const SiteSpec& spec = manifest.sites[i];
      SiteRecord& rec = records[i];
      rec.site_id = spec.site_id;
      try {
        SiteOutput out = run_site(spec, options, manifest.output_dir);
        rec.report = out.report;
        rec.best_family = best_of(out.fits);
      } catch (const std::exception& e) {
        rec.error = classify(e);
        rec.message = e.what();
      } catch (...) {
        rec.error = ErrorCode::IoError;
        rec.message = "unknown failure";
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }

  CorpusSummary summary = summarize_corpus(records);
  const auto& out = manifest.output_dir;
  write_text_file(out / "measures.csv", measures_csv(records));
  write_text_file(out / "summary.csv", summary_csv(summary));
  write_text_file(out / "regression.json", regression_json(summary));
  write_text_file(out / "fits.csv", fits_breakdown_csv(summary));

  std::string status = "site_id,status,error,message\n";
  for (const SiteRecord& r : records) {
    status += csv_escape(r.site_id) + ',' + (r.error ? "error" : "ok") + ',' +
              (r.error ? std::string(to_string(*r.error)) : std::string()) + ',' + csv_escape(r.message) + '\n';
  }
  write_text_file(out / "status.csv", status);
  return summary;
}

std::string measures_csv(const std::vector<SiteRecord>& records) {
  std::string out = "site_id," + measures::MeasureReport::csv_header() + '\n';
  for (const SiteRecord& r : records) {
    if (!r.report) continue;
    out += csv_escape(r.site_id) + ',' + r.report->csv_row() + '\n';
  }
  return out;
}

std::vector<SiteRecord> read_measures_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedInput, "measures.csv is empty");
  const std::vector<std::string> header = split_csv_line(line);
  if (header.empty() || header.front() != "site_id") {
    throw Error(ErrorCode::MalformedInput, "measures.csv must start with a site_id column");
  }
  std::vector<SiteRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::MalformedInput, "measures.csv line " + std::to_string(line_no) +
                                                 " has " + std::to_string(cells.size()) + " cells");
    }
    SiteRecord rec;
    rec.site_id = cells[0];
    measures::MeasureReport report;
    for (std::size_t i = 1; i < header.size(); ++i) {
      std::optional<double> value;
      if (!cells[i].empty()) {
        char* end = nullptr;
        const double v = std::strtod(cells[i].c_str(), &end);
        if (end == cells[i].c_str()) {
          throw Error(ErrorCode::MalformedInput, "bad number '" + cells[i] + "' on line " + std::to_string(line_no));
        }
        value = v;
      }
      report.set_field(header[i], value);
    }
    rec.report = report;
    records.push_back(std::move(rec));
  }
  return records;
}

std::string summary_csv(const CorpusSummary& summary) {
  std::string out = "measure,mu,sigma,min,median,max,D,count\n";
  for (const SummaryRow& row : summary.rows) {
    out += row.measure;
    if (row.stats) {
      const distfit::StatsSummary& s = *row.stats;
      out += ',' + cell(s.mu) + ',' + cell(s.sigma) + ',' + cell(s.min) + ',' + cell(s.median) + ',' +
             cell(s.max) + ',' + cell(s.dispersion) + ',' + std::to_string(s.count);
    } else {
      out += ",,,,,,,0";
    }
    out += '\n';
  }
  return out;
}

std::string regression_json(const CorpusSummary& summary) {
  nlohmann::ordered_json j;
  j["x"] = "n";
  j["y"] = "total_street_length_km";
  j["sites"] = summary.sites_ok;
  if (summary.regression) {
    j["slope"] = summary.regression->slope;
    j["intercept"] = summary.regression->intercept;
    j["r_squared"] = summary.regression->r_squared;
  } else {
    j["slope"] = nullptr;
    j["intercept"] = nullptr;
    j["r_squared"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::string fits_breakdown_csv(const CorpusSummary& summary) {
  std::string out = "family,best_count,percent\n";
  for (distfit::Family f : distfit::kAllFamilies) {
    const std::string name(distfit::to_string(f));
    out += name + ',' + std::to_string(summary.fit_counts.at(name)) + ',' +
           format_number(summary.fit_breakdown.at(name)) + '\n';
  }
  return out;
}

std::string fit_results_csv(const std::vector<distfit::FitResult>& fits) {
  std::vector<distfit::FitResult> ranked = fits;
  std::stable_partition(ranked.begin(), ranked.end(), [](const auto& r) { return r.converged; });
  const auto split = std::find_if(ranked.begin(), ranked.end(), [](const auto& r) { return !r.converged; });
  std::vector<distfit::FitResult> good(ranked.begin(), split);
  distfit::rank_fits(good);
  std::copy(good.begin(), good.end(), ranked.begin());

  std::string out = "rank,family,k,log_likelihood,aic,converged,params\n";
  std::size_t rank = 0;
  for (const distfit::FitResult& r : ranked) {
    std::string params;
    for (const auto& [name, value] : r.params) {
      if (!params.empty()) params += ';';
      params += name + '=' + format_number(value);
    }
    out += (r.converged ? std::to_string(++rank) : std::string()) + ',' + std::string(distfit::to_string(r.family)) +
           ',' + std::to_string(r.k) + ',' + format_number(r.log_likelihood) + ',' + format_number(r.aic) + ',' +
           (r.converged ? "true" : "false") + ',' + params + '\n';
  }
  return out;
}

std::string fit_results_json(const std::vector<distfit::FitResult>& fits) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const distfit::FitResult& r : fits) {
    nlohmann::ordered_json j;
    j["family"] = distfit::to_string(r.family);
    j["params"] = r.params;
    j["log_likelihood"] = std::isfinite(r.log_likelihood) ? nlohmann::ordered_json(r.log_likelihood) : nlohmann::ordered_json();
    j["k"] = r.k;
    j["aic"] = std::isfinite(r.aic) ? nlohmann::ordered_json(r.aic) : nlohmann::ordered_json();
    j["converged"] = r.converged;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

}  // namespace streetnet::pipeline
