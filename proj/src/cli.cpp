#include "flowph/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "flowph/denoise.hpp"
#include "flowph/errors.hpp"
#include "flowph/filtration.hpp"
#include "flowph/io.hpp"
#include "flowph/neighborhoods.hpp"
#include "flowph/persistence.hpp"
#include "flowph/recurrence.hpp"
#include "flowph/signal_model.hpp"
#include "flowph/sweep.hpp"

namespace flowph::cli {

namespace {

namespace fs = std::filesystem;

struct CloudSource {
  std::string path;
  std::vector<std::string> columns;
  std::string time_column;
  std::string phase_column;
  double rate = 0.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--in", path, "Point-cloud CSV")->required();
    cmd->add_option("--columns", columns, "Value columns (names or 0-based positions)")->delimiter(',');
    cmd->add_option("--time-column", time_column, "Time column (default t)");
    cmd->add_option("--phase-column", phase_column, "Phase column (default phase, if present)");
    cmd->add_option("--rate", rate, "Sampling rate in Hz instead of a time column");
  }

  io::LoadedCloud load() const {
    io::ColumnMap map;
    map.values = columns;
    if (!time_column.empty()) map.time = time_column;
    if (!phase_column.empty()) map.phase = phase_column;
    if (rate > 0.0) map.rate_hz = rate;
    return io::cloud_from_table(io::read_csv(path), map);
  }
};

struct NeighborhoodOptions {
  std::size_t tau = 3;
  std::size_t k = 15;

  void attach(CLI::App* cmd) {
    cmd->add_option("--tau", tau, "Temporal half-width of local neighbourhoods")->capture_default_str();
    cmd->add_option("--k", k, "Spatial neighbours of local neighbourhoods")->capture_default_str();
  }

  NeighborhoodSpec spec() const { return {tau, k}; }
};

fs::path suffixed(const std::string& prefix, const std::string& suffix) { return fs::path(prefix + suffix); }

// ---------------------------------------------------------------------------
// generate

struct GenerateOptions {
  std::string kind;
  std::string out;
  std::uint64_t seed = 0;
  std::optional<double> snr_db;
  std::vector<double> noise_sigma;
  ChirpParams chirp{};
  HamiltonianParams hamiltonian{};
  std::size_t skip = 0;
};

int cmd_generate(const GenerateOptions& o, std::ostream& out) {
  std::optional<TimeSeriesPointCloud> cloud;
  std::optional<std::vector<double>> phase;
  if (o.kind == "chirp") {
    auto chirp = generate_chirp(o.chirp);
    cloud = std::move(chirp.cloud);
    phase = std::move(chirp.phase);
  } else {
    cloud = generate_hamiltonian(o.hamiltonian, o.skip);
  }
  if (o.snr_db && !o.noise_sigma.empty()) throw InvalidArgument("give either --snr-db or --noise-sigma, not both");
  if (o.snr_db) {
    cloud = add_noise(*cloud, NoiseSpec::relative_db(*cloud, *o.snr_db, o.seed));
  } else if (!o.noise_sigma.empty()) {
    cloud = add_noise(*cloud, NoiseSpec::absolute(o.noise_sigma, o.seed));
  }
  io::write_text_atomic(o.out, io::cloud_csv(*cloud, phase ? &*phase : nullptr));
  out << fmt::format("rows={} dim={} dt={}\n", cloud->size(), cloud->dim(), io::format_number(cloud->dt()));
  return 0;
}

// ---------------------------------------------------------------------------
// ingest

struct IngestOptions {
  CloudSource source;
  std::size_t start = 0;
  std::size_t length = 0;  // 0 = to the end
  std::size_t stride = 1;
  std::string out;
};

int cmd_ingest(const IngestOptions& o, std::ostream& out) {
  auto loaded = o.source.load();
  const std::size_t n = loaded.cloud.size();
  if (o.start >= n) throw InvalidArgument(fmt::format("segment start {} beyond {} samples", o.start, n));
  const std::size_t length = o.length == 0 ? n - o.start : o.length;
  const auto cloud = loaded.cloud.slice(o.start, length, o.stride);
  if (!o.out.empty()) {
    std::optional<std::vector<double>> phase;
    if (loaded.phase) {
      phase.emplace();
      for (std::size_t i = o.start; i < o.start + length; i += o.stride) phase->push_back((*loaded.phase)[i]);
    }
    io::write_text_atomic(o.out, io::cloud_csv(cloud, phase ? &*phase : nullptr));
  }
  out << fmt::format("n={} d={} dt={}\n", cloud.size(), cloud.dim(), io::format_number(cloud.dt()));
  return 0;
}

// ---------------------------------------------------------------------------
// persistence

struct PersistenceOptions {
  CloudSource source;
  NeighborhoodOptions neighborhood;
  std::string filtration = "vr";
  std::optional<double> cap;
  bool identity = false;
  double fermat_p = 2.0;
  std::size_t fermat_knn = 0;
  std::string out_diagram;
  std::string out_edges;
  bool uncapped = false;
};

int cmd_persistence(const PersistenceOptions& o, std::ostream& out, std::ostream& err) {
  const auto cloud = o.source.load().cloud;
  std::function<FilteredComplex(double)> build;
  double initial_cap = 0.0;
  std::shared_ptr<const CovarianceField> field;
  Eigen::MatrixXd fermat;

  if (o.filtration == "vr") {
    build = [&](double cap) { return vietoris_rips_filtration(cloud, cap); };
    initial_cap = default_rips_cap(cloud);
  } else if (o.filtration == "ellipsoid") {
    field = std::make_shared<const CovarianceField>(o.identity ? CovarianceField::isotropic(cloud.size(), cloud.dim())
                                                               : covariance_field(cloud, o.neighborhood.spec()));
    build = [&](double cap) { return ellipsoid_filtration(cloud, *field, cap); };
    initial_cap = o.identity ? 0.5 * default_rips_cap(cloud) : kDefaultEllipsoidCap;
  } else {
    fermat = fermat_distance_matrix(cloud, {o.fermat_p, o.fermat_knn});
    build = [&](double cap) { return rips_filtration(fermat, cap); };
    const double largest = fermat.array().isFinite().select(fermat.array(), 0.0).maxCoeff();
    initial_cap = largest > 0.0 ? 0.15 * largest : 1.0;
  }

  std::optional<FilteredComplex> complex;
  std::optional<PersistenceDiagram> diagram;
  std::optional<DominantClass> dominant;
  if (o.cap) {
    complex = build(*o.cap);
    diagram = compute_persistence(*complex);
    try {
      dominant = dominant_class(*diagram, 1);
    } catch (const NotFound&) {
    }
  } else {
    try {
      auto found = settle_dominant_h1(build, initial_cap);
      complex = build(found.cap);
      diagram = std::move(found.diagram);
      dominant = found.dominant;
      if (!found.settled) err << "warning: an unresolved H1 class may outlive the dominant one at the largest cap\n";
    } catch (const NotFound&) {
      complex = build(initial_cap);
      diagram = compute_persistence(*complex);
    }
  }

  if (!o.out_diagram.empty()) io::write_text_atomic(o.out_diagram, io::diagram_csv(*diagram, !o.uncapped));
  if (!o.out_edges.empty()) io::write_text_atomic(o.out_edges, io::edges_csv(*complex));

  out << fmt::format("cap={} edges={} pairs={}\n", io::format_number(complex->scale_cap()), complex->edges().size(),
                     diagram->pairs.size());
  if (!dominant) {
    err << "warning: no finite H1 class; schedule omitted\n";
    return 0;
  }
  const auto schedule = scale_schedule(*dominant);
  out << fmt::format("dominant_h1 birth={} death={} lifetime={}\n", io::format_number(dominant->birth),
                     io::format_number(dominant->death), io::format_number(dominant->lifetime));
  out << fmt::format("schedule={},{},{},{}\n", io::format_number(schedule.scales[0]),
                     io::format_number(schedule.scales[1]), io::format_number(schedule.scales[2]),
                     io::format_number(schedule.scales[3]));
  return 0;
}

// ---------------------------------------------------------------------------
// denoise

struct DenoiseOptions {
  CloudSource source;
  NeighborhoodOptions neighborhood;
  std::string clean;
  std::string filter = "all";
  std::size_t window = 20;
  std::size_t knn = 20;
  std::optional<double> scale;
  std::string anchor = "death";
  std::string aggregator = "mean";
  bool intersection = false;
  std::string out_prefix;
};

const std::vector<std::pair<std::string, FilterSpec::Kind>>& filter_names() {
  static const std::vector<std::pair<std::string, FilterSpec::Kind>> names{
      {"moving_average", FilterSpec::Kind::moving_average},
      {"adaptive_moving_average", FilterSpec::Kind::adaptive_moving_average},
      {"knn", FilterSpec::Kind::knn},
      {"spherical", FilterSpec::Kind::spherical},
      {"ellipsoidal", FilterSpec::Kind::ellipsoidal}};
  return names;
}

FilterSpec::Kind filter_kind(const std::string& name) {
  for (const auto& [label, kind] : filter_names()) {
    if (label == name) return kind;
  }
  throw InvalidArgument(fmt::format("unknown filter '{}'", name));
}

Aggregator parse_aggregator(const std::string& name) {
  if (name == "mean") return Aggregator::mean;
  if (name == "geometric-median" || name == "geometric_median") return Aggregator::geometric_median;
  throw InvalidArgument(fmt::format("unknown aggregator '{}'", name));
}

int cmd_denoise(const DenoiseOptions& o, std::ostream& out, std::ostream& err) {
  const auto noisy = o.source.load().cloud;
  std::optional<TimeSeriesPointCloud> clean;
  if (!o.clean.empty()) {
    io::ColumnMap map;
    map.values = o.source.columns;
    clean = io::cloud_from_table(io::read_csv(o.clean), map).cloud;
  }
  const auto anchor = ScaleAnchor::parse(o.anchor);
  const auto aggregator = parse_aggregator(o.aggregator);

  std::vector<std::string> labels;
  if (o.filter == "all") {
    for (const auto& [label, kind] : filter_names()) labels.push_back(label);
  } else {
    filter_kind(o.filter);
    labels.push_back(o.filter);
  }
  const bool need_rips = !o.scale && std::find(labels.begin(), labels.end(), "spherical") != labels.end();
  const bool need_ellipsoid = std::find(labels.begin(), labels.end(), "ellipsoidal") != labels.end();
  ScaleSelection scales;
  if (!o.scale) {
    scales = select_scales(noisy, o.neighborhood.spec(), need_rips, need_ellipsoid);
  } else if (need_ellipsoid) {
    scales.field = std::make_shared<const CovarianceField>(covariance_field(noisy, o.neighborhood.spec()));
  }

  std::string rmse_table = "filter,axis,rmse\n";
  int status = 0;
  for (const auto& label : labels) {
    FilterSpec spec;
    switch (filter_kind(label)) {
      case FilterSpec::Kind::moving_average:
        spec = FilterSpec::moving(o.window);
        break;
      case FilterSpec::Kind::adaptive_moving_average:
        spec = FilterSpec::adaptive_moving();
        break;
      case FilterSpec::Kind::knn:
        spec = FilterSpec::nearest(o.knn, aggregator);
        break;
      case FilterSpec::Kind::spherical:
        if (!o.scale && !scales.rips) {
          err << "error: spherical: no finite H1 class to set the radius\n";
          status = 1;
          continue;
        }
        spec = FilterSpec::spherical(o.scale ? *o.scale : radius_from_rips(anchor.pick(scales.rips->dominant)),
                                     aggregator);
        break;
      case FilterSpec::Kind::ellipsoidal:
        if (!o.scale && !scales.ellipsoid) {
          err << "error: ellipsoidal: no finite H1 class to set the scale\n";
          status = 1;
          continue;
        }
        spec = FilterSpec::ellipsoidal(o.scale ? *o.scale : anchor.pick(scales.ellipsoid->dominant), scales.field,
                                       aggregator);
        spec.intersection_neighborhoods = o.intersection;
        break;
    }
    const auto filtered = apply_filter(noisy, spec);
    io::write_text_atomic(suffixed(o.out_prefix, "_" + label + ".csv"), io::cloud_csv(filtered));
    std::string line = fmt::format("filter={}", label);
    if (spec.topological() && spec.kind != FilterSpec::Kind::knn) line += " scale=" + io::format_number(spec.scale);
    if (clean) {
      const auto report = rmse(*clean, filtered);
      line += " rmse=";
      for (std::size_t a = 0; a < report.per_axis.size(); ++a) {
        rmse_table += fmt::format("{},{},{}\n", label, a, io::format_number(report.per_axis[a]));
        line += (a ? "," : "") + io::format_number(report.per_axis[a]);
      }
    }
    out << line << '\n';
  }
  if (clean) io::write_text_atomic(suffixed(o.out_prefix, "_rmse.csv"), rmse_table);
  return status;
}

// ---------------------------------------------------------------------------
// recurrence

struct RecurrenceOptions {
  CloudSource source;
  NeighborhoodOptions neighborhood;
  std::string kind = "ellipsoidal";
  std::vector<double> scales;
  std::size_t tau_min = 15;
  std::size_t tol = 2;
  bool no_truth = false;
  std::string out_prefix;
};

int cmd_recurrence(const RecurrenceOptions& o, std::ostream& out, std::ostream& err) {
  const auto loaded = o.source.load();
  const auto& cloud = loaded.cloud;
  const bool ellipsoidal = o.kind == "ellipsoidal";
  if (!ellipsoidal && o.kind != "spherical") throw InvalidArgument(fmt::format("unknown neighbourhood '{}'", o.kind));

  std::vector<double> scales = o.scales;
  std::shared_ptr<const CovarianceField> field;
  if (scales.empty()) {
    const auto selection = select_scales(cloud, o.neighborhood.spec(), !ellipsoidal, ellipsoidal);
    const auto& found = ellipsoidal ? selection.ellipsoid : selection.rips;
    if (!found) throw NotFound("no finite H1 class to derive recurrence scales from");
    for (const double s : scale_schedule(found->dominant).scales) scales.push_back(ellipsoidal ? s : radius_from_rips(s));
    field = selection.field;
  } else if (ellipsoidal) {
    field = std::make_shared<const CovarianceField>(covariance_field(cloud, o.neighborhood.spec()));
  }

  std::optional<std::vector<std::optional<std::size_t>>> truth;
  if (!o.no_truth && loaded.phase) truth = ground_truth_returns(*loaded.phase);
  if (!truth) err << "note: no phase column; detection-only output\n";

  for (std::size_t s = 0; s < scales.size(); ++s) {
    const auto neighborhood =
        ellipsoidal ? ReturnNeighborhood::ellipsoidal(scales[s], field) : ReturnNeighborhood::spherical(scales[s]);
    const auto table = first_returns(cloud, neighborhood, o.tau_min);
    io::write_text_atomic(suffixed(o.out_prefix, fmt::format("_{}.csv", s)),
                          io::recurrence_csv(table, truth ? &*truth : nullptr, o.tol));
    if (truth) {
      const auto score = score_returns(table.t1, *truth, o.tol);
      out << fmt::format("scale[{}]={} detected={} within_tol={} spurious_early={} mae={}\n", s,
                         io::format_number(scales[s]), io::format_number(score.detected_fraction),
                         io::format_number(score.within_tol_fraction), score.spurious_early,
                         io::format_number(score.mean_abs_error));
    } else {
      const auto found = std::count_if(table.t1.begin(), table.t1.end(), [](const auto& t) { return t.has_value(); });
      out << fmt::format("scale[{}]={} returns={}\n", s, io::format_number(scales[s]), found);
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOptions {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
};

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& value, T (*convert)(const std::string&)) {
  std::vector<T> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw InvalidArgument(fmt::format("{}: empty list item", key));
    items.push_back(convert(item.substr(first, last - first + 1)));
  }
  return items;
}

double to_double(const std::string& s) { return io::parse_number(s, 0); }

std::uint64_t to_u64(const std::string& s) {
  std::size_t used = 0;
  const auto v = std::stoull(s, &used);
  if (used != s.size()) throw InvalidArgument(fmt::format("'{}' is not an unsigned integer", s));
  return v;
}

std::size_t to_size(const std::string& s) { return static_cast<std::size_t>(to_u64(s)); }
std::string to_string_item(const std::string& s) { return s; }

constexpr const char* kSweepKeys =
    "snr_db, seeds, filters, window, knn, tau, k, aggregator, scale_anchor, chirp_n, f_start, f_end, t_max";

void apply_setting(SweepConfig& c, const std::string& key, const std::string& value) {
  try {
    if (key == "snr_db") {
      c.snr_db = parse_list<double>(key, value, to_double);
    } else if (key == "seeds") {
      c.seeds = parse_list<std::uint64_t>(key, value, to_u64);
    } else if (key == "filters") {
      c.filters.clear();
      for (const auto& name : parse_list<std::string>(key, value, to_string_item)) {
        c.filters.push_back({name, filter_kind(name)});
      }
    } else if (key == "window") {
      c.window = to_size(value);
    } else if (key == "knn") {
      c.knn = to_size(value);
    } else if (key == "tau") {
      c.neighborhoods.tau = to_size(value);
    } else if (key == "k") {
      c.neighborhoods.k = to_size(value);
    } else if (key == "aggregator") {
      c.aggregator = parse_aggregator(value);
    } else if (key == "scale_anchor") {
      c.anchor = ScaleAnchor::parse(value);
    } else if (key == "chirp_n") {
      c.chirp.n = to_size(value);
    } else if (key == "f_start") {
      c.chirp.f_start = to_double(value);
    } else if (key == "f_end") {
      c.chirp.f_end = to_double(value);
    } else if (key == "t_max") {
      c.chirp.t_max = to_double(value);
    } else {
      throw InvalidArgument(fmt::format("unknown key '{}'; known keys: {}", key, kSweepKeys));
    }
  } catch (const std::logic_error&) {
    throw InvalidArgument(fmt::format("key '{}': cannot read value '{}'", key, value));
  }
}

SweepConfig load_sweep_config(const SweepOptions& o) {
  SweepConfig config;
  config.filters = {{"moving_average", FilterSpec::Kind::moving_average}};
  std::ifstream in(o.config);
  if (!in) throw Error(fmt::format("cannot open config {}", o.config));

  auto split_setting = [](const std::string& text, std::size_t line) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError(fmt::format("expected key = value, got '{}'", text), line);
    auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
    };
    return std::pair{strip(text.substr(0, eq)), strip(text.substr(eq + 1))};
  };

  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto [key, value] = split_setting(line, line_no);
    if (!seen.insert(key).second) throw ParseError(fmt::format("key '{}' given twice", key), line_no);
    try {
      apply_setting(config, key, value);
    } catch (const InvalidArgument& e) {
      throw ParseError(fmt::format("{}: {}", o.config, e.what()), line_no);
    }
  }
  for (const auto& text : o.overrides) {
    const auto [key, value] = split_setting(text, 0);
    apply_setting(config, key, value);
  }
  config.validate();
  return config;
}

struct CellKey {
  double snr;
  std::uint64_t seed;
  std::string filter;
  auto operator<=>(const CellKey&) const = default;
};

int cmd_sweep(const SweepOptions& o, std::ostream& out, std::ostream& err) {
  const SweepConfig config = load_sweep_config(o);
  const std::size_t dims = 2;

  // Rows already on disk, keyed by (snr, seed, filter).
  std::map<CellKey, std::vector<SweepRow>> done;
  if (fs::exists(o.out)) {
    const auto table = io::read_csv(o.out);
    const std::vector<std::string> expected{"snr_db", "seed", "filter", "axis", "rmse"};
    if (table.header != expected) throw ParseError(fmt::format("{}: not a sweep table", o.out), 1);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& cells = table.rows[r];
      SweepRow row;
      row.snr_db = io::parse_number(cells[0], table.lines[r]);
      row.seed = to_u64(cells[1]);
      row.filter = cells[2];
      row.axis = to_size(cells[3]);
      if (!cells[4].empty()) row.rmse = io::parse_number(cells[4], table.lines[r]);
      done[{row.snr_db, row.seed, row.filter}].push_back(row);
    }
  }
  auto complete = [&](const CellKey& key) {
    const auto it = done.find(key);
    return it != done.end() && it->second.size() == dims;
  };

  auto render = [&] {
    std::string text = "snr_db,seed,filter,axis,rmse\n";
    for (const double snr : config.snr_db) {
      for (const auto seed : config.seeds) {
        for (const auto& f : config.filters) {
          const auto it = done.find({snr, seed, f.label});
          if (it == done.end()) continue;
          auto rows = it->second;
          std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.axis < b.axis; });
          for (const auto& row : rows) {
            text += fmt::format("{},{},{},{},{}\n", io::format_number(snr), seed, f.label, row.axis,
                                row.rmse ? io::format_number(*row.rmse) : std::string());
          }
        }
      }
    }
    return text;
  };

  std::size_t computed = 0;
  for (const double snr : config.snr_db) {
    for (const auto seed : config.seeds) {
      SweepConfig pending = config;
      pending.filters.clear();
      for (const auto& f : config.filters) {
        if (!complete({snr, seed, f.label})) pending.filters.push_back(f);
      }
      if (pending.filters.empty()) continue;
      err << fmt::format("sweep: snr={} seed={} ({} filters)\n", io::format_number(snr), seed, pending.filters.size());
      for (auto& row : sweep_cell(pending, snr, seed)) {
        auto& slot = done[{snr, seed, row.filter}];
        if (row.axis == 0) slot.clear();
        slot.push_back(std::move(row));
      }
      ++computed;
      io::write_text_atomic(o.out, render());
    }
  }
  if (computed == 0) io::write_text_atomic(o.out, render());

  std::size_t rows = 0;
  std::vector<std::string> failed;
  for (const double snr : config.snr_db) {
    for (const auto seed : config.seeds) {
      for (const auto& f : config.filters) {
        for (const auto& row : done[{snr, seed, f.label}]) {
          ++rows;
          if (!row.rmse) failed.push_back(fmt::format("snr={} seed={} filter={} axis={}", io::format_number(snr),
                                                      seed, f.label, row.axis));
        }
      }
    }
  }
  out << fmt::format("rows={} computed_cells={} missing={}\n", rows, computed, failed.size());
  for (const auto& f : failed) err << "missing: " << f << '\n';
  return failed.empty() ? 0 : 1;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Flow-aware persistent homology of recurrent signals"};
  app.require_subcommand(1);

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic trajectory");
  generate->add_option("--kind", gen.kind, "chirp or hamiltonian")
      ->required()
      ->check(CLI::IsMember({"chirp", "hamiltonian"}));
  generate->add_option("--out", gen.out, "Output CSV")->required();
  generate->add_option("--seed", gen.seed, "Noise seed")->capture_default_str();
  generate->add_option("--snr-db", gen.snr_db, "Signal-relative noise level in dB");
  generate->add_option("--noise-sigma", gen.noise_sigma, "Absolute per-axis noise standard deviations")
      ->delimiter(',');
  generate->add_option("--n", gen.chirp.n, "Chirp samples")->capture_default_str();
  generate->add_option("--f-start", gen.chirp.f_start, "Chirp start frequency (Hz)")->capture_default_str();
  generate->add_option("--f-end", gen.chirp.f_end, "Chirp end frequency (Hz)")->capture_default_str();
  generate->add_option("--t-max", gen.chirp.t_max, "Chirp duration (s)")->capture_default_str();
  generate->add_option("--total-time", gen.hamiltonian.total_time, "Hamiltonian duration")->capture_default_str();
  generate->add_option("--step", gen.hamiltonian.step, "Hamiltonian step")->capture_default_str();
  generate->add_option("--q0", gen.hamiltonian.q0, "Initial q")->capture_default_str();
  generate->add_option("--p0", gen.hamiltonian.p0, "Initial p")->capture_default_str();
  generate->add_option("--skip", gen.skip, "Leading Hamiltonian states to drop")->capture_default_str();

  IngestOptions ing;
  auto* ingest = app.add_subcommand("ingest", "Read, segment and downsample a sample CSV");
  ing.source.attach(ingest);
  ingest->add_option("--start", ing.start, "First sample of the segment")->capture_default_str();
  ingest->add_option("--length", ing.length, "Segment length (0 = to the end)")->capture_default_str();
  ingest->add_option("--stride", ing.stride, "Keep every stride-th sample")->capture_default_str();
  ingest->add_option("--out", ing.out, "Write the normalised cloud CSV");

  PersistenceOptions per;
  auto* persistence = app.add_subcommand("persistence", "Filtration and persistence diagram");
  per.source.attach(persistence);
  per.neighborhood.attach(persistence);
  persistence->add_option("--filtration", per.filtration, "vr, ellipsoid or fermat")
      ->check(CLI::IsMember({"vr", "ellipsoid", "fermat"}))
      ->capture_default_str();
  persistence->add_option("--cap", per.cap, "Largest scale built (default: grow until the dominant H1 settles)");
  persistence->add_flag("--identity-covariance", per.identity, "Ellipsoids with identity shape");
  persistence->add_option("--fermat-p", per.fermat_p, "Fermat path exponent")->capture_default_str();
  persistence->add_option("--fermat-knn", per.fermat_knn, "Restrict Fermat hops to a k-NN graph (0 = off)")
      ->capture_default_str();
  persistence->add_option("--out-diagram", per.out_diagram, "Diagram CSV");
  persistence->add_option("--out-edges", per.out_edges, "Edge CSV");
  persistence->add_flag("--uncapped", per.uncapped, "Leave unresolved deaths empty");

  DenoiseOptions den;
  auto* denoise = app.add_subcommand("denoise", "Apply denoising filters");
  den.source.attach(denoise);
  den.neighborhood.attach(denoise);
  denoise->add_option("--clean", den.clean, "Clean reference CSV for RMSE");
  denoise->add_option("--filter", den.filter, "moving_average, adaptive_moving_average, knn, spherical, ellipsoidal or all")
      ->capture_default_str();
  denoise->add_option("--window", den.window, "Moving-average window")->capture_default_str();
  denoise->add_option("--knn", den.knn, "Neighbours of the knn filter")->capture_default_str();
  denoise->add_option("--scale", den.scale, "Explicit radius / ellipsoid scale (default: from H1)");
  denoise->add_option("--scale-anchor", den.anchor, "death or schedule:0..3")->capture_default_str();
  denoise->add_option("--aggregator", den.aggregator, "mean or geometric-median")->capture_default_str();
  denoise->add_flag("--intersection", den.intersection, "Ellipsoid-intersection neighbourhoods");
  denoise->add_option("--out-prefix", den.out_prefix, "Output path prefix")->required();

  RecurrenceOptions rec;
  auto* recurrence = app.add_subcommand("recurrence", "First-return times");
  rec.source.attach(recurrence);
  rec.neighborhood.attach(recurrence);
  recurrence->add_option("--neighborhood", rec.kind, "spherical or ellipsoidal")
      ->check(CLI::IsMember({"spherical", "ellipsoidal"}))
      ->capture_default_str();
  recurrence->add_option("--scales", rec.scales, "Explicit scales (default: the four-point H1 schedule)")
      ->delimiter(',');
  recurrence->add_option("--tau-min", rec.tau_min, "Minimum admissible return")->capture_default_str();
  recurrence->add_option("--tol", rec.tol, "Scoring tolerance in samples")->capture_default_str();
  recurrence->add_flag("--no-truth", rec.no_truth, "Ignore the phase column");
  recurrence->add_option("--out-prefix", rec.out_prefix, "Output path prefix")->required();

  SweepOptions swp;
  auto* sweep = app.add_subcommand("sweep", "RMSE versus SNR sweep");
  sweep->add_option("--config", swp.config, "key = value config file")->required();
  sweep->add_option("--out", swp.out, "Sweep CSV (resumed if present)")->required();
  sweep->add_option("--set", swp.overrides, "Override a config key (key=value)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*generate) return cmd_generate(gen, out);
    if (*ingest) return cmd_ingest(ing, out);
    if (*persistence) return cmd_persistence(per, out, err);
    if (*denoise) return cmd_denoise(den, out, err);
    if (*recurrence) return cmd_recurrence(rec, out, err);
    if (*sweep) return cmd_sweep(swp, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace flowph::cli
