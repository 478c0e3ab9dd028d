#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fractalnet/box_dim.hpp"
#include "fractalnet/cli/format.hpp"
#include "fractalnet/cli/inputs.hpp"
#include "fractalnet/errors.hpp"
#include "fractalnet/fractal_loss.hpp"
#include "fractalnet/graph_io.hpp"
#include "fractalnet/parallel.hpp"
#include "fractalnet/regression.hpp"
#include "fractalnet/renorm.hpp"
#include "fractalnet/stats.hpp"
#include "fractalnet/version.hpp"

namespace fractalnet::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSurrogateRngName = "philox4x32-10";
inline constexpr const char* kSeedEnvVar = "FRACTAL_SEED";

struct Options {
  SourceOptions source;
  std::string out;
  std::string format = "csv";
  int precision = kDefaultPrecision;
  std::optional<std::uint64_t> seed;
  unsigned threads = default_thread_count();
  std::size_t radius = kDefaultRenormRadius;
  double alpha = 0.1;
  double tau = 0.4;
  double sigma = kDefaultPilotSigma;
  double r2_threshold = 0.9;
  Distance diam_gate = kDefaultDiameterGate;
  bool induced_metric = false;
  std::vector<double> thresholds = default_prevalence_thresholds();

  // loss
  std::string embeddings;
  std::string renorm_embeddings;
  std::string meta;
  std::string mode = "surrogate";
  std::string similarity = "cosine";
  std::uint64_t epoch = 0;
  std::size_t total_epochs = 0;
  double anneal_fraction = 0.0;
  bool symmetric = false;
  bool anchor_anchor = false;
  bool emit_similarity = false;

  // validate
  std::size_t trials = 1;
  std::string k_range;
  std::size_t min_bucket_samples = 30;
  std::size_t min_buckets = 3;

  // bench
  std::vector<std::size_t> sizes{256, 512, 1024, 2048};
  std::size_t repeats = 3;
};

// Everything a subcommand produces; the first artifact is the primary one.
struct RunOutput {
  std::vector<std::pair<std::string, std::string>> artifacts;
  Json extra = Json::object();
  std::vector<std::pair<std::string, double>> timings_ms;
  std::string summary;  // printed to stdout even when writing to --out
};

class Stopwatch {
 public:
  explicit Stopwatch(RunOutput& out) : out_(out) {}
  template <class Fn>
  auto time(const std::string& stage, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      record(stage, start);
    } else {
      auto result = fn();
      record(stage, start);
      return result;
    }
  }

 private:
  void record(const std::string& stage, std::chrono::steady_clock::time_point start) {
    const std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - start;
    out_.timings_ms.emplace_back(stage, ms.count());
  }
  RunOutput& out_;
};

struct SeedChoice {
  std::uint64_t value = 0;
  std::string source;
};

inline SeedChoice resolve_seed(const Options& o) {
  if (o.seed) return {*o.seed, "flag"};
  if (const char* env = std::getenv(kSeedEnvVar); env && *env) {
    std::uint64_t v = 0;
    const std::string text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw UsageError(std::string(kSeedEnvVar) + " must be an unsigned integer, got '" + text + "'");
    }
    return {v, "env"};
  }
  return {0, "default"};
}

inline double rounded(double x, const Options& o) { return round_significant(x, o.precision); }

inline Json rounded_array(const Eigen::VectorXd& v, const Options& o) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(rounded(v(i), o));
  return a;
}

inline Json rounded_matrix(const Eigen::MatrixXd& m, const Options& o) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(rounded_array(m.row(i).transpose(), o));
  return rows;
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline BoxCountOptions box_options(const Options& o) {
  BoxCountOptions b;
  b.diameter_gate = o.diam_gate;
  b.metric = o.induced_metric ? BallMetric::kInducedRemaining : BallMetric::kGraphDistance;
  return b;
}

inline void check_common(const Options& o) {
  if (o.format != "csv" && o.format != "json") throw UsageError("--format must be csv or json");
  if (o.precision < 1 || o.precision > 17) throw UsageError("--precision must lie in [1, 17]");
  if (o.threads == 0) throw UsageError("--threads must be >= 1");
}

inline const Graph& single_graph(const LoadedGraphs& g, const char* cmd) {
  if (g.graphs.size() != 1) {
    throw UsageError(std::string(cmd) + " works on one graph; pick one with --index (dataset has " +
                     std::to_string(g.graphs.size()) + ")");
  }
  return g.graphs.front();
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

inline std::vector<DimensionEstimate> estimate_all(const std::vector<Graph>& graphs, const Options& o) {
  std::vector<DimensionEstimate> est(graphs.size());
  const BoxCountOptions opts = box_options(o);
  parallel_for(graphs.size(), o.threads, [&](std::size_t i) {
    est[i] = graphs[i].empty() ? gated_estimate(0, 0, false) : estimate_dimension(graphs[i], opts);
  });
  return est;
}

inline std::string prevalence_table(std::span<const DimensionEstimate> est, const Options& o) {
  const auto rows = r2_prevalence(est, o.thresholds);
  if (o.format == "json") {
    Json a = Json::array();
    for (const auto& r : rows) {
      a.push_back({{"threshold", rounded(r.threshold, o)}, {"count", r.count}, {"percent", rounded(r.percent, o)}});
    }
    return dump(a);
  }
  CsvWriter csv(o.precision);
  csv.header({"threshold", "count", "percent"});
  for (const auto& r : rows) csv.row(r.threshold, r.count, r.percent);
  return csv.str();
}

inline RunOutput cmd_dim(const Options& o, std::vector<InputDigest>& digests) {
  RunOutput out;
  Stopwatch sw(out);
  const LoadedGraphs in = sw.time("load", [&] { return load_sources(o.source, digests); });
  const auto est = sw.time("estimate", [&] { return estimate_all(in.graphs, o); });
  std::string table;
  if (o.format == "json") {
    Json a = Json::array();
    for (std::size_t i = 0; i < est.size(); ++i) {
      const auto& e = est[i];
      a.push_back({{"graph_id", i},
                   {"n", in.graphs[i].vertex_count()},
                   {"diam", e.diameter_used},
                   {"dimension", rounded(e.dimension, o)},
                   {"r_squared", rounded(e.r_squared, o)},
                   {"sigma_sq", rounded(e.residual_variance, o)},
                   {"gated", e.gated}});
    }
    table = dump(a);
  } else {
    CsvWriter csv(o.precision);
    csv.header({"graph_id", "n", "diam", "dimension", "r_squared", "sigma_sq", "gated"});
    for (std::size_t i = 0; i < est.size(); ++i) {
      const auto& e = est[i];
      csv.row(i, in.graphs[i].vertex_count(), e.diameter_used, e.dimension, e.r_squared, e.residual_variance,
              e.gated);
    }
    table = csv.str();
  }
  const std::string ext = o.format == "json" ? ".json" : ".csv";
  out.artifacts.emplace_back("dimensions" + ext, table);
  out.artifacts.emplace_back("r2_prevalence" + ext, prevalence_table(est, o));
  std::size_t disconnected = 0;
  for (const auto& e : est) disconnected += e.on_largest_component ? 1 : 0;
  out.extra["graphs"] = in.graphs.size();
  out.extra["disconnected_graphs"] = disconnected;
  out.extra["self_loops_dropped"] = in.import_stats.self_loops_dropped;
  out.extra["duplicate_edges_dropped"] = in.import_stats.duplicates_dropped;
  return out;
}

inline RunOutput cmd_cover(const Options& o, std::vector<InputDigest>& digests) {
  RunOutput out;
  Stopwatch sw(out);
  const LoadedGraphs in = sw.time("load", [&] { return load_sources(o.source, digests); });
  std::vector<BoxCountResult> results(in.graphs.size());
  sw.time("cover", [&] {
    parallel_for(in.graphs.size(), o.threads, [&](std::size_t i) {
      if (in.graphs[i].empty()) {
        results[i].gated = true;
        return;
      }
      results[i] = box_counts(largest_component(in.graphs[i]).graph, box_options(o));
    });
  });
  if (o.format == "json") {
    Json a = Json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
      Json counts = Json::array();
      for (const auto& c : results[i].counts) counts.push_back({c.scale, c.box_count});
      a.push_back({{"graph_id", i}, {"diam", results[i].diameter}, {"gated", results[i].gated}, {"counts", counts}});
    }
    out.artifacts.emplace_back("cover.json", dump(a));
  } else {
    CsvWriter csv(o.precision);
    csv.header({"graph_id", "scale", "box_count"});
    for (std::size_t i = 0; i < results.size(); ++i)
      for (const auto& c : results[i].counts) csv.row(i, c.scale, c.box_count);
    out.artifacts.emplace_back("cover.csv", csv.str());
  }
  return out;
}

inline std::string assignment_csv(const RenormResult& r) {
  CsvWriter csv(kDefaultPrecision);
  csv.header({"vertex", "supervertex"});
  for (std::size_t v = 0; v < r.assignment.size(); ++v) csv.row(v, r.assignment[v]);
  return csv.str();
}

inline void check_radius(const Options& o) {
  if (o.radius == 0) throw UsageError("--radius must be >= 1");
}

inline RunOutput cmd_renorm(const Options& o, std::vector<InputDigest>& digests, std::uint64_t seed) {
  check_radius(o);
  RunOutput out;
  Stopwatch sw(out);
  const LoadedGraphs in = sw.time("load", [&] { return load_sources(o.source, digests); });
  const Graph& g = single_graph(in, "renorm");
  const RenormResult r = sw.time("renormalise", [&] { return renormalise(g, o.radius, seed); });
  out.artifacts.emplace_back("supergraph.json", graph_to_json_string(r.super_graph));
  out.artifacts.emplace_back("assignment.csv", assignment_csv(r));
  out.extra["original_size"] = g.vertex_count();
  out.extra["renorm_size"] = r.super_graph.vertex_count();
  return out;
}

inline RunOutput cmd_augment(const Options& o, std::vector<InputDigest>& digests, std::uint64_t seed) {
  check_radius(o);
  RunOutput out;
  Stopwatch sw(out);
  const LoadedGraphs in = sw.time("load", [&] { return load_sources(o.source, digests); });
  const Graph& g = single_graph(in, "augment");
  const AugmentedView view = sw.time("augment", [&] { return augment(g, o.radius, seed); });
  out.artifacts.emplace_back("augmented.json", graph_to_json_string(view.graph));
  out.artifacts.emplace_back("assignment.csv", assignment_csv(view.renorm));
  out.extra["original_size"] = view.original_size;
  out.extra["renorm_size"] = view.renorm_size;
  return out;
}

inline RunOutput cmd_loss(const Options& o, std::vector<InputDigest>& digests, std::uint64_t seed) {
  if (o.embeddings.empty() || o.renorm_embeddings.empty()) {
    throw UsageError("loss needs --embeddings and --renorm-embeddings");
  }
  if (o.mode != "surrogate" && o.mode != "exact" && o.mode != "infonce") {
    throw UsageError("--mode must be surrogate, exact or infonce");
  }
  if (o.similarity != "cosine" && o.similarity != "dot") throw UsageError("--similarity must be cosine or dot");
  if (o.mode != "infonce" && o.meta.empty()) throw UsageError("--mode " + o.mode + " needs --meta");

  RunOutput out;
  Stopwatch sw(out);
  EmbeddingBatch batch;
  MetaRows meta;
  sw.time("load", [&] {
    batch.z = parse_matrix_csv(digest_file(o.embeddings, digests), o.embeddings);
    batch.z_renorm = parse_matrix_csv(digest_file(o.renorm_embeddings, digests), o.renorm_embeddings);
    if (!o.meta.empty()) meta = parse_meta_csv(digest_file(o.meta, digests), o.meta);
  });
  batch.validate();
  if (!o.meta.empty() && meta.meta.size() != batch.size()) {
    throw FormatError(o.meta + ": " + std::to_string(meta.meta.size()) + " rows for " +
                      std::to_string(batch.size()) + " embeddings");
  }

  LossConfig cfg;
  cfg.alpha = o.alpha;
  cfg.tau = o.tau;
  cfg.sigma = o.sigma;
  cfg.r2_threshold = o.r2_threshold;
  cfg.diam_gate = o.diam_gate;
  cfg.seed = seed;
  cfg.anneal_fraction = o.anneal_fraction;
  cfg.similarity = o.similarity == "dot" ? SimilarityKind::kDot : SimilarityKind::kCosine;
  cfg.symmetric_perturbation = o.symmetric;
  cfg.anchor_anchor_denominator = o.anchor_anchor;
  cfg.validate();
  if (o.total_epochs > 0) cfg.alpha = anneal_alpha(cfg, o.epoch, o.total_epochs);

  const LossReport report = sw.time("loss", [&] {
    if (o.mode == "surrogate") return surrogate_fractal_loss(batch, meta.meta, cfg, o.epoch);
    if (o.mode == "exact") {
      if (!meta.has_renorm_dims) throw FormatError(o.meta + ": exact mode needs a dim_renorm column");
      return exact_fractal_loss(batch, meta.dims, cfg);
    }
    LossConfig plain = cfg;
    plain.alpha = 0.0;
    std::vector<DimensionTriple> zeros(batch.size());
    return exact_fractal_loss(batch, zeros, plain);
  });

  Json j;
  j["mode"] = o.mode;
  j["n"] = batch.size();
  j["alpha"] = rounded(cfg.alpha, o);
  j["tau"] = rounded(cfg.tau, o);
  j["sigma"] = rounded(cfg.sigma, o);
  j["seed"] = seed;
  j["epoch"] = o.epoch;
  j["mean_loss"] = rounded(report.mean_loss, o);
  j["per_sample_loss"] = rounded_array(report.per_sample_loss, o);
  j["effective_alpha"] = rounded_array(report.effective_alpha, o);
  if (o.emit_similarity) {
    j["similarity"] = rounded_matrix(report.similarity, o);
    j["perturbed_similarity"] = rounded_matrix(report.perturbed_similarity, o);
    j["perturbation"] = rounded_matrix(report.perturbation, o);
  }
  out.artifacts.emplace_back("loss.json", dump(j));
  return out;
}

inline Json diagnostics_json(const GaussianDiagnostics& d, const Options& o) {
  return {{"n", d.n},
          {"mean", rounded(d.mean, o)},
          {"std", rounded(d.std, o)},
          {"intercept", rounded(d.intercept, o)},
          {"slope", rounded(d.slope, o)},
          {"r_squared", rounded(d.r_squared, o)},
          {"corr", rounded(d.corr, o)},
          {"corr_p_value", rounded(d.corr_p_value, o)}};
}

inline RunOutput cmd_validate(const Options& o, std::vector<InputDigest>& digests, std::uint64_t seed,
                              std::ostream& err) {
  check_radius(o);
  if (o.trials == 0) throw UsageError("--trials must be >= 1");
  RunOutput out;
  Stopwatch sw(out);
  LoadedGraphs in;
  sw.time("load", [&] {
    if (!o.k_range.empty()) {
      if (o.source.family.family != "igs") throw UsageError("--k-range needs --family igs");
      if (!o.source.dataset.empty() || !o.source.graph.empty()) {
        throw UsageError("give exactly one of --dataset, --graph or --family");
      }
      const auto [a, b] = parse_range(o.k_range, "--k-range");
      const MotifSpec motif = load_motif(o.source.family.motif_path, digests);
      in.name = "igs";
      for (std::size_t k = a; k <= b; ++k) {
        in.graphs.push_back(igs_iterate(motif, k).graph);
        in.labels.push_back("igs(k=" + std::to_string(k) + ")");
      }
    } else {
      in = load_sources(o.source, digests);
    }
  });
  const DeltaCollection c = sw.time(
      "collect", [&] { return collect_delta(in.graphs, o.radius, o.trials, seed, o.threads, box_options(o)); });

  CsvWriter csv(o.precision);
  csv.header({"graph_id", "diam", "dim_g", "dim_r", "delta", "gated"});
  for (const auto& s : c.samples) csv.row(s.graph_id, s.diameter, s.dim_g, s.dim_r, s.delta, !s.usable());

  Json j;
  j["graphs"] = in.graphs.size();
  j["samples"] = c.samples.size();
  j["usable"] = c.usable;
  j["radius"] = o.radius;
  j["trials"] = o.trials;
  j["warning"] = c.warning ? Json(*c.warning) : Json(nullptr);
  sw.time("diagnostics", [&] {
    try {
      j["diagnostics"] = diagnostics_json(gaussian_diagnostics(c.samples), o);
    } catch (const InsufficientDataError& e) {
      j["diagnostics"] = nullptr;
      j["diagnostics_error"] = e.what();
    } catch (const NumericError& e) {
      j["diagnostics"] = nullptr;
      j["diagnostics_error"] = e.what();
    }
    VarianceScalingOptions vopts;
    vopts.min_bucket_samples = o.min_bucket_samples;
    vopts.min_buckets = o.min_buckets;
    try {
      const VarianceScaling v = variance_scaling_check(c.samples, o.sigma, vopts);
      Json buckets = Json::array();
      for (const auto& b : v.buckets) {
        buckets.push_back({{"diameter_lo", b.diameter_lo},
                           {"diameter_hi", b.diameter_hi},
                           {"diameter_mid", rounded(b.diameter_mid, o)},
                           {"n", b.n},
                           {"empirical_variance", rounded(b.empirical_variance, o)},
                           {"kappa_squared", rounded(b.kappa_squared, o)},
                           {"ratio", rounded(b.ratio, o)}});
      }
      j["variance_scaling"] = {{"buckets", buckets}, {"monotone_decreasing", v.monotone_decreasing}};
    } catch (const InsufficientDataError& e) {
      j["variance_scaling"] = nullptr;
      j["variance_scaling_error"] = e.what();
    }
  });
  if (c.warning) err << "warning: " << *c.warning << "\n";
  out.artifacts.emplace_back("diagnostics.json", dump(j));
  out.artifacts.emplace_back("delta_samples.csv", csv.str());
  return out;
}

inline RunOutput cmd_gen(const Options& o, std::vector<InputDigest>& digests) {
  if (o.source.family.family.empty()) throw UsageError("gen needs --family");
  RunOutput out;
  out.artifacts.emplace_back("graph.json", graph_to_json_string(make_family(o.source.family, digests)));
  return out;
}

inline RunOutput cmd_bench(const Options& o, std::vector<InputDigest>& digests) {
  if (o.source.family.family.empty()) throw UsageError("bench needs --family");
  if (o.sizes.size() < 2) throw UsageError("--sizes needs at least two values");
  if (o.repeats == 0) throw UsageError("--repeats must be >= 1");
  RunOutput out;
  CsvWriter csv(o.precision);
  csv.header({"n", "vertices", "edges", "diam", "seconds"});
  std::vector<double> log_n, log_t;
  for (std::size_t size : o.sizes) {
    FamilyParams p = o.source.family;
    if (p.family == "grid") {
      p.width = p.height = size;
    } else if (p.family == "igs") {
      p.k = size;
    } else if (p.family == "tree") {
      p.depth = size;
    } else {
      p.n = size;
    }
    const Graph g = make_family(p, digests);
    double best = std::numeric_limits<double>::infinity();
    DimensionEstimate est;
    for (std::size_t r = 0; r < o.repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      est = estimate_dimension(g, box_options(o));
      const std::chrono::duration<double> s = std::chrono::steady_clock::now() - start;
      best = std::min(best, s.count());
    }
    csv.row(size, g.vertex_count(), g.edge_count(), est.diameter_used, best);
    log_n.push_back(std::log(static_cast<double>(g.vertex_count())));
    log_t.push_back(std::log(std::max(best, 1e-9)));
  }
  const LinearFit fit = ordinary_least_squares(log_n, log_t);
  out.artifacts.emplace_back("bench.csv", csv.str());
  out.extra["loglog_slope"] = rounded(fit.slope, o);
  out.summary = "log-log runtime slope: " + format_real(fit.slope, o.precision) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

inline Json flag_values(const CLI::App& sub) {
  Json flags = Json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_name(false, false);
    if (name == "--help" || name.empty()) continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (opt->get_type_size() == 0) {
        flags[name] = true;
      } else if (res.size() == 1) {
        flags[name] = res.front();
      } else {
        flags[name] = res;
      }
    } else if (opt->get_type_size() == 0) {
      flags[name] = false;
    } else if (!opt->get_default_str().empty()) {
      flags[name] = opt->get_default_str();
    } else {
      flags[name] = nullptr;
    }
  }
  return flags;
}

inline std::string suggest(const std::string& token, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = std::string::npos;
  for (const auto& c : candidates) {
    const std::size_t d = levenshtein(token, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (best.empty() || best_d > std::max<std::size_t>(2, token.size() / 3)) return {};
  return best;
}

inline std::vector<std::string> long_flags(const CLI::App& sub) {
  std::vector<std::string> names;
  for (const CLI::Option* opt : sub.get_options()) {
    for (const auto& l : opt->get_lnames()) names.push_back("--" + l);
  }
  return names;
}

// Runs the tool; returns the process exit status.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Options o;
  CLI::App app{"Box-dimension estimation, renormalisation and fractal contrastive losses on graphs",
               "fractalnet"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  auto add_sources = [&](CLI::App* s) {
    s->add_option("--dataset", o.source.dataset, "TU dataset directory");
    s->add_option("--name", o.source.dataset_name, "TU dataset name (default: directory name)");
    s->add_option("--graph", o.source.graph, "Graph in canonical JSON");
    s->add_option("--family", o.source.family.family, "path, cycle, grid, complete, star, tree or igs");
    s->add_option("--n", o.source.family.n, "Vertex count for path/cycle/complete/star");
    s->add_option("--width", o.source.family.width, "Grid width");
    s->add_option("--height", o.source.family.height, "Grid height (default: width)");
    s->add_option("--branching", o.source.family.branching, "Tree branching factor")->capture_default_str();
    s->add_option("--depth", o.source.family.depth, "Tree depth");
    s->add_option("--k", o.source.family.k, "IGS iteration count");
    s->add_option("--motif", o.source.family.motif_path, "IGS motif JSON with anchor_a/anchor_b (default: H)");
    s->add_option("--index", o.source.index, "Use only this graph of the dataset");
  };
  auto add_common = [&](CLI::App* s) {
    s->add_option("--out", o.out, "Output directory (default: primary artifact to stdout)");
    s->add_option("--format", o.format, "csv or json")->capture_default_str();
    s->add_option("--precision", o.precision, "Significant digits for reals")->capture_default_str();
    s->add_option("--seed", o.seed, std::string("RNG seed (fallback: $") + kSeedEnvVar + ", then 0)");
    s->add_option("--threads", o.threads, "Worker threads")->capture_default_str();
  };
  auto add_gate = [&](CLI::App* s) {
    s->add_option("--diam-gate", o.diam_gate, "Graphs with diameter <= this are not fitted")->capture_default_str();
    s->add_flag("--induced-metric", o.induced_metric, "Measure balls inside the uncovered vertices only");
  };

  CLI::App* dim = app.add_subcommand("dim", "Box dimension per graph");
  add_sources(dim);
  add_common(dim);
  add_gate(dim);
  dim->add_option("--thresholds", o.thresholds, "R^2 thresholds for the prevalence table")->delimiter(',');

  CLI::App* cover = app.add_subcommand("cover", "Box counts N_B(l) per scale");
  add_sources(cover);
  add_common(cover);
  add_gate(cover);

  CLI::App* renorm = app.add_subcommand("renorm", "Random-centre renormalisation");
  add_sources(renorm);
  add_common(renorm);
  renorm->add_option("--radius", o.radius, "Renormalisation radius")->capture_default_str();

  CLI::App* aug = app.add_subcommand("augment", "Disjoint union of a graph and its renormalisation");
  add_sources(aug);
  add_common(aug);
  aug->add_option("--radius", o.radius, "Renormalisation radius")->capture_default_str();

  CLI::App* loss = app.add_subcommand("loss", "Fractal contrastive loss on caller-supplied embeddings");
  add_common(loss);
  loss->add_option("--embeddings", o.embeddings, "CSV of anchor embeddings, one row per graph");
  loss->add_option("--renorm-embeddings", o.renorm_embeddings, "CSV of renormalised-view embeddings");
  loss->add_option("--meta", o.meta, "CSV with graph_id,diam,dimension,r_squared,gated[,dim_renorm]");
  loss->add_option("--mode", o.mode, "surrogate, exact or infonce")->capture_default_str();
  loss->add_option("--alpha", o.alpha, "Dimension weight")->capture_default_str();
  loss->add_option("--tau", o.tau, "Temperature")->capture_default_str();
  loss->add_option("--sigma", o.sigma, "Residual scale for the variance law")->capture_default_str();
  loss->add_option("--r2-threshold", o.r2_threshold, "Graphs below this R^2 fall back to InfoNCE")
      ->capture_default_str();
  loss->add_option("--diam-gate", o.diam_gate, "Graphs with diameter <= this fall back")->capture_default_str();
  loss->add_option("--similarity", o.similarity, "cosine or dot")->capture_default_str();
  loss->add_option("--epoch", o.epoch, "Epoch index for the perturbation stream")->capture_default_str();
  loss->add_option("--total-epochs", o.total_epochs, "Enable alpha annealing over this many epochs");
  loss->add_option("--anneal-fraction", o.anneal_fraction, "Fraction of alpha removed by the last epoch")
      ->capture_default_str();
  loss->add_flag("--symmetric-perturbation", o.symmetric, "Mirror G instead of sampling both triangles");
  loss->add_flag("--anchor-anchor", o.anchor_anchor, "Exact mode: negatives use sim(z_n, z_k)");
  loss->add_flag("--emit-similarity", o.emit_similarity, "Include S, S* and G in loss.json");

  CLI::App* validate = app.add_subcommand("validate", "Dimension change under renormalisation, with diagnostics");
  add_sources(validate);
  add_common(validate);
  add_gate(validate);
  validate->add_option("--radius", o.radius, "Renormalisation radius")->capture_default_str();
  validate->add_option("--trials", o.trials, "Renormalisations per graph")->capture_default_str();
  validate->add_option("--k-range", o.k_range, "IGS iterations a..b (with --family igs)");
  validate->add_option("--sigma", o.sigma, "Residual scale for the variance law")->capture_default_str();
  validate->add_option("--min-bucket-samples", o.min_bucket_samples, "Samples per diameter bucket")
      ->capture_default_str();
  validate->add_option("--min-buckets", o.min_buckets, "Required diameter buckets")->capture_default_str();

  CLI::App* gen = app.add_subcommand("gen", "Write a synthetic graph as canonical JSON");
  add_sources(gen);
  gen->add_option("--out", o.out, "Output file (default: stdout)");

  CLI::App* bench = app.add_subcommand("bench", "Runtime of dimension estimation versus size");
  add_sources(bench);
  add_common(bench);
  add_gate(bench);
  bench->add_option("--sizes", o.sizes, "Comma-separated sizes")->delimiter(',');
  bench->add_option("--repeats", o.repeats, "Timing repeats (minimum is kept)")->capture_default_str();

  for (CLI::App* s : app.get_subcommands({})) s->allow_extras();

  if (argc >= 2 && argv[1][0] != '-') {
    std::vector<std::string> names;
    for (CLI::App* s : app.get_subcommands({})) names.push_back(s->get_name());
    if (std::find(names.begin(), names.end(), argv[1]) == names.end()) {
      const std::string hint = suggest(argv[1], names);
      err << "error: unknown subcommand '" << argv[1] << "'";
      if (!hint.empty()) err << " (did you mean '" << hint << "'?)";
      err << "\nRun with --help for usage.\n";
      return 2;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  for (const std::string& extra : sub->remaining()) {
    err << "error: unexpected argument '" << extra << "' for " << sub->get_name();
    if (extra.rfind("-", 0) == 0) {
      const std::string hint = suggest(extra.substr(0, extra.find('=')), long_flags(*sub));
      if (!hint.empty()) err << " (did you mean '" << hint << "'?)";
    }
    err << "\nRun '" << sub->get_name() << " --help' for usage.\n";
    return 2;
  }

  const std::string cmd = sub->get_name();
  try {
    check_common(o);
    const SeedChoice seed = resolve_seed(o);
    std::vector<InputDigest> digests;
    RunOutput result;
    if (cmd == "dim") result = cmd_dim(o, digests);
    else if (cmd == "cover") result = cmd_cover(o, digests);
    else if (cmd == "renorm") result = cmd_renorm(o, digests, seed.value);
    else if (cmd == "augment") result = cmd_augment(o, digests, seed.value);
    else if (cmd == "loss") result = cmd_loss(o, digests, seed.value);
    else if (cmd == "validate") result = cmd_validate(o, digests, seed.value, err);
    else if (cmd == "gen") result = cmd_gen(o, digests);
    else if (cmd == "bench") result = cmd_bench(o, digests);

    if (cmd == "gen") {
      if (o.out.empty()) {
        out << result.artifacts.front().second;
      } else {
        write_file(o.out, result.artifacts.front().second);
      }
      return 0;
    }
    out << result.summary;
    if (o.out.empty()) {
      out << result.artifacts.front().second;
      return 0;
    }
    namespace fs = std::filesystem;
    const fs::path dir(o.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    Json outputs = Json::array();
    for (const auto& [name, content] : result.artifacts) {
      write_file(dir / name, content);
      outputs.push_back(name);
    }
    Json inputs = Json::array();
    for (const auto& d : digests) inputs.push_back({{"path", d.path}, {"sha256", d.sha256}, {"bytes", d.bytes}});
    Json timings = Json::object();
    for (const auto& [stage, ms] : result.timings_ms) timings[stage] = round_significant(ms, 6);
    Json manifest;
    manifest["tool"] = "fractalnet";
    manifest["version"] = std::string(kVersion);
    manifest["subcommand"] = cmd;
    manifest["flags"] = flag_values(*sub);
    manifest["seed"] = seed.value;
    manifest["seed_source"] = seed.source;
    manifest["rng"] = {{"renormalisation", std::string(kRenormRngName)}, {"perturbation", kSurrogateRngName}};
    manifest["inputs"] = inputs;
    manifest["outputs"] = outputs;
    for (const auto& [key, value] : result.extra.items()) manifest["details"][key] = value;
    manifest["timings_ms"] = timings;
    write_file(dir / "manifest.json", dump(manifest));
    return 0;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\nRun '" << cmd << " --help' for usage.\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace fractalnet::cli
