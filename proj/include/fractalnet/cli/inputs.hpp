#pragma once

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fractalnet/cli/format.hpp"
#include "fractalnet/errors.hpp"
#include "fractalnet/fractal_loss.hpp"
#include "fractalnet/generators.hpp"
#include "fractalnet/graph_io.hpp"

namespace fractalnet::cli {

// Bad flags or flag combinations (exit status 2).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InputDigest {
  std::string path;
  std::string sha256;
  std::size_t bytes = 0;
};

struct FamilyParams {
  std::string family;
  std::size_t n = 0;
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t branching = 2;
  std::size_t depth = 0;
  std::size_t k = 0;
  std::string motif_path;
};

struct SourceOptions {
  std::string dataset;
  std::string dataset_name;
  std::string graph;
  FamilyParams family;
  std::optional<std::size_t> index;
};

struct LoadedGraphs {
  std::string name;
  std::vector<Graph> graphs;
  std::vector<std::string> labels;  // per-graph description for the manifest
  EdgeImportStats import_stats;
};

inline std::string digest_file(const std::filesystem::path& path, std::vector<InputDigest>& digests) {
  std::string content = read_text_file(path);
  digests.push_back({path.string(), sha256_hex(content), content.size()});
  return content;
}

inline MotifSpec load_motif(const std::string& path, std::vector<InputDigest>& digests) {
  if (path.empty()) return h_motif();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(digest_file(path, digests));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
  MotifSpec spec;
  spec.motif = graph_from_json(j);
  if (!j.contains("anchor_a") || !j.contains("anchor_b") || !j["anchor_a"].is_number_unsigned() ||
      !j["anchor_b"].is_number_unsigned()) {
    throw FormatError(path + ": motif needs non-negative integer \"anchor_a\" and \"anchor_b\"");
  }
  spec.anchor_a = j["anchor_a"].get<Vertex>();
  spec.anchor_b = j["anchor_b"].get<Vertex>();
  validate_motif(spec);
  return spec;
}

inline std::size_t require_positive(std::size_t v, const char* flag, const std::string& family) {
  if (v == 0) throw UsageError("--family " + family + " needs " + flag + " >= 1");
  return v;
}

inline Graph make_family(const FamilyParams& p, std::vector<InputDigest>& digests) {
  const std::string& f = p.family;
  if (f == "path") return path_graph(require_positive(p.n, "--n", f));
  if (f == "cycle") {
    if (p.n < 3) throw UsageError("--family cycle needs --n >= 3");
    return cycle_graph(p.n);
  }
  if (f == "complete") return complete_graph(require_positive(p.n, "--n", f));
  if (f == "star") return star_graph(require_positive(p.n, "--n", f));
  if (f == "grid") {
    const std::size_t w = require_positive(p.width ? p.width : p.n, "--width", f);
    return grid_graph(w, p.height ? p.height : w);
  }
  if (f == "tree") return balanced_tree(require_positive(p.branching, "--branching", f), p.depth);
  if (f == "igs") return igs_iterate(load_motif(p.motif_path, digests), p.k).graph;
  throw UsageError("unknown family '" + f + "' (expected path, cycle, grid, complete, star, tree or igs)");
}

inline std::string family_label(const FamilyParams& p) {
  const std::string& f = p.family;
  if (f == "grid") {
    const std::size_t w = p.width ? p.width : p.n;
    return "grid(" + std::to_string(w) + "," + std::to_string(p.height ? p.height : w) + ")";
  }
  if (f == "tree") return "tree(" + std::to_string(p.branching) + "," + std::to_string(p.depth) + ")";
  if (f == "igs") return "igs(k=" + std::to_string(p.k) + ")";
  return f + "(" + std::to_string(p.n) + ")";
}

inline LoadedGraphs load_dataset(const std::string& dir, const std::string& name_flag,
                                 std::vector<InputDigest>& digests) {
  namespace fs = std::filesystem;
  const fs::path path(dir);
  if (!fs::is_directory(path)) throw IoError("dataset directory not found: " + dir);
  std::string name = name_flag;
  if (name.empty()) name = fs::absolute(path).lexically_normal().filename().string();
  if (name.empty()) name = fs::absolute(path).lexically_normal().parent_path().filename().string();
  LoadedGraphs out;
  GraphCollection c = parse_tu_dataset(path, name);
  for (const char* suffix : {"_A.txt", "_graph_indicator.txt", "_graph_labels.txt"}) {
    const fs::path file = path / (name + suffix);
    if (fs::exists(file)) digest_file(file, digests);
  }
  out.name = c.name;
  out.graphs = std::move(c.graphs);
  out.import_stats = c.import_stats;
  for (std::size_t i = 0; i < out.graphs.size(); ++i) out.labels.push_back(name + "#" + std::to_string(i));
  return out;
}

/// Resolves exactly one of --dataset, --graph, --family.
inline LoadedGraphs load_sources(const SourceOptions& s, std::vector<InputDigest>& digests) {
  const int given = !s.dataset.empty() + !s.graph.empty() + !s.family.family.empty();
  if (given != 1) throw UsageError("give exactly one of --dataset, --graph or --family");
  LoadedGraphs out;
  if (!s.dataset.empty()) {
    out = load_dataset(s.dataset, s.dataset_name, digests);
  } else if (!s.graph.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(digest_file(s.graph, digests));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(s.graph + ": " + e.what());
    }
    out.name = std::filesystem::path(s.graph).stem().string();
    out.graphs.push_back(graph_from_json(j));
    out.labels.push_back(s.graph);
  } else {
    out.name = s.family.family;
    out.graphs.push_back(make_family(s.family, digests));
    out.labels.push_back(family_label(s.family));
  }
  if (s.index) {
    if (*s.index >= out.graphs.size()) {
      throw UsageError("--index " + std::to_string(*s.index) + " out of range for " +
                       std::to_string(out.graphs.size()) + " graphs");
    }
    Graph g = std::move(out.graphs[*s.index]);
    std::string label = out.labels[*s.index];
    out.graphs.assign(1, std::move(g));
    out.labels.assign(1, std::move(label));
  }
  return out;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::optional<double> parse_double(const std::string& token) {
  const std::string t = trim(token);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return std::nullopt;
  return v;
}

// "a..b" inclusive.
inline std::pair<std::size_t, std::size_t> parse_range(const std::string& text, const char* flag) {
  const auto dots = text.find("..");
  auto number = [&](const std::string& part) {
    std::size_t v = 0;
    const auto t = trim(part);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
      throw UsageError(std::string(flag) + ": expected a..b, got '" + text + "'");
    }
    return v;
  };
  if (dots == std::string::npos) throw UsageError(std::string(flag) + ": expected a..b, got '" + text + "'");
  const std::size_t a = number(text.substr(0, dots));
  const std::size_t b = number(text.substr(dots + 2));
  if (a > b) throw UsageError(std::string(flag) + ": empty range '" + text + "'");
  return {a, b};
}

/// Rows of comma-separated reals. Blank lines and lines starting with '#'
/// are skipped, as is a leading non-numeric header row.
inline Eigen::MatrixXd parse_matrix_csv(const std::string& content, const std::string& where) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::istringstream in(content);
  std::string line;
  bool header_skipped = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    bool numeric = true;
    for (const auto& token : split(line, ',')) {
      const auto v = parse_double(token);
      if (!v) {
        numeric = false;
        break;
      }
      row.push_back(*v);
    }
    if (!numeric) {
      if (rows.empty() && !header_skipped) {
        header_skipped = true;
        continue;
      }
      throw FormatError(where + " line " + std::to_string(line_no) + ": non-numeric value");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError(where + " line " + std::to_string(line_no) + ": expected " +
                        std::to_string(rows.front().size()) + " columns, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(where + ": no data rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
  return m;
}

// A CSV with a header row, read as column name -> values.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::initializer_list<const char*> names) const {
    for (const char* name : names) {
      for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    }
    return std::nullopt;
  }
};

inline Table parse_table_csv(const std::string& content, const std::string& where) {
  Table t;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto cells = split(line, ',');
    for (auto& c : cells) c = trim(c);
    if (t.columns.empty()) {
      t.columns = std::move(cells);
      continue;
    }
    if (cells.size() != t.columns.size()) {
      throw FormatError(where + " line " + std::to_string(line_no) + ": expected " +
                        std::to_string(t.columns.size()) + " columns, got " + std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.columns.empty()) throw FormatError(where + ": missing header row");
  return t;
}

struct MetaRows {
  std::vector<GraphMeta> meta;
  std::vector<DimensionTriple> dims;  // filled when renormalised dimensions are present
  bool has_renorm_dims = false;
};

/// Reads per-graph metadata. Recognised columns: graph_id, diam, dimension
/// (or dim_g), r_squared, gated, and optionally dim_renorm (or dim_r).
inline MetaRows parse_meta_csv(const std::string& content, const std::string& where) {
  const Table t = parse_table_csv(content, where);
  const auto c_id = t.column({"graph_id"});
  const auto c_diam = t.column({"diam", "diameter"});
  const auto c_dim = t.column({"dimension", "dim_g"});
  const auto c_r2 = t.column({"r_squared"});
  const auto c_gated = t.column({"gated"});
  const auto c_dim_r = t.column({"dim_renorm", "dim_r"});
  if (!c_diam || !c_dim) throw FormatError(where + ": needs columns diam and dimension");
  MetaRows out;
  out.has_renorm_dims = c_dim_r.has_value();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const std::string at = where + " row " + std::to_string(i + 1);
    auto real = [&](std::size_t col) {
      const auto v = parse_double(row[col]);
      if (!v) throw FormatError(at + ": column " + t.columns[col] + " is not a number");
      return *v;
    };
    auto integer = [&](std::size_t col) -> unsigned long long {
      const double v = real(col);
      if (v < 0 || v != std::floor(v)) throw FormatError(at + ": column " + t.columns[col] + " must be a count");
      return static_cast<unsigned long long>(v);
    };
    GraphMeta m;
    m.graph_id = c_id ? integer(*c_id) : i;
    m.diameter = static_cast<Distance>(integer(*c_diam));
    m.dimension = real(*c_dim);
    m.r_squared = c_r2 ? real(*c_r2) : 1.0;
    if (c_gated) {
      const std::string& g = row[*c_gated];
      if (g == "1" || g == "true") {
        m.gated = true;
      } else if (g == "0" || g == "false") {
        m.gated = false;
      } else {
        throw FormatError(at + ": gated must be 0/1 or true/false");
      }
    }
    out.meta.push_back(m);
    out.dims.push_back({m.dimension, c_dim_r ? real(*c_dim_r) : m.dimension, std::nullopt});
  }
  if (out.meta.empty()) throw FormatError(where + ": no data rows");
  return out;
}

}  // namespace fractalnet::cli
