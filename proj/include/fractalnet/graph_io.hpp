#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fractalnet/errors.hpp"
#include "fractalnet/graph.hpp"

namespace fractalnet {

// ---------------------------------------------------------------------------
// Canonical JSON: {"n": int, "edges": [[u,v],...]}, u < v, sorted.
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json graph_to_json(const Graph& g) {
  nlohmann::ordered_json j;
  j["n"] = g.vertex_count();
  auto edges = nlohmann::ordered_json::array();
  for (const auto& [u, v] : g.edges()) edges.push_back({u, v});
  j["edges"] = std::move(edges);
  return j;
}

inline std::string graph_to_json_string(const Graph& g) { return graph_to_json(g).dump() + "\n"; }

inline Graph graph_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("edges")) {
    throw FormatError("graph JSON must be an object with \"n\" and \"edges\"");
  }
  if (!j["n"].is_number_integer() || j["n"].get<long long>() < 0) {
    throw FormatError("graph JSON: \"n\" must be a non-negative integer");
  }
  if (!j["edges"].is_array()) throw FormatError("graph JSON: \"edges\" must be an array");
  const auto n = j["n"].get<std::size_t>();
  std::vector<Edge> edges;
  for (const auto& e : j["edges"]) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
      throw FormatError("graph JSON: each edge must be a pair of integers");
    }
    const auto u = e[0].get<long long>();
    const auto v = e[1].get<long long>();
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n) {
      throw FormatError("graph JSON: edge [" + std::to_string(u) + "," + std::to_string(v) +
                        "] out of range for n=" + std::to_string(n));
    }
    edges.emplace_back(static_cast<Vertex>(u), static_cast<Vertex>(v));
  }
  return Graph::from_edges(n, edges);
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline Graph read_graph_json(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return graph_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// TU dataset layout:
//   <DS>_A.txt               "i, j" per line, 1-indexed global node ids
//   <DS>_graph_indicator.txt one 1-indexed graph id per node line
//   <DS>_graph_labels.txt    optional, one integer per graph
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open required file " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

inline bool blank(std::string_view s) {
  return s.find_first_not_of(" \t") == std::string_view::npos;
}

inline long long parse_integer(std::string_view token, const std::string& where) {
  const auto first = token.find_first_not_of(" \t");
  const auto last = token.find_last_not_of(" \t");
  if (first == std::string_view::npos) throw FormatError(where + ": empty field");
  token = token.substr(first, last - first + 1);
  long long value = 0;
  std::size_t used = 0;
  try {
    value = std::stoll(std::string(token), &used);
  } catch (const std::exception&) {
    throw FormatError(where + ": expected an integer, got '" + std::string(token) + "'");
  }
  if (used != token.size()) {
    throw FormatError(where + ": expected an integer, got '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace detail

inline GraphCollection parse_tu_dataset(const std::filesystem::path& directory,
                                        const std::string& dataset_name) {
  namespace fs = std::filesystem;
  const fs::path a_path = directory / (dataset_name + "_A.txt");
  const fs::path indicator_path = directory / (dataset_name + "_graph_indicator.txt");
  const fs::path labels_path = directory / (dataset_name + "_graph_labels.txt");

  const auto indicator_lines = detail::read_lines(indicator_path);
  const auto a_lines = detail::read_lines(a_path);

  // Node k (1-indexed) belongs to graph indicator[k-1] (1-indexed).
  std::vector<std::size_t> graph_of;
  long long max_graph = 0;
  for (std::size_t i = 0; i < indicator_lines.size(); ++i) {
    if (detail::blank(indicator_lines[i])) continue;
    const std::string where = indicator_path.filename().string() + " line " + std::to_string(i + 1);
    const long long gid = detail::parse_integer(indicator_lines[i], where);
    if (gid < 1) throw FormatError(where + ": graph ids are 1-indexed");
    graph_of.push_back(static_cast<std::size_t>(gid - 1));
    max_graph = std::max(max_graph, gid);
  }
  const auto graph_count = static_cast<std::size_t>(max_graph);

  std::vector<std::size_t> local_id(graph_of.size());
  std::vector<std::size_t> node_count(graph_count, 0);
  for (std::size_t k = 0; k < graph_of.size(); ++k) local_id[k] = node_count[graph_of[k]]++;

  std::vector<std::vector<Edge>> edges(graph_count);
  for (std::size_t i = 0; i < a_lines.size(); ++i) {
    if (detail::blank(a_lines[i])) continue;
    const std::string where = a_path.filename().string() + " line " + std::to_string(i + 1);
    const auto comma = a_lines[i].find(',');
    if (comma == std::string::npos) throw FormatError(where + ": expected 'i, j'");
    const long long a = detail::parse_integer(std::string_view(a_lines[i]).substr(0, comma), where);
    const long long b = detail::parse_integer(std::string_view(a_lines[i]).substr(comma + 1), where);
    for (long long node : {a, b}) {
      if (node < 1 || static_cast<std::size_t>(node) > graph_of.size()) {
        throw FormatError(where + ": node " + std::to_string(node) +
                          " is not listed in the graph indicator file");
      }
    }
    const std::size_t ga = graph_of[static_cast<std::size_t>(a - 1)];
    const std::size_t gb = graph_of[static_cast<std::size_t>(b - 1)];
    if (ga != gb) {
      throw FormatError(where + ": edge joins nodes of different graphs (" + std::to_string(ga + 1) +
                        " and " + std::to_string(gb + 1) + ")");
    }
    edges[ga].emplace_back(static_cast<Vertex>(local_id[static_cast<std::size_t>(a - 1)]),
                           static_cast<Vertex>(local_id[static_cast<std::size_t>(b - 1)]));
  }

  GraphCollection out;
  out.name = dataset_name;
  out.graphs.reserve(graph_count);
  for (std::size_t gi = 0; gi < graph_count; ++gi) {
    out.graphs.push_back(Graph::from_edges(node_count[gi], edges[gi], &out.import_stats));
  }

  if (fs::exists(labels_path)) {
    const auto label_lines = detail::read_lines(labels_path);
    std::vector<long long> labels;
    for (std::size_t i = 0; i < label_lines.size(); ++i) {
      if (detail::blank(label_lines[i])) continue;
      labels.push_back(detail::parse_integer(
          label_lines[i], labels_path.filename().string() + " line " + std::to_string(i + 1)));
    }
    if (labels.size() != graph_count) {
      throw FormatError(labels_path.filename().string() + ": " + std::to_string(labels.size()) +
                        " labels for " + std::to_string(graph_count) + " graphs");
    }
    out.labels = std::move(labels);
  }
  return out;
}

// Writes the collection back in TU layout. Each undirected edge is emitted
// in both orientations, as the public datasets do.
inline void write_tu_dataset(const GraphCollection& collection, const std::filesystem::path& directory,
                             const std::string& dataset_name) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  auto open = [&](const std::string& suffix) {
    const fs::path p = directory / (dataset_name + suffix);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
  };
  auto a_out = open("_A.txt");
  auto ind_out = open("_graph_indicator.txt");
  std::size_t base = 1;
  for (std::size_t gi = 0; gi < collection.graphs.size(); ++gi) {
    const Graph& g = collection.graphs[gi];
    for (std::size_t v = 0; v < g.vertex_count(); ++v) ind_out << (gi + 1) << '\n';
    for (const auto& [u, v] : g.edges()) {
      a_out << (base + u) << ", " << (base + v) << '\n';
      a_out << (base + v) << ", " << (base + u) << '\n';
    }
    base += g.vertex_count();
  }
  if (collection.labels) {
    auto lab_out = open("_graph_labels.txt");
    for (long long label : *collection.labels) lab_out << label << '\n';
  }
}

}  // namespace fractalnet
