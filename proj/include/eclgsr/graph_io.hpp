#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "eclgsr/graph.hpp"

namespace eclgsr {

/// Malformed or missing dataset file. The message carries "file:line: ".
class GraphIoError : public std::runtime_error {
  public:
    GraphIoError(const std::filesystem::path& file, std::size_t line, const std::string& what);
    GraphIoError(const std::filesystem::path& file, const std::string& what);
};

struct LoadReport {
    Graph graph;
    std::size_t self_loops_dropped = 0;
    std::size_t duplicates_dropped = 0;
};

/// Reads edges.tsv, features.csv, labels.tsv and split.json from `dir`.
LoadReport load_graph(const std::filesystem::path& dir);
/// Writes the same four files. Floats use shortest round-trip rendering.
void save_graph(const Graph& g, const std::filesystem::path& dir);

/// Comma-separated rows of decimal floats.
Matrix read_csv_matrix(const std::filesystem::path& file);
void write_csv_matrix(const Matrix& m, const std::filesystem::path& file);

/// "src<TAB>dst" lines, or "src<TAB>dst<TAB>weight" when weights are given.
void write_edges_tsv(const std::vector<Edge>& edges, const std::filesystem::path& file,
                     const std::vector<double>* weights = nullptr);

/// Shortest decimal rendering that parses back to the same double.
std::string format_double(double x);

}  // namespace eclgsr
