#include "eclgsr/graph_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace eclgsr {
namespace fs = std::filesystem;

GraphIoError::GraphIoError(const fs::path& file, std::size_t line, const std::string& what)
    : std::runtime_error(file.string() + ":" + std::to_string(line) + ": " + what) {}

GraphIoError::GraphIoError(const fs::path& file, const std::string& what)
    : std::runtime_error(file.string() + ": " + what) {}

namespace {

std::ifstream open_input(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw GraphIoError(file, "missing or unreadable file");
    return in;
}

std::ofstream open_output(const fs::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw GraphIoError(file, "cannot open for writing");
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view tok, const fs::path& file, std::size_t line) {
    tok = trim(tok);
    T value{};
    const auto* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, value);
    if (ec != std::errc() || ptr != end || tok.empty()) {
        throw GraphIoError(file, line, "non-numeric token '" + std::string(tok) + "'");
    }
    return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(line.substr(start));
            return parts;
        }
        parts.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

Matrix read_csv_matrix(const fs::path& file) {
    auto in = open_input(file);
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto parts = split(line, ',');
        if (rows == 0) {
            cols = parts.size();
        } else if (parts.size() != cols) {
            throw GraphIoError(file, lineno,
                               "ragged row: " + std::to_string(parts.size()) + " values, expected " + std::to_string(cols));
        }
        for (auto tok : parts) values.push_back(parse_number<double>(tok, file, lineno));
        ++rows;
    }
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::copy(values.begin(), values.end(), m.data());
    return m;
}

void write_csv_matrix(const Matrix& m, const fs::path& file) {
    auto out = open_output(file);
    std::string line;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        line.clear();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) line += ',';
            line += format_double(m(i, j));
        }
        line += '\n';
        out << line;
    }
}

void write_edges_tsv(const std::vector<Edge>& edges, const fs::path& file, const std::vector<double>* weights) {
    if (weights != nullptr && weights->size() != edges.size()) {
        throw std::invalid_argument("write_edges_tsv: weight count differs from edge count");
    }
    auto out = open_output(file);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        out << edges[i].src << '\t' << edges[i].dst;
        if (weights != nullptr) out << '\t' << format_double((*weights)[i]);
        out << '\n';
    }
}

LoadReport load_graph(const fs::path& dir) {
    const fs::path edges_file = dir / "edges.tsv";
    const fs::path features_file = dir / "features.csv";
    const fs::path labels_file = dir / "labels.tsv";
    const fs::path split_file = dir / "split.json";

    LoadReport report;
    Graph& g = report.graph;
    g.features = read_csv_matrix(features_file);
    g.num_nodes = static_cast<std::size_t>(g.features.rows());
    const auto check_node = [&](std::size_t v, const fs::path& file, std::size_t line) {
        if (v >= g.num_nodes) {
            throw GraphIoError(file, line,
                               "node index " + std::to_string(v) + " out of range (V=" + std::to_string(g.num_nodes) + ")");
        }
    };

    {
        auto in = open_input(edges_file);
        std::vector<std::pair<NodeId, NodeId>> raw;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            const auto parts = split(line, '\t');
            if (parts.size() != 2) throw GraphIoError(edges_file, lineno, "expected 'src<TAB>dst'");
            const auto a = parse_number<std::uint64_t>(parts[0], edges_file, lineno);
            const auto b = parse_number<std::uint64_t>(parts[1], edges_file, lineno);
            check_node(a, edges_file, lineno);
            check_node(b, edges_file, lineno);
            raw.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
        }
        auto canon = canonicalize_edges(raw);
        g.edges = std::move(canon.edges);
        report.self_loops_dropped = canon.self_loops;
        report.duplicates_dropped = canon.duplicates;
    }

    {
        auto in = open_input(labels_file);
        g.labels.assign(g.num_nodes, kUnlabeled);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            const auto parts = split(line, '\t');
            if (parts.size() != 2) throw GraphIoError(labels_file, lineno, "expected 'node<TAB>label'");
            const auto v = parse_number<std::uint64_t>(parts[0], labels_file, lineno);
            const auto label = parse_number<int>(parts[1], labels_file, lineno);
            check_node(v, labels_file, lineno);
            if (label < 0) throw GraphIoError(labels_file, lineno, "negative label");
            g.labels[v] = label;
        }
    }

    {
        auto in = open_input(split_file);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw GraphIoError(split_file, e.what());
        }
        const std::pair<const char*, std::vector<NodeId>*> masks[] = {
            {"train", &g.train}, {"val", &g.val}, {"test", &g.test}};
        for (auto [key, mask_ptr] : masks) {
            auto& mask = *mask_ptr;
            if (!j.contains(key)) continue;
            for (const auto& id : j.at(key)) {
                if (!id.is_number_unsigned()) throw GraphIoError(split_file, std::string("non-integer id in ") + key);
                const auto v = id.get<std::uint64_t>();
                if (v >= g.num_nodes) throw GraphIoError(split_file, std::string("node index out of range in ") + key);
                mask.push_back(static_cast<NodeId>(v));
            }
        }
    }

    try {
        g.validate();
    } catch (const std::invalid_argument& e) {
        throw GraphIoError(dir, e.what());
    }
    return report;
}

void save_graph(const Graph& g, const fs::path& dir) {
    fs::create_directories(dir);
    write_edges_tsv(g.edges, dir / "edges.tsv");
    write_csv_matrix(g.features, dir / "features.csv");
    {
        auto out = open_output(dir / "labels.tsv");
        for (std::size_t i = 0; i < g.labels.size(); ++i) {
            if (g.labels[i] != kUnlabeled) out << i << '\t' << g.labels[i] << '\n';
        }
    }
    nlohmann::json j;
    j["train"] = g.train;
    j["val"] = g.val;
    j["test"] = g.test;
    auto out = open_output(dir / "split.json");
    out << j.dump() << '\n';
}

}  // namespace eclgsr
