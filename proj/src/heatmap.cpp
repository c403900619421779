#include "eclgsr/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "eclgsr/graph_io.hpp"

namespace eclgsr {

std::vector<NodeId> class_grouped_order(const std::vector<int>& labels) {
    std::vector<NodeId> order(labels.size());
    std::iota(order.begin(), order.end(), NodeId{0});
    auto key = [&](NodeId v) { return labels[v] < 0 ? std::numeric_limits<int>::max() : labels[v]; };
    std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) { return key(a) < key(b); });
    return order;
}

Matrix reorder(const Matrix& a, const std::vector<NodeId>& order) {
    if (a.rows() != a.cols()) throw ShapeError("heatmap: square matrix expected, got " + shape_str(a));
    std::vector<bool> seen(static_cast<std::size_t>(a.rows()), false);
    for (NodeId v : order) {
        if (v >= a.rows()) throw std::invalid_argument("heatmap: node " + std::to_string(v) + " out of range");
        if (seen[v]) throw std::invalid_argument("heatmap: node " + std::to_string(v) + " repeated in order");
        seen[v] = true;
    }
    const auto n = static_cast<Eigen::Index>(order.size());
    Matrix out(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = a(order[i], order[j]);
    }
    return out;
}

void emit_heatmap(const Matrix& a, const std::vector<NodeId>& order, const std::filesystem::path& stem) {
    const Matrix m = reorder(a, order);
    std::filesystem::path pgm = stem;
    pgm += ".pgm";
    std::filesystem::path csv = stem;
    csv += ".csv";

    std::ofstream img(pgm, std::ios::binary);
    if (!img) throw std::runtime_error("cannot write " + pgm.string());
    img << "P5\n" << m.cols() << ' ' << m.rows() << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double w = std::clamp(m(i, j), 0.0, 1.0);
            row[static_cast<std::size_t>(j)] = static_cast<unsigned char>(std::floor(255.0 * w));
        }
        img.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!img) throw std::runtime_error("failed writing " + pgm.string());
    write_csv_matrix(m, csv);
}

BlockFractions block_fractions(const Matrix& a, const std::vector<int>& labels) {
    if (a.rows() != a.cols() || static_cast<std::size_t>(a.rows()) != labels.size()) {
        throw ShapeError("block_fractions: matrix and labels disagree");
    }
    double intra = 0.0, inter = 0.0;
    std::size_t n_intra = 0, n_inter = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        if (labels[i] < 0) continue;
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (i == j || labels[j] < 0) continue;
            if (labels[i] == labels[j]) {
                intra += a(i, j);
                ++n_intra;
            } else {
                inter += a(i, j);
                ++n_inter;
            }
        }
    }
    return BlockFractions{n_intra ? intra / n_intra : 0.0, n_inter ? inter / n_inter : 0.0};
}

}  // namespace eclgsr
