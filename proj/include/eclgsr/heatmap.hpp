#pragma once

#include <filesystem>
#include <vector>

#include "eclgsr/graph.hpp"

namespace eclgsr {

/// Node order grouped by class (ascending label, stable within a class);
/// unlabeled nodes go last.
std::vector<NodeId> class_grouped_order(const std::vector<int>& labels);

/// Rows and columns of `a` permuted by `order`.
Matrix reorder(const Matrix& a, const std::vector<NodeId>& order);

/// Writes `<stem>.pgm` (8-bit P5, pixel = floor(255 * clamp(w, 0, 1))) and
/// `<stem>.csv` (the exact reordered values). Order entries must be valid
/// and distinct.
void emit_heatmap(const Matrix& a, const std::vector<NodeId>& order, const std::filesystem::path& stem);

/// Mean off-diagonal weight over same-class and different-class labeled pairs.
struct BlockFractions {
    double intra = 0.0;
    double inter = 0.0;
};
BlockFractions block_fractions(const Matrix& a, const std::vector<int>& labels);

}  // namespace eclgsr
