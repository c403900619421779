#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "eclgsr/config.hpp"

namespace eclgsr {

enum class PerturbMode { Add, Remove };

/// One (parameter, seed) run of a sweep.
struct SweepRow {
    double parameter = 0.0;
    std::uint64_t seed = 0;
    double ecl_accuracy = 0.0;
    double gcn_accuracy = 0.0;     ///< control; NaN-free, 0 when not run
    double raw_intra = 0.0;        ///< intra-class edge fraction of the input graph
    double refined_intra = 0.0;    ///< intra-class edge fraction of the refined graph
    double wall_time = 0.0;        ///< seconds for the ECL-GSR run
};

struct SweepTable {
    std::string parameter_name;
    bool has_control = true;
    std::vector<SweepRow> rows;  ///< ordered by parameter, then seed
};

/// Ratios must lie in [0, 0.8]. For every ratio and seed the graph is
/// perturbed, X^s recomputed, and ECL-GSR plus the raw-graph control trained.
SweepTable robustness_sweep(const TrainConfig& cfg, const std::vector<double>& ratios, PerturbMode mode,
                            const std::vector<std::uint64_t>& seeds);
/// One ECL-GSR run per K value and seed, with wall time.
SweepTable sgld_sweep(const TrainConfig& cfg, const std::vector<std::size_t>& k_values,
                      const std::vector<std::uint64_t>& seeds);
/// Stratified train ratios, ECL-GSR and control per ratio and seed.
SweepTable ratio_sweep(const TrainConfig& cfg, const std::vector<double>& ratios,
                       const std::vector<std::uint64_t>& seeds);

/// One row per run, then "mean" and "std" rows per parameter value
/// (population std over seeds).
void write_sweep_csv(const SweepTable& table, std::ostream& out);

}  // namespace eclgsr
