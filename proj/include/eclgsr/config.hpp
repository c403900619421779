#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "eclgsr/ecl.hpp"
#include "eclgsr/graph.hpp"
#include "eclgsr/struct_embed.hpp"

namespace eclgsr {

class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

enum class Selection { BestVal, Final };
/// Where masks come from: the dataset's split.json, the standard per-class
/// split, or a stratified train ratio.
enum class SplitKind { Auto, File, Standard, Ratio };

/// Every knob of a training run. Serialized as flat JSON with the field names
/// below; unknown keys are rejected.
struct TrainConfig {
    // objective
    double alpha = 0.1;
    double beta = 0.01;
    double mu = 0.01;
    double tau = 0.1;
    double lambda = 0.01;
    std::size_t k_steps = 3;

    // optimization
    std::size_t batch_n = 64;
    std::size_t edges_per_subgraph = 16;
    std::size_t epochs = 40;
    double lr = 1e-3;
    std::size_t lr_halve_every = 20;
    double sigma = 0.1;
    double bernoulli_temp = 0.5;
    std::size_t encoder_width = 128;
    std::size_t classifier_width = 64;
    std::size_t candidate_k = 20;
    Selection selection = Selection::BestVal;

    DeepWalkConfig deepwalk;
    std::uint64_t seed = 0;

    // data: a directory in the on-disk format, or a synthetic SBM
    std::string data_dir;
    std::string xs_cache;  ///< optional precomputed X^s (CSV)
    SbmSpec sbm;
    double add_ratio = 0.0;
    double remove_ratio = 0.0;

    SplitKind split = SplitKind::Auto;
    double train_ratio = 0.1;
    double val_fraction = 0.2;
    double test_fraction = 0.2;

    ecl::EclHyper hyper() const { return ecl::EclHyper{tau, alpha, beta, lambda, k_steps}; }
    /// Throws ConfigError naming the first invalid field.
    void validate() const;
};

std::string to_json_string(const TrainConfig& cfg);
/// Starts from `base` and overrides every key present in `text`.
TrainConfig config_from_json(const std::string& text, const TrainConfig& base = {});
TrainConfig load_config(const std::filesystem::path& path, const TrainConfig& base = {});
/// Applies one "key=value" override; the value is parsed as JSON, with a bare
/// word taken as a string.
void apply_override(TrainConfig& cfg, const std::string& assignment);

}  // namespace eclgsr
