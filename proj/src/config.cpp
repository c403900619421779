#include "eclgsr/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <type_traits>

#include <json.hpp>

namespace eclgsr {
namespace {

using nlohmann::json;

struct Field {
    std::function<json(const TrainConfig&)> get;
    std::function<void(TrainConfig&, const json&)> set;
};

template <typename T>
T read_value(const json& v) {
    if constexpr (std::is_unsigned_v<T>) {
        if (!v.is_number_unsigned()) throw ConfigError("expected a non-negative integer, got " + v.dump());
    }
    return v.get<T>();
}

template <typename T>
Field plain(T TrainConfig::*member) {
    return Field{[member](const TrainConfig& c) { return json(c.*member); },
                 [member](TrainConfig& c, const json& v) { c.*member = read_value<T>(v); }};
}

template <typename S, typename T>
Field nested(S TrainConfig::*outer, T S::*inner) {
    return Field{[outer, inner](const TrainConfig& c) { return json((c.*outer).*inner); },
                 [outer, inner](TrainConfig& c, const json& v) { (c.*outer).*inner = read_value<T>(v); }};
}

const char* selection_name(Selection s) { return s == Selection::BestVal ? "best_val" : "final"; }

const char* split_name(SplitKind s) {
    switch (s) {
        case SplitKind::Auto: return "auto";
        case SplitKind::File: return "file";
        case SplitKind::Standard: return "standard";
        case SplitKind::Ratio: return "ratio";
    }
    return "auto";
}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> f;
        f["alpha"] = plain(&TrainConfig::alpha);
        f["beta"] = plain(&TrainConfig::beta);
        f["mu"] = plain(&TrainConfig::mu);
        f["tau"] = plain(&TrainConfig::tau);
        f["lambda"] = plain(&TrainConfig::lambda);
        f["k_steps"] = plain(&TrainConfig::k_steps);
        f["batch_n"] = plain(&TrainConfig::batch_n);
        f["edges_per_subgraph"] = plain(&TrainConfig::edges_per_subgraph);
        f["epochs"] = plain(&TrainConfig::epochs);
        f["lr"] = plain(&TrainConfig::lr);
        f["lr_halve_every"] = plain(&TrainConfig::lr_halve_every);
        f["sigma"] = plain(&TrainConfig::sigma);
        f["bernoulli_temp"] = plain(&TrainConfig::bernoulli_temp);
        f["encoder_width"] = plain(&TrainConfig::encoder_width);
        f["classifier_width"] = plain(&TrainConfig::classifier_width);
        f["candidate_k"] = plain(&TrainConfig::candidate_k);
        f["seed"] = plain(&TrainConfig::seed);
        f["data_dir"] = plain(&TrainConfig::data_dir);
        f["xs_cache"] = plain(&TrainConfig::xs_cache);
        f["add_ratio"] = plain(&TrainConfig::add_ratio);
        f["remove_ratio"] = plain(&TrainConfig::remove_ratio);
        f["train_ratio"] = plain(&TrainConfig::train_ratio);
        f["val_fraction"] = plain(&TrainConfig::val_fraction);
        f["test_fraction"] = plain(&TrainConfig::test_fraction);

        f["deepwalk_walk_length"] = nested(&TrainConfig::deepwalk, &DeepWalkConfig::walk_length);
        f["deepwalk_walks_per_node"] = nested(&TrainConfig::deepwalk, &DeepWalkConfig::walks_per_node);
        f["deepwalk_window"] = nested(&TrainConfig::deepwalk, &DeepWalkConfig::window);
        f["deepwalk_negatives"] = nested(&TrainConfig::deepwalk, &DeepWalkConfig::negatives);
        f["deepwalk_epochs"] = nested(&TrainConfig::deepwalk, &DeepWalkConfig::epochs);
        f["deepwalk_lr"] = nested(&TrainConfig::deepwalk, &DeepWalkConfig::lr);

        f["sbm_blocks"] = nested(&TrainConfig::sbm, &SbmSpec::blocks);
        f["sbm_nodes_per_block"] = nested(&TrainConfig::sbm, &SbmSpec::nodes_per_block);
        f["sbm_p_intra"] = nested(&TrainConfig::sbm, &SbmSpec::p_intra);
        f["sbm_p_inter"] = nested(&TrainConfig::sbm, &SbmSpec::p_inter);
        f["sbm_feat_dim"] = nested(&TrainConfig::sbm, &SbmSpec::feat_dim);
        f["sbm_feat_noise"] = nested(&TrainConfig::sbm, &SbmSpec::feat_noise);

        f["selection"] = Field{[](const TrainConfig& c) { return json(selection_name(c.selection)); },
                               [](TrainConfig& c, const json& v) {
                                   const auto s = v.get<std::string>();
                                   if (s == "best_val") c.selection = Selection::BestVal;
                                   else if (s == "final") c.selection = Selection::Final;
                                   else throw ConfigError("selection must be best_val or final, got '" + s + "'");
                               }};
        f["split"] = Field{[](const TrainConfig& c) { return json(split_name(c.split)); },
                           [](TrainConfig& c, const json& v) {
                               const auto s = v.get<std::string>();
                               if (s == "auto") c.split = SplitKind::Auto;
                               else if (s == "file") c.split = SplitKind::File;
                               else if (s == "standard") c.split = SplitKind::Standard;
                               else if (s == "ratio") c.split = SplitKind::Ratio;
                               else throw ConfigError("split must be auto, file, standard or ratio, got '" + s + "'");
                           }};
        return f;
    }();
    return table;
}

void set_field(TrainConfig& cfg, const std::string& key, const json& value) {
    const auto& table = fields();
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    try {
        it->second.set(cfg, value);
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

}  // namespace

void TrainConfig::validate() const {
    require(tau > 0.0, "tau must be positive");
    require(alpha >= 0.0, "alpha must be non-negative");
    require(beta >= 0.0, "beta must be non-negative");
    require(mu >= 0.0, "mu must be non-negative");
    require(lambda > 0.0, "lambda must be positive");
    require(batch_n >= 2, "batch_n must be at least 2");
    require(edges_per_subgraph >= 1, "edges_per_subgraph must be positive");
    require(lr > 0.0, "lr must be positive");
    require(lr_halve_every >= 1, "lr_halve_every must be positive");
    require(sigma >= 0.0, "sigma must be non-negative");
    require(bernoulli_temp > 0.0, "bernoulli_temp must be positive");
    require(encoder_width >= 1, "encoder_width must be positive");
    require(classifier_width >= 1, "classifier_width must be positive");
    require(deepwalk.walk_length >= 1 && deepwalk.walks_per_node >= 1, "deepwalk walk sizes must be positive");
    require(deepwalk.lr > 0.0, "deepwalk_lr must be positive");
    require(add_ratio >= 0.0, "add_ratio must be non-negative");
    require(remove_ratio >= 0.0 && remove_ratio <= 1.0, "remove_ratio must lie in [0, 1]");
    require(train_ratio > 0.0 && train_ratio < 1.0, "train_ratio must lie in (0, 1)");
    require(val_fraction >= 0.0 && test_fraction >= 0.0 && train_ratio + val_fraction + test_fraction <= 1.0 + 1e-12,
            "train_ratio + val_fraction + test_fraction must not exceed 1");
    if (data_dir.empty()) {
        require(sbm.blocks >= 1 && sbm.nodes_per_block >= 1, "sbm sizes must be positive");
        require(sbm.p_intra >= 0.0 && sbm.p_intra <= 1.0 && sbm.p_inter >= 0.0 && sbm.p_inter <= 1.0,
                "sbm probabilities must lie in [0, 1]");
        require(sbm.feat_dim >= sbm.blocks, "sbm_feat_dim must be at least sbm_blocks");
        require(split != SplitKind::File, "split 'file' needs data_dir");
    }
}

std::string to_json_string(const TrainConfig& cfg) {
    json j = json::object();
    for (const auto& [key, field] : fields()) j[key] = field.get(cfg);
    return j.dump(2) + "\n";
}

TrainConfig config_from_json(const std::string& text, const TrainConfig& base) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    TrainConfig cfg = base;
    for (const auto& [key, value] : j.items()) set_field(cfg, key, value);
    return cfg;
}

TrainConfig load_config(const std::filesystem::path& path, const TrainConfig& base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str(), base);
}

void apply_override(TrainConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: '" + assignment + "'");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    set_field(cfg, key, value);
}

}  // namespace eclgsr
