#include "eclgsr/sweeps.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "eclgsr/graph_io.hpp"
#include "eclgsr/pipeline.hpp"

namespace eclgsr {
namespace {

SweepRow run_pair(const TrainConfig& cfg, double parameter, bool with_control) {
    const PreparedData data = prepare_data(cfg);
    SweepRow row;
    row.parameter = parameter;
    row.seed = cfg.seed;
    const auto start = std::chrono::steady_clock::now();
    const TrainResult ecl = train(cfg, data);
    row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const EvalResult ev = evaluate(cfg, ecl.params, data);
    row.ecl_accuracy = ev.test_accuracy;
    row.raw_intra = ev.raw_intra_fraction;
    row.refined_intra = ev.refined_intra_fraction;
    if (with_control) {
        const TrainResult control = train_control(cfg, data);
        row.gcn_accuracy = evaluate_control(control.params, data).test_accuracy;
    }
    return row;
}

void check_seeds(const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw std::invalid_argument("sweep needs at least one seed");
}

}  // namespace

SweepTable robustness_sweep(const TrainConfig& cfg, const std::vector<double>& ratios, PerturbMode mode,
                            const std::vector<std::uint64_t>& seeds) {
    check_seeds(seeds);
    for (double r : ratios) {
        if (!(r >= 0.0 && r <= 0.8)) {
            throw std::invalid_argument("robustness ratio " + format_double(r) + " outside [0, 0.8]");
        }
    }
    SweepTable table{mode == PerturbMode::Add ? "add_ratio" : "remove_ratio", true, {}};
    for (double r : ratios) {
        for (std::uint64_t s : seeds) {
            TrainConfig run = cfg;
            run.seed = s;
            run.xs_cache.clear();  // X^s must follow the perturbed graph
            (mode == PerturbMode::Add ? run.add_ratio : run.remove_ratio) = r;
            table.rows.push_back(run_pair(run, r, true));
        }
    }
    return table;
}

SweepTable sgld_sweep(const TrainConfig& cfg, const std::vector<std::size_t>& k_values,
                      const std::vector<std::uint64_t>& seeds) {
    check_seeds(seeds);
    SweepTable table{"k_steps", false, {}};
    for (std::size_t k : k_values) {
        for (std::uint64_t s : seeds) {
            TrainConfig run = cfg;
            run.seed = s;
            run.k_steps = k;
            table.rows.push_back(run_pair(run, static_cast<double>(k), false));
        }
    }
    return table;
}

SweepTable ratio_sweep(const TrainConfig& cfg, const std::vector<double>& ratios,
                       const std::vector<std::uint64_t>& seeds) {
    check_seeds(seeds);
    for (double r : ratios) {
        if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("train ratio " + format_double(r) + " outside (0, 1)");
    }
    SweepTable table{"train_ratio", true, {}};
    for (double r : ratios) {
        for (std::uint64_t s : seeds) {
            TrainConfig run = cfg;
            run.seed = s;
            run.split = SplitKind::Ratio;
            run.train_ratio = r;
            table.rows.push_back(run_pair(run, r, true));
        }
    }
    return table;
}

void write_sweep_csv(const SweepTable& table, std::ostream& out) {
    out << table.parameter_name << ",seed,ecl_accuracy";
    if (table.has_control) out << ",gcn_accuracy";
    out << ",raw_intra_fraction,refined_intra_fraction,wall_time\n";

    auto values = [&](const SweepRow& r) {
        std::vector<double> v{r.ecl_accuracy};
        if (table.has_control) v.push_back(r.gcn_accuracy);
        v.insert(v.end(), {r.raw_intra, r.refined_intra, r.wall_time});
        return v;
    };
    auto emit = [&](double parameter, const std::string& seed, const std::vector<double>& v) {
        out << format_double(parameter) << ',' << seed;
        for (double x : v) out << ',' << format_double(x);
        out << '\n';
    };

    std::size_t i = 0;
    while (i < table.rows.size()) {
        std::size_t j = i;
        while (j < table.rows.size() && table.rows[j].parameter == table.rows[i].parameter) ++j;
        std::vector<double> mean;
        for (std::size_t k = i; k < j; ++k) {
            const auto v = values(table.rows[k]);
            emit(table.rows[k].parameter, std::to_string(table.rows[k].seed), v);
            if (mean.empty()) mean.assign(v.size(), 0.0);
            for (std::size_t c = 0; c < v.size(); ++c) mean[c] += v[c];
        }
        const double n = static_cast<double>(j - i);
        for (double& m : mean) m /= n;
        std::vector<double> sd(mean.size(), 0.0);
        for (std::size_t k = i; k < j; ++k) {
            const auto v = values(table.rows[k]);
            for (std::size_t c = 0; c < v.size(); ++c) sd[c] += (v[c] - mean[c]) * (v[c] - mean[c]);
        }
        for (double& s : sd) s = std::sqrt(s / n);
        emit(table.rows[i].parameter, "mean", mean);
        emit(table.rows[i].parameter, "std", sd);
        i = j;
    }
}

}  // namespace eclgsr
