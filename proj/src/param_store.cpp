#include "eclgsr/param_store.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace eclgsr {

Parameter& ParamStore::create(const std::string& name, Matrix init) {
    auto [it, inserted] = params_.try_emplace(name);
    if (!inserted) throw std::invalid_argument("parameter already exists: " + name);
    it->second.value = std::move(init);
    return it->second;
}

Parameter& ParamStore::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
}

void ParamStore::set(const std::string& name, const Matrix& value) {
    Parameter& p = at(name);
    if (p.value.rows() != value.rows() || p.value.cols() != value.cols()) {
        throw ShapeError("parameter " + name + " has shape " + shape_str(p.value) + ", got " + shape_str(value));
    }
    p.value = value;
}

void ParamStore::assign_values(const ParamStore& other) {
    if (other.size() != size()) throw std::invalid_argument("assign_values: parameter sets differ");
    for (const auto& [name, p] : other) set(name, p.value);
}

void ParamStore::zero_grad() {
    for (auto& [name, p] : params_) p.grad.resize(0, 0);
}

std::size_t ParamStore::num_scalars() const {
    std::size_t n = 0;
    for (const auto& [name, p] : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
}

Matrix glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
    return w;
}

namespace {
constexpr char kMagic[8] = {'E', 'C', 'L', 'P', 'A', 'R', 'M', '1'};
}

void save_checkpoint(const ParamStore& store, const std::filesystem::path& path) {
    nlohmann::json header;
    header["params"] = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& [name, p] : store) {
        header["params"].push_back({{"name", name}, {"rows", p.value.rows()}, {"cols", p.value.cols()},
                                    {"offset", offset}});
        offset += static_cast<std::size_t>(p.value.size());
    }
    const std::string text = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, p] : store) {
        out.write(reinterpret_cast<const char*>(p.value.data()),
                  static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("short write on checkpoint " + path.string());
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error(path.string() + ": not a parameter checkpoint");
    }
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) throw std::runtime_error(path.string() + ": truncated header");
    const auto header = nlohmann::json::parse(text);

    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>{});
    if (raw.size() % sizeof(double) != 0) throw std::runtime_error(path.string() + ": ragged payload");
    std::vector<double> payload(raw.size() / sizeof(double), 0.0);
    std::memcpy(payload.data(), raw.data(), raw.size());

    ParamStore store;
    for (const auto& entry : header.at("params")) {
        const auto rows = entry.at("rows").get<Eigen::Index>();
        const auto cols = entry.at("cols").get<Eigen::Index>();
        const auto offset = entry.at("offset").get<std::size_t>();
        if (offset + static_cast<std::size_t>(rows * cols) > payload.size()) {
            throw std::runtime_error(path.string() + ": payload too short for " + entry.at("name").get<std::string>());
        }
        Matrix m(rows, cols);
        std::memcpy(m.data(), payload.data() + offset, static_cast<std::size_t>(rows * cols) * sizeof(double));
        store.create(entry.at("name").get<std::string>(), std::move(m));
    }
    return store;
}

}  // namespace eclgsr
