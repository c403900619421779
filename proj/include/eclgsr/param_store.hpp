#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "eclgsr/matrix.hpp"
#include "eclgsr/rng.hpp"

namespace eclgsr {

struct Parameter {
    Matrix value;
    /// Empty until a backward pass reaches this parameter.
    Matrix grad;

    bool has_grad() const { return grad.size() != 0; }
};

/// Named trainable tensors. Iteration is lexicographic by name, so any loop
/// over the store (optimizer, checkpoint, gradient check) is deterministic.
class ParamStore {
  public:
    using Map = std::map<std::string, Parameter>;

    Parameter& create(const std::string& name, Matrix init);
    Parameter& at(const std::string& name);
    const Parameter& at(const std::string& name) const;
    bool contains(const std::string& name) const { return params_.count(name) != 0; }

    /// Replaces a value; the shape must match the existing one.
    void set(const std::string& name, const Matrix& value);
    /// Copies every value of `other` into this store (same names and shapes).
    void assign_values(const ParamStore& other);

    void zero_grad();
    std::size_t size() const { return params_.size(); }
    std::size_t num_scalars() const;

    Map::iterator begin() { return params_.begin(); }
    Map::iterator end() { return params_.end(); }
    Map::const_iterator begin() const { return params_.begin(); }
    Map::const_iterator end() const { return params_.end(); }

  private:
    Map params_;
};

/// Glorot-uniform initialization for a fan_in x fan_out weight.
Matrix glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng);

/// Checkpoint container: 8-byte magic "ECLPARM1", u64 little-endian header
/// length, a JSON header {"params":[{"name","rows","cols","offset"}]}, then
/// row-major float64 payload. Offsets are in doubles from payload start.
void save_checkpoint(const ParamStore& store, const std::filesystem::path& path);
ParamStore load_checkpoint(const std::filesystem::path& path);

}  // namespace eclgsr
