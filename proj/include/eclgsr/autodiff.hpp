#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eclgsr/matrix.hpp"

namespace eclgsr {
struct Parameter;
}

namespace eclgsr::ad {

class Tape;

/// Raised when backward is invoked twice on the same recording or on a
/// non-scalar output.
class TapeError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive and has not been cleared.
class Var {
  public:
    Var() = default;

    const Matrix& value() const;
    /// Gradient after Tape::backward. Zero-sized if the node received none.
    const Matrix& grad() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    /// Convenience for 1x1 values.
    double scalar() const;
    bool requires_grad() const;

    Tape& tape() const;
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

  private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Linear record of executed operations. Nodes are appended in execution
/// order, which is a topological order of the computation DAG; backward walks
/// the record once in reverse.
class Tape {
  public:
    /// Propagates the output gradient of a node into its inputs.
    using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Leaf that never receives a gradient.
    Var constant(Matrix value);
    /// Leaf whose gradient is kept on the tape (read it with Var::grad).
    Var input(Matrix value);
    /// Leaf bound to a parameter; backward adds into `param.grad`.
    Var param(Parameter& param);

    /// Records an op result. Throws NumericError if `value` is not finite.
    Var record(std::string op, Matrix value, const std::vector<Var>& inputs, BackwardFn backward);

    /// Reverse sweep from a 1x1 loss. One call per recording.
    void backward(const Var& loss);
    void clear();

    std::size_t size() const { return nodes_.size(); }
    const Matrix& value(std::size_t id) const { return nodes_.at(id).value; }
    const Matrix& grad(std::size_t id) const { return nodes_.at(id).grad; }
    bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

    /// Adds `g` into the gradient of node `id` if that node tracks gradients.
    void accumulate(std::size_t id, const Matrix& g);

  private:
    struct Node {
        std::string op;
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        Parameter* param = nullptr;
        BackwardFn backward;
    };

    Var push(Node node);

    std::deque<Node> nodes_;
    bool backward_done_ = false;
};

}  // namespace eclgsr::ad
