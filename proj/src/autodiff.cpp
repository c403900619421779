#include "eclgsr/autodiff.hpp"

#include "eclgsr/param_store.hpp"

namespace eclgsr::ad {

const Matrix& Var::value() const { return tape().value(id_); }
const Matrix& Var::grad() const { return tape().grad(id_); }
bool Var::requires_grad() const { return tape().requires_grad(id_); }

double Var::scalar() const {
    const Matrix& v = value();
    if (v.rows() != 1 || v.cols() != 1) throw ShapeError("scalar() on " + shape_str(v) + " value");
    return v(0, 0);
}

Tape& Var::tape() const {
    if (tape_ == nullptr) throw TapeError("use of an unbound Var");
    return *tape_;
}

Var Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
    Node n;
    n.op = "constant";
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::input(Matrix value) {
    Node n;
    n.op = "input";
    n.value = std::move(value);
    n.requires_grad = true;
    return push(std::move(n));
}

Var Tape::param(Parameter& param) {
    Node n;
    n.op = "param";
    n.value = param.value;
    n.requires_grad = true;
    n.param = &param;
    return push(std::move(n));
}

Var Tape::record(std::string op, Matrix value, const std::vector<Var>& inputs, BackwardFn backward) {
    if (!value.allFinite()) throw NumericError("non-finite value produced by " + op);
    Node n;
    n.op = std::move(op);
    n.value = std::move(value);
    for (const Var& v : inputs) {
        if (&v.tape() != this) throw TapeError(n.op + ": operands recorded on different tapes");
        n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(backward);
    return push(std::move(n));
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
    Node& n = nodes_.at(id);
    if (!n.requires_grad) return;
    if (g.rows() != n.value.rows() || g.cols() != n.value.cols()) {
        throw ShapeError("gradient shape " + shape_str(g) + " does not match value " + shape_str(n.value) +
                         " at " + n.op);
    }
    if (n.grad.size() == 0) {
        n.grad = g;
    } else {
        n.grad += g;
    }
}

void Tape::backward(const Var& loss) {
    if (&loss.tape() != this) throw TapeError("backward: loss belongs to another tape");
    if (backward_done_) throw TapeError("backward called twice on the same tape; clear() it first");
    const Matrix& v = nodes_.at(loss.id()).value;
    if (v.rows() != 1 || v.cols() != 1) throw TapeError("backward needs a scalar loss, got " + shape_str(v));
    backward_done_ = true;

    accumulate(loss.id(), Matrix::Ones(1, 1));
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.requires_grad || n.grad.size() == 0) continue;
        if (n.backward) n.backward(*this, n.grad);
        if (n.param != nullptr) {
            if (n.param->grad.size() == 0) {
                n.param->grad = n.grad;
            } else {
                n.param->grad += n.grad;
            }
        }
    }
}

void Tape::clear() {
    nodes_.clear();
    backward_done_ = false;
}

}  // namespace eclgsr::ad
