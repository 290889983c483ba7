#include "streamtf/tape.hpp"

#include <string>

STREAMTF_NS_BEGIN

const Tensor& Var::value() const { return tape->value(id); }
const Tensor& Var::grad() const { return tape->grad(id); }
bool Var::requires_grad() const { return tape->requires_grad(id); }

Var Tape::leaf(Tensor value, bool requires_grad) {
    Node n;
    if (requires_grad) n.grad = Tensor(value.shape());
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.rule = "leaf";
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward, std::string_view rule) {
    if (!value.all_finite()) {
        throw NumericError("non-finite output from op '" + std::string(rule) + "'");
    }
    Node n;
    n.value = std::move(value);
    n.rule = rule;
    for (auto id : inputs) n.requires_grad = n.requires_grad || nodes_.at(id).requires_grad;
    if (n.requires_grad) {
        n.inputs = std::move(inputs);
        n.backward = std::move(backward);
    }
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

const Tensor& Tape::grad(std::size_t id) const { return nodes_.at(id).grad; }

Tensor& Tape::grad_acc(std::size_t id) {
    Node& n = nodes_.at(id);
    if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.shape());
    return n.grad;
}

void Tape::backward(Var root) {
    if (root.tape != this) throw std::invalid_argument("backward: variable belongs to another tape");
    if (nodes_.at(root.id).value.numel() != 1) throw ShapeError("backward: root must be a scalar");
    if (!nodes_[root.id].requires_grad) return;
    grad_acc(root.id)[0] += Scalar(1);
    for (std::size_t id = root.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.backward || n.grad.empty()) continue;
        n.backward(*this, id);
        for (auto in : nodes_[id].inputs) {
            const Tensor& g = nodes_[in].grad;
            if (!g.empty() && !g.all_finite()) {
                throw NumericError("non-finite gradient from op '" + std::string(nodes_[id].rule) + "'");
            }
        }
    }
}

STREAMTF_NS_END
