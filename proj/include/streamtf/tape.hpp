#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "streamtf/tensor.hpp"

STREAMTF_NS_BEGIN

class Tape;

// Handle to a value recorded on a tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    const Tensor& grad() const;
    bool requires_grad() const;
    const Shape& shape() const { return value().shape(); }
};

// Reverse-mode tape. Nodes are appended in execution order, so inputs always
// precede the ops that consume them; backward() walks the list in reverse.
// Gradients accumulate additively into every input that requires one.
class Tape {
   public:
    // Backward rule: reads grad(self) and accumulates into its inputs.
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Var leaf(Tensor value, bool requires_grad = false);
    Var constant(Tensor value) { return leaf(std::move(value), false); }

    // Records an op output. The backward rule is dropped when no input
    // requires a gradient. Non-finite outputs raise NumericError.
    Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward, std::string_view rule);

    // Seeds d(root)/d(root) = 1 and runs every backward rule once in
    // reverse order. root must be a scalar.
    void backward(Var root);

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    const Tensor& grad(std::size_t id) const;
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    // Lazily allocated accumulator for an input's gradient.
    Tensor& grad_acc(std::size_t id);

    std::string_view rule(std::size_t id) const { return nodes_[id].rule; }
    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

   private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        std::string_view rule;
    };

    std::vector<Node> nodes_;
};

STREAMTF_NS_END
