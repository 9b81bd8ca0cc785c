#pragma once

#include <cstdint>
#include <set>

#include "tabsem/tensor.hpp"

namespace tabsem {

using NodeId = int32_t;

// Reverse-mode tape over vector-valued nodes (length-1 nodes act as scalars).
// A tape is built per example, backward() is called at most once per build,
// and reset() recycles the arenas. Parameter gradients accumulate into the
// owning Tensor::grad, so the caller zeroes those between examples.
template <typename Real>
class Tape {
public:
    // leaves
    NodeId param(Tensor<Real>& t);
    NodeId constant(const std::vector<Real>& v);
    NodeId constant_scalar(Real v);

    // linear algebra; matrices must be parameter leaves (row-major)
    NodeId matvec(NodeId w, NodeId x);
    // y = W[:, col_start : col_start + len(x)] * x, a column block of W
    NodeId matvec_cols(NodeId w, NodeId x, int col_start);

    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);  // elementwise
    NodeId sigmoid(NodeId a);
    NodeId tanh(NodeId a);
    NodeId relu(NodeId a);
    NodeId exp(NodeId a);

    NodeId concat(const std::vector<NodeId>& parts);
    NodeId slice(NodeId a, int start, int len);
    // fixed real coefficients over equal-length nodes
    NodeId lincomb(const std::vector<std::pair<Real, NodeId>>& terms);
    NodeId dot(NodeId a, NodeId b);
    // weights are scalar nodes, vectors share one length
    NodeId weighted_sum(const std::vector<std::pair<NodeId, NodeId>>& weight_vec);
    NodeId logsumexp(const std::vector<NodeId>& scalars);
    NodeId pick(NodeId vec, int index);
    NodeId logsumexp_subset(NodeId vec, const std::vector<int>& indices);

    int len(NodeId id) const { return nodes_[static_cast<size_t>(id)].len; }
    const Real* value(NodeId id) const {
        return values_.data() + nodes_[static_cast<size_t>(id)].off;
    }
    Real scalar(NodeId id) const;
    std::vector<Real> value_vector(NodeId id) const;

    // seeds d(loss)=1 and accumulates into every touched Tensor::grad
    void backward(NodeId loss);

    // parameters whose nodes were created on this tape (for detached-node
    // reporting)
    const std::set<const Tensor<Real>*>& touched() const { return touched_; }

    size_t n_nodes() const { return nodes_.size(); }
    void reset();

private:
    enum class Op : uint8_t {
        Param,
        Const,
        MatVec,
        MatVecCols,
        Add,
        Sub,
        Mul,
        Sigmoid,
        Tanh,
        Relu,
        Exp,
        Concat,
        Slice,
        LinComb,
        Dot,
        WeightedSum,
        LogSumExp,
        Pick,
        LogSumExpSubset,
    };

    struct Node {
        Op op;
        NodeId a = -1;
        NodeId b = -1;
        int32_t c = 0;  // aux: slice start / pick index / matvec col offset
        int32_t off = 0;
        int32_t len = 0;
        int32_t args_off = 0;
        int32_t n_args = 0;
        int32_t rargs_off = 0;
        int32_t param = -1;  // index into params_
    };

    std::vector<Node> nodes_;
    std::vector<Real> values_;
    std::vector<Real> grads_;
    std::vector<NodeId> iargs_;
    std::vector<Real> rargs_;
    std::vector<Tensor<Real>*> params_;
    std::set<const Tensor<Real>*> touched_;

    NodeId push(Op op, int len);
    Real* val(NodeId id) { return values_.data() + nodes_[static_cast<size_t>(id)].off; }
    Real* grd(NodeId id) { return grads_.data() + nodes_[static_cast<size_t>(id)].off; }
    const Node& node(NodeId id) const { return nodes_[static_cast<size_t>(id)]; }
    void check_scalar(NodeId id, const char* what) const;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace tabsem
