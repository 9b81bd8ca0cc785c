#include "tabsem/tape.hpp"

#include <algorithm>
#include <cmath>

namespace tabsem {

template <typename Real>
NodeId Tape<Real>::push(Op op, int n) {
    Node node;
    node.op = op;
    node.off = static_cast<int32_t>(values_.size());
    node.len = n;
    values_.resize(values_.size() + static_cast<size_t>(n), Real(0));
    nodes_.push_back(node);
    return static_cast<NodeId>(nodes_.size() - 1);
}

template <typename Real>
void Tape<Real>::check_scalar(NodeId id, const char* what) const {
    if (node(id).len != 1) fail("%s expects a scalar node", what);
}

template <typename Real>
Real Tape<Real>::scalar(NodeId id) const {
    check_scalar(id, "scalar()");
    return value(id)[0];
}

template <typename Real>
std::vector<Real> Tape<Real>::value_vector(NodeId id) const {
    return std::vector<Real>(value(id), value(id) + node(id).len);
}

template <typename Real>
void Tape<Real>::reset() {
    nodes_.clear();
    values_.clear();
    grads_.clear();
    iargs_.clear();
    rargs_.clear();
    params_.clear();
    touched_.clear();
}

template <typename Real>
NodeId Tape<Real>::param(Tensor<Real>& t) {
    NodeId id = push(Op::Param, static_cast<int>(t.size()));
    std::copy(t.value.begin(), t.value.end(), val(id));
    nodes_.back().param = static_cast<int32_t>(params_.size());
    params_.push_back(&t);
    touched_.insert(&t);
    return id;
}

template <typename Real>
NodeId Tape<Real>::constant(const std::vector<Real>& v) {
    NodeId id = push(Op::Const, static_cast<int>(v.size()));
    std::copy(v.begin(), v.end(), val(id));
    return id;
}

template <typename Real>
NodeId Tape<Real>::constant_scalar(Real v) {
    NodeId id = push(Op::Const, 1);
    val(id)[0] = v;
    return id;
}

template <typename Real>
NodeId Tape<Real>::matvec(NodeId w, NodeId x) {
    return matvec_cols(w, x, 0);
}

template <typename Real>
NodeId Tape<Real>::matvec_cols(NodeId w, NodeId x, int col_start) {
    const Node& wn = node(w);
    if (wn.op != Op::Param || wn.param < 0) fail("matvec expects a parameter matrix");
    const Tensor<Real>& t = *params_[static_cast<size_t>(wn.param)];
    const int rows = t.rows(), cols = t.cols();
    const int xn = node(x).len;
    if (col_start < 0 || col_start + xn > cols)
        fail("matvec: column block [%d, %d) exceeds %d columns", col_start,
             col_start + xn, cols);
    NodeId id = push(Op::MatVecCols, rows);
    Node& n = nodes_.back();
    n.a = w;
    n.b = x;
    n.c = col_start;
    const Real* wv = value(w);
    const Real* xv = value(x);
    Real* y = val(id);
    for (int r = 0; r < rows; ++r) {
        Real acc = 0;
        const Real* wrow = wv + static_cast<size_t>(r) * cols + col_start;
        for (int cc = 0; cc < xn; ++cc) acc += wrow[cc] * xv[cc];
        y[r] = acc;
    }
    return id;
}

template <typename Real>
NodeId Tape<Real>::add(NodeId a, NodeId b) {
    if (node(a).len != node(b).len) fail("add: length mismatch");
    NodeId id = push(Op::Add, node(a).len);
    nodes_.back().a = a;
    nodes_.back().b = b;
    const Real* av = value(a);
    const Real* bv = value(b);
    Real* y = val(id);
    for (int i = 0; i < node(a).len; ++i) y[i] = av[i] + bv[i];
    return id;
}

template <typename Real>
NodeId Tape<Real>::sub(NodeId a, NodeId b) {
    if (node(a).len != node(b).len) fail("sub: length mismatch");
    NodeId id = push(Op::Sub, node(a).len);
    nodes_.back().a = a;
    nodes_.back().b = b;
    const Real* av = value(a);
    const Real* bv = value(b);
    Real* y = val(id);
    for (int i = 0; i < node(a).len; ++i) y[i] = av[i] - bv[i];
    return id;
}

template <typename Real>
NodeId Tape<Real>::mul(NodeId a, NodeId b) {
    if (node(a).len != node(b).len) fail("mul: length mismatch");
    NodeId id = push(Op::Mul, node(a).len);
    nodes_.back().a = a;
    nodes_.back().b = b;
    const Real* av = value(a);
    const Real* bv = value(b);
    Real* y = val(id);
    for (int i = 0; i < node(a).len; ++i) y[i] = av[i] * bv[i];
    return id;
}

template <typename Real>
NodeId Tape<Real>::sigmoid(NodeId a) {
    NodeId id = push(Op::Sigmoid, node(a).len);
    nodes_.back().a = a;
    const Real* av = value(a);
    Real* y = val(id);
    for (int i = 0; i < node(a).len; ++i)
        y[i] = Real(1) / (Real(1) + std::exp(-av[i]));
    return id;
}

template <typename Real>
NodeId Tape<Real>::tanh(NodeId a) {
    NodeId id = push(Op::Tanh, node(a).len);
    nodes_.back().a = a;
    const Real* av = value(a);
    Real* y = val(id);
    for (int i = 0; i < node(a).len; ++i) y[i] = std::tanh(av[i]);
    return id;
}

template <typename Real>
NodeId Tape<Real>::relu(NodeId a) {
    NodeId id = push(Op::Relu, node(a).len);
    nodes_.back().a = a;
    const Real* av = value(a);
    Real* y = val(id);
    for (int i = 0; i < node(a).len; ++i) y[i] = av[i] > Real(0) ? av[i] : Real(0);
    return id;
}

template <typename Real>
NodeId Tape<Real>::exp(NodeId a) {
    NodeId id = push(Op::Exp, node(a).len);
    nodes_.back().a = a;
    const Real* av = value(a);
    Real* y = val(id);
    for (int i = 0; i < node(a).len; ++i) y[i] = std::exp(av[i]);
    return id;
}

template <typename Real>
NodeId Tape<Real>::concat(const std::vector<NodeId>& parts) {
    if (parts.empty()) fail("concat of nothing");
    int total = 0;
    for (NodeId p : parts) total += node(p).len;
    NodeId id = push(Op::Concat, total);
    Node& n = nodes_.back();
    n.args_off = static_cast<int32_t>(iargs_.size());
    n.n_args = static_cast<int32_t>(parts.size());
    iargs_.insert(iargs_.end(), parts.begin(), parts.end());
    Real* y = val(id);
    for (NodeId p : parts) {
        const Real* pv = value(p);
        y = std::copy(pv, pv + node(p).len, y);
    }
    return id;
}

template <typename Real>
NodeId Tape<Real>::slice(NodeId a, int start, int n) {
    if (start < 0 || start + n > node(a).len) fail("slice out of range");
    NodeId id = push(Op::Slice, n);
    nodes_.back().a = a;
    nodes_.back().c = start;
    const Real* av = value(a) + start;
    std::copy(av, av + n, val(id));
    return id;
}

template <typename Real>
NodeId Tape<Real>::lincomb(const std::vector<std::pair<Real, NodeId>>& terms) {
    if (terms.empty()) fail("lincomb of nothing");
    const int n = node(terms[0].second).len;
    NodeId id = push(Op::LinComb, n);
    Node& nd = nodes_.back();
    nd.args_off = static_cast<int32_t>(iargs_.size());
    nd.rargs_off = static_cast<int32_t>(rargs_.size());
    nd.n_args = static_cast<int32_t>(terms.size());
    for (const auto& [coef, term] : terms) {
        if (node(term).len != n) fail("lincomb: length mismatch");
        iargs_.push_back(term);
        rargs_.push_back(coef);
    }
    Real* y = val(id);
    for (const auto& [coef, term] : terms) {
        const Real* tv = value(term);
        for (int i = 0; i < n; ++i) y[i] += coef * tv[i];
    }
    return id;
}

template <typename Real>
NodeId Tape<Real>::dot(NodeId a, NodeId b) {
    if (node(a).len != node(b).len) fail("dot: length mismatch");
    NodeId id = push(Op::Dot, 1);
    nodes_.back().a = a;
    nodes_.back().b = b;
    const Real* av = value(a);
    const Real* bv = value(b);
    Real acc = 0;
    for (int i = 0; i < node(a).len; ++i) acc += av[i] * bv[i];
    val(id)[0] = acc;
    return id;
}

template <typename Real>
NodeId Tape<Real>::weighted_sum(const std::vector<std::pair<NodeId, NodeId>>& weight_vec) {
    if (weight_vec.empty()) fail("weighted_sum of nothing");
    const int n = node(weight_vec[0].second).len;
    NodeId id = push(Op::WeightedSum, n);
    Node& nd = nodes_.back();
    nd.args_off = static_cast<int32_t>(iargs_.size());
    nd.n_args = static_cast<int32_t>(2 * weight_vec.size());
    for (const auto& [w, v] : weight_vec) {
        check_scalar(w, "weighted_sum weight");
        if (node(v).len != n) fail("weighted_sum: length mismatch");
        iargs_.push_back(w);
        iargs_.push_back(v);
    }
    Real* y = val(id);
    for (const auto& [w, v] : weight_vec) {
        const Real wv = value(w)[0];
        const Real* vv = value(v);
        for (int i = 0; i < n; ++i) y[i] += wv * vv[i];
    }
    return id;
}

template <typename Real>
NodeId Tape<Real>::logsumexp(const std::vector<NodeId>& scalars) {
    if (scalars.empty()) fail("logsumexp of nothing");
    NodeId id = push(Op::LogSumExp, 1);
    Node& nd = nodes_.back();
    nd.args_off = static_cast<int32_t>(iargs_.size());
    nd.n_args = static_cast<int32_t>(scalars.size());
    Real mx = -HUGE_VAL;
    for (NodeId s : scalars) {
        check_scalar(s, "logsumexp");
        iargs_.push_back(s);
        mx = std::max(mx, value(s)[0]);
    }
    Real acc = 0;
    for (NodeId s : scalars) acc += std::exp(value(s)[0] - mx);
    val(id)[0] = mx + std::log(acc);
    return id;
}

template <typename Real>
NodeId Tape<Real>::pick(NodeId vec, int index) {
    if (index < 0 || index >= node(vec).len) fail("pick out of range");
    NodeId id = push(Op::Pick, 1);
    nodes_.back().a = vec;
    nodes_.back().c = index;
    val(id)[0] = value(vec)[index];
    return id;
}

template <typename Real>
NodeId Tape<Real>::logsumexp_subset(NodeId vec, const std::vector<int>& indices) {
    if (indices.empty()) fail("logsumexp_subset of nothing");
    NodeId id = push(Op::LogSumExpSubset, 1);
    Node& nd = nodes_.back();
    nd.a = vec;
    nd.args_off = static_cast<int32_t>(iargs_.size());
    nd.n_args = static_cast<int32_t>(indices.size());
    const Real* vv = value(vec);
    Real mx = -HUGE_VAL;
    for (int i : indices) {
        if (i < 0 || i >= node(vec).len) fail("logsumexp_subset index out of range");
        iargs_.push_back(i);
        mx = std::max(mx, vv[i]);
    }
    Real acc = 0;
    for (int i : indices) acc += std::exp(vv[i] - mx);
    val(id)[0] = mx + std::log(acc);
    return id;
}

template <typename Real>
void Tape<Real>::backward(NodeId loss) {
    check_scalar(loss, "backward");
    grads_.assign(values_.size(), Real(0));
    grd(loss)[0] = Real(1);

    for (size_t ni = nodes_.size(); ni-- > 0;) {
        const Node& n = nodes_[ni];
        const NodeId id = static_cast<NodeId>(ni);
        const Real* dy = grd(id);
        switch (n.op) {
            case Op::Param: {
                Tensor<Real>& t = *params_[static_cast<size_t>(n.param)];
                for (int i = 0; i < n.len; ++i) t.grad[static_cast<size_t>(i)] += dy[i];
                break;
            }
            case Op::Const: break;
            case Op::MatVecCols: {
                const Tensor<Real>& t = *params_[static_cast<size_t>(node(n.a).param)];
                const int rows = t.rows(), cols = t.cols();
                const int xn = node(n.b).len;
                Real* dw = grd(n.a);
                Real* dx = grd(n.b);
                const Real* wv = value(n.a);
                const Real* xv = value(n.b);
                for (int r = 0; r < rows; ++r) {
                    const Real g = dy[r];
                    if (g == Real(0)) continue;
                    Real* dwrow = dw + static_cast<size_t>(r) * cols + n.c;
                    const Real* wrow = wv + static_cast<size_t>(r) * cols + n.c;
                    for (int cc = 0; cc < xn; ++cc) {
                        dwrow[cc] += g * xv[cc];
                        dx[cc] += g * wrow[cc];
                    }
                }
                break;
            }
            case Op::Add: {
                Real* da = grd(n.a);
                Real* db = grd(n.b);
                for (int i = 0; i < n.len; ++i) {
                    da[i] += dy[i];
                    db[i] += dy[i];
                }
                break;
            }
            case Op::Sub: {
                Real* da = grd(n.a);
                Real* db = grd(n.b);
                for (int i = 0; i < n.len; ++i) {
                    da[i] += dy[i];
                    db[i] -= dy[i];
                }
                break;
            }
            case Op::Mul: {
                Real* da = grd(n.a);
                Real* db = grd(n.b);
                const Real* av = value(n.a);
                const Real* bv = value(n.b);
                for (int i = 0; i < n.len; ++i) {
                    da[i] += dy[i] * bv[i];
                    db[i] += dy[i] * av[i];
                }
                break;
            }
            case Op::Sigmoid: {
                Real* da = grd(n.a);
                const Real* y = value(id);
                for (int i = 0; i < n.len; ++i)
                    da[i] += dy[i] * y[i] * (Real(1) - y[i]);
                break;
            }
            case Op::Tanh: {
                Real* da = grd(n.a);
                const Real* y = value(id);
                for (int i = 0; i < n.len; ++i)
                    da[i] += dy[i] * (Real(1) - y[i] * y[i]);
                break;
            }
            case Op::Relu: {
                Real* da = grd(n.a);
                const Real* av = value(n.a);
                for (int i = 0; i < n.len; ++i)
                    if (av[i] > Real(0)) da[i] += dy[i];
                break;
            }
            case Op::Exp: {
                Real* da = grd(n.a);
                const Real* y = value(id);
                for (int i = 0; i < n.len; ++i) da[i] += dy[i] * y[i];
                break;
            }
            case Op::Concat: {
                int off = 0;
                for (int32_t a = 0; a < n.n_args; ++a) {
                    NodeId part = iargs_[static_cast<size_t>(n.args_off + a)];
                    Real* dp = grd(part);
                    const int pl = node(part).len;
                    for (int i = 0; i < pl; ++i) dp[i] += dy[off + i];
                    off += pl;
                }
                break;
            }
            case Op::Slice: {
                Real* da = grd(n.a) + n.c;
                for (int i = 0; i < n.len; ++i) da[i] += dy[i];
                break;
            }
            case Op::LinComb: {
                for (int32_t a = 0; a < n.n_args; ++a) {
                    NodeId term = iargs_[static_cast<size_t>(n.args_off + a)];
                    const Real coef = rargs_[static_cast<size_t>(n.rargs_off + a)];
                    Real* dt = grd(term);
                    for (int i = 0; i < n.len; ++i) dt[i] += coef * dy[i];
                }
                break;
            }
            case Op::Dot: {
                const Real g = dy[0];
                Real* da = grd(n.a);
                Real* db = grd(n.b);
                const Real* av = value(n.a);
                const Real* bv = value(n.b);
                for (int i = 0; i < node(n.a).len; ++i) {
                    da[i] += g * bv[i];
                    db[i] += g * av[i];
                }
                break;
            }
            case Op::WeightedSum: {
                for (int32_t a = 0; a < n.n_args; a += 2) {
                    NodeId w = iargs_[static_cast<size_t>(n.args_off + a)];
                    NodeId v = iargs_[static_cast<size_t>(n.args_off + a + 1)];
                    const Real wv = value(w)[0];
                    const Real* vv = value(v);
                    Real* dw = grd(w);
                    Real* dv = grd(v);
                    Real acc = 0;
                    for (int i = 0; i < n.len; ++i) {
                        acc += dy[i] * vv[i];
                        dv[i] += wv * dy[i];
                    }
                    dw[0] += acc;
                }
                break;
            }
            case Op::LogSumExp: {
                const Real y = value(id)[0];
                const Real g = dy[0];
                for (int32_t a = 0; a < n.n_args; ++a) {
                    NodeId s = iargs_[static_cast<size_t>(n.args_off + a)];
                    grd(s)[0] += g * std::exp(value(s)[0] - y);
                }
                break;
            }
            case Op::Pick: {
                grd(n.a)[n.c] += dy[0];
                break;
            }
            case Op::LogSumExpSubset: {
                const Real y = value(id)[0];
                const Real g = dy[0];
                const Real* vv = value(n.a);
                Real* dv = grd(n.a);
                for (int32_t a = 0; a < n.n_args; ++a) {
                    int i = iargs_[static_cast<size_t>(n.args_off + a)];
                    dv[i] += g * std::exp(vv[i] - y);
                }
                break;
            }
        }
    }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace tabsem
