#pragma once

#include <map>
#include <string>
#include <vector>

#include "tabsem/common.hpp"

namespace tabsem {

template <typename Real>
struct Tensor {
    std::vector<int> shape;  // 1-D or 2-D
    std::vector<Real> value;
    std::vector<Real> grad;

    int rows() const { return shape.empty() ? 0 : shape[0]; }
    int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
    size_t size() const { return value.size(); }

    Real* row(int r) { return value.data() + static_cast<size_t>(r) * cols(); }
    const Real* row(int r) const { return value.data() + static_cast<size_t>(r) * cols(); }
};

// Named trainable tensors. Single-writer during training; read-only sharing
// is safe.
template <typename Real>
class ParameterStore {
public:
    Tensor<Real>& create(const std::string& name, std::vector<int> shape);
    Tensor<Real>& at(const std::string& name);
    const Tensor<Real>& at(const std::string& name) const;
    bool has(const std::string& name) const { return tensors_.count(name) > 0; }

    std::vector<std::string> names() const;
    size_t total_parameters() const;
    void zero_grad();

    // iteration in name order (deterministic)
    auto begin() { return tensors_.begin(); }
    auto end() { return tensors_.end(); }
    auto begin() const { return tensors_.begin(); }
    auto end() const { return tensors_.end(); }

private:
    std::map<std::string, Tensor<Real>> tensors_;
};

template <typename To, typename From>
ParameterStore<To> convert_store(const ParameterStore<From>& src);

// Checkpoint container: magic, metadata strings, then named tensors with
// shape headers and little-endian 32-bit floats.
void save_checkpoint(const ParameterStore<float>& store,
                     const std::map<std::string, std::string>& meta,
                     const std::string& path);
std::pair<ParameterStore<float>, std::map<std::string, std::string>> load_checkpoint(
    const std::string& path);

extern template class ParameterStore<float>;
extern template class ParameterStore<double>;
extern template ParameterStore<double> convert_store<double, float>(
    const ParameterStore<float>&);
extern template ParameterStore<float> convert_store<float, double>(
    const ParameterStore<double>&);

}  // namespace tabsem
