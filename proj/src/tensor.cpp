#include "tabsem/tensor.hpp"

#include <cstring>
#include <fstream>

namespace tabsem {

template <typename Real>
Tensor<Real>& ParameterStore<Real>::create(const std::string& name, std::vector<int> shape) {
    if (tensors_.count(name)) fail("parameter '%s' already exists", name.c_str());
    size_t n = 1;
    for (int d : shape) {
        if (d < 1) fail("parameter '%s' has a non-positive dimension", name.c_str());
        n *= static_cast<size_t>(d);
    }
    Tensor<Real> t;
    t.shape = std::move(shape);
    t.value.assign(n, Real(0));
    t.grad.assign(n, Real(0));
    return tensors_.emplace(name, std::move(t)).first->second;
}

template <typename Real>
Tensor<Real>& ParameterStore<Real>::at(const std::string& name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) fail("unknown parameter '%s'", name.c_str());
    return it->second;
}

template <typename Real>
const Tensor<Real>& ParameterStore<Real>::at(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) fail("unknown parameter '%s'", name.c_str());
    return it->second;
}

template <typename Real>
std::vector<std::string> ParameterStore<Real>::names() const {
    std::vector<std::string> out;
    out.reserve(tensors_.size());
    for (const auto& [k, v] : tensors_) out.push_back(k);
    return out;
}

template <typename Real>
size_t ParameterStore<Real>::total_parameters() const {
    size_t n = 0;
    for (const auto& [k, v] : tensors_) n += v.size();
    return n;
}

template <typename Real>
void ParameterStore<Real>::zero_grad() {
    for (auto& [k, v] : tensors_) std::fill(v.grad.begin(), v.grad.end(), Real(0));
}

template <typename To, typename From>
ParameterStore<To> convert_store(const ParameterStore<From>& src) {
    ParameterStore<To> out;
    for (const auto& [name, t] : src) {
        Tensor<To>& dst = out.create(name, t.shape);
        for (size_t i = 0; i < t.value.size(); ++i)
            dst.value[i] = static_cast<To>(t.value[i]);
    }
    return out;
}

// --- checkpoint io ------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'T', 'S', 'E', 'M', 'C', 'K', 'P', '1'};

void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_blob(std::string& buf, std::string_view s) {
    put_u32(buf, static_cast<uint32_t>(s.size()));
    buf.append(s);
}

struct Reader {
    const std::string& buf;
    size_t pos = 0;
    const std::string& path;

    void need(size_t n) const {
        if (pos + n > buf.size()) fail_parse("checkpoint %s: truncated", path.c_str());
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::string blob() {
        uint32_t n = u32();
        need(n);
        std::string s(buf, pos, n);
        pos += n;
        return s;
    }
    float f32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }
};

}  // namespace

void save_checkpoint(const ParameterStore<float>& store,
                     const std::map<std::string, std::string>& meta,
                     const std::string& path) {
    std::string buf;
    buf.append(kMagic, 8);
    put_u32(buf, static_cast<uint32_t>(meta.size()));
    for (const auto& [k, v] : meta) {
        put_blob(buf, k);
        put_blob(buf, v);
    }
    uint32_t n_tensors = 0;
    for (const auto& [k, v] : store) {
        (void)k;
        ++n_tensors;
    }
    put_u32(buf, n_tensors);
    for (const auto& [name, t] : store) {
        put_blob(buf, name);
        put_u32(buf, static_cast<uint32_t>(t.shape.size()));
        for (int d : t.shape) put_u32(buf, static_cast<uint32_t>(d));
        for (float x : t.value) {
            uint32_t v;
            std::memcpy(&v, &x, 4);
            put_u32(buf, v);
        }
    }
    write_file(path, buf);
}

std::pair<ParameterStore<float>, std::map<std::string, std::string>> load_checkpoint(
    const std::string& path) {
    std::string buf = read_file(path);
    Reader r{buf, 0, path};
    r.need(8);
    if (std::memcmp(buf.data(), kMagic, 8) != 0)
        fail_parse("checkpoint %s: bad magic", path.c_str());
    r.pos = 8;
    std::map<std::string, std::string> meta;
    uint32_t n_meta = r.u32();
    for (uint32_t i = 0; i < n_meta; ++i) {
        std::string k = r.blob();
        meta[k] = r.blob();
    }
    ParameterStore<float> store;
    uint32_t n_tensors = r.u32();
    for (uint32_t i = 0; i < n_tensors; ++i) {
        std::string name = r.blob();
        uint32_t ndims = r.u32();
        std::vector<int> shape;
        for (uint32_t d = 0; d < ndims; ++d) shape.push_back(static_cast<int>(r.u32()));
        Tensor<float>& t = store.create(name, shape);
        for (size_t x = 0; x < t.value.size(); ++x) t.value[x] = r.f32();
    }
    return {std::move(store), std::move(meta)};
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template ParameterStore<double> convert_store<double, float>(const ParameterStore<float>&);
template ParameterStore<float> convert_store<float, double>(const ParameterStore<double>&);

}  // namespace tabsem
