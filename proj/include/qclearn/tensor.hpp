#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "qclearn/errors.hpp"

namespace qclearn {

namespace detail {

// Skips value-initialization so buffers that are fully overwritten anyway
// (GEMM outputs, im2col scratch) do not pay a zero-fill pass.
template <typename T>
struct NoInitAllocator : std::allocator<T> {
    template <typename U>
    struct rebind {
        using other = NoInitAllocator<U>;
    };
    template <typename U, typename... Args>
    void construct(U* p, Args&&... args) {
        if constexpr (sizeof...(Args) > 0) ::new (static_cast<void*>(p)) U(args...);
    }
};

}  // namespace detail

// Dense row-major double tensor. Shape is fixed at construction; all layer
// math below works on 2-D views (rows x channels) of these buffers.
// The default constructors zero-fill; uninit() is for buffers every element
// of which is written before being read.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
        data_.resize(static_cast<std::size_t>(element_count(shape_)));
        fill(0.0);
    }
    Tensor(std::initializer_list<std::int64_t> shape)
        : Tensor(std::vector<std::int64_t>(shape)) {}

    static Tensor uninit(std::vector<std::int64_t> shape) {
        Tensor t;
        t.shape_ = std::move(shape);
        t.data_.resize(static_cast<std::size_t>(element_count(t.shape_)));
        return t;
    }
    static Tensor uninit(std::initializer_list<std::int64_t> shape) {
        return uninit(std::vector<std::int64_t>(shape));
    }

    static std::int64_t element_count(const std::vector<std::int64_t>& shape) {
        std::int64_t n = 1;
        for (auto d : shape) {
            if (d < 0) throw ShapeMismatch("negative tensor dimension");
            n *= d;
        }
        return n;
    }

    const std::vector<std::int64_t>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    std::int64_t dim(int i) const { return shape_.at(i); }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](std::int64_t i) { return data_[i]; }
    double operator[](std::int64_t i) const { return data_[i]; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    std::string shape_string() const;

  private:
    std::vector<std::int64_t> shape_;
    std::vector<double, detail::NoInitAllocator<double>> data_;
};

inline std::string Tensor::shape_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape_[i]);
    }
    return s + ")";
}

}  // namespace qclearn
