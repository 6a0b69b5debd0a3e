#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

#include "vistanet/common.hpp"

namespace vistanet {

// Dense row-major container of doubles. Rank is 1..4 in practice
// ({C}, {H,W}, {C,H,W}, {OC,IC,KH,KW}); rank 0 is a scalar.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(static_cast<size_t>(count(shape_)), 0.0);
    }
    Tensor(std::vector<int> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        check(static_cast<int64_t>(data_.size()) == count(shape_),
              "Tensor: data size does not match shape");
    }

    static Tensor scalar(double v) {
        Tensor t(std::vector<int>{});
        t.data_ = {v};
        return t;
    }

    static int64_t count(const std::vector<int>& shape) {
        int64_t n = 1;
        for (int d : shape) {
            check(d >= 0, "Tensor: negative dimension");
            n *= d;
        }
        return n;
    }

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
    int rank() const { return static_cast<int>(shape_.size()); }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    double& at(int i, int j) { return data_[static_cast<size_t>(i) * dim(1) + j]; }
    double at(int i, int j) const { return data_[static_cast<size_t>(i) * dim(1) + j]; }
    double& at(int c, int i, int j) {
        return data_[(static_cast<size_t>(c) * dim(1) + i) * dim(2) + j];
    }
    double at(int c, int i, int j) const {
        return data_[(static_cast<size_t>(c) * dim(1) + i) * dim(2) + j];
    }

    void fill(double v) { data_.assign(data_.size(), v); }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    uint64_t digest() const {
        return fnv1a64(data_.data(), data_.size() * sizeof(double));
    }

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

}  // namespace vistanet
