#include "vlstm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vlstm::nd {

Tensor::Tensor(int rows, int cols, std::vector<double> data) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Tensor: negative dimension");
    if (static_cast<std::size_t>(rows) * cols != data.size())
        throw std::invalid_argument("Tensor: data length " + std::to_string(data.size()) +
                                    " does not match shape " + std::to_string(rows) + "x" +
                                    std::to_string(cols));
    rows_ = rows;
    cols_ = cols;
    data_ = std::move(data);
}

Tensor Tensor::scalar(double v) {
    Tensor t(1, 1);
    t.data_[0] = v;
    return t;
}

Tensor Tensor::row(std::initializer_list<double> values) {
    return Tensor(1, static_cast<int>(values.size()), std::vector<double>(values));
}

Tensor Tensor::row(const std::vector<double>& values) {
    return Tensor(1, static_cast<int>(values.size()), values);
}

Tensor Tensor::column(const std::vector<double>& values) {
    return Tensor(static_cast<int>(values.size()), 1, values);
}

void Tensor::resize(int rows, int cols) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Tensor: negative dimension");
    rows_ = rows;
    cols_ = cols;
    data_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

void Tensor::fill(double v) {
    std::fill(data_.begin(), data_.end(), v);
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

std::string Tensor::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("max_abs_diff: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace vlstm::nd
