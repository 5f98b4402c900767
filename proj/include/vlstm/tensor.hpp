#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace vlstm::nd {

// Dense row-major float64 matrix. Everything in the engine is rank <= 2:
// scalars are 1x1, row vectors 1xN, batches BxN.
class Tensor {
public:
    Tensor() = default;
    Tensor(int rows, int cols) { resize(rows, cols); }
    Tensor(int rows, int cols, std::vector<double> data);

    static Tensor zeros(int rows, int cols) { return Tensor(rows, cols); }
    static Tensor scalar(double v);
    static Tensor row(std::initializer_list<double> values);
    static Tensor row(const std::vector<double>& values);
    static Tensor column(const std::vector<double>& values);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t numel() const { return data_.size(); }
    std::vector<int> shape() const { return {rows_, cols_}; }

    double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const std::vector<double>& values() const { return data_; }

    // Reshapes in place; keeps allocated capacity when possible.
    void resize(int rows, int cols);
    void fill(double v);
    void zero() { fill(0.0); }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool all_finite() const;
    std::string shape_str() const;

    bool operator==(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// Largest componentwise |a - b|; shapes must match.
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace vlstm::nd
