#include "colagnn/tensor.hpp"

#include <cmath>
#include <string>

namespace colagnn {

Tensor::Tensor(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) {
        throw ShapeError("tensor dimensions must be nonnegative: " + std::to_string(rows) +
                         "x" + std::to_string(cols));
    }
}

Tensor::Tensor(int rows, int cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows < 0 || cols < 0 ||
        data_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + std::to_string(rows) + "x" +
                         std::to_string(cols));
    }
}

Tensor::Tensor(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = static_cast<int>(rows.size());
    cols_ = rows_ > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    data_.reserve(static_cast<std::size_t>(rows_) * cols_);
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != cols_) {
            throw ShapeError("ragged initializer for tensor");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Tensor Tensor::identity(int n) {
    Tensor t(n, n, 0.0);
    for (int i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

Tensor Tensor::row_vector(std::vector<double> v) {
    int n = static_cast<int>(v.size());
    return Tensor(1, n, std::move(v));
}

Tensor Tensor::col_vector(std::vector<double> v) {
    int n = static_cast<int>(v.size());
    return Tensor(n, 1, std::move(v));
}

double& Tensor::at(int r, int c) {
    if (r < 0 || r >= rows_ || c < 0 || c >= cols_) {
        throw ShapeError("index (" + std::to_string(r) + "," + std::to_string(c) +
                         ") out of range for " + shape_str(*this));
    }
    return (*this)(r, c);
}

double Tensor::at(int r, int c) const {
    if (r < 0 || r >= rows_ || c < 0 || c >= cols_) {
        throw ShapeError("index (" + std::to_string(r) + "," + std::to_string(c) +
                         ") out of range for " + shape_str(*this));
    }
    return (*this)(r, c);
}

Tensor Tensor::col(int c) const {
    Tensor out(rows_, 1);
    for (int i = 0; i < rows_; ++i) out(i, 0) = (*this)(i, c);
    return out;
}

Tensor Tensor::row(int r) const {
    Tensor out(1, cols_);
    for (int j = 0; j < cols_; ++j) out(0, j) = (*this)(r, j);
    return out;
}

Tensor Tensor::slice_cols(int begin, int end) const {
    if (begin < 0 || end > cols_ || begin > end) {
        throw ShapeError("column slice [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") out of range for " + shape_str(*this));
    }
    Tensor out(rows_, end - begin);
    for (int i = 0; i < rows_; ++i) {
        for (int j = begin; j < end; ++j) out(i, j - begin) = (*this)(i, j);
    }
    return out;
}

Tensor Tensor::transposed() const {
    Tensor out(cols_, rows_);
    for (int i = 0; i < rows_; ++i) {
        for (int j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
    }
    return out;
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

bool Tensor::equals(const Tensor& other) const {
    return same_shape(other) && data_ == other.data_;
}

std::string shape_str(const Tensor& t) {
    return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

}  // namespace colagnn
