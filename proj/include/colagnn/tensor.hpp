#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "colagnn/errors.hpp"

namespace colagnn {

// Dense row-major matrix of doubles. Rank is at most 2; vectors are stored
// as n x 1 or 1 x n, scalars as 1 x 1.
class Tensor {
public:
    Tensor() : rows_(0), cols_(0) {}
    Tensor(int rows, int cols, double fill = 0.0);
    Tensor(int rows, int cols, std::vector<double> data);

    // Row-major nested initializer, e.g. Tensor({{1,2},{3,4}}).
    Tensor(std::initializer_list<std::initializer_list<double>> rows);

    static Tensor zeros(int rows, int cols) { return Tensor(rows, cols, 0.0); }
    static Tensor full(int rows, int cols, double v) { return Tensor(rows, cols, v); }
    static Tensor identity(int n);
    static Tensor row_vector(std::vector<double> v);
    static Tensor col_vector(std::vector<double> v);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double& at(int r, int c);
    double at(int r, int c) const;

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Tensor& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    Tensor col(int c) const;            // column c as rows x 1
    Tensor row(int r) const;            // row r as 1 x cols
    Tensor slice_cols(int begin, int end) const;  // columns [begin, end)
    Tensor transposed() const;

    bool all_finite() const;

    // Exact elementwise equality (bit-level on the stored doubles).
    bool equals(const Tensor& other) const;

private:
    int rows_;
    int cols_;
    std::vector<double> data_;
};

std::string shape_str(const Tensor& t);

}  // namespace colagnn
