// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "poolsim/error.hpp"
#include "poolsim/numerics/complex.hpp"

namespace poolsim {

inline bool is_finite(cf32 v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

/// Dense complex vector. Non-empty, finite on construction.
class ComplexVector {
public:
    explicit ComplexVector(std::size_t length) : data_(length) {
        require(length > 0, ErrorKind::InvalidArgument, "ComplexVector length must be positive");
    }
    explicit ComplexVector(std::vector<cf32> data) : data_(std::move(data)) { validate(); }
    ComplexVector(std::initializer_list<cf32> init) : data_(init) { validate(); }

    std::size_t size() const noexcept { return data_.size(); }
    cf32& operator[](std::size_t i) noexcept { return data_[i]; }
    cf32 operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<cf32> span() noexcept { return data_; }
    std::span<const cf32> span() const noexcept { return data_; }
    const std::vector<cf32>& values() const noexcept { return data_; }

    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

private:
    void validate() const {
        require(!data_.empty(), ErrorKind::InvalidArgument, "ComplexVector length must be positive");
        for (cf32 v : data_)
            require(is_finite(v), ErrorKind::InvalidArgument, "ComplexVector entries must be finite");
    }

    std::vector<cf32> data_;
};

/// Structural properties a matrix is known to carry.
enum class MatrixForm : std::uint8_t { General, Hermitian, LowerTriangular };

/// Dense row-major complex matrix.
class ComplexMatrix {
public:
    ComplexMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {
        require(rows > 0 && cols > 0, ErrorKind::InvalidArgument, "ComplexMatrix dimensions must be positive");
    }
    ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cf32> data, MatrixForm form = MatrixForm::General)
        : rows_(rows), cols_(cols), data_(std::move(data)), form_(form) {
        require(rows > 0 && cols > 0, ErrorKind::InvalidArgument, "ComplexMatrix dimensions must be positive");
        require(data_.size() == rows * cols, ErrorKind::DimensionMismatch, "data length != rows*cols");
    }
    ComplexMatrix(std::initializer_list<std::initializer_list<cf32>> rows) : rows_(rows.size()), cols_(0) {
        require(rows_ > 0, ErrorKind::InvalidArgument, "ComplexMatrix needs at least one row");
        cols_ = rows.begin()->size();
        require(cols_ > 0, ErrorKind::InvalidArgument, "ComplexMatrix needs at least one column");
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            require(r.size() == cols_, ErrorKind::DimensionMismatch, "ragged matrix initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static ComplexMatrix identity(std::size_t n) {
        ComplexMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    cf32& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    cf32 operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<cf32> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const cf32> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const cf32> data() const noexcept { return data_; }
    std::span<cf32> data() noexcept { return data_; }

    MatrixForm form() const noexcept { return form_; }
    void set_form(MatrixForm f) noexcept { form_ = f; }

    ComplexMatrix conj_transpose() const {
        ComplexMatrix t(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) t(c, r) = std::conj((*this)(r, c));
        return t;
    }

    ComplexMatrix transpose() const {
        ComplexMatrix t(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
        return t;
    }

    /// Checks |a_ij - conj(a_ji)| <= tol * max(1, |a_ij|).
    bool is_hermitian(double tol = 1e-6) const {
        if (rows_ != cols_) return false;
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) {
                const cf32 a = (*this)(i, j);
                const double diff = std::abs(a - std::conj((*this)(j, i)));
                if (diff > tol * std::max(1.0, static_cast<double>(std::abs(a)))) return false;
            }
        return true;
    }

    bool is_lower_triangular() const {
        if (rows_ != cols_) return false;
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = i + 1; j < cols_; ++j)
                if ((*this)(i, j) != cf32{}) return false;
        return true;
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<cf32> data_;
    MatrixForm form_ = MatrixForm::General;
};

/// Gaussian noise variance in linear power units.
class NoiseVariance {
public:
    NoiseVariance() = default;
    explicit NoiseVariance(double sigma2) : sigma2_(sigma2) {
        require(sigma2 >= 0.0 && std::isfinite(sigma2), ErrorKind::InvalidArgument, "noise variance must be >= 0");
    }
    double value() const noexcept { return sigma2_; }

private:
    double sigma2_ = 0.0;
};

} // namespace poolsim
