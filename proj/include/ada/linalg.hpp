#pragma once

#include "ada/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace ada {

/// Dense row-major matrix of doubles. Rows are tokens wherever a matrix holds activations.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw dimension_mismatch("matrix storage has " + std::to_string(data_.size()) +
                                     " values, expected " + std::to_string(rows_ * cols_));
        }
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    [[nodiscard]] std::span<const double> values() const noexcept { return data_; }
    [[nodiscard]] std::span<double> values() noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

[[nodiscard]] inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

[[nodiscard]] inline double norm2(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

[[nodiscard]] inline double distance(std::span<const double> a, std::span<const double> b) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

[[nodiscard]] inline double frobenius_norm(const Matrix& m) noexcept { return norm2(m.values()); }

[[nodiscard]] inline bool all_finite(const Matrix& m) noexcept {
    return std::ranges::all_of(m.values(), [](double v) { return std::isfinite(v); });
}

/// a (n×k) · b (k×m)
[[nodiscard]] inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw dimension_mismatch("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                 " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto dst = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            const auto brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                dst[j] += aik * brow[j];
            }
        }
    }
    return out;
}

[[nodiscard]] inline Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out(j, i) = a(i, j);
        }
    }
    return out;
}

/// Copy of the listed rows, in the listed order.
[[nodiscard]] inline Matrix gather_rows(const Matrix& a, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), a.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::ranges::copy(a.row(rows[i]), out.row(i).begin());
    }
    return out;
}

/// Deterministic random stream (splitmix64). The standard distributions are
/// implementation-defined, so uniform and normal draws are derived here from raw output.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    std::size_t below(std::size_t n) noexcept { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

[[nodiscard]] inline Matrix random_normal(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
    Matrix m(rows, cols);
    for (double& v : m.values()) {
        v = scale * rng.normal();
    }
    return m;
}

struct SpectralNormResult {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Largest singular value of `a` by power iteration on the smaller Gram product (AᵀA or AAᵀ).
/// Stops when the relative change of the estimate drops below `rel_tol`.
[[nodiscard]] inline SpectralNormResult spectral_norm(const Matrix& a, double rel_tol = 1e-6, int max_iterations = 200) {
    if (!all_finite(a)) {
        throw power_iteration_divergence("spectral_norm: matrix has non-finite entries");
    }
    if (a.empty()) {
        return {0.0, 0, true};
    }
    const bool use_cols = a.cols() <= a.rows();
    const std::size_t n = use_cols ? a.cols() : a.rows();

    std::vector<double> v(n);
    std::vector<double> mid(use_cols ? a.rows() : a.cols());
    std::vector<double> next(n);
    Rng rng(0x5eed5eedULL);
    for (double& x : v) {
        x = rng.normal();
    }
    double vn = norm2(v);
    if (vn == 0.0) {
        v[0] = 1.0;
        vn = 1.0;
    }
    for (double& x : v) {
        x /= vn;
    }

    auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
        std::ranges::fill(mid, 0.0);
        std::ranges::fill(out, 0.0);
        if (use_cols) {
            for (std::size_t i = 0; i < a.rows(); ++i) {
                mid[i] = dot(a.row(i), in);
            }
            for (std::size_t i = 0; i < a.rows(); ++i) {
                const auto r = a.row(i);
                for (std::size_t j = 0; j < n; ++j) {
                    out[j] += r[j] * mid[i];
                }
            }
        } else {
            for (std::size_t i = 0; i < a.rows(); ++i) {
                const auto r = a.row(i);
                for (std::size_t j = 0; j < a.cols(); ++j) {
                    mid[j] += r[j] * in[i];
                }
            }
            for (std::size_t i = 0; i < a.rows(); ++i) {
                out[i] = dot(a.row(i), mid);
            }
        }
    };

    double estimate = 0.0;
    for (int it = 1; it <= max_iterations; ++it) {
        apply(v, next);
        const double lambda = dot(v, next); // Rayleigh quotient of the Gram product
        const double nn = norm2(next);
        if (!std::isfinite(nn) || !std::isfinite(lambda)) {
            throw power_iteration_divergence("spectral_norm: iteration produced non-finite values");
        }
        const double sigma = std::sqrt(std::max(lambda, 0.0));
        if (nn == 0.0) {
            return {0.0, it, true};
        }
        for (std::size_t j = 0; j < n; ++j) {
            v[j] = next[j] / nn;
        }
        if (it > 1 && std::abs(sigma - estimate) <= rel_tol * std::max(sigma, 1e-300)) {
            return {sigma, it, true};
        }
        estimate = sigma;
    }
    return {estimate, max_iterations, false};
}

} // namespace ada
