// Small dense numeric kernels shared by every module. Row-major doubles
// throughout; nothing here aims at BLAS performance.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fedval::numkit {

struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major, data.size() == rows * cols

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline std::vector<double> matvec(const DenseMatrix& m, const std::vector<double>& x) {
    if (m.cols != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
    std::vector<double> out(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = m.row(r);
        double s = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) s += row[c] * x[c];
        out[r] = s;
    }
    return out;
}

// Branch-on-sign form: never evaluates exp of a large positive argument.
// Saturated tails are clamped so the result stays strictly inside (0, 1)
// even where exp underflows.
inline double sigmoid(double x) {
    double v;
    if (x >= 0.0) {
        v = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        v = e / (1.0 + e);
    }
    if (v <= 0.0) return 2.2250738585072014e-308;  // smallest normal double
    if (v >= 1.0) return 0.99999999999999989;      // largest double below 1
    return v;
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stddev;  // population stddev; zero-variance columns report 1
};

// Per-column mean and population standard deviation over a subset of rows
// (all rows when row_subset is empty). Zero-variance columns get the
// sentinel stddev 1 so centering maps them to constant zero.
inline Standardizer standardize_fit(const DenseMatrix& x,
                                    const std::vector<std::size_t>& row_subset = {}) {
    const std::size_t n = row_subset.empty() ? x.rows : row_subset.size();
    if (n < 2) throw std::invalid_argument("standardize_fit: need at least 2 rows");
    Standardizer s;
    s.mean.assign(x.cols, 0.0);
    s.stddev.assign(x.cols, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = x.row(row_subset.empty() ? i : row_subset[i]);
        for (std::size_t c = 0; c < x.cols; ++c) s.mean[c] += row[c];
    }
    for (std::size_t c = 0; c < x.cols; ++c) s.mean[c] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = x.row(row_subset.empty() ? i : row_subset[i]);
        for (std::size_t c = 0; c < x.cols; ++c) {
            const double d = row[c] - s.mean[c];
            s.stddev[c] += d * d;
        }
    }
    for (std::size_t c = 0; c < x.cols; ++c) {
        s.stddev[c] = std::sqrt(s.stddev[c] / static_cast<double>(n));
        if (s.stddev[c] == 0.0) s.stddev[c] = 1.0;
    }
    return s;
}

inline void standardize_apply(DenseMatrix& x, const Standardizer& s) {
    if (x.cols != s.mean.size()) throw std::invalid_argument("standardize_apply: dimension mismatch");
    for (std::size_t r = 0; r < x.rows; ++r) {
        double* row = x.row(r);
        for (std::size_t c = 0; c < x.cols; ++c) row[c] = (row[c] - s.mean[c]) / s.stddev[c];
    }
}

}  // namespace fedval::numkit
