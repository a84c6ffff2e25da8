// Minimal row-major double matrix plus the handful of products the
// encoder/attention backward passes need. Loops only, no BLAS.
#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ecase/common.hpp"

namespace ecase {

struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) {
        return a[static_cast<std::size_t>(i) * cols + j];
    }
    double operator()(int i, int j) const {
        return a[static_cast<std::size_t>(i) * cols + j];
    }
    double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }
    const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
    void zero() { std::fill(a.begin(), a.end(), 0.0); }
    std::size_t size() const { return a.size(); }

    bool all_finite() const {
        for (double v : a)
            if (!std::isfinite(v)) return false;
        return true;
    }

    friend bool operator==(const Mat& x, const Mat& y) {
        return x.rows == y.rows && x.cols == y.cols && x.a == y.a;
    }
};

// C = A * B
inline Mat matmul(const Mat& A, const Mat& B) {
    assert(A.cols == B.rows);
    Mat C(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i) {
        const double* ai = A.row(i);
        double* ci = C.row(i);
        for (int k = 0; k < A.cols; ++k) {
            const double aik = ai[k];
            if (aik == 0.0) continue;
            const double* bk = B.row(k);
            for (int j = 0; j < B.cols; ++j) ci[j] += aik * bk[j];
        }
    }
    return C;
}

// C += A^T * B   (gradient of weights in y = x W)
inline void add_At_B(Mat& C, const Mat& A, const Mat& B) {
    assert(A.rows == B.rows && C.rows == A.cols && C.cols == B.cols);
    for (int k = 0; k < A.rows; ++k) {
        const double* ak = A.row(k);
        const double* bk = B.row(k);
        for (int i = 0; i < A.cols; ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            double* ci = C.row(i);
            for (int j = 0; j < B.cols; ++j) ci[j] += aki * bk[j];
        }
    }
}

// C = A * B^T
inline Mat matmul_Bt(const Mat& A, const Mat& B) {
    assert(A.cols == B.cols);
    Mat C(A.rows, B.rows);
    for (int i = 0; i < A.rows; ++i) {
        const double* ai = A.row(i);
        for (int j = 0; j < B.rows; ++j) {
            const double* bj = B.row(j);
            double s = 0.0;
            for (int k = 0; k < A.cols; ++k) s += ai[k] * bj[k];
            C(i, j) = s;
        }
    }
    return C;
}

inline Mat add(const Mat& A, const Mat& B) {
    assert(A.same_shape(B));
    Mat C = A;
    for (std::size_t i = 0; i < C.a.size(); ++i) C.a[i] += B.a[i];
    return C;
}

inline void add_inplace(Mat& A, const Mat& B) {
    assert(A.same_shape(B));
    for (std::size_t i = 0; i < A.a.size(); ++i) A.a[i] += B.a[i];
}

inline double dot(const double* x, const double* y, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(const double* x, int n) { return std::sqrt(dot(x, x, n)); }

// In-place softmax of one row.
inline void softmax_row(double* x, int n) {
    double m = x[0];
    for (int i = 1; i < n; ++i) m = std::max(m, x[i]);
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
        x[i] = std::exp(x[i] - m);
        z += x[i];
    }
    for (int i = 0; i < n; ++i) x[i] /= z;
}

// A trainable tensor: weight plus gradient accumulator. Initialization is
// seeded per tensor name, so the presence or construction order of other
// tensors cannot shift a tensor's initial values.
struct Tensor {
    std::string name;
    Mat w;
    Mat g;

    Tensor() = default;
    Tensor(std::string n, int r, int c) : name(std::move(n)), w(r, c), g(r, c) {}

    void init_gauss(std::uint64_t seed, double stddev) {
        SeededRandom rng(SeededRandom::derive(seed, fnv1a64(name)));
        for (auto& v : w.a) v = rng.normal() * stddev;
    }
    void init_zero() { w.zero(); }
    void init_const(double v) { std::fill(w.a.begin(), w.a.end(), v); }
    void zero_grad() { g.zero(); }
};

}  // namespace ecase
