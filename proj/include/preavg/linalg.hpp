#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace preavg {

// Small dense d x d matrix, row major. d is the asset dimension (typically
// <= 3), so no attempt at blocking or expression templates.
class Mat {
public:
    Mat() = default;
    explicit Mat(int d, double fill = 0.0) : d_(d), a_(static_cast<std::size_t>(d) * d, fill) {}

    static Mat identity(int d) {
        Mat m(d);
        for (int i = 0; i < d; ++i) m(i, i) = 1.0;
        return m;
    }

    int dim() const { return d_; }
    double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * d_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * d_ + j]; }

    Mat& operator+=(const Mat& o) {
        for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
        return *this;
    }
    Mat& operator-=(const Mat& o) {
        for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
        return *this;
    }
    Mat& operator*=(double c) {
        for (double& x : a_) x *= c;
        return *this;
    }
    friend Mat operator+(Mat a, const Mat& b) { return a += b; }
    friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
    friend Mat operator*(Mat a, double c) { return a *= c; }
    friend Mat operator*(double c, Mat a) { return a *= c; }

    // this += c * v v^T
    void add_outer(const std::vector<double>& v, double c = 1.0) {
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) (*this)(i, j) += c * v[i] * v[j];
    }

    bool symmetric(double tol = 1e-12) const {
        for (int i = 0; i < d_; ++i)
            for (int j = i + 1; j < d_; ++j)
                if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
        return true;
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : a_) m = std::max(m, std::abs(x));
        return m;
    }

private:
    int d_ = 0;
    std::vector<double> a_;
};

// Cholesky factor L (lower) of a symmetric PSD matrix. Zero diagonal blocks
// (e.g. zero noise) are handled by treating tiny pivots as zero.
inline Mat cholesky_psd(const Mat& a) {
    const int d = a.dim();
    Mat l(d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s < -1e-10) throw std::invalid_argument("matrix is not positive semidefinite");
                l(i, i) = s > 0.0 ? std::sqrt(s) : 0.0;
            } else {
                l(i, j) = l(j, j) > 0.0 ? s / l(j, j) : 0.0;
            }
        }
    }
    return l;
}

// Symmetric rank-4 tensor indexed by (k,l,k',l'), stored as a d^2 x d^2 array.
class Tensor4 {
public:
    Tensor4() = default;
    explicit Tensor4(int d) : d_(d), a_(static_cast<std::size_t>(d) * d * d * d, 0.0) {}

    int dim() const { return d_; }
    double& at(int k, int l, int k2, int l2) {
        return a_[((static_cast<std::size_t>(k) * d_ + l) * d_ + k2) * d_ + l2];
    }
    double at(int k, int l, int k2, int l2) const {
        return a_[((static_cast<std::size_t>(k) * d_ + l) * d_ + k2) * d_ + l2];
    }

private:
    int d_ = 0;
    std::vector<double> a_;
};

// Deterministic order-independent sum: pairwise reduction over a fixed index
// order, so the result does not depend on how work was split across threads.
inline double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 8) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

inline double pairwise_sum(const std::vector<double>& v) { return v.empty() ? 0.0 : pairwise_sum(v, 0, v.size()); }

}  // namespace preavg
