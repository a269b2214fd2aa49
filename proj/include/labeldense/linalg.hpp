#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace labeldense {

// Dense row-major f64 matrix. Small and owned; all the numerics in this
// project go through it.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> d;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), d(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return d[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return d[i * cols + j]; }
    double* row(std::size_t i) { return d.data() + i * cols; }
    const double* row(std::size_t i) const { return d.data() + i * cols; }
    bool empty() const { return d.empty(); }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

// c = a(r×k) · b(k×c)
Mat matmul(const Mat& a, const Mat& b);
// c = aᵀ(r×k) · b  with a stored k×r
Mat matmul_tn(const Mat& a, const Mat& b);
// c = a · bᵀ(k×c) with b stored c×k
Mat matmul_nt(const Mat& a, const Mat& b);

void add_inplace(Mat& a, const Mat& b);
void scale_inplace(Mat& a, double s);
Mat transpose(const Mat& a);

// Column sums as a 1×cols matrix.
Mat col_sums(const Mat& a);

bool all_finite(const Mat& a);

double l2_norm(const double* v, std::size_t n);

// Rows scaled to unit L2 norm; all-zero rows are left as zero.
Mat normalize_rows(const Mat& x);
// Gradient of normalize_rows: given upstream g = dL/d(normalize_rows(x)),
// returns dL/dx. Zero rows get zero gradient.
Mat normalize_rows_backward(const Mat& x, const Mat& g);

// Eigen-decomposition of a symmetric 3×3 matrix by cyclic Jacobi sweeps.
// Eigenvalues are returned in descending order with matching column vectors.
void eigen_sym3(const double m[3][3], double eigenvalues[3], double eigenvectors[3][3]);

}  // namespace labeldense
