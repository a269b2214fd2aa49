#include "labeldense/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace labeldense {

Mat matmul(const Mat& a, const Mat& b) {
    assert(a.cols == b.rows);
    Mat c(a.rows, b.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = ai[k];
            if (aik == 0.0) continue;
            const double* bk = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
    assert(a.rows == b.rows);
    Mat c(a.cols, b.cols, 0.0);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* ak = a.row(k);
        const double* bk = b.row(k);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            double* ci = c.row(i);
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
    assert(a.cols == b.cols);
    Mat c(a.rows, b.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* bj = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
            ci[j] = s;
        }
    }
    return c;
}

void add_inplace(Mat& a, const Mat& b) {
    assert(a.same_shape(b));
    for (std::size_t i = 0; i < a.d.size(); ++i) a.d[i] += b.d[i];
}

void scale_inplace(Mat& a, double s) {
    for (double& v : a.d) v *= s;
}

Mat transpose(const Mat& a) {
    Mat t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

Mat col_sums(const Mat& a) {
    Mat s(1, a.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        for (std::size_t j = 0; j < a.cols; ++j) s.d[j] += ai[j];
    }
    return s;
}

bool all_finite(const Mat& a) {
    for (double v : a.d)
        if (!std::isfinite(v)) return false;
    return true;
}

double l2_norm(const double* v, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i] * v[i];
    return std::sqrt(s);
}

Mat normalize_rows(const Mat& x) {
    Mat y = x;
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double r = l2_norm(x.row(i), x.cols);
        if (r > 0.0) {
            double* yi = y.row(i);
            for (std::size_t j = 0; j < x.cols; ++j) yi[j] /= r;
        }
    }
    return y;
}

Mat normalize_rows_backward(const Mat& x, const Mat& g) {
    assert(x.same_shape(g));
    Mat out(x.rows, x.cols, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double r = l2_norm(x.row(i), x.cols);
        if (r == 0.0) continue;
        const double* xi = x.row(i);
        const double* gi = g.row(i);
        double dot = 0.0;  // g · u with u = x/r
        for (std::size_t j = 0; j < x.cols; ++j) dot += gi[j] * xi[j] / r;
        double* oi = out.row(i);
        for (std::size_t j = 0; j < x.cols; ++j) oi[j] = (gi[j] - dot * xi[j] / r) / r;
    }
    return out;
}

void eigen_sym3(const double m[3][3], double eigenvalues[3], double eigenvectors[3][3]) {
    double a[3][3];
    double v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a[i][j] = m[i][j];

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
        if (off < 1e-15) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                if (std::abs(a[p][q]) < 1e-18) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < 3; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (int k = 0; k < 3; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    int order[3] = {0, 1, 2};
    double lam[3] = {a[0][0], a[1][1], a[2][2]};
    std::sort(order, order + 3, [&](int i, int j) { return lam[i] > lam[j]; });
    for (int i = 0; i < 3; ++i) {
        eigenvalues[i] = lam[order[i]];
        for (int k = 0; k < 3; ++k) eigenvectors[k][i] = v[k][order[i]];
    }
}

}  // namespace labeldense
