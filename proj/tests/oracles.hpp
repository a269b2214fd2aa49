// Independent reference computations used to pin expected test values.
// Everything here is brute force on purpose and stays decoupled from the
// library code paths it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <vector>

#include "labeldense/linalg.hpp"

namespace oracle {

// Best injective class→primitive assignment by exhaustive enumeration.
// scores is K'×C' (rows primitives, cols classes). Returns the maximum
// total and the lexicographically smallest argmax (by class, then
// primitive).
struct BruteAssignment {
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> prim_of_class;  // length C'
};

inline BruteAssignment brute_force_assignment(const labeldense::Mat& scores) {
    const int kp = static_cast<int>(scores.rows);
    const int cp = static_cast<int>(scores.cols);
    BruteAssignment out;
    std::vector<int> cur(cp, -1);
    std::vector<char> used(kp, 0);
    std::function<void(int, double)> rec = [&](int c, double acc) {
        if (c == cp) {
            if (acc > out.best + 1e-15) {
                out.best = acc;
                out.prim_of_class = cur;
            } else if (std::abs(acc - out.best) <= 1e-15 && !out.prim_of_class.empty() &&
                       cur < out.prim_of_class) {
                out.prim_of_class = cur;
            }
            return;
        }
        for (int p = 0; p < kp; ++p) {
            if (used[p]) continue;
            used[p] = 1;
            cur[c] = p;
            rec(c + 1, acc + scores(p, c));
            used[p] = 0;
        }
        cur[c] = -1;
    };
    rec(0, 0.0);
    return out;
}

// Exhaustive k-means optimum: minimum inertia over every assignment of the
// rows into k clusters (empty clusters allowed; they can only hurt).
inline double exhaustive_kmeans_inertia(const labeldense::Mat& pts, int k) {
    const int n = static_cast<int>(pts.rows);
    const int d = static_cast<int>(pts.cols);
    std::vector<int> assign(n, 0);
    double best = std::numeric_limits<double>::infinity();
    const auto evaluate = [&]() {
        std::vector<std::vector<double>> mean(k, std::vector<double>(d, 0.0));
        std::vector<int> cnt(k, 0);
        for (int i = 0; i < n; ++i) {
            ++cnt[assign[i]];
            for (int j = 0; j < d; ++j) mean[assign[i]][j] += pts(i, j);
        }
        for (int c = 0; c < k; ++c)
            if (cnt[c] > 0)
                for (int j = 0; j < d; ++j) mean[c][j] /= cnt[c];
        double inertia = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) {
                const double diff = pts(i, j) - mean[assign[i]][j];
                inertia += diff * diff;
            }
        }
        best = std::min(best, inertia);
    };
    std::function<void(int)> rec = [&](int i) {
        if (i == n) {
            evaluate();
            return;
        }
        for (int c = 0; c < k; ++c) {
            assign[i] = c;
            rec(i + 1);
        }
    };
    rec(0);
    return best;
}

// Central finite differences over a flat parameter view.
// fn() re-evaluates the scalar loss from the current parameter values.
inline double fd_max_rel_err(std::vector<double*> params, const std::vector<double>& analytic,
                             const std::function<double()>& fn, double h = 1e-5) {
    double max_rel = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = *params[i];
        *params[i] = saved + h;
        const double up = fn();
        *params[i] = saved - h;
        const double dn = fn();
        *params[i] = saved;
        const double fd = (up - dn) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-8});
        max_rel = std::max(max_rel, std::abs(fd - analytic[i]) / denom);
    }
    return max_rel;
}

// Set-based IoU per class over flattened gt/pred.
inline std::vector<double> set_iou(const std::vector<int>& gt, const std::vector<int>& pred,
                                   int num_classes) {
    std::vector<double> iou(num_classes, std::numeric_limits<double>::quiet_NaN());
    for (int c = 0; c < num_classes; ++c) {
        std::set<std::size_t> g, p;
        for (std::size_t i = 0; i < gt.size(); ++i) {
            if (gt[i] == c) g.insert(i);
            if (pred[i] == c) p.insert(i);
        }
        if (g.empty()) continue;  // absent from gt → excluded from the mean
        std::set<std::size_t> inter, uni;
        std::set_intersection(g.begin(), g.end(), p.begin(), p.end(),
                              std::inserter(inter, inter.begin()));
        std::set_union(g.begin(), g.end(), p.begin(), p.end(), std::inserter(uni, uni.begin()));
        iou[c] = static_cast<double>(inter.size()) / static_cast<double>(uni.size());
    }
    return iou;
}

}  // namespace oracle
