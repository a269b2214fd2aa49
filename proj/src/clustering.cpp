#include "labeldense/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "labeldense/rng.hpp"
#include "labeldense/types.hpp"

namespace labeldense {

namespace {

double sq_dist(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// k-means++ seeding with greedy candidate sampling: each new centroid is
// drawn 2+log2(k) times proportional to the squared distance to the nearest
// chosen centroid, keeping the candidate with the lowest resulting
// potential.
Mat kmeanspp_init(const Mat& pts, int k, Rng& rng) {
    const std::size_t n = pts.rows;
    const std::size_t d = pts.cols;
    Mat centroids(static_cast<std::size_t>(k), d);
    std::vector<double> best_d2(n, std::numeric_limits<double>::infinity());

    const std::size_t first = rng.uniform_int(n);
    std::copy_n(pts.row(first), d, centroids.row(0));
    for (std::size_t i = 0; i < n; ++i) best_d2[i] = sq_dist(pts.row(i), pts.row(first), d);

    const int n_trials = 2 + static_cast<int>(std::log2(static_cast<double>(k)) + 1.0);
    std::vector<double> cand_d2(n);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += best_d2[i];

        std::size_t best_pick = 0;
        double best_pot = std::numeric_limits<double>::infinity();
        std::vector<double> best_cand_d2;
        for (int t = 0; t < n_trials; ++t) {
            std::size_t pick;
            if (total > 0.0) {
                const double r = rng.uniform01() * total;
                double acc = 0.0;
                pick = n - 1;
                for (std::size_t i = 0; i < n; ++i) {
                    acc += best_d2[i];
                    if (acc >= r) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = rng.uniform_int(n);  // all points already covered
            }
            double pot = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cand_d2[i] = std::min(best_d2[i], sq_dist(pts.row(i), pts.row(pick), d));
                pot += cand_d2[i];
            }
            if (pot < best_pot) {
                best_pot = pot;
                best_pick = pick;
                best_cand_d2 = cand_d2;
            }
        }
        std::copy_n(pts.row(best_pick), d, centroids.row(c));
        best_d2 = std::move(best_cand_d2);
    }
    return centroids;
}

}  // namespace

KmeansResult kmeans(const Mat& points, int k, uint64_t seed, int max_iter) {
    const std::size_t n = points.rows;
    const std::size_t d = points.cols;
    if (static_cast<std::size_t>(k) > n)
        throw DataError("kmeans needs at least K rows (" + std::to_string(n) + " < " +
                        std::to_string(k) + ")");
    if (!all_finite(points)) throw DataError("kmeans input contains non-finite values");

    Rng rng(mix_seed(seed, 0x6b6d65616e73ULL));
    KmeansResult res;
    res.centroids = kmeanspp_init(points, k, rng);
    res.labels.assign(n, 0);
    std::vector<int> prev(n, -1);
    std::vector<int> counts(k, 0);

    for (int iter = 0; iter < max_iter; ++iter) {
        // assignment step; ties go to the lowest centroid index
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_k = 0;
            for (int c = 0; c < k; ++c) {
                const double d2 = sq_dist(points.row(i), res.centroids.row(c), d);
                if (d2 < best) {
                    best = d2;
                    best_k = c;
                }
            }
            res.labels[i] = best_k;
            inertia += best;
        }
        res.inertia_trace.push_back(inertia);
        if (res.labels == prev) break;
        prev = res.labels;

        // mean update
        std::fill(counts.begin(), counts.end(), 0);
        Mat sums(static_cast<std::size_t>(k), d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[res.labels[i]];
            const double* p = points.row(i);
            double* s = sums.row(res.labels[i]);
            for (std::size_t j = 0; j < d; ++j) s[j] += p[j];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            double* cr = res.centroids.row(c);
            const double* s = sums.row(c);
            for (std::size_t j = 0; j < d; ++j) cr[j] = s[j] / counts[c];
        }
        // empty clusters move onto the point currently farthest from its
        // centroid; each reseed consumes that point
        std::vector<char> claimed(n, 0);
        for (int c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            double far_d2 = -1.0;
            std::size_t far_i = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (claimed[i]) continue;
                const double d2 =
                    sq_dist(points.row(i), res.centroids.row(res.labels[i]), d);
                if (d2 > far_d2) {
                    far_d2 = d2;
                    far_i = i;
                }
            }
            claimed[far_i] = 1;
            std::copy_n(points.row(far_i), d, res.centroids.row(c));
        }
    }
    return res;
}

PrimitiveSet compute_primitives(const EncoderParams& enc, const Mat& sv_descriptors, int k,
                                bool warmup, uint64_t seed) {
    const std::size_t s_total = sv_descriptors.rows;
    if (s_total < static_cast<std::size_t>(k))
        throw DataError("fewer supervoxels (" + std::to_string(s_total) + ") than K (" +
                        std::to_string(k) + ")");

    const Mat encoded = normalize_rows(encoder_forward(enc, sv_descriptors));
    const std::size_t h = encoded.cols;

    Mat rows;
    if (warmup) {
        const Mat hand = normalize_rows(sv_descriptors);
        rows = Mat(s_total, h + hand.cols);
        for (std::size_t i = 0; i < s_total; ++i) {
            std::copy_n(encoded.row(i), h, rows.row(i));
            std::copy_n(hand.row(i), hand.cols, rows.row(i) + h);
        }
    } else {
        rows = encoded;
    }

    const KmeansResult km = kmeans(rows, k, seed);
    PrimitiveSet prims;
    prims.centroids = Mat(static_cast<std::size_t>(k), h);
    for (int c = 0; c < k; ++c) std::copy_n(km.centroids.row(c), h, prims.centroids.row(c));
    prims.centroids = normalize_rows(prims.centroids);
    return prims;
}

AffinityMatrix assign_affinity(const Mat& f, const PrimitiveSet& prims) {
    if (f.cols != prims.centroids.cols)
        throw Error("feature dim does not match centroid dim");
    const Mat fn = normalize_rows(f);
    AffinityMatrix aff(f.rows, 0);
    const int k = prims.count();
    for (std::size_t i = 0; i < fn.rows; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int best_k = 0;
        for (int c = 0; c < k; ++c) {
            const double d2 = sq_dist(fn.row(i), prims.centroids.row(c), fn.cols);
            if (d2 < best) {
                best = d2;
                best_k = c;
            }
        }
        aff[i] = best_k;
    }
    return aff;
}

}  // namespace labeldense
