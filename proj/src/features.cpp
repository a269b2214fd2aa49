#include "labeldense/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "binio.hpp"

namespace labeldense {

namespace {

double sq_dist3(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

// Covariance of the neighborhood positions around their mean.
void neighborhood_cov(const PointCloud& pc, const std::vector<int>& nn, double cov[3][3]) {
    Vec3 mean{0, 0, 0};
    for (int j : nn)
        for (int a = 0; a < 3; ++a) mean[a] += pc.positions[j][a];
    for (int a = 0; a < 3; ++a) mean[a] /= static_cast<double>(nn.size());
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) cov[a][b] = 0.0;
    for (int j : nn) {
        Vec3 d{pc.positions[j][0] - mean[0], pc.positions[j][1] - mean[1],
               pc.positions[j][2] - mean[2]};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) cov[a][b] += d[a] * d[b];
    }
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) cov[a][b] /= static_cast<double>(nn.size());
}

// Sign canonicalization: non-negative z, ties broken by x then y.
void canonicalize_normal(double n[3]) {
    constexpr double tol = 1e-9;
    double key = n[2];
    if (std::abs(key) <= tol) key = n[0];
    if (std::abs(key) <= tol) key = n[1];
    if (key < 0.0)
        for (int a = 0; a < 3; ++a) n[a] = -n[a];
}

int dominant_axis(const double* n) {
    const double ax = std::abs(n[0]), ay = std::abs(n[1]), az = std::abs(n[2]);
    if (ax >= ay && ax >= az) return 0;
    if (ay >= az) return 1;
    return 2;
}

struct BucketKey {
    int64_t x, y, z;
    bool operator<(const BucketKey& o) const {
        if (x != o.x) return x < o.x;
        if (y != o.y) return y < o.y;
        return z < o.z;
    }
    bool operator==(const BucketKey& o) const { return x == o.x && y == o.y && z == o.z; }
};

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) {
        for (int i = 0; i < n; ++i) parent[i] = i;
    }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) { parent[find(b)] = find(a); }
};

}  // namespace

std::vector<std::vector<int>> build_knn(const PointCloud& pc, int k_nn) {
    const int m = static_cast<int>(pc.size());
    if (k_nn < 3) throw ConfigError("k_nn must be >= 3");
    if (m <= k_nn) throw DataError("scene smaller than k_nn neighborhood");

    std::vector<std::vector<int>> knn(m);
    std::vector<std::pair<double, int>> dist(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) dist[j] = {sq_dist3(pc.positions[i], pc.positions[j]), j};
        std::partial_sort(dist.begin(), dist.begin() + k_nn, dist.end());
        knn[i].resize(k_nn);
        for (int j = 0; j < k_nn; ++j) knn[i][j] = dist[j].second;
    }
    return knn;
}

Mat estimate_normals(const PointCloud& pc, const std::vector<std::vector<int>>& knn) {
    const std::size_t m = pc.size();
    Mat normals(m, 3);
    for (std::size_t i = 0; i < m; ++i) {
        double cov[3][3];
        neighborhood_cov(pc, knn[i], cov);
        double trace = cov[0][0] + cov[1][1] + cov[2][2];
        double* n = normals.row(i);
        if (trace <= 1e-18) {  // degenerate neighborhood
            n[0] = 0.0;
            n[1] = 0.0;
            n[2] = 1.0;
            continue;
        }
        double evals[3], evecs[3][3];
        eigen_sym3(cov, evals, evecs);
        for (int a = 0; a < 3; ++a) n[a] = evecs[a][2];  // smallest eigenvalue
        const double norm = l2_norm(n, 3);
        for (int a = 0; a < 3; ++a) n[a] /= norm;
        canonicalize_normal(n);
    }
    return normals;
}

Mat estimate_normals(const PointCloud& pc, int k_nn) {
    return estimate_normals(pc, build_knn(pc, k_nn));
}

Mat compute_hand_features(const PointCloud& pc, const Mat& normals,
                          const std::vector<std::vector<int>>& knn) {
    const std::size_t m = pc.size();
    if (normals.rows != m) throw Error("normals row count mismatch");
    Mat f(m, kHandFeatureDim, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double* fi = f.row(i);
        fi[0] = normals(i, 0);
        fi[1] = normals(i, 1);
        fi[2] = normals(i, 2);
        fi[3] = pc.positions[i][2];
        fi[4] = pc.colors[i][0];
        fi[5] = pc.colors[i][1];
        fi[6] = pc.colors[i][2];

        double cov[3][3];
        neighborhood_cov(pc, knn[i], cov);
        double evals[3], evecs[3][3];
        eigen_sym3(cov, evals, evecs);
        const double l1 = std::max(evals[0], 0.0);
        const double l2 = std::max(evals[1], 0.0);
        const double l3 = std::max(evals[2], 0.0);
        if (l1 > 1e-18) {
            fi[7] = (l1 - l2) / l1;  // linearity
            fi[8] = (l2 - l3) / l1;  // planarity
            fi[9] = l3 / l1;         // scattering
        }

        // histogram of the dominant axis of neighbor normals
        for (int j : knn[i]) fi[10 + dominant_axis(normals.row(j))] += 1.0;
        for (int a = 0; a < 3; ++a) fi[10 + a] /= static_cast<double>(knn[i].size());
    }
    return f;
}

Mat compute_hand_features(const PointCloud& pc, const Mat& normals, int k_nn) {
    return compute_hand_features(pc, normals, build_knn(pc, k_nn));
}

void apply_minmax_scaling(std::vector<Mat>& per_scene_features) {
    if (per_scene_features.empty()) return;
    const std::size_t d = per_scene_features.front().cols;
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (const Mat& f : per_scene_features)
        for (std::size_t i = 0; i < f.rows; ++i) {
            const double* fi = f.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                lo[j] = std::min(lo[j], fi[j]);
                hi[j] = std::max(hi[j], fi[j]);
            }
        }
    for (Mat& f : per_scene_features)
        for (std::size_t i = 0; i < f.rows; ++i) {
            double* fi = f.row(i);
            for (std::size_t j = 0; j < d; ++j)
                fi[j] = (hi[j] > lo[j]) ? (fi[j] - lo[j]) / (hi[j] - lo[j]) : 0.0;
        }
}

SupervoxelPartition build_supervoxels(const PointCloud& pc, const Mat& features,
                                      const Mat& normals, double voxel_size,
                                      double angle_thresh_deg) {
    if (voxel_size <= 0.0) throw ConfigError("voxel_size must be positive");
    const std::size_t m = pc.size();

    // bucket points on a regular grid; map is ordered so bucket ids ascend
    // with the (x,y,z) key
    std::map<BucketKey, std::vector<int>> buckets;
    for (std::size_t i = 0; i < m; ++i) {
        const BucketKey key{static_cast<int64_t>(std::floor(pc.positions[i][0] / voxel_size)),
                            static_cast<int64_t>(std::floor(pc.positions[i][1] / voxel_size)),
                            static_cast<int64_t>(std::floor(pc.positions[i][2] / voxel_size))};
        buckets[key].push_back(static_cast<int>(i));
    }

    const int nb = static_cast<int>(buckets.size());
    std::vector<BucketKey> keys;
    keys.reserve(nb);
    std::map<BucketKey, int> bucket_id;
    for (const auto& [key, members] : buckets) {
        bucket_id[key] = static_cast<int>(keys.size());
        keys.push_back(key);
    }

    // running normal sums per merged component
    UnionFind uf(nb);
    std::vector<Vec3> normal_sum(nb, Vec3{0, 0, 0});
    for (int b = 0; b < nb; ++b)
        for (int i : buckets[keys[b]])
            for (int a = 0; a < 3; ++a) normal_sum[b][a] += normals(i, a);

    const double cos_thresh = std::cos(angle_thresh_deg * M_PI / 180.0);
    const int64_t offsets[6][3] = {{-1, 0, 0}, {1, 0, 0},  {0, -1, 0},
                                   {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
    for (int b = 0; b < nb; ++b) {
        for (const auto& off : offsets) {
            const BucketKey nk{keys[b].x + off[0], keys[b].y + off[1], keys[b].z + off[2]};
            const auto it = bucket_id.find(nk);
            if (it == bucket_id.end()) continue;
            const int rb = uf.find(b);
            const int rn = uf.find(it->second);
            if (rb == rn) continue;
            const Vec3& na = normal_sum[rb];
            const Vec3& nc = normal_sum[rn];
            const double la = l2_norm(na.data(), 3);
            const double lc = l2_norm(nc.data(), 3);
            if (la == 0.0 || lc == 0.0) continue;
            const double cosang =
                (na[0] * nc[0] + na[1] * nc[1] + na[2] * nc[2]) / (la * lc);
            if (cosang > cos_thresh) {
                uf.unite(rb, rn);
                const int root = uf.find(rb);
                const int other = root == rb ? rn : rb;
                for (int a = 0; a < 3; ++a) normal_sum[root][a] += normal_sum[other][a];
            }
        }
    }

    // contiguous supervoxel ids in ascending order of smallest member bucket
    std::vector<int> sv_id(nb, -1);
    int next = 0;
    for (int b = 0; b < nb; ++b) {
        const int root = uf.find(b);
        if (sv_id[root] == -1) sv_id[root] = next++;
    }

    SupervoxelPartition part;
    part.sv_of_point.assign(m, -1);
    part.sv_sizes.assign(next, 0);
    part.sv_features = Mat(static_cast<std::size_t>(next), features.cols, 0.0);
    for (int b = 0; b < nb; ++b) {
        const int s = sv_id[uf.find(b)];
        for (int i : buckets[keys[b]]) {
            part.sv_of_point[i] = s;
            ++part.sv_sizes[s];
            const double* fi = features.row(i);
            double* out = part.sv_features.row(s);
            for (std::size_t j = 0; j < features.cols; ++j) out[j] += fi[j];
        }
    }
    for (int s = 0; s < next; ++s) {
        double* out = part.sv_features.row(s);
        for (std::size_t j = 0; j < features.cols; ++j) out[j] /= part.sv_sizes[s];
    }
    return part;
}

void write_feature_cache(const std::string& path, const Mat& features) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open " + path + " for writing");
    os.write("WFT1", 4);
    binio::put_u32(os, static_cast<uint32_t>(features.rows));
    binio::put_u32(os, static_cast<uint32_t>(features.cols));
    for (double v : features.d) binio::put_f32(os, static_cast<float>(v));
    if (!os) throw DataError("write failed for " + path);
}

Mat read_feature_cache(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    binio::check_magic(is, "WFT1", path);
    const uint32_t m = binio::get_u32(is, path);
    const uint32_t d = binio::get_u32(is, path);
    if (m == 0 || d == 0) throw DataError("empty feature cache in " + path);
    Mat f(m, d);
    for (auto& v : f.d) v = binio::get_f32(is, path);
    return f;
}

}  // namespace labeldense
