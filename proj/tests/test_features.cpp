#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "labeldense/features.hpp"
#include "labeldense/rng.hpp"
#include "labeldense/scenegen.hpp"

using namespace labeldense;

namespace {

// grid of points on a plane through the origin spanned by (du, dv)
PointCloud plane_cloud(const Vec3& du, const Vec3& dv, int side, const Vec3& offset,
                       int label = 0) {
    PointCloud pc;
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j) {
            Vec3 p;
            for (int a = 0; a < 3; ++a)
                p[a] = offset[a] + 0.1 * i * du[a] + 0.1 * j * dv[a];
            pc.positions.push_back(p);
            pc.colors.push_back({0.5, 0.5, 0.5});
            pc.gt_labels.push_back(label);
        }
    return pc;
}

}  // namespace

TEST_CASE("estimate_normals on axis-aligned planes") {
    const PointCloud floor = plane_cloud({1, 0, 0}, {0, 1, 0}, 6, {0, 0, 0});
    const Mat n1 = estimate_normals(floor, 8);
    for (std::size_t i = 0; i < n1.rows; ++i) {
        CHECK(n1(i, 0) == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(n1(i, 1) == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(n1(i, 2) == doctest::Approx(1.0).epsilon(1e-9));
    }

    // x=0 plane: normals (±1,0,0) canonicalized to +x
    const PointCloud wall = plane_cloud({0, 1, 0}, {0, 0, 1}, 6, {0, 0, 0});
    const Mat n2 = estimate_normals(wall, 8);
    for (std::size_t i = 0; i < n2.rows; ++i) {
        CHECK(n2(i, 0) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(std::abs(n2(i, 1)) < 1e-9);
        CHECK(std::abs(n2(i, 2)) < 1e-9);
    }

    // unit norm within 1e-6 everywhere
    Rng rng(4);
    PointCloud blob;
    for (int i = 0; i < 40; ++i) {
        blob.positions.push_back({rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)});
        blob.colors.push_back({0.2, 0.4, 0.6});
        blob.gt_labels.push_back(0);
    }
    const Mat n3 = estimate_normals(blob, 6);
    for (std::size_t i = 0; i < n3.rows; ++i)
        CHECK(std::abs(l2_norm(n3.row(i), 3) - 1.0) < 1e-6);
}

TEST_CASE("estimate_normals degenerate neighborhood falls back to +z") {
    PointCloud pc;
    for (int i = 0; i < 8; ++i) {
        pc.positions.push_back({1.0, 2.0, 3.0});  // all identical
        pc.colors.push_back({0, 0, 0});
        pc.gt_labels.push_back(0);
    }
    const Mat n = estimate_normals(pc, 4);
    for (std::size_t i = 0; i < n.rows; ++i) {
        CHECK(n(i, 0) == 0.0);
        CHECK(n(i, 1) == 0.0);
        CHECK(n(i, 2) == 1.0);
    }

    CHECK_THROWS_AS(estimate_normals(pc, 2), ConfigError);   // k_nn < 3
    CHECK_THROWS_AS(estimate_normals(pc, 20), DataError);    // M <= k_nn
}

TEST_CASE("hand features: shape, plane planarity, constant-column scaling") {
    // plane plus a scattered blob so the planarity column is not constant
    PointCloud pc = plane_cloud({1, 0, 0}, {0, 1, 0}, 6, {0, 0, 0});
    const std::size_t plane_pts = pc.size();
    Rng rng(5);
    for (int i = 0; i < 30; ++i) {
        pc.positions.push_back(
            {2.0 + rng.uniform(0, 0.5), 2.0 + rng.uniform(0, 0.5), rng.uniform(0, 0.5)});
        pc.colors.push_back({0.5, 0.5, 0.5});
        pc.gt_labels.push_back(1);
    }

    const auto knn = build_knn(pc, 9);
    const Mat normals = estimate_normals(pc, knn);
    Mat raw = compute_hand_features(pc, normals, knn);
    CHECK(raw.rows == pc.size());
    CHECK(raw.cols == 13);

    // oracle: coplanar neighborhoods have λ3=0, and the in-plane 2×2
    // covariance gives the other two eigenvalues in closed form
    for (std::size_t i = 0; i < plane_pts; ++i) {
        double mx = 0, my = 0;
        for (int j : knn[i]) {
            mx += pc.positions[j][0];
            my += pc.positions[j][1];
        }
        mx /= knn[i].size();
        my /= knn[i].size();
        double cxx = 0, cxy = 0, cyy = 0;
        for (int j : knn[i]) {
            const double dx = pc.positions[j][0] - mx;
            const double dy = pc.positions[j][1] - my;
            cxx += dx * dx;
            cxy += dx * dy;
            cyy += dy * dy;
        }
        cxx /= knn[i].size();
        cxy /= knn[i].size();
        cyy /= knn[i].size();
        const double mean = 0.5 * (cxx + cyy);
        const double r = std::sqrt(0.25 * (cxx - cyy) * (cxx - cyy) + cxy * cxy);
        const double l1 = mean + r, l2 = mean - r;
        CHECK(raw(i, 8) == doctest::Approx(l2 / l1).epsilon(1e-9));  // planarity
        CHECK(raw(i, 9) < 1e-9);                                    // scattering
    }
    // interior grid points have near-isotropic coplanar neighborhoods
    for (int gi = 2; gi <= 3; ++gi)
        for (int gj = 2; gj <= 3; ++gj) CHECK(raw(gi * 6 + gj, 8) > 0.9);

    std::vector<Mat> feats{raw};
    apply_minmax_scaling(feats);
    const Mat& scaled = feats[0];
    for (std::size_t i = 0; i < scaled.rows; ++i)
        for (std::size_t j = 0; j < scaled.cols; ++j) {
            CHECK(scaled(i, j) >= 0.0);
            CHECK(scaled(i, j) <= 1.0);
        }
    // identical colors everywhere → RGB columns constant → scaled to 0
    for (std::size_t i = 0; i < scaled.rows; ++i)
        for (std::size_t j = 4; j <= 6; ++j) CHECK(scaled(i, j) == 0.0);
    // interior plane points keep near-top planarity after scaling
    for (int gi = 2; gi <= 3; ++gi)
        for (int gj = 2; gj <= 3; ++gj) CHECK(scaled(gi * 6 + gj, 8) > 0.85);
}

TEST_CASE("supervoxels: single plane merges into one region") {
    const PointCloud pc = plane_cloud({1, 0, 0}, {0, 1, 0}, 8, {0, 0, 0});
    const auto knn = build_knn(pc, 8);
    const Mat normals = estimate_normals(pc, knn);
    const Mat feats = compute_hand_features(pc, normals, knn);
    const SupervoxelPartition sv = build_supervoxels(pc, feats, normals, 0.25, 30.0);
    CHECK(sv.count() == 1);
    for (int id : sv.sv_of_point) CHECK(id == 0);
}

TEST_CASE("supervoxels: two perpendicular planes stay separate") {
    PointCloud pc = plane_cloud({1, 0, 0}, {0, 1, 0}, 6, {0, 0, 0});
    const PointCloud wall = plane_cloud({0, 1, 0}, {0, 0, 1}, 6, {3.0, 0, 0.6});
    pc.positions.insert(pc.positions.end(), wall.positions.begin(), wall.positions.end());
    pc.colors.insert(pc.colors.end(), wall.colors.begin(), wall.colors.end());
    pc.gt_labels.insert(pc.gt_labels.end(), wall.gt_labels.begin(), wall.gt_labels.end());

    const auto knn = build_knn(pc, 6);
    const Mat normals = estimate_normals(pc, knn);
    const Mat feats = compute_hand_features(pc, normals, knn);
    const SupervoxelPartition sv = build_supervoxels(pc, feats, normals, 0.25, 30.0);
    CHECK(sv.count() == 2);

    SUBCASE("voxel larger than the extent gives one supervoxel") {
        const SupervoxelPartition one = build_supervoxels(pc, feats, normals, 100.0, 30.0);
        CHECK(one.count() == 1);
    }
}

TEST_CASE("supervoxel mean-feature identity and size accounting") {
    // exercised through scenegen to get a realistic mixed scene
    SceneSpec spec;
    spec.classes_to_place = {0, 1, 3};
    spec.points_per_object = 80;
    spec.noise_sigma = 0.02;
    const PointCloud pc = generate_scene(spec, 23);
    const auto knn = build_knn(pc, 8);
    const Mat normals = estimate_normals(pc, knn);
    const Mat feats = compute_hand_features(pc, normals, knn);
    const SupervoxelPartition sv = build_supervoxels(pc, feats, normals, 0.25, 30.0);

    int total = 0;
    for (int s : sv.sv_sizes) total += s;
    CHECK(total == static_cast<int>(pc.size()));
    for (int id : sv.sv_of_point) {
        CHECK(id >= 0);
        CHECK(id < sv.count());
    }

    Mat mean(sv.count(), feats.cols, 0.0);
    for (std::size_t i = 0; i < pc.size(); ++i)
        for (std::size_t j = 0; j < feats.cols; ++j)
            mean(sv.sv_of_point[i], j) += feats(i, j);
    for (int s = 0; s < sv.count(); ++s)
        for (std::size_t j = 0; j < feats.cols; ++j) {
            mean(s, j) /= sv.sv_sizes[s];
            CHECK(std::abs(mean(s, j) - sv.sv_features(s, j)) < 1e-9);
        }
}

TEST_CASE("feature cache round trip") {
    Rng rng(6);
    Mat f(9, 13);
    for (auto& v : f.d) v = static_cast<double>(static_cast<float>(rng.uniform(0, 1)));
    const std::string path = "test_cache.wft";
    write_feature_cache(path, f);
    const Mat back = read_feature_cache(path);
    CHECK(back.rows == f.rows);
    CHECK(back.cols == f.cols);
    CHECK(back.d == f.d);
    std::remove(path.c_str());
}
