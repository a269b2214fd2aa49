#pragma once

#include <string>
#include <vector>

#include "labeldense/linalg.hpp"
#include "labeldense/types.hpp"

namespace labeldense {

// Per-point descriptor layout (D=13):
//   [0..2]  normal
//   [3]     height z
//   [4..6]  RGB
//   [7..9]  PCA shape factors: linearity, planarity, scattering
//   [10..12] neighborhood histogram of dominant normal axis (x,y,z bins)
constexpr int kHandFeatureDim = 13;

// k nearest neighbors per point (self included), ordered by (distance, index).
std::vector<std::vector<int>> build_knn(const PointCloud& pc, int k_nn);

Mat estimate_normals(const PointCloud& pc, int k_nn);
Mat estimate_normals(const PointCloud& pc, const std::vector<std::vector<int>>& knn);

// Raw (unscaled) M×13 descriptors.
Mat compute_hand_features(const PointCloud& pc, const Mat& normals, int k_nn);
Mat compute_hand_features(const PointCloud& pc, const Mat& normals,
                          const std::vector<std::vector<int>>& knn);

// Dataset-level min-max scaling, per column over all scenes. Constant
// columns map to 0.
void apply_minmax_scaling(std::vector<Mat>& per_scene_features);

struct SupervoxelPartition {
    std::vector<int> sv_of_point;   // length M, ids in [0,S)
    Mat sv_features;                // S×D mean descriptors
    std::vector<int> sv_sizes;      // length S

    int count() const { return static_cast<int>(sv_sizes.size()); }
};

// Voxel-grid seeding plus greedy normal-coherent region growing over
// 6-connected buckets, merged in ascending bucket-key order.
SupervoxelPartition build_supervoxels(const PointCloud& pc, const Mat& features,
                                      const Mat& normals, double voxel_size,
                                      double angle_thresh_deg);

// "WFT1" per-scene feature cache.
void write_feature_cache(const std::string& path, const Mat& features);
Mat read_feature_cache(const std::string& path);

}  // namespace labeldense
