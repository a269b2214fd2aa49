#pragma once

#include <cstdint>
#include <vector>

#include "labeldense/encoder.hpp"
#include "labeldense/linalg.hpp"

namespace labeldense {

struct KmeansResult {
    Mat centroids;                      // K×D
    std::vector<int> labels;            // per input row
    std::vector<double> inertia_trace;  // one entry per Lloyd iteration
};

// Seeded k-means++ init, Lloyd to assignment fixpoint or max_iter. Empty
// clusters are re-seeded to the point farthest from its centroid. Nearest
// ties go to the lowest centroid index.
KmeansResult kmeans(const Mat& points, int k, uint64_t seed, int max_iter = 100);

// K dataset-wide centroids over learned features, L2-normalized rows.
struct PrimitiveSet {
    Mat centroids;  // K×H, unit rows
    int epoch_computed = 0;

    int count() const { return static_cast<int>(centroids.rows); }
};

// Clusters encoder outputs on the supervoxel mean descriptors. With warmup,
// the clustering input is [unit(encoded) ‖ unit(handcrafted)] and only the
// encoded slice of each centroid is kept, then re-normalized.
PrimitiveSet compute_primitives(const EncoderParams& enc, const Mat& sv_descriptors, int k,
                                bool warmup, uint64_t seed);

// One-hot point→primitive assignment for a scene, stored as ids.
using AffinityMatrix = std::vector<int>;

// Nearest centroid by Euclidean distance on L2-normalized features; ties go
// to the lowest index.
AffinityMatrix assign_affinity(const Mat& f, const PrimitiveSet& prims);

}  // namespace labeldense
