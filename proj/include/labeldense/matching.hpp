#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "labeldense/clustering.hpp"
#include "labeldense/encoder.hpp"
#include "labeldense/linalg.hpp"
#include "labeldense/types.hpp"

namespace labeldense {

// Primitive-class score matrix restricted to primitives present in the
// scene (rows) and classes with y[c]=1 (columns). Id lists are strictly
// increasing.
struct CostMatrix {
    Mat scores;                // K'×C'
    std::vector<int> row_ids;  // primitive ids
    std::vector<int> col_ids;  // class ids
    int num_primitives = 0;    // dataset-wide K
};

// Primitive→class map. -1 is the null class.
struct AssignmentMap {
    std::vector<int> class_of_primitive;  // length K
    double total_score = 0.0;

    int matched_count() const;
};

// Per-scene mean feature of each primitive's member points plus presence
// bits; absent primitives get a zero row.
std::pair<Mat, std::vector<uint8_t>> primitive_scene_features(const Mat& f,
                                                              const AffinityMatrix& aff, int k);

CostMatrix build_cost_matrix(const Mat& prim_features, const std::vector<uint8_t>& present,
                             const Classifier& clf, const SceneLabels& y);

// Maximum-total-score injective class→primitive assignment. Among
// equal-score optima returns the lexicographically smallest one (by class
// id, then primitive id). Throws UnmatchableScene when K' < C'.
AssignmentMap hungarian_match(const CostMatrix& costs);

// Independent per-class argmax; a contested primitive goes to the higher
// score and the losing class stays unmatched.
AssignmentMap naive_match(const CostMatrix& costs);

// Groups the K centroids with a second K-means pass; a group holding two
// different assigned classes is fully un-assigned, a group holding exactly
// one propagates it to all members.
AssignmentMap filter_assignments(const AssignmentMap& pi, const PrimitiveSet& prims,
                                 int group_k, uint64_t seed);

// Per-point labels: each point takes pi of its primitive, null → -1.
std::vector<int32_t> densify_labels(const AssignmentMap& pi, const AffinityMatrix& aff);

// "WPL1" pseudo-label dump.
void write_pseudo_labels(const std::string& path, const std::vector<int32_t>& labels);
std::vector<int32_t> read_pseudo_labels(const std::string& path);

}  // namespace labeldense
