#pragma once

#include <vector>

#include "labeldense/clustering.hpp"
#include "labeldense/linalg.hpp"
#include "labeldense/types.hpp"

namespace labeldense {

struct LossGrad {
    double loss = 0.0;
    Mat grad;  // same shape as the differentiated input
};

// Sum over classes of binary cross-entropy between the logistic of the
// average-pooled logits and the multi-hot scene label.
LossGrad loss_cam(const Mat& scores, const SceneLabels& y);

// Mean softmax cross-entropy over points with a label (-1 is ignored).
LossGrad loss_dense(const Mat& scores, const std::vector<int32_t>& labels);

// Per-point cross-entropy of softmax_k(f·centroidᵀ/tau) against the K-means
// assignment; gradient w.r.t. f only, centroids are constants.
LossGrad loss_us(const Mat& f, const PrimitiveSet& prims, const AffinityMatrix& aff,
                 double tau);

// Dense loss applied to densified pseudo-labels.
LossGrad loss_match(const Mat& scores, const std::vector<int32_t>& pseudo_labels);

// Signs of the descent direction -dL/ds under the CAM and dense losses,
// entries in {-1,0,+1}.
struct SignPair {
    Mat cam;
    Mat dense;
};
SignPair grad_sign_analysis(const Mat& scores, const SceneLabels& y,
                            const std::vector<int32_t>& y_point);

}  // namespace labeldense
