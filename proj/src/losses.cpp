#include "labeldense/losses.hpp"

#include <algorithm>
#include <cmath>

namespace labeldense {

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Row-wise softmax probabilities plus the cross-entropy against `target`.
void softmax_row(const double* s, std::size_t c, double* probs, double& lse) {
    double mx = s[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, s[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
        probs[j] = std::exp(s[j] - mx);
        sum += probs[j];
    }
    for (std::size_t j = 0; j < c; ++j) probs[j] /= sum;
    lse = mx + std::log(sum);
}

}  // namespace

LossGrad loss_cam(const Mat& scores, const SceneLabels& y) {
    const std::size_t m = scores.rows;
    const std::size_t c = scores.cols;
    if (m == 0) throw Error("loss_cam needs at least one point");
    if (static_cast<int>(c) != y.num_classes()) throw Error("loss_cam class count mismatch");

    LossGrad out;
    out.grad = Mat(m, c, 0.0);
    for (std::size_t j = 0; j < c; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < m; ++i) mean += scores(i, j);
        mean /= static_cast<double>(m);
        const double t = y.present[j] ? 1.0 : 0.0;
        out.loss += softplus(mean) - t * mean;  // BCE(σ(mean), t) in logit form
        const double g = (sigmoid(mean) - t) / static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i) out.grad(i, j) = g;
    }
    return out;
}

LossGrad loss_dense(const Mat& scores, const std::vector<int32_t>& labels) {
    const std::size_t m = scores.rows;
    const std::size_t c = scores.cols;
    if (labels.size() != m) throw Error("loss_dense label count mismatch");

    LossGrad out;
    out.grad = Mat(m, c, 0.0);
    std::size_t count = 0;
    for (int32_t lab : labels)
        if (lab >= 0) ++count;
    if (count == 0) return out;  // all ignored

    std::vector<double> probs(c);
    for (std::size_t i = 0; i < m; ++i) {
        const int32_t lab = labels[i];
        if (lab < 0) continue;
        if (lab >= static_cast<int32_t>(c)) throw Error("loss_dense label out of range");
        double lse;
        softmax_row(scores.row(i), c, probs.data(), lse);
        out.loss += lse - scores(i, lab);
        double* gi = out.grad.row(i);
        for (std::size_t j = 0; j < c; ++j) gi[j] = probs[j] / static_cast<double>(count);
        gi[lab] -= 1.0 / static_cast<double>(count);
    }
    out.loss /= static_cast<double>(count);
    return out;
}

LossGrad loss_us(const Mat& f, const PrimitiveSet& prims, const AffinityMatrix& aff,
                 double tau) {
    const std::size_t m = f.rows;
    const std::size_t k = prims.centroids.rows;
    if (aff.size() != m) throw Error("loss_us affinity length mismatch");
    if (f.cols != prims.centroids.cols) throw Error("loss_us feature dim mismatch");

    Mat logits = matmul_nt(f, prims.centroids);
    scale_inplace(logits, 1.0 / tau);

    LossGrad out;
    Mat dlogits(m, k, 0.0);
    std::vector<double> probs(k);
    for (std::size_t i = 0; i < m; ++i) {
        double lse;
        softmax_row(logits.row(i), k, probs.data(), lse);
        out.loss += lse - logits(i, aff[i]);
        double* di = dlogits.row(i);
        for (std::size_t j = 0; j < k; ++j) di[j] = probs[j];
        di[aff[i]] -= 1.0;
    }
    out.loss /= static_cast<double>(m);
    scale_inplace(dlogits, 1.0 / (static_cast<double>(m) * tau));
    out.grad = matmul(dlogits, prims.centroids);  // centroids are constants
    return out;
}

LossGrad loss_match(const Mat& scores, const std::vector<int32_t>& pseudo_labels) {
    return loss_dense(scores, pseudo_labels);
}

SignPair grad_sign_analysis(const Mat& scores, const SceneLabels& y,
                            const std::vector<int32_t>& y_point) {
    const std::size_t m = scores.rows;
    const std::size_t c = scores.cols;
    SignPair out;
    out.cam = Mat(m, c, 0.0);
    out.dense = Mat(m, c, 0.0);

    // CAM pushes every point of a present class up and of an absent class
    // down; the per-point direction is shared through the pooled mean.
    for (std::size_t j = 0; j < c; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < m; ++i) mean += scores(i, j);
        mean /= static_cast<double>(m);
        const double t = y.present[j] ? 1.0 : 0.0;
        const double s = sign_of(t - sigmoid(mean));
        for (std::size_t i = 0; i < m; ++i) out.cam(i, j) = s;
    }

    std::vector<double> probs(c);
    for (std::size_t i = 0; i < m; ++i) {
        const int32_t lab = y_point[i];
        if (lab < 0) continue;
        double lse;
        softmax_row(scores.row(i), c, probs.data(), lse);
        for (std::size_t j = 0; j < c; ++j) {
            const double target = (static_cast<int32_t>(j) == lab) ? 1.0 : 0.0;
            out.dense(i, j) = sign_of(target - probs[j]);
        }
    }
    return out;
}

}  // namespace labeldense
