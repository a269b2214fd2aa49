#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "labeldense/linalg.hpp"

namespace labeldense {

enum class Activation { Tanh, Identity };  // Identity is a test-only bypass

struct EncoderDims {
    int in = 13;
    int hidden = 32;
    int out = 16;
};

// Two-layer encoder: f = act(X·W1 + b1)·W2 + b2.
struct EncoderParams {
    Mat w1;  // D×H1
    Mat b1;  // 1×H1
    Mat w2;  // H1×H
    Mat b2;  // 1×H
    Activation activation = Activation::Tanh;

    EncoderDims dims() const {
        return {static_cast<int>(w1.rows), static_cast<int>(w1.cols),
                static_cast<int>(w2.cols)};
    }
};

// Bias-free linear classifier, s = f·W.
struct Classifier {
    Mat w;  // H×C
};

EncoderParams init_encoder(const EncoderDims& dims, uint64_t seed);
Classifier init_classifier(int feat_dim, int num_classes, uint64_t seed);

struct ForwardCache {
    Mat hidden;    // M×H1 post-activation
    Mat features;  // M×H
};

Mat encoder_forward(const EncoderParams& p, const Mat& x, ForwardCache* cache = nullptr);
Mat classify(const Classifier& clf, const Mat& f);

struct Grads {
    Mat w1, b1, w2, b2;  // encoder
    Mat clf_w;           // classifier
};

// Exact reverse-mode gradients of classify(encoder_forward(x)) given the
// upstream gradients on scores and on features. Either upstream may be
// empty. Recomputes the activations when no cache is supplied.
Grads backward(const EncoderParams& p, const Classifier& clf, const Mat& x,
               const Mat& dl_ds, const Mat& dl_df, const ForwardCache* cache = nullptr);

struct AdamState {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    int64_t step = 0;
    Grads m, v;  // moment buffers, shapes mirror the parameters
};

AdamState init_adam(const EncoderParams& p, const Classifier& clf, double lr,
                    double weight_decay);
// Decoupled-weight-decay Adam update, in place.
void adam_step(AdamState& st, EncoderParams& p, Classifier& clf, const Grads& g);

struct Checkpoint {
    EncoderParams enc;
    Classifier clf;
    std::optional<Mat> centroids;
    int64_t step = 0;
};

// One-line JSON header + little-endian f64 tensors in declared order
// (w1, b1, w2, b2, classifier, centroids).
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace labeldense
