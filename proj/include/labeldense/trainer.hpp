#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "labeldense/clustering.hpp"
#include "labeldense/encoder.hpp"
#include "labeldense/features.hpp"
#include "labeldense/matching.hpp"
#include "labeldense/types.hpp"

namespace labeldense {

struct LossToggles {
    bool cam = true;
    bool us = true;
    bool match = true;
};

enum class MatcherKind { Hungarian, Naive };

struct TrainConfig {
    int epochs = 100;              // paper-scale runs use 400
    int k_primitives = 48;         // paper-scale 700
    int kmeans_period = 10;
    int warmup_epochs = 30;        // paper-scale 250
    int match_delay_epochs = 8;    // paper-scale 60
    double lr = 0.01;
    double weight_decay = 0.0;
    uint64_t seed = 1;
    LossToggles losses;
    MatcherKind matcher = MatcherKind::Hungarian;
    bool filter_on = false;
    int filter_group_k = 0;        // 0 → floor(0.4·K)
    double tau = 0.1;
    double weight_cam = 1.0;
    double weight_us = 1.0;
    double weight_match = 1.0;
    int threads = 1;
    // feature pipeline
    int k_nn = 12;
    double voxel_size = 0.25;
    double angle_thresh_deg = 30.0;

    void validate(int num_classes) const;
};

struct EpochStats {
    double l_cam = 0.0;
    double l_us = 0.0;
    double l_match = 0.0;
    double l_dense = 0.0;  // bootstrap retraining only
    double matched_scene_fraction = 0.0;
};

struct History {
    std::vector<EpochStats> epochs;
};

struct Model {
    EncoderParams enc;
    Classifier clf;
    std::optional<PrimitiveSet> prims;
};

// Per-scene feature pipeline outputs; independent of training config seed,
// so one PreparedDataset can back many runs.
struct PreparedScene {
    Mat x;  // M×13 scaled descriptors
    SupervoxelPartition sv;
};

struct PreparedDataset {
    Dataset ds;
    std::vector<PreparedScene> scenes;
    Mat sv_descriptors;  // all supervoxel rows stacked in scene order
};

PreparedDataset prepare_dataset(const Dataset& ds, const TrainConfig& cfg);

std::pair<Model, History> train(const Dataset& ds, const TrainConfig& cfg);
std::pair<Model, History> train_prepared(const PreparedDataset& prep, const TrainConfig& cfg);

struct EvalReport {
    std::vector<double> per_class_iou;  // NaN for classes absent from gt
    double miou = 0.0;
    std::vector<std::vector<int64_t>> confusion;  // [gt][pred]
    double matched_class_accuracy = 0.0;          // NaN without primitives
};

// Pooled dataset-level IoU from explicit predictions.
EvalReport evaluate_predictions(const std::vector<std::vector<int32_t>>& gt,
                                const std::vector<std::vector<int32_t>>& pred,
                                int num_classes);

EvalReport evaluate(const Model& model, const Dataset& ds, const TrainConfig& cfg);
EvalReport evaluate_prepared(const Model& model, const PreparedDataset& prep);

struct BootstrapResult {
    Model model;
    EvalReport report;
    double kept_fraction = 0.0;
    History history;
};

// Keeps predictions consistent with the scene labels, then retrains a fresh
// model on them with the dense loss only.
BootstrapResult bootstrap(const Model& model, const Dataset& ds, const TrainConfig& cfg);
BootstrapResult bootstrap_prepared(const Model& model, const PreparedDataset& prep,
                                   const TrainConfig& cfg);

struct AblationRow {
    std::string variant;
    int k_primitives = 0;
    std::vector<double> seed_mious;
    double median_miou = 0.0;
};

// Loss-toggle grid plus a K sweep, each over n_seeds seeds
// (cfg.seed, cfg.seed+1, ...). Runs fan out over cfg.threads.
std::vector<AblationRow> ablate(const Dataset& ds, const TrainConfig& base_cfg,
                                const std::vector<int>& k_sweep, int n_seeds);

std::vector<std::vector<int>> cooccurrence_matrix(const Dataset& ds);
std::vector<std::pair<int, int>> detect_perfect_cooccurrence(
    const std::vector<std::vector<int>>& counts);

void write_history_csv(const std::string& path, const History& h);
std::string history_to_csv(const History& h);
std::string eval_report_to_json(const EvalReport& r, const std::vector<std::string>& class_names);
std::string ablation_to_csv(const std::vector<AblationRow>& rows);

double median(std::vector<double> values);

}  // namespace labeldense
