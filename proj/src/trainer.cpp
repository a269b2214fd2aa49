#include "labeldense/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "labeldense/losses.hpp"
#include "labeldense/parallel.hpp"
#include "labeldense/rng.hpp"

namespace labeldense {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const EncoderDims kEncoderDims{kHandFeatureDim, 32, 16};

int filter_group_count(const TrainConfig& cfg) {
    if (cfg.filter_group_k > 0) return cfg.filter_group_k;
    return static_cast<int>(0.4 * cfg.k_primitives);  // mirrors the 300→120 ratio
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<int32_t> argmax_rows(const Mat& scores) {
    std::vector<int32_t> pred(scores.rows, 0);
    for (std::size_t i = 0; i < scores.rows; ++i) {
        const double* si = scores.row(i);
        int best = 0;
        for (std::size_t j = 1; j < scores.cols; ++j)
            if (si[j] > si[best]) best = static_cast<int>(j);
        pred[i] = best;
    }
    return pred;
}

struct SceneStep {
    double l_cam = 0.0, l_us = 0.0, l_match = 0.0, l_dense = 0.0;
    bool matched = false;
};

}  // namespace

void TrainConfig::validate(int num_classes) const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    // K == C is allowed so the degenerate no-over-segmentation setting can
    // be measured; anything below C cannot match every class.
    if (k_primitives < num_classes) throw ConfigError("K must be at least the class count");
    if (kmeans_period < 1) throw ConfigError("kmeans_period must be >= 1");
    if (warmup_epochs < 0) throw ConfigError("warmup_epochs must be >= 0");
    if (match_delay_epochs < 0 || match_delay_epochs > epochs)
        throw ConfigError("match_delay_epochs must lie in [0, epochs]");
    if (lr <= 0.0) throw ConfigError("lr must be positive");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
    if (tau <= 0.0) throw ConfigError("tau must be positive");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (k_nn < 3) throw ConfigError("k_nn must be >= 3");
    if (voxel_size <= 0.0) throw ConfigError("voxel_size must be positive");
    if (angle_thresh_deg <= 0.0 || angle_thresh_deg >= 180.0)
        throw ConfigError("angle_thresh_deg must lie in (0, 180)");
    if (filter_group_k < 0 || (filter_group_k > 0 && filter_group_k >= k_primitives))
        throw ConfigError("filter_group_k must lie in (0, K)");
}

PreparedDataset prepare_dataset(const Dataset& ds, const TrainConfig& cfg) {
    ds.validate();
    cfg.validate(ds.num_classes());

    PreparedDataset prep;
    prep.ds = ds;
    const std::size_t n = ds.scenes.size();
    prep.scenes.resize(n);
    std::vector<Mat> normals(n);

    parallel_for(n, cfg.threads, [&](std::size_t i) {
        const PointCloud& pc = ds.scenes[i].cloud;
        const auto knn = build_knn(pc, cfg.k_nn);
        normals[i] = estimate_normals(pc, knn);
        prep.scenes[i].x = compute_hand_features(pc, normals[i], knn);
    });

    std::vector<Mat> feats(n);
    for (std::size_t i = 0; i < n; ++i) feats[i] = std::move(prep.scenes[i].x);
    apply_minmax_scaling(feats);
    for (std::size_t i = 0; i < n; ++i) prep.scenes[i].x = std::move(feats[i]);

    parallel_for(n, cfg.threads, [&](std::size_t i) {
        prep.scenes[i].sv = build_supervoxels(ds.scenes[i].cloud, prep.scenes[i].x,
                                              normals[i], cfg.voxel_size,
                                              cfg.angle_thresh_deg);
    });

    std::size_t total_sv = 0;
    for (const auto& s : prep.scenes) total_sv += s.sv.count();
    prep.sv_descriptors = Mat(total_sv, kHandFeatureDim);
    std::size_t row = 0;
    for (const auto& s : prep.scenes)
        for (int v = 0; v < s.sv.count(); ++v)
            std::copy_n(s.sv.sv_features.row(v), kHandFeatureDim,
                        prep.sv_descriptors.row(row++));
    return prep;
}

std::pair<Model, History> train_prepared(const PreparedDataset& prep, const TrainConfig& cfg) {
    const int num_classes = prep.ds.num_classes();
    cfg.validate(num_classes);

    Model model;
    model.enc = init_encoder(kEncoderDims, cfg.seed);
    model.clf = init_classifier(kEncoderDims.out, num_classes, cfg.seed);
    AdamState adam = init_adam(model.enc, model.clf, cfg.lr, cfg.weight_decay);

    const bool needs_prims = cfg.losses.us || cfg.losses.match;
    const std::size_t n_scenes = prep.ds.scenes.size();
    History history;
    history.epochs.reserve(cfg.epochs);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (needs_prims && epoch % cfg.kmeans_period == 0) {
            const bool warm = epoch < cfg.warmup_epochs;
            model.prims = compute_primitives(
                model.enc, prep.sv_descriptors, cfg.k_primitives, warm,
                mix_seed(cfg.seed, 0x4b000000ULL + static_cast<uint64_t>(epoch)));
            model.prims->epoch_computed = epoch;
        }

        EpochStats stats;
        int matched = 0;
        for (std::size_t si = 0; si < n_scenes; ++si) {
            const Mat& x = prep.scenes[si].x;
            const SceneLabels& y = prep.ds.scenes[si].labels;
            ForwardCache cache;
            const Mat f = encoder_forward(model.enc, x, &cache);
            const Mat scores = classify(model.clf, f);

            Mat dl_ds(f.rows, static_cast<std::size_t>(num_classes), 0.0);
            Mat dl_df(f.rows, f.cols, 0.0);
            bool any_ds = false, any_df = false;
            AffinityMatrix aff;

            if (cfg.losses.cam) {
                LossGrad lg = loss_cam(scores, y);
                stats.l_cam += lg.loss;
                scale_inplace(lg.grad, cfg.weight_cam);
                add_inplace(dl_ds, lg.grad);
                any_ds = true;
            }
            if (cfg.losses.us) {
                aff = assign_affinity(f, *model.prims);
                LossGrad lg = loss_us(normalize_rows(f), *model.prims, aff, cfg.tau);
                stats.l_us += lg.loss;
                Mat df = normalize_rows_backward(f, lg.grad);
                scale_inplace(df, cfg.weight_us);
                add_inplace(dl_df, df);
                any_df = true;
            }
            if (cfg.losses.match && epoch >= cfg.match_delay_epochs) {
                if (aff.empty()) aff = assign_affinity(f, *model.prims);
                try {
                    auto [fbar, present] =
                        primitive_scene_features(f, aff, cfg.k_primitives);
                    const CostMatrix cm =
                        build_cost_matrix(fbar, present, model.clf, y);
                    AssignmentMap pi = cfg.matcher == MatcherKind::Hungarian
                                           ? hungarian_match(cm)
                                           : naive_match(cm);
                    if (cfg.filter_on)
                        pi = filter_assignments(pi, *model.prims,
                                                filter_group_count(cfg),
                                                mix_seed(cfg.seed, 0xf117e2ULL));
                    const auto pseudo = densify_labels(pi, aff);
                    LossGrad lg = loss_match(scores, pseudo);
                    stats.l_match += lg.loss;
                    scale_inplace(lg.grad, cfg.weight_match);
                    add_inplace(dl_ds, lg.grad);
                    any_ds = true;
                    ++matched;
                } catch (const UnmatchableScene&) {
                    // degenerate over-clustering for this scene-step; skip
                }
            }

            const Grads grads = backward(model.enc, model.clf, x,
                                         any_ds ? dl_ds : Mat{},
                                         any_df ? dl_df : Mat{}, &cache);
            adam_step(adam, model.enc, model.clf, grads);
        }

        stats.l_cam /= static_cast<double>(n_scenes);
        stats.l_us /= static_cast<double>(n_scenes);
        stats.l_match /= static_cast<double>(n_scenes);
        stats.matched_scene_fraction =
            static_cast<double>(matched) / static_cast<double>(n_scenes);
        history.epochs.push_back(stats);
    }
    return {std::move(model), std::move(history)};
}

std::pair<Model, History> train(const Dataset& ds, const TrainConfig& cfg) {
    return train_prepared(prepare_dataset(ds, cfg), cfg);
}

EvalReport evaluate_predictions(const std::vector<std::vector<int32_t>>& gt,
                                const std::vector<std::vector<int32_t>>& pred,
                                int num_classes) {
    if (gt.size() != pred.size()) throw Error("gt/pred scene counts differ");
    EvalReport rep;
    rep.confusion.assign(num_classes, std::vector<int64_t>(num_classes, 0));
    for (std::size_t s = 0; s < gt.size(); ++s) {
        if (gt[s].size() != pred[s].size()) throw Error("gt/pred point counts differ");
        for (std::size_t i = 0; i < gt[s].size(); ++i)
            ++rep.confusion[gt[s][i]][pred[s][i]];
    }
    rep.per_class_iou.assign(num_classes, kNaN);
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < num_classes; ++c) {
        int64_t tp = rep.confusion[c][c];
        int64_t row = 0, col = 0;
        for (int j = 0; j < num_classes; ++j) {
            row += rep.confusion[c][j];
            col += rep.confusion[j][c];
        }
        if (row == 0) continue;  // absent from gt → excluded from the mean
        const int64_t denom = row + col - tp;
        rep.per_class_iou[c] = static_cast<double>(tp) / static_cast<double>(denom);
        sum += rep.per_class_iou[c];
        ++present;
    }
    rep.miou = present > 0 ? sum / present : kNaN;
    rep.matched_class_accuracy = kNaN;
    return rep;
}

EvalReport evaluate_prepared(const Model& model, const PreparedDataset& prep) {
    const int num_classes = prep.ds.num_classes();
    std::vector<std::vector<int32_t>> gt, pred;
    std::vector<Mat> features;
    for (std::size_t si = 0; si < prep.ds.scenes.size(); ++si) {
        const Mat f = encoder_forward(model.enc, prep.scenes[si].x);
        const Mat scores = classify(model.clf, f);
        gt.push_back(prep.ds.scenes[si].cloud.gt_labels);
        pred.push_back(argmax_rows(scores));
        features.push_back(f);
    }
    EvalReport rep = evaluate_predictions(gt, pred, num_classes);

    if (model.prims) {
        int64_t total = 0, correct = 0;
        for (std::size_t si = 0; si < prep.ds.scenes.size(); ++si) {
            const Mat& f = features[si];
            const AffinityMatrix aff = assign_affinity(f, *model.prims);
            try {
                auto [fbar, present] =
                    primitive_scene_features(f, aff, model.prims->count());
                const CostMatrix cm = build_cost_matrix(fbar, present, model.clf,
                                                        prep.ds.scenes[si].labels);
                const AssignmentMap pi = hungarian_match(cm);
                for (int p = 0; p < model.prims->count(); ++p) {
                    const int cls = pi.class_of_primitive[p];
                    if (cls < 0) continue;
                    std::vector<int> votes(num_classes, 0);
                    for (std::size_t m = 0; m < aff.size(); ++m)
                        if (aff[m] == p) ++votes[gt[si][m]];
                    int majority = 0;
                    for (int c = 1; c < num_classes; ++c)
                        if (votes[c] > votes[majority]) majority = c;
                    ++total;
                    if (majority == cls) ++correct;
                }
            } catch (const UnmatchableScene&) {
                continue;
            }
        }
        rep.matched_class_accuracy =
            total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : kNaN;
    }
    return rep;
}

EvalReport evaluate(const Model& model, const Dataset& ds, const TrainConfig& cfg) {
    return evaluate_prepared(model, prepare_dataset(ds, cfg));
}

BootstrapResult bootstrap_prepared(const Model& model, const PreparedDataset& prep,
                                   const TrainConfig& cfg) {
    const int num_classes = prep.ds.num_classes();
    const std::size_t n_scenes = prep.ds.scenes.size();

    // keep a prediction only when its class is in the scene label set
    std::vector<std::vector<int32_t>> kept(n_scenes);
    std::size_t kept_count = 0, total = 0;
    for (std::size_t si = 0; si < n_scenes; ++si) {
        const Mat f = encoder_forward(model.enc, prep.scenes[si].x);
        const auto pred = argmax_rows(classify(model.clf, f));
        kept[si].resize(pred.size());
        for (std::size_t m = 0; m < pred.size(); ++m) {
            kept[si][m] = prep.ds.scenes[si].labels.has(pred[m]) ? pred[m] : kIgnoreLabel;
            if (kept[si][m] != kIgnoreLabel) ++kept_count;
        }
        total += pred.size();
    }

    BootstrapResult res;
    res.kept_fraction = static_cast<double>(kept_count) / static_cast<double>(total);
    res.model.enc = init_encoder(kEncoderDims, mix_seed(cfg.seed, 0xb0075ULL));
    res.model.clf =
        init_classifier(kEncoderDims.out, num_classes, mix_seed(cfg.seed, 0xb0075ULL));
    AdamState adam = init_adam(res.model.enc, res.model.clf, cfg.lr, cfg.weight_decay);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        EpochStats stats;
        for (std::size_t si = 0; si < n_scenes; ++si) {
            const Mat& x = prep.scenes[si].x;
            ForwardCache cache;
            const Mat f = encoder_forward(res.model.enc, x, &cache);
            const Mat scores = classify(res.model.clf, f);
            LossGrad lg = loss_dense(scores, kept[si]);
            stats.l_dense += lg.loss;
            const Grads grads =
                backward(res.model.enc, res.model.clf, x, lg.grad, Mat{}, &cache);
            adam_step(adam, res.model.enc, res.model.clf, grads);
        }
        stats.l_dense /= static_cast<double>(n_scenes);
        res.history.epochs.push_back(stats);
    }
    res.report = evaluate_prepared(res.model, prep);
    return res;
}

BootstrapResult bootstrap(const Model& model, const Dataset& ds, const TrainConfig& cfg) {
    return bootstrap_prepared(model, prepare_dataset(ds, cfg), cfg);
}

std::vector<AblationRow> ablate(const Dataset& ds, const TrainConfig& base_cfg,
                                const std::vector<int>& k_sweep, int n_seeds) {
    if (n_seeds < 1) throw ConfigError("ablate needs at least one seed");
    const PreparedDataset prep = prepare_dataset(ds, base_cfg);

    struct Variant {
        std::string name;
        LossToggles losses;
        MatcherKind matcher;
        int k;
    };
    std::vector<Variant> variants{
        {"cam", {true, false, false}, MatcherKind::Hungarian, base_cfg.k_primitives},
        {"cam+us", {true, true, false}, MatcherKind::Hungarian, base_cfg.k_primitives},
        {"cam+match", {true, false, true}, MatcherKind::Hungarian, base_cfg.k_primitives},
        {"cam+us+match(naive)", {true, true, true}, MatcherKind::Naive,
         base_cfg.k_primitives},
        {"cam+us+match(hungarian)", {true, true, true}, MatcherKind::Hungarian,
         base_cfg.k_primitives},
    };
    for (int k : k_sweep)
        variants.push_back({"k-sweep", {true, true, true}, MatcherKind::Hungarian, k});

    struct Job {
        std::size_t variant;
        uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t v = 0; v < variants.size(); ++v)
        for (int s = 0; s < n_seeds; ++s)
            jobs.push_back({v, base_cfg.seed + static_cast<uint64_t>(s)});

    std::vector<double> mious(jobs.size(), 0.0);
    parallel_for(jobs.size(), base_cfg.threads, [&](std::size_t j) {
        TrainConfig cfg = base_cfg;
        cfg.losses = variants[jobs[j].variant].losses;
        cfg.matcher = variants[jobs[j].variant].matcher;
        cfg.k_primitives = variants[jobs[j].variant].k;
        cfg.seed = jobs[j].seed;
        cfg.threads = 1;
        auto [model, history] = train_prepared(prep, cfg);
        mious[j] = evaluate_prepared(model, prep).miou;
    });

    std::vector<AblationRow> rows;
    for (std::size_t v = 0; v < variants.size(); ++v) {
        AblationRow row;
        row.variant = variants[v].name;
        row.k_primitives = variants[v].k;
        for (std::size_t j = 0; j < jobs.size(); ++j)
            if (jobs[j].variant == v) row.seed_mious.push_back(mious[j]);
        row.median_miou = median(row.seed_mious);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<std::vector<int>> cooccurrence_matrix(const Dataset& ds) {
    const int c = ds.num_classes();
    std::vector<std::vector<int>> counts(c, std::vector<int>(c, 0));
    for (const auto& s : ds.scenes)
        for (int a = 0; a < c; ++a) {
            if (!s.labels.has(a)) continue;
            for (int b = 0; b < c; ++b)
                if (s.labels.has(b)) ++counts[a][b];
        }
    return counts;
}

std::vector<std::pair<int, int>> detect_perfect_cooccurrence(
    const std::vector<std::vector<int>>& counts) {
    std::vector<std::pair<int, int>> pairs;
    const int c = static_cast<int>(counts.size());
    for (int a = 0; a < c; ++a)
        for (int b = a + 1; b < c; ++b)
            if (counts[a][b] > 0 && counts[a][b] == counts[a][a] &&
                counts[a][b] == counts[b][b])
                pairs.emplace_back(a, b);
    return pairs;
}

std::string history_to_csv(const History& h) {
    std::string out = "epoch,l_cam,l_us,l_match,matched_scene_fraction\n";
    for (std::size_t e = 0; e < h.epochs.size(); ++e) {
        const EpochStats& s = h.epochs[e];
        out += std::to_string(e) + "," + fmt_double(s.l_cam) + "," + fmt_double(s.l_us) +
               "," + fmt_double(s.l_match) + "," + fmt_double(s.matched_scene_fraction) +
               "\n";
    }
    return out;
}

void write_history_csv(const std::string& path, const History& h) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open " + path + " for writing");
    os << history_to_csv(h);
    if (!os) throw DataError("write failed for " + path);
}

std::string eval_report_to_json(const EvalReport& r,
                                const std::vector<std::string>& class_names) {
    nlohmann::json j;
    j["miou"] = r.miou;
    j["class_names"] = class_names;
    nlohmann::json ious = nlohmann::json::array();
    for (double v : r.per_class_iou)
        ious.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
    j["per_class_iou"] = ious;
    j["matched_class_accuracy"] = std::isnan(r.matched_class_accuracy)
                                      ? nlohmann::json(nullptr)
                                      : nlohmann::json(r.matched_class_accuracy);
    j["confusion"] = r.confusion;
    return j.dump(2);
}

std::string ablation_to_csv(const std::vector<AblationRow>& rows) {
    if (rows.empty()) return "variant,k,median_miou\n";
    std::string out = "variant,k";
    for (std::size_t s = 0; s < rows.front().seed_mious.size(); ++s)
        out += ",miou_seed" + std::to_string(s);
    out += ",median_miou\n";
    for (const auto& row : rows) {
        out += row.variant + "," + std::to_string(row.k_primitives);
        for (double v : row.seed_mious) out += "," + fmt_double(v);
        out += "," + fmt_double(row.median_miou) + "\n";
    }
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) return kNaN;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace labeldense
