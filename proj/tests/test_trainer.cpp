#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "labeldense/rng.hpp"
#include "labeldense/scenegen.hpp"
#include "labeldense/trainer.hpp"
#include "oracles.hpp"

using namespace labeldense;

namespace {

Dataset tiny_dataset(uint64_t seed, int scenes = 4) {
    SceneSpec base;
    base.classes_to_place = {0};
    base.points_per_object = 60;
    base.noise_sigma = 0.01;
    base.room_extent = {4.0, 4.0, 2.6};
    return generate_dataset(scenes, CooccurPolicy::free(), base, seed);
}

TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.k_primitives = 12;
    cfg.kmeans_period = 2;
    cfg.warmup_epochs = 2;
    cfg.match_delay_epochs = 1;
    cfg.seed = 5;
    cfg.k_nn = 8;
    return cfg;
}

}  // namespace

TEST_CASE("evaluate_predictions pins the worked confusion example") {
    const std::vector<std::vector<int32_t>> gt{{0, 0, 1, 1}};
    const std::vector<std::vector<int32_t>> pred{{0, 1, 1, 1}};
    const EvalReport rep = evaluate_predictions(gt, pred, 2);
    CHECK(rep.per_class_iou[0] == doctest::Approx(0.5));
    CHECK(rep.per_class_iou[1] == doctest::Approx(2.0 / 3.0));
    CHECK(rep.miou == doctest::Approx(7.0 / 12.0));
    CHECK(rep.confusion[0][0] == 1);
    CHECK(rep.confusion[0][1] == 1);
    CHECK(rep.confusion[1][1] == 2);

    SUBCASE("perfect predictions give mIoU 1") {
        const EvalReport perfect = evaluate_predictions(gt, gt, 2);
        CHECK(perfect.miou == doctest::Approx(1.0));
    }
    SUBCASE("absent class is excluded from the mean") {
        const EvalReport rep3 = evaluate_predictions(gt, pred, 3);
        CHECK(std::isnan(rep3.per_class_iou[2]));
        CHECK(rep3.miou == doctest::Approx(7.0 / 12.0));
    }
}

TEST_CASE("evaluate_predictions matches the set oracle on random pairs") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const int c = 2 + static_cast<int>(rng.uniform_int(5));
        const int n = 5 + static_cast<int>(rng.uniform_int(60));
        std::vector<int32_t> gt(n), pred(n);
        for (int i = 0; i < n; ++i) {
            gt[i] = static_cast<int32_t>(rng.uniform_int(c));
            pred[i] = static_cast<int32_t>(rng.uniform_int(c));
        }
        const EvalReport rep = evaluate_predictions({gt}, {pred}, c);
        const auto expect = oracle::set_iou(std::vector<int>(gt.begin(), gt.end()),
                                            std::vector<int>(pred.begin(), pred.end()), c);
        double sum = 0.0;
        int present = 0;
        for (int j = 0; j < c; ++j) {
            if (std::isnan(expect[j])) {
                CHECK(std::isnan(rep.per_class_iou[j]));
                continue;
            }
            CHECK(rep.per_class_iou[j] == doctest::Approx(expect[j]).epsilon(1e-12));
            sum += expect[j];
            ++present;
        }
        CHECK(rep.miou == doctest::Approx(sum / present).epsilon(1e-12));
        // confusion row sums equal gt class counts
        for (int j = 0; j < c; ++j) {
            int64_t row = 0;
            for (int k = 0; k < c; ++k) row += rep.confusion[j][k];
            CHECK(row == std::count(gt.begin(), gt.end(), j));
        }
    }
}

TEST_CASE("train toggles zero the disabled losses") {
    const Dataset ds = tiny_dataset(2);
    TrainConfig cfg = tiny_config();
    cfg.losses = {true, false, false};
    cfg.epochs = 1;
    auto [model, history] = train(ds, cfg);
    REQUIRE(history.epochs.size() == 1);
    CHECK(history.epochs[0].l_cam > 0.0);
    CHECK(history.epochs[0].l_us == 0.0);
    CHECK(history.epochs[0].l_match == 0.0);
    CHECK_FALSE(model.prims.has_value());
}

TEST_CASE("match delay equal to epochs keeps l_match at zero") {
    const Dataset ds = tiny_dataset(3);
    TrainConfig cfg = tiny_config();
    cfg.match_delay_epochs = cfg.epochs;
    auto [model, history] = train(ds, cfg);
    for (const auto& e : history.epochs) {
        CHECK(e.l_match == 0.0);
        CHECK(e.matched_scene_fraction == 0.0);
    }
}

TEST_CASE("training is bit-deterministic given config and data") {
    const Dataset ds = tiny_dataset(4);
    const TrainConfig cfg = tiny_config();
    auto [m1, h1] = train(ds, cfg);
    auto [m2, h2] = train(ds, cfg);
    CHECK(m1.enc.w1.d == m2.enc.w1.d);
    CHECK(m1.enc.w2.d == m2.enc.w2.d);
    CHECK(m1.clf.w.d == m2.clf.w.d);
    REQUIRE(h1.epochs.size() == h2.epochs.size());
    for (std::size_t e = 0; e < h1.epochs.size(); ++e) {
        CHECK(h1.epochs[e].l_cam == h2.epochs[e].l_cam);
        CHECK(h1.epochs[e].l_us == h2.epochs[e].l_us);
        CHECK(h1.epochs[e].l_match == h2.epochs[e].l_match);
    }
    CHECK(history_to_csv(h1) == history_to_csv(h2));
}

TEST_CASE("prepared dataset reuse matches from-scratch training") {
    const Dataset ds = tiny_dataset(6);
    const TrainConfig cfg = tiny_config();
    const PreparedDataset prep = prepare_dataset(ds, cfg);
    auto [m1, h1] = train_prepared(prep, cfg);
    auto [m2, h2] = train(ds, cfg);
    CHECK(m1.enc.w1.d == m2.enc.w1.d);
    CHECK(history_to_csv(h1) == history_to_csv(h2));
}

TEST_CASE("bootstrap keeps only scene-consistent labels") {
    const Dataset ds = tiny_dataset(7);
    TrainConfig cfg = tiny_config();
    auto [model, history] = train(ds, cfg);
    const BootstrapResult res = bootstrap(model, ds, cfg);
    CHECK(res.kept_fraction >= 0.0);
    CHECK(res.kept_fraction <= 1.0);
    CHECK(res.report.miou >= 0.0);
    CHECK(res.history.epochs.size() == static_cast<std::size_t>(cfg.epochs));

    // a rigged model that always predicts class 5: scenes without a shelf
    // must contribute nothing to the kept set
    Model rigged;
    rigged.enc.w1 = Mat(13, 4);
    rigged.enc.b1 = Mat(1, 4);
    rigged.enc.w2 = Mat(4, 4);
    rigged.enc.b2 = Mat(1, 4, 1.0);
    rigged.clf.w = Mat(4, 6, -1.0);
    for (int h = 0; h < 4; ++h) rigged.clf.w(h, 5) = 1.0;

    std::size_t shelf_points = 0, total = 0;
    for (const auto& s : ds.scenes) {
        total += s.cloud.size();
        if (s.labels.has(5)) shelf_points += s.cloud.size();
    }
    TrainConfig short_cfg = cfg;
    short_cfg.epochs = 1;
    const BootstrapResult rigres = bootstrap(rigged, ds, short_cfg);
    CHECK(rigres.kept_fraction ==
          doctest::Approx(static_cast<double>(shelf_points) / total));
}

TEST_CASE("cooccurrence matrix symmetry and disjoint classes") {
    const Dataset ds = tiny_dataset(8, 6);
    const auto counts = cooccurrence_matrix(ds);
    for (std::size_t a = 0; a < counts.size(); ++a)
        for (std::size_t b = 0; b < counts.size(); ++b)
            CHECK(counts[a][b] == counts[b][a]);

    Dataset two;
    two.class_names = {"a", "b"};
    for (int i = 0; i < 3; ++i) {
        Scene s;
        s.cloud.positions = {{0, 0, 0}};
        s.cloud.colors = {{0, 0, 0}};
        s.cloud.gt_labels = {i % 2};
        s.labels = derive_scene_labels(s.cloud, 2);
        two.scenes.push_back(s);
    }
    const auto c2 = cooccurrence_matrix(two);
    CHECK(c2[0][1] == 0);
    CHECK(c2[0][0] == 2);
    CHECK(c2[1][1] == 1);
    CHECK(detect_perfect_cooccurrence(c2).empty());

    const std::vector<std::vector<int>> empty;
    CHECK(detect_perfect_cooccurrence(empty).empty());
}

TEST_CASE("history csv has the documented shape") {
    History h;
    h.epochs.push_back({0.5, 0.25, 0.125, 0.0, 1.0});
    h.epochs.push_back({0.25, 0.0, 0.0, 0.0, 0.5});
    const std::string csv = history_to_csv(h);
    CHECK(csv.rfind("epoch,l_cam,l_us,l_match,matched_scene_fraction\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(csv.find("\n0,0.5,0.25,0.125,1\n") != std::string::npos);
}

TEST_CASE("median helper") {
    CHECK(median({3.0, 1.0, 2.0}) == doctest::Approx(2.0));
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == doctest::Approx(2.5));
    CHECK(std::isnan(median({})));
}

TEST_CASE("ablate emits the variant grid plus the K sweep") {
    const Dataset ds = tiny_dataset(9);
    TrainConfig cfg = tiny_config();
    cfg.epochs = 2;
    cfg.threads = 2;
    const auto rows = ablate(ds, cfg, {8, 16}, 2);
    REQUIRE(rows.size() == 7);  // 5 loss variants + 2 sweep rows
    int named = 0;
    for (const auto& row : rows) {
        CHECK(row.seed_mious.size() == 2);
        if (row.variant == "cam+us+match(hungarian)") ++named;
    }
    CHECK(named == 1);
    CHECK(rows[5].k_primitives == 8);
    CHECK(rows[6].k_primitives == 16);

    const std::string csv = ablation_to_csv(rows);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 8);
}
