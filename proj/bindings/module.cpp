// Python bindings for the core operations.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "labeldense/clustering.hpp"
#include "labeldense/config.hpp"
#include "labeldense/losses.hpp"
#include "labeldense/matching.hpp"
#include "labeldense/scenegen.hpp"
#include "labeldense/trainer.hpp"

namespace py = pybind11;
namespace ld = labeldense;

namespace {

ld::Mat to_mat(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw py::value_error("expected a 2-D array");
    ld::Mat m(static_cast<std::size_t>(arr.shape(0)), static_cast<std::size_t>(arr.shape(1)));
    std::copy_n(arr.data(), m.d.size(), m.d.data());
    return m;
}

py::array_t<double> from_mat(const ld::Mat& m) {
    py::array_t<double> arr({m.rows, m.cols});
    std::copy_n(m.d.data(), m.d.size(), arr.mutable_data());
    return arr;
}

ld::SceneLabels to_labels(const std::vector<int>& bits) {
    ld::SceneLabels y;
    for (int b : bits) y.present.push_back(b ? 1 : 0);
    return y;
}

ld::CostMatrix full_cost_matrix(const ld::Mat& scores) {
    ld::CostMatrix cm;
    cm.scores = scores;
    cm.num_primitives = static_cast<int>(scores.rows);
    for (int i = 0; i < static_cast<int>(scores.rows); ++i) cm.row_ids.push_back(i);
    for (int j = 0; j < static_cast<int>(scores.cols); ++j) cm.col_ids.push_back(j);
    return cm;
}

py::dict assignment_to_dict(const ld::AssignmentMap& am) {
    py::dict d;
    d["class_of_primitive"] = am.class_of_primitive;
    d["total_score"] = am.total_score;
    d["matched_count"] = am.matched_count();
    return d;
}

py::dict cloud_to_dict(const ld::PointCloud& pc) {
    const std::size_t m = pc.size();
    py::array_t<double> pos({m, std::size_t(3)});
    py::array_t<double> col({m, std::size_t(3)});
    py::array_t<int32_t> lab(static_cast<py::ssize_t>(m));
    double* pos_out = pos.mutable_data();
    double* col_out = col.mutable_data();
    for (std::size_t i = 0; i < m; ++i) {
        for (int a = 0; a < 3; ++a) {
            pos_out[i * 3 + a] = pc.positions[i][a];
            col_out[i * 3 + a] = pc.colors[i][a];
        }
    }
    std::copy_n(pc.gt_labels.data(), m, lab.mutable_data());
    py::dict d;
    d["positions"] = pos;
    d["colors"] = col;
    d["labels"] = lab;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "weak scene-label point segmentation core";

    m.def(
        "generate_scene",
        [](const std::vector<int>& classes, int objects_per_class, int points_per_object,
           double noise_sigma, const std::vector<double>& room_extent, uint64_t seed) {
            ld::SceneSpec spec;
            spec.classes_to_place = classes;
            spec.objects_per_class = objects_per_class;
            spec.points_per_object = points_per_object;
            spec.noise_sigma = noise_sigma;
            if (room_extent.size() != 3) throw py::value_error("room_extent needs 3 values");
            spec.room_extent = {room_extent[0], room_extent[1], room_extent[2]};
            return cloud_to_dict(ld::generate_scene(spec, seed));
        },
        py::arg("classes"), py::arg("objects_per_class") = 1,
        py::arg("points_per_object") = 200, py::arg("noise_sigma") = 0.01,
        py::arg("room_extent") = std::vector<double>{6.0, 6.0, 3.0}, py::arg("seed") = 1);

    m.def("read_scene", [](const std::string& path) {
        return cloud_to_dict(ld::read_scene(path));
    });

    m.def("derive_scene_labels", [](const std::vector<int32_t>& labels, int num_classes) {
        ld::PointCloud pc;
        pc.gt_labels = labels;
        const ld::SceneLabels y = ld::derive_scene_labels(pc, num_classes);
        return std::vector<int>(y.present.begin(), y.present.end());
    });

    m.def(
        "gen_dataset",
        [](const std::string& out_dir, int scenes, const std::string& cooccur,
           uint64_t seed, int points_per_object) {
            ld::SceneSpec spec;
            spec.classes_to_place = {0};
            spec.points_per_object = points_per_object;
            ld::CooccurPolicy policy;
            if (cooccur == "free") {
                policy = ld::CooccurPolicy::free();
            } else if (cooccur.rfind("forced=", 0) == 0) {
                std::vector<int> cls;
                for (std::size_t pos = 7; pos < cooccur.size();) {
                    std::size_t comma = cooccur.find(',', pos);
                    if (comma == std::string::npos) comma = cooccur.size();
                    cls.push_back(std::stoi(cooccur.substr(pos, comma - pos)));
                    pos = comma + 1;
                }
                policy = ld::CooccurPolicy::forced(cls);
            } else {
                throw py::value_error("cooccur must be 'free' or 'forced=a,b'");
            }
            const ld::Dataset ds = ld::generate_dataset(scenes, policy, spec, seed);
            return ld::write_dataset(out_dir, ds);
        },
        py::arg("out_dir"), py::arg("scenes") = 8, py::arg("cooccur") = "free",
        py::arg("seed") = 1, py::arg("points_per_object") = 200);

    m.def(
        "kmeans",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pts,
           int k, uint64_t seed, int max_iter) {
            const ld::KmeansResult r = ld::kmeans(to_mat(pts), k, seed, max_iter);
            return py::make_tuple(from_mat(r.centroids), r.labels, r.inertia_trace);
        },
        py::arg("points"), py::arg("k"), py::arg("seed") = 0, py::arg("max_iter") = 100);

    m.def("hungarian_match",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& scores) {
              return assignment_to_dict(ld::hungarian_match(full_cost_matrix(to_mat(scores))));
          });
    m.def("naive_match",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& scores) {
              return assignment_to_dict(ld::naive_match(full_cost_matrix(to_mat(scores))));
          });

    m.def("loss_cam",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& scores,
             const std::vector<int>& y) {
              const ld::LossGrad lg = ld::loss_cam(to_mat(scores), to_labels(y));
              return py::make_tuple(lg.loss, from_mat(lg.grad));
          });
    m.def("loss_dense",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& scores,
             const std::vector<int32_t>& labels) {
              const ld::LossGrad lg = ld::loss_dense(to_mat(scores), labels);
              return py::make_tuple(lg.loss, from_mat(lg.grad));
          });
    m.def(
        "loss_us",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& f,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& centroids,
           const std::vector<int>& assign, double tau) {
            ld::PrimitiveSet prims{to_mat(centroids), 0};
            const ld::LossGrad lg = ld::loss_us(to_mat(f), prims, assign, tau);
            return py::make_tuple(lg.loss, from_mat(lg.grad));
        },
        py::arg("f"), py::arg("centroids"), py::arg("assign"), py::arg("tau") = 0.1);

    m.def("evaluate_predictions",
          [](const std::vector<std::vector<int32_t>>& gt,
             const std::vector<std::vector<int32_t>>& pred, int num_classes) {
              const ld::EvalReport r = ld::evaluate_predictions(gt, pred, num_classes);
              py::dict d;
              d["miou"] = r.miou;
              d["per_class_iou"] = r.per_class_iou;
              d["confusion"] = r.confusion;
              return d;
          });

    m.def(
        "train",
        [](const std::string& manifest, const std::string& config_json, int threads) {
            ld::RunConfig cfg = config_json.empty()
                                    ? ld::RunConfig{}
                                    : ld::parse_run_config_text(config_json);
            if (threads > 0) cfg.train.threads = threads;
            const ld::Dataset ds = ld::load_dataset(manifest);
            const ld::PreparedDataset prep = ld::prepare_dataset(ds, cfg.train);
            auto [model, history] = ld::train_prepared(prep, cfg.train);
            const ld::EvalReport rep = ld::evaluate_prepared(model, prep);
            py::dict d;
            d["history_csv"] = ld::history_to_csv(history);
            d["report_json"] = ld::eval_report_to_json(rep, ds.class_names);
            d["miou"] = rep.miou;
            return d;
        },
        py::arg("manifest"), py::arg("config_json") = "", py::arg("threads") = 1);

    py::register_exception<ld::ConfigError>(m, "LdConfigError");
    py::register_exception<ld::DataError>(m, "LdDataError");
}
