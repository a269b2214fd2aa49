#pragma once

#include <string>
#include <vector>

#include "labeldense/types.hpp"

namespace labeldense {

// Geometric proxy classes: floor, wall, table, chair, sofa, shelf.
int proxy_class_count();
const std::vector<std::string>& default_class_names();

PointCloud generate_scene(const SceneSpec& spec, uint64_t seed);

SceneLabels derive_scene_labels(const PointCloud& pc, int num_classes);

struct CooccurPolicy {
    enum class Kind { Free, Forced };
    Kind kind = Kind::Free;
    std::vector<int> forced_classes;

    static CooccurPolicy free() { return {}; }
    static CooccurPolicy forced(std::vector<int> classes) {
        return {Kind::Forced, std::move(classes)};
    }
};

Dataset generate_dataset(int n_scenes, const CooccurPolicy& policy, const SceneSpec& base_spec,
                         uint64_t seed);

// Copies ds, deletes every class_a point from one randomly chosen scene and
// every class_b point from a different one, then re-derives scene labels.
Dataset break_cooccurrence(const Dataset& ds, int class_a, int class_b, uint64_t seed);

// "WPC1" binary scene format.
void write_scene(const std::string& path, const PointCloud& pc);
PointCloud read_scene(const std::string& path);

// Writes scene files plus manifest.json into dir; returns the manifest path.
std::string write_dataset(const std::string& dir, const Dataset& ds);
Dataset load_dataset(const std::string& manifest_path);

}  // namespace labeldense
