#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace labeldense {

// Base error; CLI maps subtypes to exit codes (config=2, data=3, other=1).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct DataError : Error {
    using Error::Error;
};
// A scene has fewer present primitives than present classes; the match loss
// is skipped for that scene during training.
struct UnmatchableScene : Error {
    using Error::Error;
};

using Vec3 = std::array<double, 3>;

// One scene: positions (meters), colors in [0,1], per-point class labels.
struct PointCloud {
    std::vector<Vec3> positions;
    std::vector<Vec3> colors;
    std::vector<int32_t> gt_labels;

    std::size_t size() const { return positions.size(); }
    void validate(int num_classes) const;
};

// Multi-hot scene-level tags: present[c]=1 iff class c occurs in the scene.
struct SceneLabels {
    std::vector<uint8_t> present;

    int num_classes() const { return static_cast<int>(present.size()); }
    bool has(int c) const { return present[static_cast<std::size_t>(c)] != 0; }
    int count() const {
        int n = 0;
        for (uint8_t b : present) n += b ? 1 : 0;
        return n;
    }
};

struct Scene {
    PointCloud cloud;
    SceneLabels labels;
    std::string path;  // empty for in-memory scenes
};

struct Dataset {
    std::vector<Scene> scenes;
    std::vector<std::string> class_names;
    uint64_t seed = 0;

    int num_classes() const { return static_cast<int>(class_names.size()); }
    void validate() const;
};

// Parameters for one synthetic scene.
struct SceneSpec {
    std::vector<int> classes_to_place;
    int objects_per_class = 1;
    int points_per_object = 200;
    double noise_sigma = 0.04;
    Vec3 room_extent{6.0, 6.0, 3.0};

    void validate() const;
};

constexpr int32_t kIgnoreLabel = -1;

}  // namespace labeldense
