#include "labeldense/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "binio.hpp"
#include "json.hpp"
#include "labeldense/rng.hpp"

namespace labeldense {

namespace fs = std::filesystem;

void PointCloud::validate(int num_classes) const {
    const std::size_t m = positions.size();
    if (m == 0) throw DataError("point cloud is empty");
    if (colors.size() != m || gt_labels.size() != m)
        throw DataError("point cloud field lengths disagree");
    for (const auto& p : positions)
        for (double v : p)
            if (!std::isfinite(v)) throw DataError("non-finite position");
    for (const auto& c : colors)
        for (double v : c)
            if (v < 0.0 || v > 1.0) throw DataError("color outside [0,1]");
    for (int32_t lab : gt_labels)
        if (lab < 0 || lab >= num_classes) throw DataError("gt label out of range");
}

void Dataset::validate() const {
    if (scenes.empty()) throw DataError("dataset has no scenes");
    const int c = num_classes();
    for (const auto& s : scenes) {
        s.cloud.validate(c);
        if (s.labels.num_classes() != c) throw DataError("scene label width mismatch");
        if (s.labels.count() == 0) throw DataError("scene has no present class");
    }
}

void SceneSpec::validate() const {
    if (classes_to_place.empty()) throw ConfigError("classes_to_place must be non-empty");
    for (int c : classes_to_place)
        if (c < 0 || c >= proxy_class_count())
            throw ConfigError("unknown proxy class " + std::to_string(c));
    if (objects_per_class < 1) throw ConfigError("objects_per_class must be >= 1");
    if (points_per_object < 1) throw ConfigError("points_per_object must be >= 1");
    if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
    for (double e : room_extent)
        if (e <= 0.0) throw ConfigError("room_extent must be positive");
}

namespace {

constexpr int kProxyClasses = 6;

struct BoxDims {
    double w, d, h;
};

// Hues stay within a family for the pairs floor/table, wall/shelf and
// chair/sofa: close enough that the classifier confuses them early (keeping
// primitive-label contention in play), separated enough that geometry plus
// color resolves them eventually.
const Vec3 kBaseColor[kProxyClasses] = {
    {0.50, 0.36, 0.22},  // floor
    {0.82, 0.82, 0.78},  // wall
    {0.58, 0.40, 0.18},  // table
    {0.70, 0.16, 0.14},  // chair
    {0.60, 0.24, 0.20},  // sofa
    {0.72, 0.74, 0.66},  // shelf
};

constexpr double kColorJitterSigma = 0.05;   // per object
constexpr double kColorPointSigma = 0.05;    // per point, sensor-style noise

// Scene-inclusion probability per class under the free policy.
constexpr double kClassSceneProb[kProxyClasses] = {0.75, 0.75, 0.65, 0.65, 0.25, 0.65};
constexpr double kWallLength = 3.0;
constexpr double kWallHeight = 2.4;
constexpr double kTableHeight = 0.7;
constexpr BoxDims kTableTop{1.2, 0.8, 0.0};
constexpr BoxDims kChairBox{0.45, 0.45, 0.9};
constexpr BoxDims kSofaBox{2.2, 0.9, 0.45};
constexpr BoxDims kShelfBox{0.8, 0.3, 2.0};

// The volatile keeps the narrowing conversion alive; gcc's vectorizer is
// otherwise willing to cancel the demote/promote pair at -O3.
double snap_f32(double v) {
    volatile float f = static_cast<float>(v);
    return static_cast<double>(f);
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

// Center coordinate that keeps [c-half, c+half] inside [0, extent].
double place_center(Rng& rng, double extent, double half) {
    if (extent <= 2.0 * half) return extent / 2.0;
    return rng.uniform(half, extent - half);
}

// Uniform point on the surface of an axis-aligned box centered at (cx,cy)
// resting on z=0.
Vec3 sample_box_surface(Rng& rng, const BoxDims& b, double cx, double cy) {
    const double a_top = b.w * b.d;
    const double a_xz = b.w * b.h;
    const double a_yz = b.d * b.h;
    // top counted once (bottom sits on the floor), four side faces
    const double total = a_top + 2.0 * a_xz + 2.0 * a_yz;
    double r = rng.uniform01() * total;
    double u = rng.uniform01();
    double v = rng.uniform01();
    if (r < a_top)
        return {cx + (u - 0.5) * b.w, cy + (v - 0.5) * b.d, b.h};
    r -= a_top;
    if (r < 2.0 * a_xz) {
        const double y = (r < a_xz) ? cy - b.d / 2.0 : cy + b.d / 2.0;
        return {cx + (u - 0.5) * b.w, y, v * b.h};
    }
    r -= 2.0 * a_xz;
    const double x = (r < a_yz) ? cx - b.w / 2.0 : cx + b.w / 2.0;
    return {x, cy + (u - 0.5) * b.d, v * b.h};
}

Vec3 sample_proxy_point(Rng& rng, int cls, const Vec3& room, double cx, double cy,
                        double wall_x, double wall_y0) {
    switch (cls) {
        case 0:  // floor plane at z=0
            return {rng.uniform01() * room[0], rng.uniform01() * room[1], 0.0};
        case 1:  // vertical plane x=wall_x
            return {wall_x, wall_y0 + rng.uniform01() * kWallLength,
                    rng.uniform01() * std::min(kWallHeight, room[2])};
        case 2:  // horizontal slab at table height
            return {cx + (rng.uniform01() - 0.5) * kTableTop.w,
                    cy + (rng.uniform01() - 0.5) * kTableTop.d, kTableHeight};
        case 3:
            return sample_box_surface(rng, kChairBox, cx, cy);
        case 4:
            return sample_box_surface(rng, kSofaBox, cx, cy);
        default:
            return sample_box_surface(rng, kShelfBox, cx, cy);
    }
}

std::vector<std::vector<int>> count_cooccurrence(const Dataset& ds) {
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

bool has_perfect_cooccurrence(const std::vector<std::vector<int>>& counts) {
    const int c = static_cast<int>(counts.size());
    for (int a = 0; a < c; ++a)
        for (int b = a + 1; b < c; ++b)
            if (counts[a][b] > 0 && counts[a][b] == counts[a][a] &&
                counts[a][b] == counts[b][b])
                return true;
    return false;
}

}  // namespace

int proxy_class_count() { return kProxyClasses; }

const std::vector<std::string>& default_class_names() {
    static const std::vector<std::string> names{"floor", "wall",  "table",
                                                "chair", "sofa", "shelf"};
    return names;
}

PointCloud generate_scene(const SceneSpec& spec, uint64_t seed) {
    spec.validate();
    Rng rng(mix_seed(seed, 0x7363656e65ULL));

    PointCloud pc;
    const std::size_t total = spec.classes_to_place.size() *
                              static_cast<std::size_t>(spec.objects_per_class) *
                              static_cast<std::size_t>(spec.points_per_object);
    pc.positions.reserve(total);
    pc.colors.reserve(total);
    pc.gt_labels.reserve(total);

    for (int cls : spec.classes_to_place) {
        for (int obj = 0; obj < spec.objects_per_class; ++obj) {
            // object placement
            double half_w = 0.0, half_d = 0.0;
            if (cls == 2) half_w = kTableTop.w / 2, half_d = kTableTop.d / 2;
            if (cls == 3) half_w = kChairBox.w / 2, half_d = kChairBox.d / 2;
            if (cls == 4) half_w = kSofaBox.w / 2, half_d = kSofaBox.d / 2;
            if (cls == 5) half_w = kShelfBox.w / 2, half_d = kShelfBox.d / 2;
            const double cx = place_center(rng, spec.room_extent[0], half_w);
            const double cy = place_center(rng, spec.room_extent[1], half_d);
            const double wall_x = rng.uniform01() * spec.room_extent[0];
            const double wall_y0 =
                place_center(rng, spec.room_extent[1], kWallLength / 2.0) -
                kWallLength / 2.0;

            Vec3 base_color = kBaseColor[cls];
            for (double& ch : base_color)
                ch = clamp01(ch + rng.normal(0.0, kColorJitterSigma));

            for (int i = 0; i < spec.points_per_object; ++i) {
                Vec3 p = sample_proxy_point(rng, cls, spec.room_extent, cx, cy, wall_x,
                                            wall_y0);
                if (spec.noise_sigma > 0.0)
                    for (double& v : p) v += rng.normal(0.0, spec.noise_sigma);
                for (double& v : p) v = snap_f32(v);
                Vec3 color = base_color;
                for (double& ch : color)
                    ch = snap_f32(clamp01(ch + rng.normal(0.0, kColorPointSigma)));
                pc.positions.push_back(p);
                pc.colors.push_back(color);
                pc.gt_labels.push_back(cls);
            }
        }
    }
    return pc;
}

SceneLabels derive_scene_labels(const PointCloud& pc, int num_classes) {
    SceneLabels y;
    y.present.assign(num_classes, 0);
    for (int32_t lab : pc.gt_labels) {
        if (lab < 0 || lab >= num_classes)
            throw DataError("gt label " + std::to_string(lab) + " out of range");
        y.present[lab] = 1;
    }
    return y;
}

Dataset generate_dataset(int n_scenes, const CooccurPolicy& policy, const SceneSpec& base_spec,
                         uint64_t seed) {
    if (n_scenes < 2) throw ConfigError("generate_dataset needs at least 2 scenes");
    const int c = kProxyClasses;
    if (policy.kind == CooccurPolicy::Kind::Forced) {
        if (policy.forced_classes.empty())
            throw ConfigError("forced policy needs at least one class");
        std::set<int> uniq(policy.forced_classes.begin(), policy.forced_classes.end());
        if (uniq.size() != policy.forced_classes.size())
            throw ConfigError("forced classes must be distinct");
        for (int f : policy.forced_classes)
            if (f < 0 || f >= c) throw ConfigError("forced class out of range");
    }

    constexpr int kMaxAttempts = 100;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Rng rng(mix_seed(mix_seed(seed, 0xda7aULL), static_cast<uint64_t>(attempt)));
        Dataset ds;
        ds.class_names = default_class_names();
        ds.seed = seed;
        for (int i = 0; i < n_scenes; ++i) {
            std::vector<int> chosen;
            if (policy.kind == CooccurPolicy::Kind::Forced) {
                chosen = policy.forced_classes;
                for (int cls = 0; cls < c; ++cls) {
                    if (std::find(chosen.begin(), chosen.end(), cls) != chosen.end())
                        continue;
                    if (rng.uniform01() < 0.5) chosen.push_back(cls);
                }
            } else {
                // weighted inclusion; sofa is deliberately rare, mirroring the
                // long-tail class frequencies of real scene datasets, and a
                // sofa room always has a chair to contest
                while (static_cast<int>(chosen.size()) < 2) {
                    chosen.clear();
                    for (int cls = 0; cls < c; ++cls)
                        if (rng.uniform01() < kClassSceneProb[cls]) chosen.push_back(cls);
                    if (std::find(chosen.begin(), chosen.end(), 4) != chosen.end() &&
                        std::find(chosen.begin(), chosen.end(), 3) == chosen.end())
                        chosen.push_back(3);
                }
            }
            std::sort(chosen.begin(), chosen.end());

            SceneSpec spec = base_spec;
            spec.classes_to_place = chosen;
            const uint64_t scene_seed =
                mix_seed(seed, static_cast<uint64_t>(attempt) * 1000003ULL +
                                   static_cast<uint64_t>(i));
            Scene scene;
            scene.cloud = generate_scene(spec, scene_seed);
            scene.labels = derive_scene_labels(scene.cloud, c);
            ds.scenes.push_back(std::move(scene));
        }

        if (policy.kind == CooccurPolicy::Kind::Forced) return ds;

        const auto counts = count_cooccurrence(ds);
        bool all_present = true;
        for (int a = 0; a < c; ++a)
            if (counts[a][a] < 2) all_present = false;
        if (all_present && !has_perfect_cooccurrence(counts)) return ds;
    }
    throw DataError("free co-occurrence policy unsatisfied after bounded resampling");
}

Dataset break_cooccurrence(const Dataset& ds, int class_a, int class_b, uint64_t seed) {
    const int c = ds.num_classes();
    if (class_a < 0 || class_a >= c || class_b < 0 || class_b >= c || class_a == class_b)
        throw ConfigError("invalid class pair");
    const auto counts = count_cooccurrence(ds);
    if (!(counts[class_a][class_b] > 0 &&
          counts[class_a][class_b] == counts[class_a][class_a] &&
          counts[class_a][class_b] == counts[class_b][class_b]))
        throw DataError("classes do not perfectly co-occur");

    std::vector<std::size_t> both;
    for (std::size_t i = 0; i < ds.scenes.size(); ++i)
        if (ds.scenes[i].labels.has(class_a) && ds.scenes[i].labels.has(class_b))
            both.push_back(i);
    if (both.size() < 2) throw DataError("fewer than 2 scenes contain both classes");

    Rng rng(mix_seed(seed, 0xf1cULL));
    const std::size_t pick_a = rng.uniform_int(both.size());
    std::size_t pick_b = rng.uniform_int(both.size() - 1);
    if (pick_b >= pick_a) ++pick_b;

    Dataset out = ds;
    const auto strip = [&](std::size_t scene_idx, int cls) {
        Scene& s = out.scenes[scene_idx];
        PointCloud kept;
        for (std::size_t m = 0; m < s.cloud.size(); ++m) {
            if (s.cloud.gt_labels[m] == cls) continue;
            kept.positions.push_back(s.cloud.positions[m]);
            kept.colors.push_back(s.cloud.colors[m]);
            kept.gt_labels.push_back(s.cloud.gt_labels[m]);
        }
        s.cloud = std::move(kept);
        s.labels = derive_scene_labels(s.cloud, c);
    };
    strip(both[pick_a], class_a);
    strip(both[pick_b], class_b);
    return out;
}

void write_scene(const std::string& path, const PointCloud& pc) {
    if (pc.size() == 0) throw DataError("refusing to write empty scene");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open " + path + " for writing");
    os.write("WPC1", 4);
    binio::put_u32(os, static_cast<uint32_t>(pc.size()));
    for (std::size_t i = 0; i < pc.size(); ++i) {
        for (double v : pc.positions[i]) binio::put_f32(os, static_cast<float>(v));
        for (double v : pc.colors[i]) binio::put_f32(os, static_cast<float>(v));
        binio::put_f32(os, 0.0f);  // reserved
        binio::put_i32(os, pc.gt_labels[i]);
    }
    if (!os) throw DataError("write failed for " + path);
}

PointCloud read_scene(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    binio::check_magic(is, "WPC1", path);
    const uint32_t m = binio::get_u32(is, path);
    if (m == 0) throw DataError("scene with M=0 in " + path);
    PointCloud pc;
    pc.positions.resize(m);
    pc.colors.resize(m);
    pc.gt_labels.resize(m);
    for (uint32_t i = 0; i < m; ++i) {
        for (double& v : pc.positions[i]) v = binio::get_f32(is, path);
        for (double& v : pc.colors[i]) v = binio::get_f32(is, path);
        binio::get_f32(is, path);  // reserved
        const int32_t lab = binio::get_i32(is, path);
        if (lab < 0) throw DataError("label out of range in " + path);
        pc.gt_labels[i] = lab;
        for (double v : pc.positions[i])
            if (!std::isfinite(v)) throw DataError("non-finite position in " + path);
        for (double v : pc.colors[i])
            if (v < 0.0 || v > 1.0) throw DataError("color outside [0,1] in " + path);
    }
    return pc;
}

std::string write_dataset(const std::string& dir, const Dataset& ds) {
    fs::create_directories(dir);
    nlohmann::json scenes = nlohmann::json::array();
    for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "scene_%03zu.wpc", i);
        write_scene((fs::path(dir) / name).string(), ds.scenes[i].cloud);
        nlohmann::json labels = nlohmann::json::array();
        for (uint8_t b : ds.scenes[i].labels.present) labels.push_back(b ? 1 : 0);
        scenes.push_back({{"path", name}, {"labels", labels}});
    }
    nlohmann::json manifest{{"class_names", ds.class_names}, {"scenes", scenes}};
    const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
    std::ofstream os(manifest_path);
    if (!os) throw DataError("cannot open " + manifest_path + " for writing");
    os << manifest.dump(2) << "\n";
    return manifest_path;
}

Dataset load_dataset(const std::string& manifest_path) {
    std::ifstream is(manifest_path);
    if (!is) throw DataError("cannot open " + manifest_path);
    nlohmann::json manifest = nlohmann::json::parse(is, nullptr, false);
    if (manifest.is_discarded()) throw DataError("invalid JSON in " + manifest_path);

    Dataset ds;
    try {
        ds.class_names = manifest.at("class_names").get<std::vector<std::string>>();
        const fs::path base = fs::path(manifest_path).parent_path();
        for (const auto& entry : manifest.at("scenes")) {
            Scene s;
            s.path = entry.at("path").get<std::string>();
            s.cloud = read_scene((base / s.path).string());
            const auto bits = entry.at("labels").get<std::vector<int>>();
            if (bits.size() != ds.class_names.size())
                throw DataError("label vector width mismatch in manifest");
            s.labels.present.clear();
            for (int b : bits) {
                if (b != 0 && b != 1) throw DataError("manifest labels must be 0/1");
                s.labels.present.push_back(static_cast<uint8_t>(b));
            }
            ds.scenes.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed manifest " + manifest_path + ": " + e.what());
    }
    ds.validate();
    return ds;
}

}  // namespace labeldense
