#include "labeldense/config.hpp"

#include <fstream>
#include <set>

#include "json.hpp"

namespace labeldense {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (!known.count(key))
            throw ConfigError("unknown config key \"" + key + "\" in " + where);
}

template <typename T>
void read_key(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("bad value for config key \"") + key + "\"");
    }
}

}  // namespace

RunConfig parse_run_config_text(const std::string& json_text) {
    json root = json::parse(json_text, nullptr, false);
    if (root.is_discarded()) throw ConfigError("config is not valid JSON");
    if (!root.is_object()) throw ConfigError("config must be a JSON object");

    reject_unknown(root,
                   {"seed", "epochs", "k_primitives", "kmeans_period", "warmup_epochs",
                    "match_delay_epochs", "lr", "weight_decay", "tau", "loss_toggles",
                    "matcher", "filter_on", "filter_group_k", "loss_weights", "k_nn",
                    "voxel_size", "angle_thresh_deg", "threads", "ablate", "scene"},
                   "config root");

    RunConfig cfg;
    read_key(root, "seed", cfg.train.seed);
    read_key(root, "epochs", cfg.train.epochs);
    read_key(root, "k_primitives", cfg.train.k_primitives);
    read_key(root, "kmeans_period", cfg.train.kmeans_period);
    read_key(root, "warmup_epochs", cfg.train.warmup_epochs);
    read_key(root, "match_delay_epochs", cfg.train.match_delay_epochs);
    read_key(root, "lr", cfg.train.lr);
    read_key(root, "weight_decay", cfg.train.weight_decay);
    read_key(root, "tau", cfg.train.tau);
    read_key(root, "filter_on", cfg.train.filter_on);
    read_key(root, "filter_group_k", cfg.train.filter_group_k);
    read_key(root, "k_nn", cfg.train.k_nn);
    read_key(root, "voxel_size", cfg.train.voxel_size);
    read_key(root, "angle_thresh_deg", cfg.train.angle_thresh_deg);
    read_key(root, "threads", cfg.train.threads);

    if (root.contains("loss_toggles")) {
        const json& t = root.at("loss_toggles");
        if (!t.is_object()) throw ConfigError("loss_toggles must be an object");
        reject_unknown(t, {"cam", "us", "match"}, "loss_toggles");
        read_key(t, "cam", cfg.train.losses.cam);
        read_key(t, "us", cfg.train.losses.us);
        read_key(t, "match", cfg.train.losses.match);
    }
    if (root.contains("loss_weights")) {
        const json& w = root.at("loss_weights");
        if (!w.is_object()) throw ConfigError("loss_weights must be an object");
        reject_unknown(w, {"cam", "us", "match"}, "loss_weights");
        read_key(w, "cam", cfg.train.weight_cam);
        read_key(w, "us", cfg.train.weight_us);
        read_key(w, "match", cfg.train.weight_match);
    }
    if (root.contains("matcher")) {
        const std::string m = root.at("matcher").get<std::string>();
        if (m == "hungarian")
            cfg.train.matcher = MatcherKind::Hungarian;
        else if (m == "naive")
            cfg.train.matcher = MatcherKind::Naive;
        else
            throw ConfigError("matcher must be \"hungarian\" or \"naive\"");
    }
    if (root.contains("ablate")) {
        const json& a = root.at("ablate");
        if (!a.is_object()) throw ConfigError("ablate must be an object");
        reject_unknown(a, {"k_sweep", "n_seeds"}, "ablate");
        read_key(a, "k_sweep", cfg.ablate_k_sweep);
        read_key(a, "n_seeds", cfg.ablate_seeds);
    }
    if (root.contains("scene")) {
        const json& s = root.at("scene");
        if (!s.is_object()) throw ConfigError("scene must be an object");
        reject_unknown(s,
                       {"objects_per_class", "points_per_object", "noise_sigma",
                        "room_extent"},
                       "scene");
        read_key(s, "objects_per_class", cfg.scene.objects_per_class);
        read_key(s, "points_per_object", cfg.scene.points_per_object);
        read_key(s, "noise_sigma", cfg.scene.noise_sigma);
        if (s.contains("room_extent")) {
            const auto ext = s.at("room_extent").get<std::vector<double>>();
            if (ext.size() != 3) throw ConfigError("room_extent needs 3 values");
            cfg.scene.room_extent = {ext[0], ext[1], ext[2]};
        }
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    std::string text((std::istreambuf_iterator<char>(is)),
                     std::istreambuf_iterator<char>());
    return parse_run_config_text(text);
}

std::string effective_config_json(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.train.seed;
    j["epochs"] = cfg.train.epochs;
    j["k_primitives"] = cfg.train.k_primitives;
    j["kmeans_period"] = cfg.train.kmeans_period;
    j["warmup_epochs"] = cfg.train.warmup_epochs;
    j["match_delay_epochs"] = cfg.train.match_delay_epochs;
    j["lr"] = cfg.train.lr;
    j["weight_decay"] = cfg.train.weight_decay;
    j["tau"] = cfg.train.tau;
    j["loss_toggles"] = {{"cam", cfg.train.losses.cam},
                         {"us", cfg.train.losses.us},
                         {"match", cfg.train.losses.match}};
    j["loss_weights"] = {{"cam", cfg.train.weight_cam},
                         {"us", cfg.train.weight_us},
                         {"match", cfg.train.weight_match}};
    j["matcher"] = cfg.train.matcher == MatcherKind::Hungarian ? "hungarian" : "naive";
    j["filter_on"] = cfg.train.filter_on;
    j["filter_group_k"] = cfg.train.filter_group_k;
    j["k_nn"] = cfg.train.k_nn;
    j["voxel_size"] = cfg.train.voxel_size;
    j["angle_thresh_deg"] = cfg.train.angle_thresh_deg;
    j["threads"] = cfg.train.threads;
    j["ablate"] = {{"k_sweep", cfg.ablate_k_sweep}, {"n_seeds", cfg.ablate_seeds}};
    j["scene"] = {{"objects_per_class", cfg.scene.objects_per_class},
                  {"points_per_object", cfg.scene.points_per_object},
                  {"noise_sigma", cfg.scene.noise_sigma},
                  {"room_extent", cfg.scene.room_extent}};
    return j.dump(2);
}

}  // namespace labeldense
