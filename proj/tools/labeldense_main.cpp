// labeldense: synthetic weak-label segmentation workbench.
//
// Subcommands: gen, train, eval, ablate, bootstrap, cooccur.
// Exit codes: 0 ok, 2 config error, 3 data error, 1 internal.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "labeldense/config.hpp"
#include "labeldense/parallel.hpp"
#include "labeldense/rng.hpp"
#include "labeldense/scenegen.hpp"
#include "labeldense/trainer.hpp"

namespace ld = labeldense;
namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string config_path;
    int threads = 0;  // 0 → env/default
};

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("LABELDENSE_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return ld::default_thread_count();
}

ld::RunConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return ld::RunConfig{};
    return ld::load_run_config(path);
}

void echo_config(const std::string& command, const nlohmann::json& args,
                 const ld::RunConfig& cfg) {
    nlohmann::json echo{{"command", command},
                        {"args", args},
                        {"config", nlohmann::json::parse(ld::effective_config_json(cfg))}};
    std::cout << echo.dump(2) << "\n";
}

ld::CooccurPolicy parse_policy(const std::string& text) {
    if (text == "free") return ld::CooccurPolicy::free();
    if (text.rfind("forced=", 0) == 0) {
        std::vector<int> classes;
        std::string rest = text.substr(7);
        std::size_t pos = 0;
        while (pos < rest.size()) {
            std::size_t comma = rest.find(',', pos);
            if (comma == std::string::npos) comma = rest.size();
            const std::string tok = rest.substr(pos, comma - pos);
            if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
                throw ld::ConfigError("invalid class id \"" + tok + "\" in --cooccur");
            classes.push_back(std::stoi(tok));
            pos = comma + 1;
        }
        if (classes.empty()) throw ld::ConfigError("forced policy needs class ids");
        return ld::CooccurPolicy::forced(std::move(classes));
    }
    throw ld::ConfigError("--cooccur must be \"free\" or \"forced=a,b\"");
}

std::pair<int, int> parse_class_pair(const std::string& text) {
    const std::size_t comma = text.find(',');
    if (comma == std::string::npos) throw ld::ConfigError("--fix needs \"a,b\"");
    try {
        return {std::stoi(text.substr(0, comma)), std::stoi(text.substr(comma + 1))};
    } catch (const std::exception&) {
        throw ld::ConfigError("--fix needs \"a,b\" with integer class ids");
    }
}

ld::Model model_from_checkpoint(const ld::Checkpoint& ck) {
    ld::Model model;
    model.enc = ck.enc;
    model.clf = ck.clf;
    if (ck.centroids) model.prims = ld::PrimitiveSet{*ck.centroids, 0};
    return model;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw ld::DataError("cannot open " + path + " for writing");
    os << text;
    if (!os) throw ld::DataError("write failed for " + path);
}

int cmd_gen(const std::string& out_dir, int scenes, const std::string& cooccur,
            uint64_t seed, const CommonArgs& common) {
    ld::RunConfig cfg = load_config_or_default(common.config_path);
    cfg.train.seed = seed;
    echo_config("gen", {{"out", out_dir}, {"scenes", scenes}, {"cooccur", cooccur},
                        {"seed", seed}},
                cfg);
    ld::SceneSpec spec = cfg.scene;
    spec.classes_to_place = {0};  // replaced per scene by the policy
    const ld::Dataset ds = ld::generate_dataset(scenes, parse_policy(cooccur), spec, seed);
    const std::string manifest = ld::write_dataset(out_dir, ds);
    std::cout << manifest << "\n";
    return 0;
}

int cmd_train(const std::string& data, const std::string& out_ckpt,
              const std::string& history_csv, const std::string& dump_dir,
              const CommonArgs& common) {
    ld::RunConfig cfg = load_config_or_default(common.config_path);
    cfg.train.threads = resolve_threads(common.threads);
    echo_config("train", {{"data", data}, {"out", out_ckpt}, {"history", history_csv},
                          {"dump_labels", dump_dir}},
                cfg);

    const ld::Dataset ds = ld::load_dataset(data);
    const ld::PreparedDataset prep = ld::prepare_dataset(ds, cfg.train);
    auto [model, history] = ld::train_prepared(prep, cfg.train);

    ld::Checkpoint ck;
    ck.enc = model.enc;
    ck.clf = model.clf;
    if (model.prims) ck.centroids = model.prims->centroids;
    ck.step = static_cast<int64_t>(cfg.train.epochs) *
              static_cast<int64_t>(ds.scenes.size());
    ld::save_checkpoint(out_ckpt, ck);
    ld::write_history_csv(history_csv, history);

    if (!dump_dir.empty()) {
        if (!model.prims) throw ld::ConfigError("--dump-labels needs the match/us losses");
        fs::create_directories(dump_dir);
        for (std::size_t si = 0; si < prep.scenes.size(); ++si) {
            const ld::Mat f = ld::encoder_forward(model.enc, prep.scenes[si].x);
            const ld::AffinityMatrix aff = ld::assign_affinity(f, *model.prims);
            std::vector<int32_t> labels(f.rows, ld::kIgnoreLabel);
            try {
                auto [fbar, present] =
                    ld::primitive_scene_features(f, aff, model.prims->count());
                const ld::CostMatrix cm =
                    ld::build_cost_matrix(fbar, present, model.clf, ds.scenes[si].labels);
                ld::AssignmentMap pi = cfg.train.matcher == ld::MatcherKind::Hungarian
                                           ? ld::hungarian_match(cm)
                                           : ld::naive_match(cm);
                if (cfg.train.filter_on)
                    pi = ld::filter_assignments(
                        pi, *model.prims,
                        cfg.train.filter_group_k > 0
                            ? cfg.train.filter_group_k
                            : static_cast<int>(0.4 * cfg.train.k_primitives),
                        ld::mix_seed(cfg.train.seed, 0xf117e2ULL));
                labels = ld::densify_labels(pi, aff);
            } catch (const ld::UnmatchableScene&) {
                // leave the scene fully ignored
            }
            char name[32];
            std::snprintf(name, sizeof name, "scene_%03zu.wpl", si);
            ld::write_pseudo_labels((fs::path(dump_dir) / name).string(), labels);
        }
    }

    std::cout << "checkpoint: " << out_ckpt << "\n";
    std::cout << "history: " << history_csv << "\n";
    return 0;
}

int cmd_eval(const std::string& data, const std::string& ckpt_path,
             const std::string& report_path, const CommonArgs& common) {
    ld::RunConfig cfg = load_config_or_default(common.config_path);
    cfg.train.threads = resolve_threads(common.threads);
    echo_config("eval", {{"data", data}, {"ckpt", ckpt_path}, {"report", report_path}},
                cfg);
    const ld::Dataset ds = ld::load_dataset(data);
    const ld::Model model = model_from_checkpoint(ld::load_checkpoint(ckpt_path));
    const ld::EvalReport rep = ld::evaluate(model, ds, cfg.train);
    const std::string json_text = ld::eval_report_to_json(rep, ds.class_names);
    if (!report_path.empty()) write_text(report_path, json_text + "\n");
    std::cout << json_text << "\n";
    return 0;
}

int cmd_ablate(const std::string& data, const std::string& out_csv,
               const CommonArgs& common) {
    ld::RunConfig cfg = load_config_or_default(common.config_path);
    cfg.train.threads = resolve_threads(common.threads);
    echo_config("ablate", {{"data", data}, {"out", out_csv}}, cfg);
    const ld::Dataset ds = ld::load_dataset(data);
    const auto rows = ld::ablate(ds, cfg.train, cfg.ablate_k_sweep, cfg.ablate_seeds);
    const std::string csv = ld::ablation_to_csv(rows);
    write_text(out_csv, csv);
    std::cout << csv;
    return 0;
}

int cmd_bootstrap(const std::string& data, const std::string& ckpt_path,
                  const std::string& out_ckpt, const std::string& report_path,
                  const CommonArgs& common) {
    ld::RunConfig cfg = load_config_or_default(common.config_path);
    cfg.train.threads = resolve_threads(common.threads);
    echo_config("bootstrap",
                {{"data", data}, {"ckpt", ckpt_path}, {"out", out_ckpt},
                 {"report", report_path}},
                cfg);
    const ld::Dataset ds = ld::load_dataset(data);
    const ld::Model model = model_from_checkpoint(ld::load_checkpoint(ckpt_path));
    const ld::PreparedDataset prep = ld::prepare_dataset(ds, cfg.train);
    const ld::EvalReport before = ld::evaluate_prepared(model, prep);
    const ld::BootstrapResult res = ld::bootstrap_prepared(model, prep, cfg.train);

    ld::Checkpoint ck;
    ck.enc = res.model.enc;
    ck.clf = res.model.clf;
    ck.step = static_cast<int64_t>(cfg.train.epochs) *
              static_cast<int64_t>(ds.scenes.size());
    ld::save_checkpoint(out_ckpt, ck);

    nlohmann::json out{{"miou_before", before.miou},
                       {"miou_after", res.report.miou},
                       {"kept_fraction", res.kept_fraction}};
    if (!report_path.empty()) write_text(report_path, out.dump(2) + "\n");
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_cooccur(const std::string& data, const std::string& fix,
                const std::string& out_dir, uint64_t seed, const CommonArgs& common) {
    ld::RunConfig cfg = load_config_or_default(common.config_path);
    echo_config("cooccur", {{"data", data}, {"fix", fix}, {"out", out_dir}, {"seed", seed}},
                cfg);
    const ld::Dataset ds = ld::load_dataset(data);
    const auto counts = ld::cooccurrence_matrix(ds);
    const auto pairs = ld::detect_perfect_cooccurrence(counts);

    nlohmann::json report;
    report["counts"] = counts;
    nlohmann::json jp = nlohmann::json::array();
    for (const auto& [a, b] : pairs) jp.push_back({a, b});
    report["perfect_pairs"] = jp;
    std::cout << report.dump(2) << "\n";

    if (!fix.empty()) {
        if (out_dir.empty()) throw ld::ConfigError("--fix requires --out DIR");
        const auto [a, b] = parse_class_pair(fix);
        const ld::Dataset fixed = ld::break_cooccurrence(ds, a, b, seed);
        const std::string manifest = ld::write_dataset(out_dir, fixed);
        std::cout << manifest << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weak scene-label point segmentation workbench"};
    app.require_subcommand(1);

    CommonArgs common;

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    std::string gen_out, gen_cooccur = "free";
    int gen_scenes = 20;
    uint64_t gen_seed = 1;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--scenes", gen_scenes, "number of scenes");
    gen->add_option("--cooccur", gen_cooccur, "free | forced=a,b");
    gen->add_option("--seed", gen_seed, "generation seed");
    gen->add_option("--config", common.config_path, "JSON config for scene defaults");

    // train
    auto* train = app.add_subcommand("train", "train on a dataset manifest");
    std::string train_data, train_out, train_history, train_dump;
    train->add_option("--data", train_data, "dataset manifest")->required();
    train->add_option("--config", common.config_path, "JSON config");
    train->add_option("--out", train_out, "output checkpoint")->required();
    train->add_option("--history", train_history, "per-epoch loss CSV")->required();
    train->add_option("--dump-labels", train_dump, "write final pseudo-labels here");
    train->add_option("--threads", common.threads, "worker cap (env LABELDENSE_THREADS)");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string eval_data, eval_ckpt, eval_report;
    eval->add_option("--data", eval_data, "dataset manifest")->required();
    eval->add_option("--ckpt", eval_ckpt, "checkpoint path")->required();
    eval->add_option("--report", eval_report, "write the JSON report here");
    eval->add_option("--config", common.config_path, "JSON config");
    eval->add_option("--threads", common.threads, "worker cap");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "loss/K ablation grid");
    std::string ab_data, ab_out;
    ablate->add_option("--data", ab_data, "dataset manifest")->required();
    ablate->add_option("--config", common.config_path, "JSON config");
    ablate->add_option("--out", ab_out, "output CSV")->required();
    ablate->add_option("--threads", common.threads, "worker cap");

    // bootstrap
    auto* boot = app.add_subcommand("bootstrap", "self-training pass");
    std::string bs_data, bs_ckpt, bs_out, bs_report;
    boot->add_option("--data", bs_data, "dataset manifest")->required();
    boot->add_option("--ckpt", bs_ckpt, "trained checkpoint")->required();
    boot->add_option("--config", common.config_path, "JSON config");
    boot->add_option("--out", bs_out, "output checkpoint")->required();
    boot->add_option("--report", bs_report, "write before/after JSON here");
    boot->add_option("--threads", common.threads, "worker cap");

    // cooccur
    auto* co = app.add_subcommand("cooccur", "co-occurrence diagnostics");
    std::string co_data, co_fix, co_out;
    uint64_t co_seed = 1;
    co->add_option("--data", co_data, "dataset manifest")->required();
    co->add_option("--fix", co_fix, "break the pair a,b");
    co->add_option("--out", co_out, "output directory for the fixed dataset");
    co->add_option("--seed", co_seed, "scene selection seed");
    co->add_option("--config", common.config_path, "JSON config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) return cmd_gen(gen_out, gen_scenes, gen_cooccur, gen_seed, common);
        if (train->parsed())
            return cmd_train(train_data, train_out, train_history, train_dump, common);
        if (eval->parsed()) return cmd_eval(eval_data, eval_ckpt, eval_report, common);
        if (ablate->parsed()) return cmd_ablate(ab_data, ab_out, common);
        if (boot->parsed())
            return cmd_bootstrap(bs_data, bs_ckpt, bs_out, bs_report, common);
        if (co->parsed()) return cmd_cooccur(co_data, co_fix, co_out, co_seed, common);
    } catch (const ld::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ld::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
