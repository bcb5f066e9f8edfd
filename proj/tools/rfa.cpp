// rfa: simulate radio data, train the detector, predict actions, score results.
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rfad/core/config.hpp"
#include "rfad/core/error.hpp"
#include "rfad/core/formats.hpp"
#include "rfad/eval/metrics.hpp"
#include "rfad/nn/checkpoint.hpp"
#include "rfad/pipeline/pipeline.hpp"
#include "rfad/sim/motion.hpp"
#include "rfad/sim/render.hpp"
#include "rfad/sim/scenario.hpp"
#include "rfad/train/train.hpp"

namespace fs = std::filesystem;
using namespace rfad;

namespace {

Config load_config(const std::string& path) {
    return path.empty() ? Config::parse("") : Config::load(path);
}

void reject_unknown_keys(const Config& cfg, const std::vector<std::string>& allowed) {
    for (const auto& k : cfg.keys())
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw FormatError("unknown config key: " + k);
}

// Derived per-scenario seed; splitmix64 finisher keeps streams uncorrelated.
uint64_t scenario_seed(uint64_t base, int index) {
    uint64_t x = base + 0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(index + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

struct SimParams {
    int persons = 2;
    int duration = 120;
    double noise = 0.02;
    double p_spec = 0.2;
    double sigma = 1.5;
};

SimParams read_sim_params(const Config& cfg) {
    SimParams sp;
    sp.persons = static_cast<int>(cfg.get_int("persons", sp.persons));
    sp.duration = static_cast<int>(cfg.get_int("duration", sp.duration));
    sp.noise = cfg.get_double("noise", sp.noise);
    sp.p_spec = cfg.get_double("p_spec", sp.p_spec);
    sp.sigma = cfg.get_double("sigma", sp.sigma);
    if (sp.persons < 1 || sp.persons > 6) throw FormatError("persons must be in [1, 6]");
    if (sp.duration < 1) throw FormatError("duration must be positive");
    return sp;
}

train::ScenarioData make_scenario(uint64_t seed, const SimParams& sp, bool render) {
    sim::Scenario sc = sim::random_scenario(seed, sp.persons, sp.duration);
    sim::MotionResult mr = sim::synth_motion(sc);
    train::ScenarioData d;
    d.frames = mr.frames;
    d.segments = mr.segments;
    if (render) {
        sim::RenderParams rp;
        rp.sigma_cells = sp.sigma;
        rp.p_spec = sp.p_spec;
        rp.noise = sp.noise;
        rp.seed = seed;
        d.heat = sim::render_heatmaps(mr.frames, sc, rp);
    }
    return d;
}

void save_stream_text(const std::string& path, const std::string& contents) {
    save_text(path, contents);
}

uint64_t resolve_seed(const Config& cfg, bool seed_given, uint64_t flag_seed) {
    if (seed_given) return flag_seed;
    return static_cast<uint64_t>(cfg.get_int("seed", 1));
}

train::TrainConfig::Mode parse_mode(const std::string& mode) {
    if (mode == "end_to_end") return train::TrainConfig::Mode::kEndToEnd;
    if (mode == "separate") return train::TrainConfig::Mode::kSeparate;
    throw FormatError("mode must be end_to_end or separate, got '" + mode + "'");
}

bool parse_on_off(const std::string& v, const char* flag) {
    if (v == "on") return true;
    if (v == "off") return false;
    throw FormatError(std::string(flag) + " must be on or off, got '" + v + "'");
}

bool parse_proposals(const std::string& v) {
    if (v == "multi") return false;
    if (v == "single") return true;
    throw FormatError("proposals must be multi or single, got '" + v + "'");
}

std::vector<double> parse_thetas(const std::string& csv) {
    std::vector<double> out;
    std::istringstream is(csv);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &pos);
        } catch (const std::exception&) {
            throw FormatError("bad IoU threshold '" + tok + "'");
        }
        if (pos != tok.size() || v <= 0.0 || v > 1.0)
            throw FormatError("bad IoU threshold '" + tok + "'");
        out.push_back(v);
    }
    if (out.empty()) throw FormatError("at least one IoU threshold required");
    return out;
}

std::vector<ActionSegment> load_labels(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    try {
        return read_label_file(f);
    } catch (const FormatError& e) {
        throw FormatError(std::string(path) + ": " + e.what());
    }
}

pipeline::PipelineConfig make_pipeline_config(const Config& cfg, bool single_slot,
                                              bool attention) {
    pipeline::PipelineConfig pc;
    pc.classes = sim::builtin_classes();
    pc.links = sim::builtin_links();
    pc.act = action::make_action_config(pc.classes);
    pc.act.single_slot = single_slot;
    pc.act.attention = attention;
    pc.window = static_cast<int>(cfg.get_int("window", pc.window));
    pc.stride = static_cast<int>(cfg.get_int("stride", pc.stride));
    pc.assoc_gate = cfg.get_double("assoc_gate", pc.assoc_gate);
    pc.assoc_max_gap = static_cast<int>(cfg.get_int("assoc_max_gap", pc.assoc_max_gap));
    pc.min_track_len = static_cast<int>(cfg.get_int("min_track_len", pc.min_track_len));
    pc.skel.window = pc.window;
    return pc;
}

// Validation score for the training log: predictions aligned to reference
// identities by track centroids, then mAP at IoU 0.1.
double validation_map(const nn::ParamStore& ps, const train::ScenarioData& val,
                      const train::TrainConfig& tc) {
    pipeline::PipelineConfig pc;
    pc.skel = tc.skel;
    pc.act = tc.act;
    pc.window = tc.window;
    pc.classes = sim::builtin_classes();
    pc.links = sim::builtin_links();
    auto r = pipeline::predict(ps, val.heat, pc);
    const auto id_map = pipeline::match_person_ids(r.frames, val.frames);
    pipeline::remap_participants(r.detections, id_map);
    return mean_map(r.detections, val.segments, {0.1}).map_at[0];
}

int cmd_simulate(Config cfg, uint64_t seed, const std::string& out_dir) {
    reject_unknown_keys(cfg, {"seed", "persons", "duration", "noise", "p_spec", "sigma"});
    const SimParams sp = read_sim_params(cfg);
    cfg.set("seed", std::to_string(seed));

    const train::ScenarioData data = make_scenario(seed, sp, true);
    fs::create_directories(out_dir);
    sim::save_heatmap_file(out_dir + "/heatmaps.rfhm", data.heat);
    std::ostringstream sk;
    write_skeleton_file(sk, data.frames);
    save_stream_text(out_dir + "/skeleton.txt", sk.str());
    std::ostringstream lb;
    write_label_file(lb, data.segments, false);
    save_stream_text(out_dir + "/labels.txt", lb.str());
    std::ostringstream cl;
    write_class_file(cl, sim::builtin_classes());
    save_stream_text(out_dir + "/classes.txt", cl.str());
    std::ostringstream lk;
    write_link_file(lk, sim::builtin_links());
    save_stream_text(out_dir + "/links.txt", lk.str());

    std::cout << "simulate config=" << cfg.fingerprint() << " seed=" << seed
              << " frames=" << data.frames.size() << " persons=" << sp.persons
              << " segments=" << data.segments.size() << " out=" << out_dir << "\n";
    return 0;
}

int cmd_train(Config cfg, uint64_t seed, const std::string& out_dir, const std::string& mode,
              const std::string& proposals, const std::string& attention) {
    reject_unknown_keys(cfg, {"seed", "persons", "duration", "noise", "p_spec", "sigma", "steps",
                              "ratio", "lr", "momentum", "lambda", "window", "scenarios",
                              "skel_scenarios", "checkpoint_every", "eval_every"});
    const SimParams sp = read_sim_params(cfg);

    train::TrainConfig tc;
    tc.act = action::make_action_config(sim::builtin_classes());
    tc.window = static_cast<int>(cfg.get_int("window", tc.window));
    tc.skel.window = tc.window;
    tc.lr = cfg.get_double("lr", tc.lr);
    tc.momentum = cfg.get_double("momentum", tc.momentum);
    tc.total_steps = cfg.get_int("steps", tc.total_steps);
    tc.lambda_det = cfg.get_double("lambda", tc.lambda_det);
    tc.ratio = static_cast<int>(cfg.get_int("ratio", tc.ratio));
    tc.seed = seed;
    tc.mode = parse_mode(mode);
    tc.act.single_slot = parse_proposals(proposals);
    tc.act.attention = parse_on_off(attention, "attention");

    const int n_rf = static_cast<int>(cfg.get_int("scenarios", 20));
    const int n_skel = static_cast<int>(cfg.get_int("skel_scenarios", n_rf));
    const long ck_every = cfg.get_int("checkpoint_every", 500);
    const long eval_every = cfg.get_int("eval_every", 0);
    if (n_rf < 1) throw FormatError("scenarios must be positive");

    cfg.set("seed", std::to_string(seed));
    cfg.set("mode", mode);
    cfg.set("proposals", proposals);
    cfg.set("attention", attention);
    std::cout << "train config=" << cfg.fingerprint() << " seed=" << seed
              << " steps=" << tc.total_steps << " out=" << out_dir << "\n";

    std::vector<train::ScenarioData> rf_data, skel_data;
    for (int i = 0; i < n_rf; ++i) rf_data.push_back(make_scenario(scenario_seed(seed, i), sp, true));
    for (int i = 0; i < n_skel; ++i)
        skel_data.push_back(make_scenario(scenario_seed(seed, 1000 + i), sp, false));
    train::ScenarioData val;
    if (eval_every > 0) val = make_scenario(scenario_seed(seed, 2000), sp, true);

    fs::create_directories(out_dir);
    const std::string ck_path = out_dir + "/checkpoint.rfa1";
    std::ofstream log(out_dir + "/metrics.log");
    if (!log) throw std::runtime_error("cannot open " + out_dir + "/metrics.log");

    train::ModelState st(tc);
    const auto save_ck = [&] {
        nn::save_checkpoint_file(ck_path, nn::checkpoint_from_store(st.params));
    };
    train::train_loop(st, rf_data, skel_data, tc,
                      [&](int64_t step, const train::StepLosses& l) {
                          log << "step " << step << " total " << l.total << " skeleton "
                              << l.skeleton << " detection " << l.detection << "\n";
                          if (ck_every > 0 && step % ck_every == 0) save_ck();
                          if (eval_every > 0 && step % eval_every == 0)
                              log << "step " << step << " val_map@0.1 "
                                  << validation_map(st.params, val, tc) << "\n";
                      });
    save_ck();
    std::cout << "trained steps=" << st.step << " checkpoint=" << ck_path << "\n";
    return 0;
}

int cmd_predict(Config cfg, const std::string& ck_path, const std::string& heat_path,
                const std::string& out_path, const std::string& skeleton_out,
                const std::string& proposals, const std::string& attention) {
    reject_unknown_keys(cfg, {"window", "stride", "assoc_gate", "assoc_max_gap", "min_track_len"});
    pipeline::PipelineConfig pc =
        make_pipeline_config(cfg, parse_proposals(proposals), parse_on_off(attention, "attention"));

    nn::ParamStore ps;
    skelgen::init_skeleton_params(ps, pc.skel, 0);
    action::init_action_params(ps, pc.act, 0);
    nn::checkpoint_into_store(nn::load_checkpoint_file(ck_path), ps);

    const sim::HeatmapStream heat = sim::load_heatmap_file(heat_path);
    const pipeline::PredictResult r = pipeline::predict(ps, heat, pc);

    std::ostringstream lb;
    write_label_file(lb, r.detections, true);
    save_stream_text(out_path, lb.str());
    if (!skeleton_out.empty()) {
        std::ostringstream sk;
        write_skeleton_file(sk, r.frames);
        save_stream_text(skeleton_out, sk.str());
    }

    cfg.set("proposals", proposals);
    cfg.set("attention", attention);
    std::cout << "predict config=" << cfg.fingerprint() << " seed=0 checkpoint=" << ck_path
              << " frames=" << heat.frames.size() << " detections=" << r.detections.size()
              << " out=" << out_path << "\n";
    return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& gt_path, const std::string& iou_csv,
             const std::string& table_out) {
    const std::vector<double> thetas = parse_thetas(iou_csv);
    const auto preds = load_labels(pred_path);
    const auto gts = load_labels(gt_path);
    const EvalReport rep = mean_map(preds, gts, thetas);

    Config cfg = Config::parse("");
    cfg.set("iou", iou_csv);
    std::cout << "eval config=" << cfg.fingerprint() << " seed=0 pred=" << pred_path
              << " gt=" << gt_path << "\n";
    std::cout << report_text(rep);
    if (!table_out.empty()) save_stream_text(table_out, report_table(rep));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"radio-to-action detection pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", out_file = "predictions.txt";
    std::string ck_path, heat_path, pred_path, gt_path, skeleton_out, table_out;
    std::string mode = "end_to_end", proposals = "multi", attention = "on";
    std::string iou_csv = "0.1,0.5";
    uint64_t seed = 1;

    auto* sim_cmd = app.add_subcommand("simulate", "render a synthetic scenario to files");
    sim_cmd->add_option("--config", config_path, "scenario config file");
    auto* sim_seed = sim_cmd->add_option("--seed", seed, "scenario seed");
    sim_cmd->add_option("--out", out_dir, "output directory")->required();

    auto* train_cmd = app.add_subcommand("train", "train on freshly simulated data");
    train_cmd->add_option("--config", config_path, "training config file");
    auto* train_seed = train_cmd->add_option("--seed", seed, "run seed");
    train_cmd->add_option("--out", out_dir, "output directory")->required();
    train_cmd->add_option("--mode", mode, "end_to_end|separate");
    train_cmd->add_option("--proposals", proposals, "multi|single");
    train_cmd->add_option("--attention", attention, "on|off");

    auto* pred_cmd = app.add_subcommand("predict", "run full inference on a heatmap file");
    pred_cmd->add_option("checkpoint", ck_path, "model checkpoint")->required();
    pred_cmd->add_option("heatmaps", heat_path, "heatmap stream file")->required();
    pred_cmd->add_option("--config", config_path, "inference config file");
    pred_cmd->add_option("--out", out_file, "prediction label file")->required();
    pred_cmd->add_option("--skeleton-out", skeleton_out, "also write predicted skeletons");
    pred_cmd->add_option("--proposals", proposals, "multi|single");
    pred_cmd->add_option("--attention", attention, "on|off");

    auto* eval_cmd = app.add_subcommand("eval", "score predictions against ground truth");
    eval_cmd->add_option("predictions", pred_path, "prediction label file")->required();
    eval_cmd->add_option("truth", gt_path, "ground-truth label file")->required();
    eval_cmd->add_option("--iou", iou_csv, "comma-separated IoU thresholds");
    eval_cmd->add_option("--table", table_out, "also write a TSV report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim_cmd->parsed()) {
            Config cfg = load_config(config_path);
            return cmd_simulate(cfg, resolve_seed(cfg, !sim_seed->empty(), seed), out_dir);
        }
        if (train_cmd->parsed()) {
            Config cfg = load_config(config_path);
            return cmd_train(cfg, resolve_seed(cfg, !train_seed->empty(), seed), out_dir, mode,
                             proposals, attention);
        }
        if (pred_cmd->parsed())
            return cmd_predict(load_config(config_path), ck_path, heat_path, out_file,
                               skeleton_out, proposals, attention);
        if (eval_cmd->parsed()) return cmd_eval(pred_path, gt_path, iou_csv, table_out);
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
