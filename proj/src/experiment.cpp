#include "dlc/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dlc/analyzer.hpp"
#include "dlc/csv.hpp"
#include "dlc/icp.hpp"
#include "dlc/oracles.hpp"

namespace dlc {

using json = nlohmann::json;

namespace {

constexpr double kRadToDeg = 57.295779513082320876798154814105;

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw ConfigError("cannot write " + path.string());
    os << text;
}

json parse_config(const std::string& text) {
    try {
        return text.empty() ? json::object() : json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed experiment config: ") + e.what());
    }
}

RegistrationDatasetConfig dataset_from_json(const json& j, RegistrationDatasetConfig base = {}) {
    base.n_pairs = j.value("n_pairs", base.n_pairs);
    base.n_points = j.value("n_points", base.n_points);
    base.dim = j.value("dim", base.dim);
    base.angle_range = j.value("angle_range", base.angle_range);
    base.trans_range = j.value("trans_range", base.trans_range);
    base.jitter_sigma = j.value("jitter_sigma", base.jitter_sigma);
    base.partial_overlap_fraction =
        j.value("partial_overlap_fraction", base.partial_overlap_fraction);
    base.seed = j.value("seed", base.seed);
    return base;
}

InferenceConfig inference_from_json(const json& j) {
    InferenceConfig cfg;
    cfg.max_iters = j.value("max_iters", cfg.max_iters);
    cfg.step_size = j.value("step_size", cfg.step_size);
    const std::string mode = j.value("mode", "averaged");
    if (mode == "averaged")
        cfg.mode = InferenceMode::averaged;
    else if (mode == "last-iterate")
        cfg.mode = InferenceMode::last_iterate;
    else
        throw ConfigError("inference: unknown mode '" + mode + "'");
    cfg.stop_tol = j.value("stop_tol", cfg.stop_tol);
    cfg.validate();
    return cfg;
}

struct Target {
    std::shared_ptr<Task> task;
    ParamSet params;
    TrainConfig train_cfg;  // meaningful for checkpoint targets
    bool from_checkpoint = false;
};

/// "target": {"kind":"oracle","name":...,"dim":...,"sigma":...} or
/// {"kind":"checkpoint","path":...,"dataset":{...} (optional override)}.
Target load_target(const json& cfg) {
    if (!cfg.contains("target")) throw ConfigError("experiment config: missing target");
    const json& t = cfg["target"];
    const std::string kind = t.value("kind", "oracle");
    Target out;
    if (kind == "oracle") {
        out.task = make_oracle(t.value("name", "quadratic"), t.value("dim", std::size_t{2}),
                               t.value("sigma", 1.0));
        return out;
    }
    if (kind == "checkpoint") {
        const std::string path = t.value("path", "");
        if (path.empty()) throw ConfigError("checkpoint target: missing path");
        Checkpoint ckpt = load_checkpoint(path);
        out.train_cfg = TrainConfig::from_json(ckpt.config_echo);
        if (t.contains("dataset") && out.train_cfg.task_id == "registration")
            out.train_cfg.reg_dataset = dataset_from_json(t["dataset"], out.train_cfg.reg_dataset);
        out.task = make_task(out.train_cfg);
        out.params = ckpt.params;
        out.from_checkpoint = true;
        return out;
    }
    throw ConfigError("experiment: unknown target kind '" + kind + "'");
}

void write_run_info(const std::filesystem::path& out_dir, double wall_seconds) {
    const std::time_t now = std::time(nullptr);
    char stamp[64];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    std::ostringstream os;
    os << "finished_at: " << stamp << "\n";
    os << "wall_seconds: " << wall_seconds << "\n";
    write_text(out_dir / "meta" / "run_info.txt", os.str());
}

void write_loss_history_csv(const std::filesystem::path& path,
                            const std::vector<StepRecord>& history) {
    std::ostringstream os;
    CsvWriter csv(os);
    csv.row({"step", "base", "hinge_mean", "total"});
    for (std::size_t i = 0; i < history.size(); ++i) {
        csv.begin_row();
        csv.field(static_cast<double>(i + 1));
        csv.field(history[i].base);
        csv.field(history[i].hinge_mean);
        csv.field(history[i].total);
        csv.end_row();
    }
    write_text(path, os.str());
}

struct EvalOutput {
    RegistrationMetrics metrics;
    std::vector<PredictionVector> predictions;
    std::vector<double> losses;
    std::vector<Trajectory> trajectories;
};

EvalOutput evaluate_registration(const RegistrationTask& task, const ParamSet& params,
                                 const InferenceConfig& icfg) {
    EvalOutput out;
    for (std::size_t i = 0; i < task.dataset_size(); ++i) {
        auto [omega, traj] = infer(task, i, params, icfg);
        out.losses.push_back(traj.losses.empty() ? 0.0 : traj.losses.back());
        out.predictions.push_back(std::move(omega));
        out.trajectories.push_back(std::move(traj));
    }
    out.metrics = registration_metrics(task, out.predictions, out.losses);
    return out;
}

json metrics_json(const RegistrationMetrics& m) {
    return json{{"mse_r", m.mse_r},
                {"mse_euler_deg", m.mse_euler_deg},
                {"mse_t", m.mse_t},
                {"mean_loss", m.mean_loss}};
}

void run_train(const json& cfg, const std::filesystem::path& out, bool registration) {
    if (!cfg.contains("train")) throw ConfigError("train experiment: missing train block");
    TrainConfig tc = TrainConfig::from_json(cfg["train"].dump());
    if (registration && tc.task_id != "registration")
        throw ConfigError("train-registration: config task is not registration");
    if (!registration && tc.task_id != "sequence")
        throw ConfigError("train-sequence: config task is not sequence");

    std::shared_ptr<Task> task = make_task(tc);
    TrainResult result = train(tc, *task);
    save_checkpoint(out / "checkpoint.bin", result.checkpoint);
    write_loss_history_csv(out / "loss_history.csv", result.checkpoint.history);

    json summary;
    summary["experiment"] = registration ? "train-registration" : "train-sequence";
    summary["aborted"] = result.aborted;
    summary["steps"] = result.checkpoint.history.size();
    if (!result.checkpoint.history.empty()) {
        const StepRecord& last = result.checkpoint.history.back();
        summary["final"] = {{"base", last.base}, {"hinge_mean", last.hinge_mean},
                            {"total", last.total}};
    }

    if (cfg.contains("eval")) {
        const json& ej = cfg["eval"];
        if (registration) {
            RegistrationDatasetConfig test_cfg =
                dataset_from_json(ej.value("dataset", json::object()), tc.reg_dataset);
            RegistrationTask test_task(generate_registration_dataset(test_cfg), tc.reg_net);
            InferenceConfig icfg = inference_from_json(ej.value("inference", json::object()));
            EvalOutput eval = evaluate_registration(test_task, result.checkpoint.params, icfg);
            summary["test_metrics"] = metrics_json(eval.metrics);

            std::ostringstream os;
            CsvWriter csv(os);
            csv.row({"pair", "loss", "mse_euler_deg", "mse_t"});
            for (std::size_t i = 0; i < eval.predictions.size(); ++i) {
                RegistrationMetrics one = registration_metrics_one(
                    test_task.pair(i), eval.predictions[i], test_task.dim());
                csv.begin_row();
                csv.field(static_cast<double>(i));
                csv.field(eval.losses[i]);
                csv.field(one.mse_euler_deg);
                csv.field(one.mse_t);
                csv.end_row();
            }
            write_text(out / "test_pairs.csv", os.str());
        } else {
            SequenceDatasetConfig test_cfg = tc.seq_dataset;
            if (ej.contains("dataset")) {
                const json& ds = ej["dataset"];
                test_cfg.n_samples = ds.value("n_samples", test_cfg.n_samples);
                test_cfg.seed = ds.value("seed", test_cfg.seed + 1);
            } else {
                test_cfg.seed += 1;
            }
            SequenceTask test_task(generate_sequence_dataset(test_cfg), tc.seq_state_width);
            std::size_t correct = 0;
            double ce_sum = 0.0;
            for (std::size_t i = 0; i < test_task.dataset_size(); ++i) {
                std::vector<double> p =
                    test_task.predict_distribution(i, result.checkpoint.params);
                const auto& truth = test_task.ground_truth(i).values;
                std::size_t arg_p = 0, arg_t = 0;
                for (std::size_t k = 1; k < p.size(); ++k) {
                    if (p[k] > p[arg_p]) arg_p = k;
                    if (truth[k] > truth[arg_t]) arg_t = k;
                }
                if (arg_p == arg_t) ++correct;
                ce_sum += -std::log(std::max(p[arg_t], 1e-300));
            }
            summary["test_metrics"] = {
                {"accuracy", static_cast<double>(correct) /
                                 static_cast<double>(test_task.dataset_size())},
                {"mean_cross_entropy", ce_sum / static_cast<double>(test_task.dataset_size())}};
        }
    }
    write_text(out / "summary.json", summary.dump(2) + "\n");

    // Wall time is metadata, never part of the deterministic artifact set.
    std::ostringstream meta;
    meta << "train_wall_seconds: " << result.wall_seconds << "\n";
    write_text(out / "meta" / "train_time.txt", meta.str());
}

void run_audit(const json& cfg, const std::filesystem::path& out) {
    Target target = load_target(cfg);
    const std::size_t n_rays = cfg.value("n_rays", std::size_t{64});
    const std::size_t points_per_ray = cfg.value("points_per_ray", std::size_t{8});
    const double mu = cfg.value("mu", 1.0);
    const double audit_tol = cfg.value("audit_tol", target.from_checkpoint ? 1e-6 : 1e-9);
    const std::uint64_t seed = cfg.value("seed", std::uint64_t{0});

    NeighborhoodSampler sampler = target.task->default_sampler();
    if (cfg.contains("sampler_sigma"))
        sampler.sigma = cfg["sampler_sigma"].get<std::vector<double>>();

    std::vector<std::size_t> datapoints;
    if (cfg.contains("datapoints"))
        datapoints = cfg["datapoints"].get<std::vector<std::size_t>>();
    else {
        const std::size_t n = std::min<std::size_t>(cfg.value("n_datapoints", std::size_t{1}),
                                                    target.task->dataset_size());
        for (std::size_t i = 0; i < n; ++i) datapoints.push_back(i);
    }

    std::ostringstream os;
    CsvWriter csv(os);
    csv.row({"datapoint", "rate_con1", "rate_con2", "rate_con3", "rate_envelope", "max_con1",
             "max_con2", "max_con3", "max_envelope", "mu_hat", "l_hat"});
    std::vector<double> con2_rates;
    json reports = json::array();
    for (std::size_t i : datapoints) {
        RngStream rng = RngStream::derived(seed, "audit-" + std::to_string(i));
        AuditReport rep = audit_star_convexity(*target.task, i, target.params,
                                               target.task->ground_truth(i), sampler, n_rays,
                                               points_per_ray, mu, audit_tol, rng);
        con2_rates.push_back(rep.rate_con2);
        csv.begin_row();
        csv.field(static_cast<double>(i));
        csv.field(rep.rate_con1);
        csv.field(rep.rate_con2);
        csv.field(rep.rate_con3);
        csv.field(rep.rate_envelope);
        csv.field(rep.max_con1);
        csv.field(rep.max_con2);
        csv.field(rep.max_con3);
        csv.field(rep.max_envelope);
        csv.field(rep.mu_hat);
        csv.field(rep.l_hat);
        csv.end_row();
        reports.push_back(json::parse(rep.to_json()));
    }
    write_text(out / "audit.csv", os.str());
    write_text(out / "audit_report.json", reports.dump(2) + "\n");

    std::sort(con2_rates.begin(), con2_rates.end());
    json summary;
    summary["experiment"] = "audit";
    summary["datapoints"] = datapoints.size();
    summary["median_rate_con2"] =
        con2_rates.empty() ? 0.0 : con2_rates[con2_rates.size() / 2];
    write_text(out / "summary.json", summary.dump(2) + "\n");
}

void run_slice(const json& cfg, const std::filesystem::path& out) {
    Target target = load_target(cfg);
    const std::size_t datapoint = cfg.value("datapoint", std::size_t{0});
    SliceSpec spec;
    spec.center = target.task->ground_truth(datapoint);
    spec.dim_x = cfg.value("dim_x", std::size_t{0});
    spec.dim_y = cfg.value("dim_y", std::size_t{1});
    spec.half_width_x = cfg.value("half_width_x", 1.0);
    spec.half_width_y = cfg.value("half_width_y", 1.0);
    spec.resolution = cfg.value("resolution", std::size_t{41});

    SliceResult slice = slice_landscape(*target.task, datapoint, target.params, spec);
    {
        std::ostringstream os;
        write_slice_csv(os, slice);
        write_text(out / "slice.csv", os.str());
    }
    if (cfg.value("svg", true)) {
        std::ostringstream os;
        write_slice_svg(os, slice);
        write_text(out / "slice.svg", os.str());
    }
    json summary;
    summary["experiment"] = "slice";
    summary["center_value"] = slice.center_value;
    summary["local_minima"] = json::array();
    for (const auto& [ix, iy] : slice.local_minima) summary["local_minima"].push_back({ix, iy});
    summary["non_strict_cells"] = slice.non_strict_cells;
    write_text(out / "summary.json", summary.dump(2) + "\n");
}

void run_infer_sweep(const json& cfg, const std::filesystem::path& out) {
    Target target = load_target(cfg);
    if (!target.from_checkpoint) throw ConfigError("infer-sweep: target must be a checkpoint");
    auto* reg = dynamic_cast<RegistrationTask*>(target.task.get());
    if (!reg) throw ConfigError("infer-sweep: registration checkpoints only");

    std::vector<int> t_values = cfg.value("t_values", std::vector<int>{1, 2, 3, 4, 5});
    InferenceConfig base = inference_from_json(cfg.value("inference", json::object()));

    std::ostringstream os;
    CsvWriter csv(os);
    csv.row({"T", "mse_r", "mse_euler_deg", "mse_t", "mean_loss"});
    json summary;
    for (int t : t_values) {
        InferenceConfig icfg = base;
        icfg.max_iters = t;
        EvalOutput eval = evaluate_registration(*reg, target.params, icfg);
        csv.begin_row();
        csv.field(static_cast<double>(t));
        csv.field(eval.metrics.mse_r);
        csv.field(eval.metrics.mse_euler_deg);
        csv.field(eval.metrics.mse_t);
        csv.field(eval.metrics.mean_loss);
        csv.end_row();

        if (cfg.value("write_trajectories", false)) {
            for (std::size_t i = 0; i < eval.trajectories.size(); ++i) {
                std::ostringstream tos;
                write_trajectory_csv(tos, eval.trajectories[i]);
                write_text(out / "meta" / "trajectories" /
                               ("T" + std::to_string(t) + "_pair" + std::to_string(i) + ".csv"),
                           tos.str());
            }
        }
    }
    write_text(out / "sweep.csv", os.str());
    summary["experiment"] = "infer-sweep";
    summary["t_values"] = t_values;
    write_text(out / "summary.json", summary.dump(2) + "\n");
}

void run_averaging_sim(const json& cfg, const std::filesystem::path& out) {
    const int t_max = cfg.value("t_max", 64);
    const double error_std = cfg.value("error_std", 1.0);
    const std::size_t omega_dim = cfg.value("omega_dim", std::size_t{3});
    const int n_trials = cfg.value("n_trials", 10000);
    RngStream rng = RngStream::derived(cfg.value("seed", std::uint64_t{0}), "averaging-sim");

    AveragingCurve curve = simulate_averaging(t_max, error_std, omega_dim, n_trials, rng);
    std::ostringstream os;
    CsvWriter csv(os);
    csv.row({"T", "mse"});
    for (int t = 1; t <= t_max; ++t) {
        csv.begin_row();
        csv.field(static_cast<double>(t));
        csv.field(curve.mse[static_cast<std::size_t>(t - 1)]);
        csv.end_row();
    }
    write_text(out / "averaging.csv", os.str());
    json summary;
    summary["experiment"] = "averaging-sim";
    summary["loglog_slope"] = curve.loglog_slope;
    write_text(out / "summary.json", summary.dump(2) + "\n");
}

void run_icp_ablation(const json& cfg, const std::filesystem::path& out) {
    Target target = load_target(cfg);
    if (!target.from_checkpoint) throw ConfigError("icp-ablation: target must be a checkpoint");
    auto* reg = dynamic_cast<RegistrationTask*>(target.task.get());
    if (!reg) throw ConfigError("icp-ablation: registration checkpoints only");

    InferenceConfig icfg = inference_from_json(cfg.value("inference", json::object()));
    const int icp_iters = cfg.value("icp_max_iters", 50);
    const double icp_tol = cfg.value("icp_tol", 1e-12);

    EvalOutput net = evaluate_registration(*reg, target.params, icfg);

    std::vector<PredictionVector> refined;
    std::vector<double> refined_losses;
    std::size_t monotonicity_violations = 0;
    for (std::size_t i = 0; i < reg->dataset_size(); ++i) {
        IcpResult r = icp_refine(reg->pair(i), net.predictions[i], icp_iters, icp_tol);
        for (std::size_t k = 1; k < r.trajectory.losses.size(); ++k)
            if (r.trajectory.losses[k] > r.trajectory.losses[k - 1] + 1e-12)
                ++monotonicity_violations;
        refined.push_back(r.motion.to_omega());
        refined_losses.push_back(r.trajectory.losses.empty() ? 0.0 : r.trajectory.losses.back());
    }
    RegistrationMetrics with_icp = registration_metrics(*reg, refined, refined_losses);

    std::ostringstream os;
    CsvWriter csv(os);
    csv.row({"method", "mse_r", "mse_euler_deg", "mse_t"});
    csv.begin_row();
    csv.field(std::string("network"));
    csv.field(net.metrics.mse_r);
    csv.field(net.metrics.mse_euler_deg);
    csv.field(net.metrics.mse_t);
    csv.end_row();
    csv.begin_row();
    csv.field(std::string("network+icp"));
    csv.field(with_icp.mse_r);
    csv.field(with_icp.mse_euler_deg);
    csv.field(with_icp.mse_t);
    csv.end_row();
    write_text(out / "ablation.csv", os.str());

    json summary;
    summary["experiment"] = "icp-ablation";
    summary["without_refinement"] = metrics_json(net.metrics);
    summary["with_refinement"] = metrics_json(with_icp);
    summary["icp_monotonicity_violations"] = monotonicity_violations;
    write_text(out / "summary.json", summary.dump(2) + "\n");
}

void run_grid_search(const json& cfg, const std::filesystem::path& out) {
    if (!cfg.contains("train")) throw ConfigError("grid-search: missing train block");
    TrainConfig base = TrainConfig::from_json(cfg["train"].dump());
    const std::vector<double> rhos = cfg.value("rho", std::vector<double>{base.dlc.rho});
    const std::vector<double> lambdas = cfg.value("lambda", std::vector<double>{base.dlc.lambda});
    const std::vector<double> mus = cfg.value("mu", std::vector<double>{base.dlc.mu});

    InferenceConfig icfg = inference_from_json(
        cfg.contains("eval") ? cfg["eval"].value("inference", json::object()) : json::object());
    RegistrationDatasetConfig test_cfg = dataset_from_json(
        cfg.contains("eval") ? cfg["eval"].value("dataset", json::object()) : json::object(),
        base.reg_dataset);

    std::ostringstream os;
    CsvWriter csv(os);
    csv.row({"rho", "lambda", "mu", "mse_r", "mse_euler_deg", "mse_t", "final_total"});
    for (double rho : rhos)
        for (double lambda : lambdas)
            for (double mu : mus) {
                TrainConfig tc = base;
                tc.dlc.rho = rho;
                tc.dlc.lambda = lambda;
                tc.dlc.mu = mu;
                std::shared_ptr<Task> task = make_task(tc);
                TrainResult result = train(tc, *task);
                double final_total = result.checkpoint.history.empty()
                                         ? 0.0
                                         : result.checkpoint.history.back().total;
                RegistrationTask test_task(generate_registration_dataset(test_cfg), tc.reg_net);
                EvalOutput eval =
                    evaluate_registration(test_task, result.checkpoint.params, icfg);
                csv.begin_row();
                csv.field(rho);
                csv.field(lambda);
                csv.field(mu);
                csv.field(eval.metrics.mse_r);
                csv.field(eval.metrics.mse_euler_deg);
                csv.field(eval.metrics.mse_t);
                csv.field(final_total);
                csv.end_row();
            }
    write_text(out / "grid.csv", os.str());
    json summary;
    summary["experiment"] = "grid-search";
    summary["cells"] = rhos.size() * lambdas.size() * mus.size();
    write_text(out / "summary.json", summary.dump(2) + "\n");
}

}  // namespace

RegistrationMetrics registration_metrics_one(const PointCloudPair& pair,
                                             const PredictionVector& prediction,
                                             std::size_t dim) {
    RegistrationMetrics m;
    const RigidMotion truth = pair.motion;
    const RigidMotion pred = RigidMotion::from_omega(prediction, dim);
    const std::vector<double> r_true = rotation_matrix(truth.euler);
    const std::vector<double> r_pred = rotation_matrix(pred.euler);
    for (std::size_t k = 0; k < r_true.size(); ++k) {
        const double d = r_pred[k] - r_true[k];
        m.mse_r += d * d;
    }
    m.mse_r /= static_cast<double>(r_true.size());
    for (std::size_t k = 0; k < truth.euler.size(); ++k) {
        const double d = wrap_angle(pred.euler[k] - truth.euler[k]) * kRadToDeg;
        m.mse_euler_deg += d * d;
    }
    m.mse_euler_deg /= static_cast<double>(truth.euler.size());
    for (std::size_t k = 0; k < truth.translation.size(); ++k) {
        const double d = pred.translation[k] - truth.translation[k];
        m.mse_t += d * d;
    }
    m.mse_t /= static_cast<double>(truth.translation.size());
    return m;
}

RegistrationMetrics registration_metrics(const RegistrationTask& task,
                                         const std::vector<PredictionVector>& predictions,
                                         const std::vector<double>& losses) {
    if (predictions.size() != task.dataset_size())
        throw ConfigError("metrics: prediction count mismatch");
    RegistrationMetrics m;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        RegistrationMetrics one = registration_metrics_one(task.pair(i), predictions[i], task.dim());
        m.mse_r += one.mse_r;
        m.mse_euler_deg += one.mse_euler_deg;
        m.mse_t += one.mse_t;
    }
    const double n = static_cast<double>(predictions.size());
    m.mse_r /= n;
    m.mse_euler_deg /= n;
    m.mse_t /= n;
    for (double l : losses) m.mean_loss += l;
    if (!losses.empty()) m.mean_loss /= static_cast<double>(losses.size());
    return m;
}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {
        "train-registration", "train-sequence", "audit",        "slice",
        "infer-sweep",        "averaging-sim",  "icp-ablation", "grid-search"};
    return names;
}

namespace {

void collect_seeds(const json& node, const std::string& path, json& out) {
    if (node.is_object()) {
        for (const auto& [key, value] : node.items()) {
            const std::string child = path.empty() ? key : path + "." + key;
            if (key == "seed" && value.is_number())
                out[child] = value;
            else
                collect_seeds(value, child, out);
        }
    } else if (node.is_array()) {
        for (std::size_t i = 0; i < node.size(); ++i)
            collect_seeds(node[i], path + "[" + std::to_string(i) + "]", out);
    }
}

}  // namespace

void run_experiment(const std::string& name, const std::string& config_json,
                    const std::filesystem::path& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    json cfg = parse_config(config_json);
    std::filesystem::create_directories(out_dir);
    write_text(out_dir / "config.json", cfg.dump(2) + "\n");
    json seeds = json::object();
    collect_seeds(cfg, "", seeds);
    write_text(out_dir / "seeds.json", seeds.dump(2) + "\n");

    if (name == "train-registration")
        run_train(cfg, out_dir, true);
    else if (name == "train-sequence")
        run_train(cfg, out_dir, false);
    else if (name == "audit")
        run_audit(cfg, out_dir);
    else if (name == "slice")
        run_slice(cfg, out_dir);
    else if (name == "infer-sweep")
        run_infer_sweep(cfg, out_dir);
    else if (name == "averaging-sim")
        run_averaging_sim(cfg, out_dir);
    else if (name == "icp-ablation")
        run_icp_ablation(cfg, out_dir);
    else if (name == "grid-search")
        run_grid_search(cfg, out_dir);
    else
        throw ConfigError("unknown experiment '" + name + "'");

    write_run_info(out_dir,
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

}  // namespace dlc
