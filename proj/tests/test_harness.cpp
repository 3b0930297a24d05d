#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "dlc/experiment.hpp"
#include "dlc/oracles.hpp"

using namespace dlc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

/// Map of relative path -> bytes for all deterministic artifacts (meta/
/// holds timestamps and wall clocks and is excluded by contract).
std::map<std::string, std::string> dir_contents(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string rel = fs::relative(entry.path(), dir).string();
        if (rel.rfind("meta/", 0) == 0 || rel.rfind("meta\\", 0) == 0) continue;
        out[rel] = slurp(entry.path());
    }
    return out;
}

TrainConfig tiny_registration_config(std::uint64_t seed) {
    TrainConfig cfg = preset_config("default");
    cfg.seed = seed;
    cfg.epochs = 2;
    cfg.reg_dataset.n_pairs = 6;
    cfg.reg_dataset.n_points = 8;
    cfg.reg_dataset.dim = 2;
    cfg.reg_dataset.seed = seed;
    cfg.reg_net.width = 4;
    cfg.reg_net.feature_dim = 3;
    return cfg;
}

/// Quadratic toy task that records which datapoint indices were visited.
class ProbeTask final : public Task {
  public:
    explicit ProbeTask(std::size_t n) : layout_(OmegaLayout::linear_only(2)) {
        for (std::size_t i = 0; i < n; ++i)
            truths_.emplace_back(std::vector<double>{static_cast<double>(i), 0.0}, layout_);
    }
    std::string name() const override { return "probe"; }
    const OmegaLayout& omega_layout() const override { return layout_; }
    std::size_t dataset_size() const override { return truths_.size(); }
    const PredictionVector& ground_truth(std::size_t i) const override { return truths_[i]; }
    ad::Var build_loss(ad::Tape& t, std::size_t i, const BoundParams& p,
                       ad::Var omega) const override {
        visited.push_back(i);
        ad::Var diff = t.sub(omega, t.leaf(truths_[i].as_tensor()));
        return t.add(t.squared_norm(diff), t.squared_norm(p.var("w")));
    }
    NeighborhoodSampler default_sampler() const override {
        NeighborhoodSampler s;
        s.sigma = {0.5};
        return s;
    }
    ParamSet init_params(RngStream& rng) const override {
        ParamSet p;
        p.add("w", Tensor::from_vector({rng.normal()}));
        return p;
    }
    mutable std::vector<std::size_t> visited;

  private:
    OmegaLayout layout_;
    std::vector<PredictionVector> truths_;
};

}  // namespace

TEST_CASE("checkpoint: save -> load -> save is byte-identical") {
    Checkpoint ckpt;
    ckpt.config_echo = "{\"demo\":1}";
    ckpt.epoch = 3;
    ckpt.order_rng_state = {1, 2, 3, 4, 5, 0};
    ckpt.omega_rng_state = {9, 8, 7, 6, 5, 1};
    ckpt.optimizer_state = {1.0, 0.25, -3.5};
    ckpt.params.add("w", Tensor::matrix(2, 2, {1.0, 2.0, 3.0, 4.0}));
    ckpt.history = {{0.5, 0.1, 0.6}, {0.4, 0.05, 0.45}};

    const fs::path dir = fresh_dir("dlc_ckpt");
    save_checkpoint(dir / "a.bin", ckpt);
    Checkpoint loaded = load_checkpoint(dir / "a.bin");
    save_checkpoint(dir / "b.bin", loaded);
    CHECK(slurp(dir / "a.bin") == slurp(dir / "b.bin"));
    CHECK(loaded.epoch == 3);
    CHECK(loaded.params.tensor("w").data == std::vector<double>{1.0, 2.0, 3.0, 4.0});
    CHECK(loaded.history.size() == 2);
}

TEST_CASE("checkpoint: truncation and corruption are detected, version checked") {
    Checkpoint ckpt;
    ckpt.config_echo = "{}";
    ckpt.params.add("w", Tensor::from_vector({1.0, 2.0}));
    const fs::path dir = fresh_dir("dlc_ckpt_bad");
    save_checkpoint(dir / "good.bin", ckpt);
    const std::string bytes = slurp(dir / "good.bin");

    {
        std::ofstream os(dir / "trunc.bin", std::ios::binary);
        os.write(bytes.data(), static_cast<long>(bytes.size() / 2));
    }
    CHECK_THROWS_AS(load_checkpoint(dir / "trunc.bin"), CheckpointError);

    {
        std::string corrupt = bytes;
        corrupt[corrupt.size() / 2] ^= 0x40;
        std::ofstream os(dir / "corrupt.bin", std::ios::binary);
        os.write(corrupt.data(), static_cast<long>(corrupt.size()));
    }
    CHECK_THROWS_AS(load_checkpoint(dir / "corrupt.bin"), CheckpointError);

    {
        std::string wrong = bytes;
        wrong[8] = 9;  // version word
        std::ofstream os(dir / "version.bin", std::ios::binary);
        os.write(wrong.data(), static_cast<long>(wrong.size()));
    }
    CHECK_THROWS_WITH_AS(load_checkpoint(dir / "version.bin"), doctest::Contains("version"),
                         CheckpointError);
}

TEST_CASE("train: identical configs give byte-identical checkpoints") {
    TrainConfig cfg = tiny_registration_config(0);
    auto task_a = make_task(cfg);
    auto task_b = make_task(cfg);
    TrainResult a = train(cfg, *task_a);
    TrainResult b = train(cfg, *task_b);
    CHECK(serialize_checkpoint(a.checkpoint) == serialize_checkpoint(b.checkpoint));
}

TEST_CASE("train: rho = 0 is bit-identical to dlc-disabled training") {
    TrainConfig with_rho_zero = tiny_registration_config(3);
    with_rho_zero.dlc.enabled = true;
    with_rho_zero.dlc.rho = 0.0;

    TrainConfig disabled = tiny_registration_config(3);
    disabled.dlc.enabled = false;

    auto task_a = make_task(with_rho_zero);
    auto task_b = make_task(disabled);
    TrainResult a = train(with_rho_zero, *task_a);
    TrainResult b = train(disabled, *task_b);
    // configs differ in the echo only; the training trajectory must not
    CHECK(serialize_checkpoint_body(a.checkpoint) == serialize_checkpoint_body(b.checkpoint));
}

TEST_CASE("train: one epoch touches every datapoint exactly once, shuffled") {
    ProbeTask task(16);
    TrainConfig cfg;
    cfg.task_id = "registration";  // unused: we pass the task directly
    cfg.epochs = 1;
    cfg.seed = 5;
    cfg.dlc.enabled = false;
    cfg.optimizer.kind = OptimizerKind::sgd;
    cfg.optimizer.lr = 0.01;
    cfg.optimizer.weight_decay = 0.0;
    train(cfg, task);

    REQUIRE(task.visited.size() == 16);
    std::vector<bool> seen(16, false);
    bool in_order = true;
    for (std::size_t k = 0; k < task.visited.size(); ++k) {
        seen[task.visited[k]] = true;
        if (task.visited[k] != k) in_order = false;
    }
    for (bool s : seen) CHECK(s);
    CHECK_FALSE(in_order);  // seeded shuffle, not the identity order

    TrainConfig bad = cfg;
    bad.epochs = 0;
    CHECK_THROWS_AS(train(bad, task), ConfigError);
}

TEST_CASE("train: loss decomposition holds at every recorded step") {
    TrainConfig cfg = tiny_registration_config(1);
    cfg.dlc.rho = 0.7;
    auto task = make_task(cfg);
    TrainResult r = train(cfg, *task);
    REQUIRE(!r.checkpoint.history.empty());
    for (const StepRecord& s : r.checkpoint.history)
        CHECK(std::abs(s.total - (s.base + cfg.dlc.rho * s.hinge_mean)) <= 1e-12);
}

TEST_CASE("train: resumed training equals uninterrupted training") {
    TrainConfig full = tiny_registration_config(7);
    full.epochs = 4;
    auto task = make_task(full);
    TrainResult whole = train(full, *task);

    TrainConfig first = full;
    first.epochs = 2;
    TrainResult part = train(first, *task);
    CHECK(part.checkpoint.epoch == 2);
    TrainResult rest = train(full, *task, &part.checkpoint);

    CHECK(serialize_checkpoint(whole.checkpoint) == serialize_checkpoint(rest.checkpoint));
}

TEST_CASE("train: non-finite loss aborts with the last good parameters") {
    // Concave objective: gradient descent runs away until the square
    // overflows; training must flag the abort and keep finite params.
    class Runaway final : public Task {
      public:
        Runaway() : layout_(OmegaLayout::linear_only(1)), star_({0.0}, layout_) {}
        std::string name() const override { return "runaway"; }
        const OmegaLayout& omega_layout() const override { return layout_; }
        std::size_t dataset_size() const override { return 1; }
        const PredictionVector& ground_truth(std::size_t) const override { return star_; }
        ad::Var build_loss(ad::Tape& t, std::size_t, const BoundParams& p,
                           ad::Var) const override {
            return t.scalar_mul(t.squared_norm(p.var("w")), -1.0);
        }
        NeighborhoodSampler default_sampler() const override {
            NeighborhoodSampler s;
            s.sigma = {1.0};
            return s;
        }
        ParamSet init_params(RngStream&) const override {
            ParamSet p;
            p.add("w", Tensor::from_vector({1.0}));
            return p;
        }

      private:
        OmegaLayout layout_;
        PredictionVector star_;
    } task;

    TrainConfig cfg;
    cfg.epochs = 2000;
    cfg.dlc.enabled = false;
    cfg.optimizer.kind = OptimizerKind::sgd;
    cfg.optimizer.lr = 10.0;
    cfg.optimizer.weight_decay = 0.0;
    TrainResult r = train(cfg, task);
    CHECK(r.aborted);
    CHECK(r.checkpoint.aborted);
    CHECK(std::isfinite(r.checkpoint.params.tensor("w")[0]));
}

TEST_CASE("train: batch-mean mode takes one step per epoch") {
    TrainConfig cfg = tiny_registration_config(2);
    cfg.batch_mean = true;
    cfg.epochs = 3;
    auto task = make_task(cfg);
    TrainResult r = train(cfg, *task);
    CHECK(r.checkpoint.history.size() == 3);
}

TEST_CASE("presets carry the documented hyperparameters") {
    TrainConfig soft = preset_config("registration-soft");
    CHECK(soft.dlc.n_samples == 3);
    CHECK(soft.dlc.rho == 0.6);
    TrainConfig strong = preset_config("registration-strong");
    CHECK(strong.dlc.rho == 1.0);
    TrainConfig dflt = preset_config("default");
    CHECK(dflt.dlc.mu == 4.0);
    CHECK(dflt.dlc.lambda == 0.5);
    CHECK(dflt.dlc.rho == 0.2);
    CHECK(dflt.optimizer.lr == 1e-3);
    CHECK(dflt.optimizer.weight_decay == 1e-4);
    TrainConfig seq = preset_config("sequence-sgd");
    CHECK(seq.optimizer.kind == OptimizerKind::sgd);
    CHECK(seq.task_id == "sequence");
    CHECK_THROWS_AS(preset_config("nope"), ConfigError);
}

TEST_CASE("TrainConfig: JSON round trip is stable") {
    TrainConfig cfg = tiny_registration_config(9);
    cfg.dlc.trainable = false;
    const std::string a = cfg.to_json();
    TrainConfig back = TrainConfig::from_json(a);
    CHECK(back.to_json() == a);

    CHECK_THROWS_AS(TrainConfig::from_json("{nonsense"), ConfigError);
    CHECK_THROWS_AS(TrainConfig::from_json("{\"task\":\"bogus\"}"), ConfigError);
}

TEST_CASE("run_experiment: unknown name is rejected") {
    CHECK_THROWS_AS(run_experiment("not-an-experiment", "{}", fresh_dir("dlc_exp_bad")),
                    ConfigError);
    // the registry lists exactly the supported names
    CHECK(experiment_names().size() == 8);
}

TEST_CASE("run_experiment: averaging-sim artifacts and determinism") {
    nlohmann::json cfg;
    cfg["t_max"] = 32;
    cfg["n_trials"] = 2000;
    cfg["omega_dim"] = 3;
    cfg["error_std"] = 1.0;
    cfg["seed"] = 0;

    const fs::path a = fresh_dir("dlc_avg_a");
    const fs::path b = fresh_dir("dlc_avg_b");
    run_experiment("averaging-sim", cfg.dump(), a);
    run_experiment("averaging-sim", cfg.dump(), b);

    CHECK(fs::exists(a / "averaging.csv"));
    CHECK(fs::exists(a / "summary.json"));
    CHECK(fs::exists(a / "meta" / "run_info.txt"));
    CHECK(dir_contents(a) == dir_contents(b));

    nlohmann::json summary = nlohmann::json::parse(slurp(a / "summary.json"));
    const double slope = summary["loglog_slope"].get<double>();
    CHECK(slope < -0.8);
    CHECK(slope > -1.2);
}

TEST_CASE("run_experiment: audit on the quadratic oracle reports zero violations") {
    nlohmann::json cfg;
    cfg["target"] = {{"kind", "oracle"}, {"name", "quadratic"}, {"dim", 2}};
    cfg["n_rays"] = 32;
    cfg["points_per_ray"] = 4;
    cfg["mu"] = 1.0;
    cfg["seed"] = 0;

    const fs::path dir = fresh_dir("dlc_audit_exp");
    run_experiment("audit", cfg.dump(), dir);
    const std::string csv = slurp(dir / "audit.csv");
    std::istringstream is(csv);
    std::string header, row;
    std::getline(is, header);
    std::getline(is, row);
    CHECK(header.rfind("datapoint,rate_con1,rate_con2", 0) == 0);
    CHECK(row.rfind("0,0,0,0,0,", 0) == 0);  // all four rates are zero
}

TEST_CASE("run_experiment: slice and train-registration produce their artifacts") {
    nlohmann::json slice_cfg;
    slice_cfg["target"] = {{"kind", "oracle"}, {"name", "double-well"}, {"dim", 2}};
    slice_cfg["half_width_x"] = 3.0;
    slice_cfg["half_width_y"] = 3.0;
    slice_cfg["resolution"] = 41;
    const fs::path sdir = fresh_dir("dlc_slice_exp");
    run_experiment("slice", slice_cfg.dump(), sdir);
    CHECK(fs::exists(sdir / "slice.csv"));
    CHECK(fs::exists(sdir / "slice.svg"));
    nlohmann::json ssum = nlohmann::json::parse(slurp(sdir / "summary.json"));
    CHECK(ssum["local_minima"].size() == 2);

    TrainConfig tc = tiny_registration_config(0);
    nlohmann::json cfg;
    cfg["train"] = nlohmann::json::parse(tc.to_json());
    cfg["eval"] = {{"dataset", {{"n_pairs", 4}, {"seed", 101}}},
                   {"inference", {{"max_iters", 3}, {"step_size", 0.05}, {"mode", "averaged"}}}};
    const fs::path tdir = fresh_dir("dlc_train_exp");
    run_experiment("train-registration", cfg.dump(), tdir);
    CHECK(fs::exists(tdir / "checkpoint.bin"));
    CHECK(fs::exists(tdir / "loss_history.csv"));
    CHECK(fs::exists(tdir / "test_pairs.csv"));
    nlohmann::json summary = nlohmann::json::parse(slurp(tdir / "summary.json"));
    CHECK(summary.contains("test_metrics"));
    CHECK(summary["test_metrics"]["mse_euler_deg"].get<double>() >= 0.0);

    // checkpoint target reuse: infer-sweep over the trained model
    nlohmann::json sweep;
    sweep["target"] = {{"kind", "checkpoint"},
                       {"path", (tdir / "checkpoint.bin").string()},
                       {"dataset", {{"n_pairs", 4}, {"seed", 101}}}};
    sweep["t_values"] = {1, 2};
    sweep["inference"] = {{"step_size", 0.05}, {"mode", "averaged"}};
    const fs::path wdir = fresh_dir("dlc_sweep_exp");
    run_experiment("infer-sweep", sweep.dump(), wdir);
    const std::string sweep_csv = slurp(wdir / "sweep.csv");
    CHECK(sweep_csv.rfind("T,mse_r,mse_euler_deg,mse_t,mean_loss\n", 0) == 0);
    CHECK(std::count(sweep_csv.begin(), sweep_csv.end(), '\n') == 3);

    // icp ablation over the same checkpoint
    nlohmann::json icp;
    icp["target"] = sweep["target"];
    icp["inference"] = {{"max_iters", 2}, {"step_size", 0.05}, {"mode", "averaged"}};
    const fs::path idir = fresh_dir("dlc_icp_exp");
    run_experiment("icp-ablation", icp.dump(), idir);
    const std::string ablation = slurp(idir / "ablation.csv");
    CHECK(ablation.find("network") != std::string::npos);
    CHECK(ablation.find("network+icp") != std::string::npos);
    nlohmann::json isum = nlohmann::json::parse(slurp(idir / "summary.json"));
    CHECK(isum["icp_monotonicity_violations"].get<int>() == 0);
}

TEST_CASE("run_experiment: train-registration directories are byte-identical") {
    TrainConfig tc = tiny_registration_config(6);
    nlohmann::json cfg;
    cfg["train"] = nlohmann::json::parse(tc.to_json());
    cfg["eval"] = {{"dataset", {{"n_pairs", 3}, {"seed", 60}}},
                   {"inference", {{"max_iters", 2}, {"step_size", 0.05}}}};
    const fs::path a = fresh_dir("dlc_det_a");
    const fs::path b = fresh_dir("dlc_det_b");
    run_experiment("train-registration", cfg.dump(), a);
    run_experiment("train-registration", cfg.dump(), b);
    CHECK(dir_contents(a) == dir_contents(b));
}

TEST_CASE("run_experiment: sequence training reaches sane accuracy") {
    TrainConfig tc = preset_config("sequence-sgd");
    tc.seed = 0;
    tc.epochs = 6;
    tc.seq_dataset.n_samples = 64;
    tc.seq_dataset.t_steps = 12;
    tc.seq_dataset.seed = 0;
    tc.seq_state_width = 6;

    nlohmann::json cfg;
    cfg["train"] = nlohmann::json::parse(tc.to_json());
    cfg["eval"] = {{"dataset", {{"n_samples", 64}, {"seed", 1}}}};
    const fs::path dir = fresh_dir("dlc_seq_exp");
    run_experiment("train-sequence", cfg.dump(), dir);
    nlohmann::json summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary["test_metrics"]["accuracy"].get<double>() > 0.6);
}

TEST_CASE("run_experiment: grid-search emits one row per cell, in order") {
    TrainConfig tc = tiny_registration_config(4);
    tc.epochs = 1;
    tc.reg_dataset.n_pairs = 3;
    nlohmann::json cfg;
    cfg["train"] = nlohmann::json::parse(tc.to_json());
    cfg["rho"] = {0.0, 0.5};
    cfg["mu"] = {1.0, 4.0};
    cfg["eval"] = {{"dataset", {{"n_pairs", 2}, {"seed", 55}}},
                   {"inference", {{"max_iters", 1}, {"step_size", 0.05}}}};
    const fs::path dir = fresh_dir("dlc_grid_exp");
    run_experiment("grid-search", cfg.dump(), dir);
    const std::string grid = slurp(dir / "grid.csv");
    CHECK(std::count(grid.begin(), grid.end(), '\n') == 5);  // header + 4 cells
    // deterministic ordering: rho-major, then lambda, then mu
    std::istringstream is(grid);
    std::string line;
    std::getline(is, line);
    std::getline(is, line);
    CHECK(line.rfind("0,0.5,1,", 0) == 0);
}
