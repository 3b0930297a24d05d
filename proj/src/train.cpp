#include "dlc/train.hpp"

#include <chrono>
#include <cmath>

#include <json.hpp>

namespace dlc {

using json = nlohmann::json;

void TrainConfig::validate() const {
    if (task_id != "registration" && task_id != "sequence")
        throw ConfigError("train: unknown task '" + task_id + "'");
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    optimizer.validate();
    dlc.validate();
    if (dlc.trainable && (dlc.lambda <= 0.0 || dlc.lambda >= 1.0 || dlc.mu <= 0.0))
        throw ConfigError("train: trainable reparametrization needs lambda in (0,1) and mu > 0");
}

namespace {

const char* kind_name(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }
const char* mode_name(SamplerMode m) {
    return m == SamplerMode::gaussian_additive ? "gaussian-additive" : "noisy-one-hot-softmax";
}

json sampler_to_json(const NeighborhoodSampler& s) {
    return json{{"mode", mode_name(s.mode)}, {"sigma", s.sigma}};
}

NeighborhoodSampler sampler_from_json(const json& j) {
    NeighborhoodSampler s;
    const std::string mode = j.value("mode", "gaussian-additive");
    if (mode == "gaussian-additive")
        s.mode = SamplerMode::gaussian_additive;
    else if (mode == "noisy-one-hot-softmax")
        s.mode = SamplerMode::noisy_one_hot_softmax;
    else
        throw ConfigError("sampler: unknown mode '" + mode + "'");
    s.sigma = j.value("sigma", std::vector<double>{});
    return s;
}

}  // namespace

std::string TrainConfig::to_json() const {
    json j;
    j["task"] = task_id;
    j["seed"] = seed;
    j["epochs"] = epochs;
    j["batch_mean"] = batch_mean;
    j["optimizer"] = {{"kind", kind_name(optimizer.kind)}, {"lr", optimizer.lr},
                      {"weight_decay", optimizer.weight_decay}, {"beta1", optimizer.beta1},
                      {"beta2", optimizer.beta2}, {"eps", optimizer.eps}};
    j["dlc"] = {{"enabled", dlc.enabled},     {"lambda", dlc.lambda},
                {"mu", dlc.mu},               {"rho", dlc.rho},
                {"n_samples", dlc.n_samples}, {"trainable", dlc.trainable},
                {"sampler", sampler_to_json(dlc.sampler)}};
    j["registration"] = {
        {"dataset",
         {{"n_pairs", reg_dataset.n_pairs},
          {"n_points", reg_dataset.n_points},
          {"dim", reg_dataset.dim},
          {"angle_range", reg_dataset.angle_range},
          {"trans_range", reg_dataset.trans_range},
          {"jitter_sigma", reg_dataset.jitter_sigma},
          {"partial_overlap_fraction", reg_dataset.partial_overlap_fraction},
          {"seed", reg_dataset.seed}}},
        {"net",
         {{"width", reg_net.width},
          {"feature_dim", reg_net.feature_dim},
          {"identity_bypass", reg_net.identity_bypass},
          {"chamfer", reg_net.chamfer}}}};
    j["sequence"] = {{"dataset",
                      {{"n_samples", seq_dataset.n_samples},
                       {"t_steps", seq_dataset.t_steps},
                       {"n_classes", seq_dataset.n_classes},
                       {"seed", seq_dataset.seed}}},
                     {"state_width", seq_state_width}};
    j["checkpoint_dir"] = checkpoint_dir;
    return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("train config: malformed JSON: ") + e.what());
    }
    TrainConfig cfg;
    try {
        cfg.task_id = j.value("task", cfg.task_id);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.epochs = j.value("epochs", cfg.epochs);
        cfg.batch_mean = j.value("batch_mean", cfg.batch_mean);
        if (j.contains("optimizer")) {
            const json& o = j["optimizer"];
            const std::string kind = o.value("kind", "adam");
            if (kind == "sgd")
                cfg.optimizer.kind = OptimizerKind::sgd;
            else if (kind == "adam")
                cfg.optimizer.kind = OptimizerKind::adam;
            else
                throw ConfigError("optimizer: unknown kind '" + kind + "'");
            cfg.optimizer.lr = o.value("lr", cfg.optimizer.lr);
            cfg.optimizer.weight_decay = o.value("weight_decay", cfg.optimizer.weight_decay);
            cfg.optimizer.beta1 = o.value("beta1", cfg.optimizer.beta1);
            cfg.optimizer.beta2 = o.value("beta2", cfg.optimizer.beta2);
            cfg.optimizer.eps = o.value("eps", cfg.optimizer.eps);
        }
        if (j.contains("dlc")) {
            const json& d = j["dlc"];
            cfg.dlc.enabled = d.value("enabled", cfg.dlc.enabled);
            cfg.dlc.lambda = d.value("lambda", cfg.dlc.lambda);
            cfg.dlc.mu = d.value("mu", cfg.dlc.mu);
            cfg.dlc.rho = d.value("rho", cfg.dlc.rho);
            cfg.dlc.n_samples = d.value("n_samples", cfg.dlc.n_samples);
            cfg.dlc.trainable = d.value("trainable", cfg.dlc.trainable);
            if (d.contains("sampler")) cfg.dlc.sampler = sampler_from_json(d["sampler"]);
        }
        if (j.contains("registration")) {
            const json& r = j["registration"];
            if (r.contains("dataset")) {
                const json& ds = r["dataset"];
                cfg.reg_dataset.n_pairs = ds.value("n_pairs", cfg.reg_dataset.n_pairs);
                cfg.reg_dataset.n_points = ds.value("n_points", cfg.reg_dataset.n_points);
                cfg.reg_dataset.dim = ds.value("dim", cfg.reg_dataset.dim);
                cfg.reg_dataset.angle_range = ds.value("angle_range", cfg.reg_dataset.angle_range);
                cfg.reg_dataset.trans_range = ds.value("trans_range", cfg.reg_dataset.trans_range);
                cfg.reg_dataset.jitter_sigma =
                    ds.value("jitter_sigma", cfg.reg_dataset.jitter_sigma);
                cfg.reg_dataset.partial_overlap_fraction =
                    ds.value("partial_overlap_fraction", cfg.reg_dataset.partial_overlap_fraction);
                cfg.reg_dataset.seed = ds.value("seed", cfg.reg_dataset.seed);
            }
            if (r.contains("net")) {
                const json& n = r["net"];
                cfg.reg_net.width = n.value("width", cfg.reg_net.width);
                cfg.reg_net.feature_dim = n.value("feature_dim", cfg.reg_net.feature_dim);
                cfg.reg_net.identity_bypass = n.value("identity_bypass", cfg.reg_net.identity_bypass);
                cfg.reg_net.chamfer = n.value("chamfer", cfg.reg_net.chamfer);
            }
        }
        if (j.contains("sequence")) {
            const json& sq = j["sequence"];
            if (sq.contains("dataset")) {
                const json& ds = sq["dataset"];
                cfg.seq_dataset.n_samples = ds.value("n_samples", cfg.seq_dataset.n_samples);
                cfg.seq_dataset.t_steps = ds.value("t_steps", cfg.seq_dataset.t_steps);
                cfg.seq_dataset.n_classes = ds.value("n_classes", cfg.seq_dataset.n_classes);
                cfg.seq_dataset.seed = ds.value("seed", cfg.seq_dataset.seed);
            }
            cfg.seq_state_width = sq.value("state_width", cfg.seq_state_width);
        }
        cfg.checkpoint_dir = j.value("checkpoint_dir", cfg.checkpoint_dir);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("train config: bad field: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

TrainConfig preset_config(const std::string& name) {
    TrainConfig cfg;
    // Shared defaults: Adam(lr 1e-3, weight decay 1e-4), 3 neighborhood
    // samples, 5 test-time iterations downstream.
    cfg.dlc.n_samples = 3;
    if (name == "registration-soft") {
        cfg.dlc.rho = 0.6;
        cfg.dlc.lambda = 0.5;
        cfg.dlc.mu = 4.0;
        cfg.dlc.sampler.mode = SamplerMode::gaussian_additive;
        cfg.dlc.sampler.sigma = {0.5, 0.25};
        return cfg;
    }
    if (name == "registration-strong") {
        cfg.dlc.rho = 1.0;
        cfg.dlc.lambda = 0.5;
        cfg.dlc.mu = 4.0;
        cfg.dlc.sampler.mode = SamplerMode::gaussian_additive;
        cfg.dlc.sampler.sigma = {0.5, 0.25};
        return cfg;
    }
    if (name == "default") {
        cfg.dlc.mu = 4.0;
        cfg.dlc.lambda = 0.5;
        cfg.dlc.rho = 0.2;
        cfg.dlc.sampler.mode = SamplerMode::gaussian_additive;
        cfg.dlc.sampler.sigma = {0.5, 0.25};
        return cfg;
    }
    if (name == "sequence-sgd") {
        cfg.task_id = "sequence";
        cfg.optimizer.kind = OptimizerKind::sgd;
        cfg.optimizer.lr = 0.05;
        cfg.optimizer.weight_decay = 0.0;
        cfg.dlc.rho = 0.2;
        cfg.dlc.mu = 1.0;
        cfg.dlc.sampler.mode = SamplerMode::noisy_one_hot_softmax;
        cfg.dlc.sampler.sigma = {1.0};
        return cfg;
    }
    throw ConfigError("unknown preset '" + name + "'");
}

std::shared_ptr<Task> make_task(const TrainConfig& cfg) {
    cfg.validate();
    if (cfg.task_id == "registration")
        return std::make_shared<RegistrationTask>(generate_registration_dataset(cfg.reg_dataset),
                                                  cfg.reg_net);
    return std::make_shared<SequenceTask>(generate_sequence_dataset(cfg.seq_dataset),
                                          cfg.seq_state_width);
}

TrainResult train(const TrainConfig& cfg, const Task& task, const Checkpoint* resume) {
    cfg.validate();
    if (task.dataset_size() == 0) throw ConfigError("train: empty dataset");
    const auto wall_start = std::chrono::steady_clock::now();

    ParamSet params;
    RngStream order_rng = RngStream::derived(cfg.seed, "order");
    RngStream omega_rng = RngStream::derived(cfg.seed, "omega");
    std::uint64_t start_epoch = 0;
    std::vector<StepRecord> history;

    if (resume) {
        params = resume->params;
        order_rng.restore(resume->order_rng_state);
        omega_rng.restore(resume->omega_rng_state);
        start_epoch = resume->epoch;
        history = resume->history;
    } else {
        RngStream init_rng = RngStream::derived(cfg.seed, "init");
        params = task.init_params(init_rng);
        if (cfg.dlc.enabled && cfg.dlc.trainable) {
            params.add(DlcConfig::lambda_param,
                       Tensor::scalar(std::log(cfg.dlc.lambda / (1.0 - cfg.dlc.lambda))));
            params.add(DlcConfig::mu_param, Tensor::scalar(std::log(cfg.dlc.mu)));
        }
    }

    Optimizer opt(cfg.optimizer, params);
    if (resume && !resume->optimizer_state.empty()) opt.restore_state(resume->optimizer_state);

    TrainResult result;
    const std::size_t n = task.dataset_size();
    std::vector<std::size_t> order(n);
    std::uint64_t completed_epochs = start_epoch;

    for (std::uint64_t epoch = start_epoch; epoch < static_cast<std::uint64_t>(cfg.epochs);
         ++epoch) {
        // Seeded shuffle: every datapoint exactly once per epoch.
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[order_rng.uniform_index(i)]);

        Gradients batch_accum;
        double batch_base = 0.0, batch_hinge = 0.0, batch_total = 0.0;

        for (std::size_t step = 0; step < n; ++step) {
            DlcLossResult loss;
            try {
                loss = dlc_loss(task, order[step], params, cfg.dlc, omega_rng);
            } catch (const NumericError& e) {
                result.aborted = true;
                result.abort_reason = e.what();
                break;
            }

            if (!cfg.batch_mean) {
                opt.step(params, loss.grads);
                history.push_back({loss.base, loss.hinge_mean, loss.loss});
            } else {
                if (batch_accum.by_param.empty()) {
                    batch_accum.by_param.resize(params.size());
                    for (std::size_t p = 0; p < params.size(); ++p)
                        batch_accum.by_param[p] = Tensor(params.tensor(p).shape, 0.0);
                }
                for (std::size_t p = 0; p < params.size(); ++p)
                    for (std::size_t k = 0; k < batch_accum.by_param[p].size(); ++k)
                        batch_accum.by_param[p][k] += loss.grads.by_param[p][k];
                batch_base += loss.base;
                batch_hinge += loss.hinge_mean;
                batch_total += loss.loss;
            }
        }
        if (result.aborted) break;

        if (cfg.batch_mean) {
            const double inv = 1.0 / static_cast<double>(n);
            for (auto& t : batch_accum.by_param)
                for (double& v : t.data) v *= inv;
            opt.step(params, batch_accum);
            history.push_back({batch_base * inv, batch_hinge * inv, batch_total * inv});
        }
        completed_epochs = epoch + 1;
    }

    Checkpoint ckpt;
    ckpt.config_echo = cfg.to_json();
    ckpt.epoch = completed_epochs;
    ckpt.aborted = result.aborted;
    ckpt.order_rng_state = order_rng.state();
    ckpt.omega_rng_state = omega_rng.state();
    ckpt.optimizer_state = opt.serialize_state();
    ckpt.params = params;
    ckpt.history = std::move(history);
    result.checkpoint = std::move(ckpt);

    if (!cfg.checkpoint_dir.empty()) {
        std::filesystem::create_directories(cfg.checkpoint_dir);
        save_checkpoint(std::filesystem::path(cfg.checkpoint_dir) / "checkpoint.bin",
                        result.checkpoint);
    }
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return result;
}

}  // namespace dlc
