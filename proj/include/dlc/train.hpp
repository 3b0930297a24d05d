#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dlc/dlc_loss.hpp"
#include "dlc/optim.hpp"
#include "dlc/registration.hpp"
#include "dlc/sequence.hpp"

namespace dlc {

struct TrainConfig {
    std::string task_id = "registration";  // registration | sequence
    std::uint64_t seed = 0;
    int epochs = 10;
    bool batch_mean = false;  // one mean-gradient step per epoch instead of per datapoint
    OptimizerConfig optimizer;
    DlcConfig dlc;
    RegistrationDatasetConfig reg_dataset;
    PointNetConfig reg_net;
    SequenceDatasetConfig seq_dataset;
    std::size_t seq_state_width = 8;
    std::string checkpoint_dir;

    void validate() const;
    std::string to_json() const;
    static TrainConfig from_json(const std::string& text);
};

/// Shipped hyperparameter presets: registration-soft (n_samples 3, rho 0.6),
/// registration-strong (rho 1.0), default (mu 4, lambda 0.5,
/// rho 0.2), sequence-sgd (plain SGD).
TrainConfig preset_config(const std::string& name);

/// Builds the task described by a TrainConfig (dataset generation included).
std::shared_ptr<Task> make_task(const TrainConfig& cfg);

struct StepRecord {
    double base = 0.0;
    double hinge_mean = 0.0;
    double total = 0.0;
};

struct Checkpoint {
    std::uint32_t version = 1;
    std::string config_echo;  // TrainConfig JSON
    std::uint64_t epoch = 0;
    bool aborted = false;
    std::array<std::uint64_t, 6> order_rng_state{};
    std::array<std::uint64_t, 6> omega_rng_state{};
    std::vector<double> optimizer_state;
    ParamSet params;
    std::vector<StepRecord> history;  // base and hinge terms recorded separately
};

/// Binary round trip is byte-exact: magic, version, length-prefixed payload,
/// FNV-1a checksum. Truncation or bit damage loads as CheckpointError.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
/// Payload without the config echo; lets tests compare training trajectories
/// across configs that differ only in fields with no effect.
std::vector<std::uint8_t> serialize_checkpoint_body(const Checkpoint& ckpt);

struct TrainResult {
    Checkpoint checkpoint;
    bool aborted = false;
    std::string abort_reason;
    double wall_seconds = 0.0;  // metadata; never part of deterministic artifacts
};

/// One pass of the sampling-based training loop: per selected datapoint,
/// draw n_samples neighbors, form the interpolants, take one optimizer step
/// on the composite loss. Deterministic per seed; with dlc disabled (or
/// rho = 0) it is bit-identical to plain training.
TrainResult train(const TrainConfig& cfg, const Task& task,
                  const Checkpoint* resume = nullptr);

}  // namespace dlc
