#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dlc/rigid_motion.hpp"
#include "dlc/task.hpp"

namespace dlc {

/// One synthetic registration instance. target[i] corresponds to
/// source[perm[i]]: target[i] = R(euler) * source[perm[i]] + t (+ jitter).
struct PointCloudPair {
    PointCloud source;
    PointCloud target;
    RigidMotion motion;                // ground truth
    std::vector<std::size_t> perm;     // target row -> source row
    std::uint64_t seed = 0;

    PredictionVector omega_star() const { return motion.to_omega(); }
};

struct RegistrationDatasetConfig {
    std::size_t n_pairs = 200;
    std::size_t n_points = 32;
    std::size_t dim = 2;
    double angle_range = 0.7853981633974483;  // +-45 degrees
    double trans_range = 0.5;
    double jitter_sigma = 0.01;
    double partial_overlap_fraction = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (dim != 2 && dim != 3) throw ConfigError("dataset: dim must be 2 or 3");
        if (n_points < dim + 1) throw ConfigError("dataset: n_points < dim+1 is degenerate");
        if (n_pairs < 1) throw ConfigError("dataset: n_pairs must be >= 1");
        if (angle_range < 0.0 || trans_range < 0.0 || jitter_sigma < 0.0)
            throw ConfigError("dataset: ranges must be non-negative");
        if (!(partial_overlap_fraction > 0.0) || partial_overlap_fraction > 1.0)
            throw ConfigError("dataset: overlap fraction must be in (0,1]");
    }
};

/// Seeded pairs with sources drawn from shape primitives (anisotropic box
/// surface, ellipsoid shell, blended Gaussians, cycled per pair index).
std::vector<PointCloudPair> generate_registration_dataset(const RegistrationDatasetConfig& cfg);

/// Whitespace-separated XYZ rows, one point per line. Pairs are stored as
/// <id>_src.xyz / <id>_tgt.xyz with a <id>_gt.json sidecar holding euler,
/// translation, permutation, generator config and seed.
void write_pair_files(const std::filesystem::path& dir, const std::string& id,
                      const PointCloudPair& pair, const RegistrationDatasetConfig& cfg);
PointCloudPair read_pair_files(const std::filesystem::path& dir, const std::string& id);

struct PointNetConfig {
    std::size_t width = 32;     // hidden width of the per-point MLP
    std::size_t feature_dim = 16;
    bool identity_bypass = false;  // phi = identity: plain correspondence MSE
    bool chamfer = false;          // nearest-neighbor matching instead of known perm
};

/// Synthetic rigid registration task. Loss is the mean squared feature
/// distance between the transformed source and the target under a shared
/// per-point MLP with a max-pooled global feature (PointNet-lite); with
/// identity_bypass it reduces to plain correspondence MSE.
class RegistrationTask final : public Task {
  public:
    RegistrationTask(std::vector<PointCloudPair> pairs, PointNetConfig net = {});

    std::string name() const override { return "registration"; }
    const OmegaLayout& omega_layout() const override { return layout_; }
    std::size_t dataset_size() const override { return pairs_.size(); }
    const PredictionVector& ground_truth(std::size_t i) const override { return truths_[i]; }
    ad::Var build_loss(ad::Tape& tape, std::size_t i, const BoundParams& params,
                       ad::Var omega) const override;
    NeighborhoodSampler default_sampler() const override;
    ParamSet init_params(RngStream& rng) const override;

    const PointCloudPair& pair(std::size_t i) const { return pairs_[i]; }
    const PointNetConfig& net_config() const { return net_; }
    std::size_t dim() const { return dim_; }

  private:
    std::vector<PointCloudPair> pairs_;
    std::vector<PredictionVector> truths_;
    PointNetConfig net_;
    std::size_t dim_;
    OmegaLayout layout_;
};

}  // namespace dlc
