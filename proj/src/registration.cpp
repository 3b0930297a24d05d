#include "dlc/registration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace dlc {

namespace {

using json = nlohmann::json;

void append_box_surface_point(PointCloud& cloud, std::size_t i, RngStream& rng) {
    // Anisotropic extents so the pose is identifiable (no rotational symmetry).
    if (cloud.dim == 2) {
        const double a = 1.0, b = 0.6;
        const double per = 2.0 * (2.0 * a + 2.0 * b);
        double t = rng.uniform01() * per;
        double x, y;
        if (t < 2.0 * a) {
            x = -a + t;
            y = -b;
        } else if (t < 2.0 * a + 2.0 * b) {
            x = a;
            y = -b + (t - 2.0 * a);
        } else if (t < 4.0 * a + 2.0 * b) {
            x = a - (t - 2.0 * a - 2.0 * b);
            y = b;
        } else {
            x = -a;
            y = b - (t - 4.0 * a - 2.0 * b);
        }
        cloud.at(i, 0) = x;
        cloud.at(i, 1) = y;
    } else {
        const double ext[3] = {1.0, 0.7, 0.5};
        // Face picked proportional to area; uniform position on the face.
        const double areas[3] = {ext[1] * ext[2], ext[0] * ext[2], ext[0] * ext[1]};
        const double total = areas[0] + areas[1] + areas[2];
        double pick = rng.uniform01() * total;
        std::size_t axis = pick < areas[0] ? 0 : (pick < areas[0] + areas[1] ? 1 : 2);
        const double side = rng.uniform01() < 0.5 ? -1.0 : 1.0;
        for (std::size_t d = 0; d < 3; ++d)
            cloud.at(i, d) = d == axis ? side * ext[d] : rng.uniform(-ext[d], ext[d]);
    }
}

void append_ellipsoid_point(PointCloud& cloud, std::size_t i, RngStream& rng) {
    const double ext[3] = {1.0, 0.6, 0.45};
    double v[3] = {0, 0, 0};
    double norm = 0.0;
    for (std::size_t d = 0; d < cloud.dim; ++d) {
        v[d] = rng.normal();
        norm += v[d] * v[d];
    }
    norm = std::sqrt(norm);
    if (norm < 1e-12) norm = 1.0;
    for (std::size_t d = 0; d < cloud.dim; ++d) cloud.at(i, d) = ext[d] * v[d] / norm;
}

struct GaussianBlend {
    std::vector<double> centers;  // 3 centers * dim
    explicit GaussianBlend(std::size_t dim, RngStream& rng) {
        centers.resize(3 * dim);
        for (double& c : centers) c = rng.uniform(-0.8, 0.8);
    }
    void append(PointCloud& cloud, std::size_t i, RngStream& rng) const {
        const std::size_t k = rng.uniform_index(3);
        for (std::size_t d = 0; d < cloud.dim; ++d)
            cloud.at(i, d) = centers[k * cloud.dim + d] + 0.25 * rng.normal();
    }
};

std::string format17(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

std::vector<PointCloudPair> generate_registration_dataset(const RegistrationDatasetConfig& cfg) {
    cfg.validate();
    std::vector<PointCloudPair> pairs;
    pairs.reserve(cfg.n_pairs);

    for (std::size_t p = 0; p < cfg.n_pairs; ++p) {
        RngStream rng = RngStream::derived(cfg.seed, "regpair-" + std::to_string(p));
        PointCloudPair pair;
        pair.seed = cfg.seed;
        pair.source = PointCloud(cfg.dim, cfg.n_points);

        const std::size_t primitive = p % 3;
        GaussianBlend blend(cfg.dim, rng);
        for (std::size_t i = 0; i < cfg.n_points; ++i) {
            if (primitive == 0)
                append_box_surface_point(pair.source, i, rng);
            else if (primitive == 1)
                append_ellipsoid_point(pair.source, i, rng);
            else
                blend.append(pair.source, i, rng);
        }

        RigidMotion motion;
        const std::size_t n_ang = cfg.dim == 2 ? 1 : 3;
        motion.euler.resize(n_ang);
        for (double& a : motion.euler) a = rng.uniform(-cfg.angle_range, cfg.angle_range);
        motion.translation.resize(cfg.dim);
        for (double& t : motion.translation) t = rng.uniform(-cfg.trans_range, cfg.trans_range);
        pair.motion = motion;

        std::vector<std::size_t> order(cfg.n_points);
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_index(i)]);

        std::size_t keep = static_cast<std::size_t>(
            std::llround(cfg.partial_overlap_fraction * static_cast<double>(cfg.n_points)));
        keep = std::max<std::size_t>(keep, cfg.dim + 1);
        pair.perm.assign(order.begin(), order.begin() + static_cast<long>(keep));

        PointCloud picked(cfg.dim, keep);
        for (std::size_t i = 0; i < keep; ++i)
            for (std::size_t d = 0; d < cfg.dim; ++d)
                picked.at(i, d) = pair.source.at(pair.perm[i], d);
        pair.target = apply_transform(picked, motion);
        if (cfg.jitter_sigma > 0.0)
            for (double& v : pair.target.xyz) v += cfg.jitter_sigma * rng.normal();

        pairs.push_back(std::move(pair));
    }
    return pairs;
}

void write_pair_files(const std::filesystem::path& dir, const std::string& id,
                      const PointCloudPair& pair, const RegistrationDatasetConfig& cfg) {
    std::filesystem::create_directories(dir);
    auto write_cloud = [&](const std::filesystem::path& path, const PointCloud& cloud) {
        std::ofstream os(path);
        if (!os) throw ConfigError("cannot write " + path.string());
        for (std::size_t i = 0; i < cloud.n(); ++i) {
            for (std::size_t d = 0; d < cloud.dim; ++d) {
                if (d) os << ' ';
                os << format17(cloud.at(i, d));
            }
            os << '\n';
        }
    };
    write_cloud(dir / (id + "_src.xyz"), pair.source);
    write_cloud(dir / (id + "_tgt.xyz"), pair.target);

    json gt;
    gt["euler"] = pair.motion.euler;
    gt["translation"] = pair.motion.translation;
    gt["permutation"] = pair.perm;
    gt["seed"] = pair.seed;
    gt["generator"] = {{"n_pairs", cfg.n_pairs},
                       {"n_points", cfg.n_points},
                       {"dim", cfg.dim},
                       {"angle_range", cfg.angle_range},
                       {"trans_range", cfg.trans_range},
                       {"jitter_sigma", cfg.jitter_sigma},
                       {"partial_overlap_fraction", cfg.partial_overlap_fraction},
                       {"seed", cfg.seed}};
    std::ofstream os(dir / (id + "_gt.json"));
    if (!os) throw ConfigError("cannot write gt sidecar for " + id);
    os << gt.dump(2) << '\n';
}

PointCloudPair read_pair_files(const std::filesystem::path& dir, const std::string& id) {
    auto read_cloud = [&](const std::filesystem::path& path) {
        std::ifstream is(path);
        if (!is) throw ConfigError("cannot read " + path.string());
        std::vector<std::vector<double>> rows;
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::vector<double> row;
            double v;
            while (ls >> v) row.push_back(v);
            if (!row.empty()) rows.push_back(std::move(row));
        }
        if (rows.empty()) throw ConfigError("empty point file " + path.string());
        PointCloud cloud(rows[0].size(), rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != cloud.dim)
                throw ConfigError("ragged point file " + path.string());
            for (std::size_t d = 0; d < cloud.dim; ++d) cloud.at(i, d) = rows[i][d];
        }
        return cloud;
    };

    PointCloudPair pair;
    pair.source = read_cloud(dir / (id + "_src.xyz"));
    pair.target = read_cloud(dir / (id + "_tgt.xyz"));

    std::ifstream is(dir / (id + "_gt.json"));
    if (!is) throw ConfigError("cannot read gt sidecar for " + id);
    json gt = json::parse(is);
    pair.motion.euler = gt.at("euler").get<std::vector<double>>();
    pair.motion.translation = gt.at("translation").get<std::vector<double>>();
    pair.perm = gt.at("permutation").get<std::vector<std::size_t>>();
    pair.seed = gt.at("seed").get<std::uint64_t>();
    return pair;
}

RegistrationTask::RegistrationTask(std::vector<PointCloudPair> pairs, PointNetConfig net)
    : pairs_(std::move(pairs)), net_(net) {
    if (pairs_.empty()) throw ConfigError("RegistrationTask: empty dataset");
    dim_ = pairs_[0].source.dim;
    layout_ = OmegaLayout::rigid(dim_ == 2 ? 1 : 3, dim_);
    truths_.reserve(pairs_.size());
    for (const auto& p : pairs_) truths_.push_back(p.omega_star());
}

NeighborhoodSampler RegistrationTask::default_sampler() const {
    NeighborhoodSampler s;
    s.mode = SamplerMode::gaussian_additive;
    s.sigma = {0.5, 0.25};  // radians for the angle segment, length units for translation
    return s;
}

ParamSet RegistrationTask::init_params(RngStream& rng) const {
    ParamSet params;
    if (net_.identity_bypass) return params;
    const std::size_t w = net_.width, f = net_.feature_dim;
    auto gaussian = [&](std::vector<std::size_t> shape, double stddev) {
        Tensor t(std::move(shape));
        for (double& v : t.data) v = stddev * rng.normal();
        return t;
    };
    const double s1 = 1.0 / std::sqrt(static_cast<double>(dim_));
    static const char* axis_names[3] = {"enc1.wx", "enc1.wy", "enc1.wz"};
    for (std::size_t d = 0; d < dim_; ++d) params.add(axis_names[d], gaussian({1, w}, s1));
    params.add("enc1.b", Tensor({1, w}, 0.0));
    params.add("enc2.w", gaussian({w, w}, 1.0 / std::sqrt(static_cast<double>(w))));
    params.add("enc2.b", Tensor({1, w}, 0.0));
    params.add("enc3.w", gaussian({w, f}, 1.0 / std::sqrt(static_cast<double>(w))));
    params.add("enc3.b", Tensor({1, f}, 0.0));
    return params;
}

ad::Var RegistrationTask::build_loss(ad::Tape& tape, std::size_t i, const BoundParams& params,
                                     ad::Var omega) const {
    const PointCloudPair& pair = pairs_[i];
    const std::size_t d = dim_;
    const std::size_t n = pair.target.n();

    // Correspondences: the generator's known permutation, or nearest
    // neighbors under the current motion value when chamfer is on. Matches
    // are constants on the tape; gradients flow through the motion only.
    std::vector<std::size_t> src_of_tgt(n);
    if (!net_.chamfer) {
        for (std::size_t t = 0; t < n; ++t) src_of_tgt[t] = pair.perm[t];
    } else {
        const Tensor& w = tape.value(omega);
        PredictionVector pv(w.data, layout_);
        PointCloud moved = apply_transform(pair.source, RigidMotion::from_omega(pv, d));
        for (std::size_t t = 0; t < n; ++t) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t s = 0; s < moved.n(); ++s) {
                double dist = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    const double dv = moved.at(s, k) - pair.target.at(t, k);
                    dist += dv * dv;
                }
                if (dist < best) {
                    best = dist;
                    arg = s;
                }
            }
            src_of_tgt[t] = arg;
        }
    }

    // Matched source / target columns as n x 1 leaves.
    std::vector<ad::Var> src_cols(d), tgt_cols(d);
    for (std::size_t k = 0; k < d; ++k) {
        Tensor sc({n, 1}), tc({n, 1});
        for (std::size_t t = 0; t < n; ++t) {
            sc.data[t] = pair.source.at(src_of_tgt[t], k);
            tc.data[t] = pair.target.at(t, k);
        }
        src_cols[k] = tape.leaf(std::move(sc));
        tgt_cols[k] = tape.leaf(std::move(tc));
    }

    // Rotation entries as scalar nodes from the Euler angle coordinates.
    std::vector<ad::Var> rot(d * d);
    ad::Var trans[3];
    if (d == 2) {
        ad::Var ang = tape.pick(omega, 0);
        ad::Var c = tape.cos(ang), s = tape.sin(ang);
        rot[0] = c;
        rot[1] = tape.scalar_mul(s, -1.0);
        rot[2] = s;
        rot[3] = c;
        trans[0] = tape.pick(omega, 1);
        trans[1] = tape.pick(omega, 2);
    } else {
        ad::Var az = tape.pick(omega, 0), ay = tape.pick(omega, 1), ax = tape.pick(omega, 2);
        ad::Var ca = tape.cos(az), sa = tape.sin(az);
        ad::Var cb = tape.cos(ay), sb = tape.sin(ay);
        ad::Var cg = tape.cos(ax), sg = tape.sin(ax);
        rot[0] = tape.mul(ca, cb);
        rot[1] = tape.sub(tape.mul(tape.mul(ca, sb), sg), tape.mul(sa, cg));
        rot[2] = tape.add(tape.mul(tape.mul(ca, sb), cg), tape.mul(sa, sg));
        rot[3] = tape.mul(sa, cb);
        rot[4] = tape.add(tape.mul(tape.mul(sa, sb), sg), tape.mul(ca, cg));
        rot[5] = tape.sub(tape.mul(tape.mul(sa, sb), cg), tape.mul(ca, sg));
        rot[6] = tape.scalar_mul(sb, -1.0);
        rot[7] = tape.mul(cb, sg);
        rot[8] = tape.mul(cb, cg);
        trans[0] = tape.pick(omega, 3);
        trans[1] = tape.pick(omega, 4);
        trans[2] = tape.pick(omega, 5);
    }

    // Transformed source columns: x'_r = sum_c R[r][c] * x_c + t_r.
    std::vector<ad::Var> moved_cols(d);
    for (std::size_t r = 0; r < d; ++r) {
        ad::Var acc = tape.mul(rot[r * d + 0], src_cols[0]);
        for (std::size_t c = 1; c < d; ++c)
            acc = tape.add(acc, tape.mul(rot[r * d + c], src_cols[c]));
        moved_cols[r] = tape.add(acc, trans[r]);
    }

    if (net_.identity_bypass) {
        ad::Var sum = tape.squared_norm(tape.sub(moved_cols[0], tgt_cols[0]));
        for (std::size_t k = 1; k < d; ++k)
            sum = tape.add(sum, tape.squared_norm(tape.sub(moved_cols[k], tgt_cols[k])));
        return tape.scalar_mul(sum, 1.0 / static_cast<double>(n));
    }

    // PointNet-lite encoder shared by both clouds: two tanh layers, a linear
    // feature head, and a per-column max pool as the global feature.
    ad::Var ones = tape.leaf(Tensor({n, 1}, 1.0));
    static const char* axis_names[3] = {"enc1.wx", "enc1.wy", "enc1.wz"};
    auto encode = [&](const std::vector<ad::Var>& cols) {
        ad::Var pre = tape.matmul(cols[0], params.var(axis_names[0]));
        for (std::size_t k = 1; k < d; ++k)
            pre = tape.add(pre, tape.matmul(cols[k], params.var(axis_names[k])));
        pre = tape.add(pre, tape.matmul(ones, params.var("enc1.b")));
        ad::Var h1 = tape.tanh(pre);
        ad::Var h2 = tape.tanh(tape.add(tape.matmul(h1, params.var("enc2.w")),
                                        tape.matmul(ones, params.var("enc2.b"))));
        ad::Var feat = tape.add(tape.matmul(h2, params.var("enc3.w")),
                                tape.matmul(ones, params.var("enc3.b")));
        return feat;
    };

    ad::Var feat_src = encode(moved_cols);
    ad::Var feat_tgt = encode(tgt_cols);
    ad::Var per_point =
        tape.scalar_mul(tape.squared_norm(tape.sub(feat_src, feat_tgt)), 1.0 / static_cast<double>(n));
    ad::Var global = tape.squared_norm(
        tape.sub(tape.max_reduce(feat_src), tape.max_reduce(feat_tgt)));
    return tape.add(per_point, global);
}

}  // namespace dlc
