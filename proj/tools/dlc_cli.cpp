#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dlc/experiment.hpp"
#include "dlc/registration.hpp"

namespace {

using json = nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw dlc::ConfigError("cannot read config file " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::int64_t seed = -1;  // -1: keep the config's seed
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "override the config seed");
}

json load_config(const CommonArgs& args) {
    json cfg = json::object();
    if (!args.config_path.empty()) {
        try {
            cfg = json::parse(read_file(args.config_path));
        } catch (const json::exception& e) {
            throw dlc::ConfigError(std::string("malformed config: ") + e.what());
        }
    }
    if (args.seed >= 0) cfg["seed"] = static_cast<std::uint64_t>(args.seed);
    return cfg;
}

void gen_data(const CommonArgs& args) {
    json cfg = load_config(args);
    dlc::RegistrationDatasetConfig ds;
    ds.n_pairs = cfg.value("n_pairs", ds.n_pairs);
    ds.n_points = cfg.value("n_points", ds.n_points);
    ds.dim = cfg.value("dim", ds.dim);
    ds.angle_range = cfg.value("angle_range", ds.angle_range);
    ds.trans_range = cfg.value("trans_range", ds.trans_range);
    ds.jitter_sigma = cfg.value("jitter_sigma", ds.jitter_sigma);
    ds.partial_overlap_fraction =
        cfg.value("partial_overlap_fraction", ds.partial_overlap_fraction);
    ds.seed = cfg.value("seed", ds.seed);

    const auto pairs = dlc::generate_registration_dataset(ds);
    const std::filesystem::path out(args.out_dir);
    std::filesystem::create_directories(out);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "pair%04zu", i);
        dlc::write_pair_files(out, id, pairs[i], ds);
    }
    std::cout << "wrote " << pairs.size() << " pairs to " << out.string() << "\n";
}

void run_named(const std::string& experiment, const CommonArgs& args) {
    json cfg = load_config(args);
    dlc::run_experiment(experiment, cfg.dump(), args.out_dir);
    std::cout << experiment << " -> " << args.out_dir << "\n";
}

void run_train(const CommonArgs& args) {
    json cfg = load_config(args);
    std::string task = "registration";
    if (cfg.contains("train") && cfg["train"].contains("task"))
        task = cfg["train"]["task"].get<std::string>();
    if (args.seed >= 0) {
        if (!cfg.contains("train")) cfg["train"] = json::object();
        cfg["train"]["seed"] = static_cast<std::uint64_t>(args.seed);
    }
    const std::string name = task == "sequence" ? "train-sequence" : "train-registration";
    dlc::run_experiment(name, cfg.dump(), args.out_dir);
    std::cout << name << " -> " << args.out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Star-convexity constrained training, inference and landscape analysis"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, infer_args, icp_args, audit_args, slice_args, avg_args,
        sweep_args;

    add_common(app.add_subcommand("gen-data", "generate synthetic registration pairs"), gen_args);
    add_common(app.add_subcommand("train", "train a model (registration or sequence)"),
               train_args);
    add_common(app.add_subcommand("infer", "iterative inference sweep on a checkpoint"),
               infer_args);
    add_common(app.add_subcommand("icp", "ICP refinement ablation on a checkpoint"), icp_args);
    add_common(app.add_subcommand("audit", "star-convexity violation audit"), audit_args);
    add_common(app.add_subcommand("slice", "2-D loss landscape slice"), slice_args);
    add_common(app.add_subcommand("simulate-averaging", "averaged-iterate error decay"),
               avg_args);
    add_common(app.add_subcommand("sweep", "grid search over (rho, lambda, mu)"), sweep_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("gen-data")) gen_data(gen_args);
        if (app.got_subcommand("train")) run_train(train_args);
        if (app.got_subcommand("infer")) run_named("infer-sweep", infer_args);
        if (app.got_subcommand("icp")) run_named("icp-ablation", icp_args);
        if (app.got_subcommand("audit")) run_named("audit", audit_args);
        if (app.got_subcommand("slice")) run_named("slice", slice_args);
        if (app.got_subcommand("simulate-averaging")) run_named("averaging-sim", avg_args);
        if (app.got_subcommand("sweep")) run_named("grid-search", sweep_args);
    } catch (const dlc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const dlc::CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return 2;
    } catch (const dlc::NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
