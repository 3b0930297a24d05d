#include "dlc/oracles.hpp"

namespace dlc {

OracleTask::OracleTask(std::string name, std::size_t dim, std::vector<double> omega_star,
                       TapeFn fn, double sampler_sigma)
    : name_(std::move(name)),
      layout_(OmegaLayout::linear_only(dim)),
      omega_star_(std::move(omega_star), OmegaLayout::linear_only(dim)),
      fn_(std::move(fn)),
      sigma_(sampler_sigma) {}

namespace {

std::vector<double> center(std::size_t dim, double value) {
    return std::vector<double>(dim, value);
}

ad::Var abs_node(ad::Tape& t, ad::Var x) {
    return t.add(t.relu(x), t.relu(t.scalar_mul(x, -1.0)));
}

std::shared_ptr<OracleTask> make_quadratic(std::size_t dim, double sigma, double scale,
                                           const std::string& name) {
    std::vector<double> c = center(dim, 0.5);
    return std::make_shared<OracleTask>(
        name, dim, c,
        [c, scale](ad::Tape& t, ad::Var w) {
            return t.scalar_mul(t.squared_norm(t.sub(w, t.leaf(Tensor::from_vector(c)))), scale);
        },
        sigma);
}

std::shared_ptr<OracleTask> make_double_well(std::size_t dim, double sigma) {
    // f(w) = (w1^2 - 1)^2 + sum_{k>1} w_k^2: the 1-D double well along the
    // first coordinate with a quadratic bowl in the rest, so the minima are
    // exactly the two points +-e1. Ground truth is the +e1 well; the ray
    // toward -e1 exits the basin over the hump at the origin.
    std::vector<double> star(dim, 0.0);
    star[0] = 1.0;
    return std::make_shared<OracleTask>(
        "double-well", dim, star,
        [dim](ad::Tape& t, ad::Var w) {
            ad::Var x = t.pick(w, 0);
            ad::Var well = t.squared_norm(t.sub(t.mul(x, x), t.leaf_scalar(1.0)));
            if (dim == 1) return well;
            ad::Var rest;
            for (std::size_t k = 1; k < dim; ++k) {
                ad::Var sq = t.squared_norm(t.pick(w, k));
                rest = k == 1 ? sq : t.add(rest, sq);
            }
            return t.add(well, rest);
        },
        sigma);
}

std::shared_ptr<OracleTask> make_cusp(std::size_t dim, double sigma) {
    // |w1| * (1 + |w2| / (|w1| + |w2| + 1e-12)): star-convex about the
    // origin (radially monotone growth rate) but not convex.
    if (dim != 2) throw ConfigError("cusp oracle is 2-D");
    return std::make_shared<OracleTask>(
        "cusp", dim, center(dim, 0.0),
        [](ad::Tape& t, ad::Var w) {
            ad::Var ax = abs_node(t, t.pick(w, 0));
            ad::Var ay = abs_node(t, t.pick(w, 1));
            ad::Var denom = t.add(t.add(ax, ay), t.leaf_scalar(1e-12));
            return t.mul(ax, t.add(t.leaf_scalar(1.0), t.div(ay, denom)));
        },
        sigma);
}

}  // namespace

const std::vector<OracleInfo>& analytic_oracles() {
    static const std::vector<OracleInfo> registry = {
        {"quadratic", 2.0,
         [](std::size_t dim, double sigma) { return make_quadratic(dim, sigma, 1.0, "quadratic"); }},
        {"scaled-quadratic", 3.0,
         [](std::size_t dim, double sigma) {
             return make_quadratic(dim, sigma, 1.5, "scaled-quadratic");
         }},
        {"concave", std::nullopt,
         [](std::size_t dim, double sigma) {
             return make_quadratic(dim, sigma, -1.0, "concave");
         }},
        {"double-well", std::nullopt,
         [](std::size_t dim, double sigma) { return make_double_well(dim, sigma); }},
        {"cusp", 0.0,
         [](std::size_t dim, double sigma) { return make_cusp(dim, sigma); }},
    };
    return registry;
}

std::shared_ptr<OracleTask> make_oracle(const std::string& name, std::size_t dim,
                                        double sampler_sigma) {
    for (const auto& info : analytic_oracles())
        if (info.name == name) return info.make(dim, sampler_sigma);
    throw ConfigError("unknown oracle '" + name + "'");
}

}  // namespace dlc
