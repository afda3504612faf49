#include "igr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "igr/kernels.hpp"
#include "igr/metrics.hpp"

namespace igr {

Preset2dConstants preset_constants(Preset2d preset) {
    switch (preset) {
        case Preset2d::point_I:
            return {2.8, 3.5, 1.0, 0.6, 1e-3, 2.5e-2, 1.8e-1, 0.5, 1e-4};
        case Preset2d::point_II:
            return {75.0, 74.925, 1.0, 0.6, 1e-6, 0.5e-4, std::nullopt, 4.1e-2, 5e-7};
    }
    throw std::invalid_argument("unknown preset");
}

Preset2d parse_preset_2d(const std::string& name) {
    if (name == "point_I") return Preset2d::point_I;
    if (name == "point_II") return Preset2d::point_II;
    throw std::invalid_argument("unknown preset: " + name);
}

Variant2d parse_variant_2d(const std::string& name) {
    if (name == "gd_small") return Variant2d::gd_small;
    if (name == "gd_moderate") return Variant2d::gd_moderate;
    if (name == "gd_large") return Variant2d::gd_large;
    if (name == "exact_flow") return Variant2d::exact_flow;
    if (name == "modified_flow") return Variant2d::modified_flow;
    if (name == "egr") return Variant2d::egr;
    throw std::invalid_argument("unknown variant: " + name);
}

namespace {

Trajectory flow_to_trajectory(const BilinearModel& model, const Batch& batch,
                              const VectorField& field, const ParamVector& theta0,
                              double t_end, double sample_dt, double h_for_metrics) {
    Trajectory traj;
    traj.h = sample_dt;
    if (t_end <= 0.0) {
        TrajectoryRow row;
        row.iteration = 0;
        row.theta = theta0;
        row.loss = model.loss(theta0, batch);
        const ParamVector g = model.grad(theta0, batch);
        row.slope = param_norm(g);
        row.r_ig = row.slope * row.slope / 2.0;
        row.param_norm = param_norm(theta0);
        row.loss_modified = row.loss + (h_for_metrics / 4.0) * row.slope * row.slope;
        traj.rows.push_back(std::move(row));
        traj.final_theta = theta0;
        return traj;
    }
    std::vector<double> sample_times;
    const long n_samples = std::llround(t_end / sample_dt);
    for (long i = 0; i <= n_samples; ++i) sample_times.push_back(i * sample_dt);
    const double h_ref = sample_dt / 100.0;
    const auto states = integrate_reference(field, theta0, t_end, h_ref, sample_times);
    for (std::size_t i = 0; i < states.size(); ++i) {
        TrajectoryRow row;
        row.iteration = static_cast<long>(i);
        row.time = states[i].first;
        row.theta = states[i].second;
        row.loss = model.loss(row.theta, batch);
        const ParamVector g = model.grad(row.theta, batch);
        row.slope = param_norm(g);
        row.r_ig = row.slope * row.slope / 2.0;
        row.param_norm = param_norm(row.theta);
        row.loss_modified = row.loss + (h_for_metrics / 4.0) * row.slope * row.slope;
        traj.rows.push_back(std::move(row));
    }
    traj.final_theta = traj.rows.back().theta;
    traj.final_iteration = static_cast<long>(traj.rows.size()) - 1;
    return traj;
}

}  // namespace

Trajectory run_preset_2d(Preset2d preset, Variant2d variant,
                         std::optional<double> t_end) {
    const Preset2dConstants c = preset_constants(preset);
    const BilinearModel model(c.x, c.y);
    const Batch batch;  // data is baked into the model
    const ParamVector theta0{c.a0, c.b0};

    FlowRunConfig cfg;
    cfg.eval_every = 10;
    cfg.grad_tol = 1e-12;
    switch (variant) {
        case Variant2d::gd_small:
            cfg.h = c.h_small;
            cfg.max_iterations = preset == Preset2d::point_I ? 200000 : 20000000;
            return run_gd(model, theta0, batch, cfg);
        case Variant2d::gd_moderate:
            cfg.h = c.h_moderate;
            cfg.max_iterations = preset == Preset2d::point_I ? 20000 : 2000000;
            return run_gd(model, theta0, batch, cfg);
        case Variant2d::gd_large:
            if (!c.h_large.has_value())
                throw std::invalid_argument("gd_large is not available for this preset");
            cfg.h = *c.h_large;
            cfg.max_iterations = 1000000;
            return run_gd(model, theta0, batch, cfg);
        case Variant2d::exact_flow: {
            const double horizon =
                t_end.value_or(400.0 * c.h_moderate * (preset == Preset2d::point_I
                                                           ? 1.0
                                                           : 1.0));
            return flow_to_trajectory(model, batch, exact_field(model, batch), theta0,
                                      horizon, c.h_moderate, c.h_moderate);
        }
        case Variant2d::modified_flow: {
            const double horizon = t_end.value_or(400.0 * c.h_moderate);
            return flow_to_trajectory(model, batch,
                                      modified_field(model, c.h_moderate, batch),
                                      theta0, horizon, c.h_moderate, c.h_moderate);
        }
        case Variant2d::egr: {
            EgrConfig ec;
            ec.mu = c.mu / 2.0;  // tabulated 2-d rate maps onto mu |grad E|^2
            ec.h_inner = c.h_euler;
            ec.max_iterations = preset == Preset2d::point_I ? 2000000 : 50000000;
            ec.eval_every = 1000;
            ec.grad_tol = 1e-10;
            return run_egr(model, theta0, batch, ec).trajectory;
        }
    }
    throw std::invalid_argument("unknown variant");
}

FlowCloseness compare_gd_to_flows(Preset2d preset, long steps) {
    const Preset2dConstants c = preset_constants(preset);
    const BilinearModel model(c.x, c.y);
    const Batch batch;
    const ParamVector theta0{c.a0, c.b0};
    const double h = c.h_moderate;

    FlowRunConfig cfg;
    cfg.h = h;
    cfg.max_iterations = steps;
    cfg.eval_every = 1;
    cfg.grad_tol = 0.0;
    const Trajectory gd = run_gd(model, theta0, batch, cfg);

    std::vector<double> sample_times;
    for (const auto& row : gd.rows) sample_times.push_back(row.time);
    const double t_end = sample_times.back();
    const double h_ref = h / 100.0;
    const auto ex = integrate_reference(exact_field(model, batch), theta0,
                                        std::max(t_end, h_ref), h_ref, sample_times);
    const auto mo =
        integrate_reference(modified_field(model, h, batch), theta0,
                            std::max(t_end, h_ref), h_ref, sample_times);

    FlowCloseness out;
    for (std::size_t i = 0; i < gd.rows.size(); ++i) {
        auto dist = [&](const ParamVector& s) {
            const auto& t = gd.rows[i].theta;
            double acc = 0.0;
            for (std::size_t j = 0; j < t.size(); ++j)
                acc += (t[j] - s[j]) * (t[j] - s[j]);
            return std::sqrt(acc);
        };
        out.max_dist_exact = std::max(out.max_dist_exact, dist(ex[i].second));
        out.max_dist_modified = std::max(out.max_dist_modified, dist(mo[i].second));
    }
    return out;
}

double test_error_2d(const ParamVector& theta) {
    const BilinearModel held_out(0.5, 0.6);
    return held_out.loss(theta, Batch{});
}

long fixed_time_iterations(double h, double T) {
    if (!(h > 0.0) || !(T > 0.0))
        throw std::invalid_argument("fixed_time_iterations: h and T must be > 0");
    return static_cast<long>(std::ceil(T / h - 1e-12));
}

std::size_t best_checkpoint(const std::vector<double>& accuracies) {
    if (accuracies.empty()) throw std::invalid_argument("best_checkpoint: empty");
    return static_cast<std::size_t>(
        std::max_element(accuracies.begin(), accuracies.end()) - accuracies.begin());
}

namespace {

SweepCell train_cell(const Dataset& train, const Dataset& test,
                     const SweepConfig& config, double h, std::size_t width) {
    std::vector<std::size_t> widths{train.dim};
    for (std::size_t l = 0; l < config.hidden_layers; ++l) widths.push_back(width);
    widths.push_back(10);
    const MlpModel model(widths, Activation::relu,
                         config.init_seed ^ fnv1a(&width, sizeof width) ^
                             fnv1a(&h, sizeof h));

    SweepCell cell;
    cell.h = h;
    cell.width = width;
    cell.m = model.param_count();
    cell.lambda = reg_rate(h, model.param_count());

    const Batch train_batch = as_batch(train);
    const Batch test_batch = as_batch(test);

    ParamVector theta = model.initial_params();
    long iter = 0;
    long budget = 0;
    {
        // total steps for the epoch budget (used by the iteration criteria)
        const std::size_t per_epoch =
            config.policy.kind == BatchPolicy::Kind::full
                ? 1
                : (train.count + config.policy.size - 1) / config.policy.size;
        budget = config.epochs * static_cast<long>(per_epoch);
    }
    long stop_at = budget;
    if (config.stopping.kind == StoppingCriterion::Kind::fixed_physical_time)
        stop_at = std::min(budget, fixed_time_iterations(h, config.stopping.physical_time));

    std::vector<double> ck_acc;
    std::vector<long> ck_iter;
    std::vector<ParamVector> ck_theta;
    auto checkpoint = [&]() {
        ck_acc.push_back(model.accuracy(theta, test_batch));
        ck_iter.push_back(iter);
        ck_theta.push_back(theta);
    };

    try {
        bool done = false;
        for (long epoch = 0; epoch < config.epochs && !done; ++epoch) {
            for (Batch& b : batches(train, config.policy, epoch)) {
                if (iter >= stop_at) {
                    done = true;
                    break;
                }
                const ParamVector g = model.grad(theta, b);
                kern::axpy(-h, g.data(), theta.data(), theta.size());
                require_finite(theta, "sweep iterate", iter);
                ++iter;
                if (iter % config.eval_every == 0 || iter == stop_at) checkpoint();
            }
        }
        if (ck_iter.empty() || ck_iter.back() != iter) checkpoint();
    } catch (const DivergenceError&) {
        cell.excluded = true;
        cell.exclusion_reason = "diverged";
        return cell;
    }

    std::size_t pick = ck_acc.size() - 1;
    if (config.stopping.kind == StoppingCriterion::Kind::max_test_accuracy)
        pick = best_checkpoint(ck_acc);

    const ParamVector& chosen = ck_theta[pick];
    cell.stop_iteration = ck_iter[pick];
    cell.test_accuracy = ck_acc[pick];
    try {
        cell.train_accuracy = model.accuracy(chosen, train_batch);
        cell.loss = model.loss(chosen, train_batch);
        const ParamVector g = model.grad(chosen, train_batch);
        cell.slope = param_norm(g);
        cell.r_ig = cell.slope * cell.slope / static_cast<double>(model.param_count());
    } catch (const DivergenceError&) {
        cell.excluded = true;
        cell.exclusion_reason = "diverged";
        return cell;
    }
    if (config.keep_theta) cell.theta = chosen;

    if (config.stopping.require_full_train_accuracy && cell.train_accuracy < 1.0) {
        cell.excluded = true;
        cell.exclusion_reason = "never reached 100% train accuracy";
    }
    return cell;
}

}  // namespace

SweepResult run_sweep(const Dataset& train, const Dataset& test,
                      const SweepConfig& config) {
    if (config.h_grid.empty() || config.width_grid.empty())
        throw std::invalid_argument("run_sweep: empty grid");
    std::vector<std::pair<double, std::size_t>> grid;
    for (double h : config.h_grid)
        for (std::size_t width : config.width_grid) grid.emplace_back(h, width);

    SweepResult result;
    result.cells.resize(grid.size());
    const int workers = std::max(1, std::min<int>(config.parallel,
                                                  static_cast<int>(grid.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < grid.size(); ++i)
            result.cells[i] =
                train_cell(train, test, config, grid[i].first, grid[i].second);
        return result;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
            for (std::size_t i = next.fetch_add(1); i < grid.size();
                 i = next.fetch_add(1))
                result.cells[i] =
                    train_cell(train, test, config, grid[i].first, grid[i].second);
        });
    for (auto& t : pool) t.join();
    return result;
}

std::vector<RobustnessPoint> perturb_robustness(const MlpModel& model,
                                                const ParamVector& theta_trained,
                                                const std::vector<double>& sigma_grid,
                                                int realizations, std::uint64_t seed,
                                                const Batch& test,
                                                const Batch& eval_batch) {
    if (realizations < 1)
        throw std::invalid_argument("perturb_robustness: realizations >= 1");
    for (double s : sigma_grid)
        if (s < 0.0) throw std::invalid_argument("perturb_robustness: sigma >= 0");

    std::vector<RobustnessPoint> out;
    const std::size_t m = theta_trained.size();
    for (std::size_t si = 0; si < sigma_grid.size(); ++si) {
        const double sigma = sigma_grid[si];
        std::vector<double> accs, slopes;
        for (int r = 0; r < realizations; ++r) {
            // stream indexed by (sigma, realization), order-independent
            std::uint64_t key[3] = {seed, static_cast<std::uint64_t>(si),
                                    static_cast<std::uint64_t>(r)};
            std::mt19937_64 rng(fnv1a(key, sizeof key));
            ParamVector theta = theta_trained;
            if (sigma > 0.0) {
                for (std::size_t i = 0; i < m; ++i) {
                    double u1 = 0.0;
                    while (u1 == 0.0)
                        u1 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
                    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
                    const double eta =
                        sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
                    theta[i] *= 1.0 + eta;
                }
            }
            accs.push_back(model.accuracy(theta, test));
            const ParamVector g = model.grad(theta, eval_batch);
            slopes.push_back(param_norm(g));
        }
        auto mean_std = [](const std::vector<double>& v) {
            const double n = static_cast<double>(v.size());
            const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
            double var = 0.0;
            for (double x : v) var += (x - mean) * (x - mean);
            return std::pair<double, double>{mean, std::sqrt(var / n)};
        };
        RobustnessPoint p;
        p.sigma = sigma;
        std::tie(p.mean_accuracy, p.std_accuracy) = mean_std(accs);
        std::tie(p.mean_slope, p.std_slope) = mean_std(slopes);
        out.push_back(p);
    }
    return out;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("spearman: need two equally sized samples");
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(v.size());
        std::size_t i = 0;
        while (i < idx.size()) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

}  // namespace igr
