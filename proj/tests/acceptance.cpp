// Acceptance gate: runs every contract criterion end to end and prints one
// pass/fail line per criterion. Exit code is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "igr/bilinear.hpp"
#include "igr/dataset.hpp"
#include "igr/egr.hpp"
#include "igr/flow.hpp"
#include "igr/harness.hpp"
#include "igr/least_squares.hpp"
#include "igr/metrics.hpp"
#include "igr/mlp.hpp"
#include "igr/persist.hpp"
#include "oracles.hpp"

using namespace igr;

namespace {

const Batch kEmpty;
const ParamVector kPointI{2.8, 3.5};

struct Result {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

// every non-diverged trajectory produced while running the gate; criterion 5
// re-checks the norm bound over all of them
std::vector<std::pair<double, Trajectory>> g_runs;

void track(double h, const Trajectory& traj) {
    if (traj.termination != Termination::diverged) g_runs.emplace_back(h, traj);
}

struct Check {
    bool ok = true;
    std::string detail;
    void require(bool cond, const std::string& msg) {
        if (!cond) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += msg;
        }
    }
};

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

// ---------------------------------------------------------------------------

Result criterion_1() {
    Check c;
    const BilinearModel model = make_bilinear(1.0, 0.6);
    const std::vector<double> grid{1e-4, 3.1623e-4, 1e-3, 3.1623e-3, 1e-2};
    const OrderFit fit = estimate_local_order(model, kPointI, kEmpty, grid);
    c.require(std::abs(fit.order_vs_exact - 2.0) <= 0.2,
              "order vs exact flow = " + fmt(fit.order_vs_exact));
    c.require(std::abs(fit.order_vs_modified - 3.0) <= 0.3,
              "order vs modified flow = " + fmt(fit.order_vs_modified));
    c.require(fit.r2_exact >= 0.99, "R^2 exact = " + fmt(fit.r2_exact));
    c.require(fit.r2_modified >= 0.99, "R^2 modified = " + fmt(fit.r2_modified));
    return {1, "local error orders 2 and 3", c.ok, c.detail, 0.0};
}

Result criterion_2() {
    Check c;
    const FlowCloseness d = compare_gd_to_flows(Preset2d::point_I, 400);
    c.require(d.max_dist_modified * 2.0 <= d.max_dist_exact,
              "max dist modified = " + fmt(d.max_dist_modified) +
                  ", exact = " + fmt(d.max_dist_exact));
    return {2, "GD tracks the modified flow 2x closer", c.ok, c.detail, 0.0};
}

struct FamilySample {
    const LossModel& model;
    Batch batch;
    double lo, hi;
};

template <typename F>
void for_each_family(F&& fn) {
    std::mt19937_64 rng(7);

    const BilinearModel bilinear = make_bilinear(1.0, 0.6);
    fn(FamilySample{bilinear, kEmpty, -3.0, 3.0});

    const LeastSquaresModel ls = make_least_squares(FeatureMap::identity, 4, 3);
    Batch lsb;
    lsb.count = 6;
    lsb.input_dim = 4;
    lsb.inputs = oracles::uniform_vec(rng, 24);
    lsb.targets = oracles::uniform_vec(rng, 18);
    fn(FamilySample{ls, lsb, -1.0, 1.0});

    const MlpModel mlp = make_mlp({5, 8, 4}, Activation::relu, 11);
    Batch mb;
    mb.count = 6;
    mb.input_dim = 5;
    mb.inputs = oracles::uniform_vec(rng, 30);
    mb.labels = {0, 3, 1, 2, 0, 1};
    fn(FamilySample{mlp, mb, -0.8, 0.8});
}

Result criterion_3() {
    Check c;
    std::mt19937_64 rng(101);
    for_each_family([&](const FamilySample& f) {
        const double m = static_cast<double>(f.model.param_count());
        for (int i = 0; i < 100; ++i) {
            const ParamVector theta =
                oracles::uniform_vec(rng, f.model.param_count(), f.lo, f.hi);
            const MetricsSnapshot s = geometry_snapshot(f.model, theta, 0.05, f.batch);
            const double mrig = m * s.r_ig;
            const double rel =
                std::abs(s.slope * s.slope - mrig) / std::max(mrig, 1e-30);
            c.require(rel <= 1e-10, f.model.family() + ": slope identity rel err " +
                                        fmt(rel));
            if (!c.ok) break;
        }
    });
    return {3, "slope^2 = m * R_IG", c.ok, c.detail, 0.0};
}

Result criterion_4() {
    Check c;
    std::mt19937_64 rng(101);  // same sample as criterion 3
    for_each_family([&](const FamilySample& f) {
        const double m = static_cast<double>(f.model.param_count());
        for (int i = 0; i < 100; ++i) {
            const ParamVector theta =
                oracles::uniform_vec(rng, f.model.param_count(), f.lo, f.hi);
            const MetricsSnapshot s = geometry_snapshot(f.model, theta, 0.05, f.batch);
            const double det_want = 1.0 + m * s.r_ig;
            c.require(std::abs(s.metric_det - det_want) <= 1e-9 * det_want,
                      f.model.family() + ": metric_det");
            const double tan_alpha = std::tan(std::acos(s.normal_z));
            c.require(std::abs(tan_alpha - s.slope) <=
                          1e-9 * std::max(s.slope, 1e-30),
                      f.model.family() + ": tan(arccos(normal_z)) vs slope");
            if (!c.ok) break;
        }
    });
    return {4, "metric determinant and surface angle", c.ok, c.detail, 0.0};
}

Result criterion_5() {
    Check c;
    // a representative set of runs on top of everything tracked so far
    for (Variant2d v : {Variant2d::gd_small, Variant2d::gd_moderate,
                        Variant2d::gd_large}) {
        const Preset2dConstants k = preset_constants(Preset2d::point_I);
        const double h = v == Variant2d::gd_small      ? k.h_small
                         : v == Variant2d::gd_moderate ? k.h_moderate
                                                       : *k.h_large;
        track(h, run_preset_2d(Preset2d::point_I, v));
    }
    for (Variant2d v : {Variant2d::gd_small, Variant2d::gd_moderate}) {
        const Preset2dConstants k = preset_constants(Preset2d::point_II);
        const double h = v == Variant2d::gd_small ? k.h_small : k.h_moderate;
        track(h, run_preset_2d(Preset2d::point_II, v));
    }
    {
        const Dataset train = make_synthetic(300, 17);
        const MlpModel mlp = make_mlp({train.dim, 16, 10}, Activation::relu, 3);
        FlowRunConfig cfg;
        cfg.h = 0.1;
        cfg.max_iterations = 300;
        cfg.eval_every = 1;
        cfg.store_params = false;
        track(cfg.h, run_gd(mlp, mlp.initial_params(), as_batch(train), cfg));
    }

    std::size_t checked = 0;
    for (const auto& [h, traj] : g_runs) {
        ++checked;
        const auto violations = check_norm_bound(traj, h);
        c.require(traj.norm_bound_violations.empty() && violations.empty(),
                  "violations in trajectory " + std::to_string(checked));
    }
    c.require(checked >= 6, "too few trajectories collected");
    if (c.ok) c.detail = std::to_string(checked) + " trajectories clean";
    return {5, "norm bound holds on every non-diverged run", c.ok, c.detail, 0.0};
}

Result criterion_6() {
    Check c;
    std::mt19937_64 rng(202);
    for_each_family([&](const FamilySample& f) {
        for (int i = 0; i < 20; ++i) {
            const ParamVector theta =
                oracles::uniform_vec(rng, f.model.param_count(), f.lo, f.hi);

            const ParamVector g = f.model.grad(theta, f.batch);
            const ParamVector g_fd = oracles::fd_gradient(f.model, theta, f.batch);
            const double ge = oracles::rel_err(g, g_fd);
            c.require(ge <= 1e-5, f.model.family() + ": grad rel err " + fmt(ge));

            const ParamVector v =
                oracles::uniform_vec(rng, f.model.param_count(), -1.0, 1.0);
            const ParamVector hv = f.model.hvp(theta, v, f.batch);
            const ParamVector hv_fd = oracles::fd_hvp(f.model, theta, v, f.batch);
            const double he = oracles::rel_err(hv, hv_fd);
            c.require(he <= 1e-4, f.model.family() + ": hvp rel err " + fmt(he));

            const double mu = 0.3;
            const EgrEval ev = egr_value_grad(f.model, theta, mu, f.batch);
            ParamVector eg_fd(theta.size());
            const double eps = 1e-6;
            ParamVector work = theta;
            for (std::size_t j = 0; j < theta.size(); ++j) {
                work[j] = theta[j] + eps;
                const double up = egr_value_grad(f.model, work, mu, f.batch).value;
                work[j] = theta[j] - eps;
                const double dn = egr_value_grad(f.model, work, mu, f.batch).value;
                work[j] = theta[j];
                eg_fd[j] = (up - dn) / (2.0 * eps);
            }
            const double ee = oracles::rel_err(ev.gradient, eg_fd);
            c.require(ee <= 1e-4, f.model.family() + ": egr grad rel err " + fmt(ee));
            if (!c.ok) break;
        }
    });
    return {6, "derivative oracles (grad, hvp, egr)", c.ok, c.detail, 0.0};
}

Result criterion_7() {
    Check c;
    std::mt19937_64 rng(404);
    for (int i = 0; i < 20; ++i) {
        const std::size_t out = (i % 2 == 0) ? 1 : 3;
        const std::size_t dim = 1 + rng() % (out == 1 ? 6 : 5);
        const std::size_t n = 1 + rng() % 5;
        const LeastSquaresModel model = make_least_squares(FeatureMap::identity, dim, out);
        Batch batch;
        batch.count = n;
        batch.input_dim = dim;
        batch.inputs = oracles::uniform_vec(rng, n * dim);
        batch.targets = oracles::uniform_vec(rng, n * out);
        const ParamVector theta = oracles::uniform_vec(rng, model.param_count());

        const double direct = modified_loss(model, theta, 0.1, batch);
        const NtkRecord rec = ntk_modified_loss(model, theta, batch, 0.1);
        const double rel = std::abs(rec.ntk_modified_loss - direct) /
                           std::max(std::abs(direct), 1e-30);
        c.require(rel <= 1e-8, "instance " + std::to_string(i) + " rel err " + fmt(rel));
    }
    return {7, "kernel form of the modified loss", c.ok, c.detail, 0.0};
}

Result criterion_8() {
    Check c;
    const BilinearModel model = make_bilinear(1.0, 0.6);
    std::vector<double> norms;
    for (double h : {1e-3, 5e-3, 1e-2, 2.5e-2}) {
        FlowRunConfig cfg;
        cfg.h = h;
        cfg.max_iterations = 1000000;
        cfg.eval_every = 100000;
        cfg.grad_tol = 1e-12;
        cfg.store_params = false;
        const Trajectory traj = run_gd(model, kPointI, kEmpty, cfg);
        track(h, traj);
        const auto& t = traj.final_theta;
        norms.push_back(t[0] * t[0] + t[1] * t[1]);
    }
    for (std::size_t i = 1; i < norms.size(); ++i)
        c.require(norms[i] < norms[i - 1],
                  "a^2+b^2 not strictly decreasing: " + fmt(norms[i - 1]) + " -> " +
                      fmt(norms[i]));
    return {8, "converged norm decreases with the learning rate", c.ok, c.detail, 0.0};
}

Result criterion_9() {
    Check c;
    const Trajectory gd = run_preset_2d(Preset2d::point_I, Variant2d::gd_small);
    track(preset_constants(Preset2d::point_I).h_small, gd);
    const Trajectory egr = run_preset_2d(Preset2d::point_I, Variant2d::egr);
    track(preset_constants(Preset2d::point_I).h_euler, egr);

    c.require(egr.rows.back().loss < 1e-10,
              "EGR endpoint E = " + fmt(egr.rows.back().loss));
    const double r = std::sqrt(0.6);
    auto dist = [&](const ParamVector& t) {
        return std::hypot(t[0] - r, t[1] - r);
    };
    c.require(dist(egr.final_theta) < dist(gd.final_theta),
              "EGR endpoint dist " + fmt(dist(egr.final_theta)) +
                  " !< GD dist " + fmt(dist(gd.final_theta)));
    return {9, "EGR reaches a flatter minimum than small-rate GD", c.ok, c.detail, 0.0};
}

Result criterion_10() {
    Check c;
    const BilinearModel model = make_bilinear(1.0, 0.6);
    FlowRunConfig cfg;
    cfg.h = 0.18;
    cfg.max_iterations = 1000000;
    cfg.eval_every = 1;
    cfg.grad_tol = 1e-12;
    const Trajectory traj = run_gd(model, kPointI, kEmpty, cfg);
    track(cfg.h, traj);

    const double e0 = traj.rows.front().loss;
    const double n0 = traj.rows.front().param_norm;
    bool exceeds_e0 = false;
    double max_norm = 0.0;
    for (const auto& row : traj.rows) {
        if (row.loss > e0) exceeds_e0 = true;
        max_norm = std::max(max_norm, row.param_norm);
    }
    c.require(exceeds_e0, "E never exceeds its initial value " + fmt(e0));
    c.require(traj.rows.back().loss < 1e-6,
              "final E = " + fmt(traj.rows.back().loss));
    c.require(max_norm > n0, "max |theta| = " + fmt(max_norm) +
                                 " never exceeds |theta_0| = " + fmt(n0));
    return {10, "ricochet regime at h_L = 0.18", c.ok, c.detail, 0.0};
}

struct SweepContext {
    Dataset train, test;
    SweepResult result;
    bool ran = false;
};

SweepContext g_sweep;

Result criterion_11() {
    Check c;
    g_sweep.train = make_synthetic(10000, 1);
    g_sweep.test = make_synthetic(2000, 2);

    SweepConfig cfg;
    cfg.h_grid = {0.005, 0.05, 0.5};
    cfg.width_grid = {50, 100, 200};
    cfg.hidden_layers = 4;
    cfg.epochs = 20;
    cfg.policy.kind = BatchPolicy::Kind::minibatch;
    cfg.policy.size = 32;
    cfg.policy.shuffle_seed = 0;
    cfg.eval_every = 100;
    cfg.stopping.kind = StoppingCriterion::Kind::max_test_accuracy;
    cfg.stopping.require_full_train_accuracy = true;
    cfg.init_seed = 0;
    cfg.keep_theta = true;
    g_sweep.result = run_sweep(g_sweep.train, g_sweep.test, cfg);
    g_sweep.ran = true;

    std::vector<double> lambda, rig, acc;
    for (const SweepCell& cell : g_sweep.result.cells) {
        if (cell.excluded) continue;
        lambda.push_back(cell.lambda);
        rig.push_back(cell.r_ig);
        acc.push_back(cell.test_accuracy);
    }
    c.require(lambda.size() >= 3,
              "only " + std::to_string(lambda.size()) + " included cells");
    if (lambda.size() >= 3) {
        const double s_rig = spearman(lambda, rig);
        const double s_acc = spearman(lambda, acc);
        c.require(s_rig <= -0.5, "spearman(lambda, R_IG) = " + fmt(s_rig));
        c.require(s_acc >= 0.5, "spearman(lambda, test acc) = " + fmt(s_acc));
        if (c.ok)
            c.detail = std::to_string(lambda.size()) +
                       " cells, spearman R_IG = " + fmt(s_rig) +
                       ", test acc = " + fmt(s_acc);
    }
    return {11, "regularization-rate trends across the sweep", c.ok, c.detail, 0.0};
}

Result criterion_12() {
    Check c;
    if (!g_sweep.ran) {
        c.require(false, "sweep unavailable");
        return {12, "perturbation robustness ordering", c.ok, c.detail, 0.0};
    }
    const SweepCell* large = nullptr;
    const SweepCell* small = nullptr;
    for (const SweepCell& cell : g_sweep.result.cells) {
        if (cell.excluded) continue;
        if (!large || cell.h > large->h ||
            (cell.h == large->h && cell.width > large->width))
            large = &cell;
        if (!small || cell.h < small->h ||
            (cell.h == small->h && cell.width < small->width))
            small = &cell;
    }
    c.require(large && small && large->h > small->h,
              "no included pair with distinct learning rates");
    if (!c.ok) return {12, "perturbation robustness ordering", c.ok, c.detail, 0.0};

    const Batch test = as_batch(g_sweep.test);
    const Batch eval = as_batch(subset(g_sweep.train, 1000, 7));
    auto curves = [&](const SweepCell& cell) {
        std::vector<std::size_t> widths{g_sweep.train.dim};
        for (int l = 0; l < 4; ++l) widths.push_back(cell.width);
        widths.push_back(10);
        const MlpModel model(widths, Activation::relu, 0);
        return perturb_robustness(model, cell.theta, {0.1, 0.3, 0.5}, 20, 1234,
                                  test, eval);
    };
    const auto big = curves(*large);
    const auto sml = curves(*small);
    for (std::size_t i = 0; i < big.size(); ++i) {
        c.require(big[i].mean_accuracy > sml[i].mean_accuracy,
                  "sigma " + fmt(big[i].sigma) + ": accuracy " +
                      fmt(big[i].mean_accuracy) + " !> " + fmt(sml[i].mean_accuracy));
        c.require(big[i].mean_slope < sml[i].mean_slope,
                  "sigma " + fmt(big[i].sigma) + ": slope " +
                      fmt(big[i].mean_slope) + " !< " + fmt(sml[i].mean_slope));
    }
    if (c.ok)
        c.detail = "h " + fmt(large->h) + " (w " + std::to_string(large->width) +
                   ") vs h " + fmt(small->h) + " (w " + std::to_string(small->width) +
                   ")";
    return {12, "perturbation robustness ordering", c.ok, c.detail, 0.0};
}

Result criterion_13() {
    Check c;
    {
        const Trajectory a = run_preset_2d(Preset2d::point_I, Variant2d::gd_moderate);
        const Trajectory b = run_preset_2d(Preset2d::point_I, Variant2d::gd_moderate);
        track(0.025, a);
        c.require(trajectory_csv(a, reg_rate(0.025, 2)) ==
                      trajectory_csv(b, reg_rate(0.025, 2)),
                  "trajectory CSV bytes differ across reruns");
    }
    {
        const Dataset train = make_synthetic(300, 5);
        const Dataset test = make_synthetic(100, 6);
        SweepConfig cfg;
        cfg.h_grid = {0.05, 0.1};
        cfg.width_grid = {8};
        cfg.hidden_layers = 1;
        cfg.epochs = 2;
        cfg.policy.kind = BatchPolicy::Kind::minibatch;
        cfg.policy.size = 32;
        cfg.eval_every = 5;
        cfg.stopping.kind = StoppingCriterion::Kind::max_test_accuracy;
        cfg.stopping.require_full_train_accuracy = false;
        cfg.keep_theta = true;
        const SweepResult r1 = run_sweep(train, test, cfg);
        const SweepResult r2 = run_sweep(train, test, cfg);
        c.require(sweep_csv(r1) == sweep_csv(r2),
                  "sweep CSV bytes differ across reruns");

        const MlpModel model({train.dim, 8, 10}, Activation::relu, 0);
        const auto p1 = perturb_robustness(model, r1.cells[0].theta, {0.1, 0.3}, 5,
                                           42, as_batch(test), as_batch(train));
        const auto p2 = perturb_robustness(model, r2.cells[0].theta, {0.1, 0.3}, 5,
                                           42, as_batch(test), as_batch(train));
        c.require(robustness_csv(p1) == robustness_csv(p2),
                  "robustness CSV bytes differ across reruns");
    }
    return {13, "byte-identical reruns", c.ok, c.detail, 0.0};
}

}  // namespace

int main() {
    using clock = std::chrono::steady_clock;
    std::vector<Result> results;
    auto timed = [&](auto&& fn) {
        const auto t0 = clock::now();
        Result r = fn();
        r.seconds = std::chrono::duration<double>(clock::now() - t0).count();
        results.push_back(std::move(r));
        std::fprintf(stderr, "criterion %d done (%.1fs)\n", results.back().id,
                     results.back().seconds);
    };

    // 5 aggregates the runs of the other criteria, so it is evaluated last
    timed(criterion_1);
    timed(criterion_2);
    timed(criterion_3);
    timed(criterion_4);
    timed(criterion_6);
    timed(criterion_7);
    timed(criterion_8);
    timed(criterion_9);
    timed(criterion_10);
    timed(criterion_11);
    timed(criterion_12);
    timed(criterion_13);
    timed(criterion_5);

    // stated per-criterion runtime budgets (seconds); 0 = no hard budget
    const double budget[14] = {0, 5, 10, 1, 1, 0, 30, 5, 30, 30, 10, 0, 300, 0};
    for (Result& r : results) {
        if (budget[r.id] > 0 && r.seconds > budget[r.id]) {
            r.pass = false;
            if (!r.detail.empty()) r.detail += "; ";
            r.detail += "runtime " + fmt(r.seconds) + "s over the " +
                        fmt(budget[r.id]) + "s budget";
        }
    }

    std::sort(results.begin(), results.end(),
              [](const Result& a, const Result& b) { return a.id < b.id; });
    int failures = 0;
    for (const Result& r : results) {
        if (!r.pass) ++failures;
        std::printf("%s  criterion %2d  %-48s  %7.2fs%s%s\n",
                    r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds,
                    r.detail.empty() ? "" : "  -- ", r.detail.c_str());
    }
    std::printf("%d/13 criteria passed\n", 13 - failures);
    return failures;
}
