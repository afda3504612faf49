// Command-line entry point. Subcommands: flow2d, order-check, train, sweep,
// perturb, ntk-check, egr. Every run writes plot-ready CSV plus a manifest
// under --out. Exit codes: 0 success, 1 config error, 2 divergence (or a
// failed check), 3 I/O error.

#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "igr/dataset.hpp"
#include "igr/harness.hpp"
#include "igr/kernels.hpp"
#include "igr/least_squares.hpp"
#include "igr/metrics.hpp"
#include "igr/persist.hpp"

namespace {

using namespace igr;

struct DataOptions {
    std::string source = "synthetic";
    std::string images_path, labels_path;
    std::size_t n_train = 10000;
    std::size_t n_test = 2000;
    std::uint64_t data_seed = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--data", source, "Data source: synthetic or idx")
            ->check(CLI::IsMember({"synthetic", "idx"}));
        cmd->add_option("--images", images_path, "IDX image file (idx source)");
        cmd->add_option("--labels", labels_path, "IDX label file (idx source)");
        cmd->add_option("--n-train", n_train, "Training subset size");
        cmd->add_option("--n-test", n_test, "Test subset size");
        cmd->add_option("--data-seed", data_seed, "Seed for data generation/subsetting");
    }

    std::pair<Dataset, Dataset> load() const {
        if (source == "idx") {
            if (images_path.empty() || labels_path.empty())
                throw ConfigError("idx source requires --images and --labels");
            const Dataset full = load_idx(images_path, labels_path);
            const Dataset shuffled = subset(full, full.count, data_seed);
            if (n_train + n_test > full.count)
                throw ConfigError("n_train + n_test exceeds dataset size");
            Dataset train = subset(shuffled, n_train, data_seed + 1);
            // disjoint tail for the test subset
            Dataset rest;
            rest.dim = shuffled.dim;
            rest.provenance = shuffled.provenance;
            rest.count = shuffled.count - n_train;
            rest.images.assign(shuffled.images.begin() + n_train * shuffled.dim,
                               shuffled.images.end());
            rest.labels.assign(shuffled.labels.begin() + n_train,
                               shuffled.labels.end());
            return {std::move(train), subset(rest, n_test, data_seed + 2)};
        }
        return {make_synthetic(n_train, data_seed),
                make_synthetic(n_test, data_seed + 1000)};
    }
};

struct TrainOptions {
    std::size_t width = 50;
    std::size_t hidden_layers = 4;
    double h = 0.1;
    long epochs = 20;
    std::size_t batch_size = 32;
    long eval_every = 100;
    std::uint64_t init_seed = 0;
    std::uint64_t shuffle_seed = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--width", width, "Hidden layer width");
        cmd->add_option("--layers", hidden_layers, "Number of hidden layers");
        cmd->add_option("--lr", h, "Learning rate")->check(CLI::PositiveNumber);
        cmd->add_option("--epochs", epochs, "Epoch budget");
        cmd->add_option("--batch-size", batch_size, "Minibatch size (0 = full batch)");
        cmd->add_option("--eval-every", eval_every, "Metric cadence in steps");
        cmd->add_option("--seed", init_seed, "Initialization seed");
        cmd->add_option("--shuffle-seed", shuffle_seed, "Minibatch shuffle seed");
    }
};

struct TrainOutput {
    MlpModel model;
    ParamVector theta;
    Trajectory trajectory;
};

TrainOutput train_mlp(const Dataset& train, const Dataset& test,
                      const TrainOptions& opt) {
    std::vector<std::size_t> widths{train.dim};
    for (std::size_t l = 0; l < opt.hidden_layers; ++l) widths.push_back(opt.width);
    widths.push_back(10);
    MlpModel model(widths, Activation::relu, opt.init_seed);

    BatchPolicy policy;
    if (opt.batch_size == 0) {
        policy.kind = BatchPolicy::Kind::full;
    } else {
        policy.kind = BatchPolicy::Kind::minibatch;
        policy.size = opt.batch_size;
        policy.shuffle_seed = opt.shuffle_seed;
    }
    const Batch train_batch = as_batch(train);
    const Batch test_batch = as_batch(test);

    TrainOutput out{std::move(model), {}, {}};
    out.theta = out.model.initial_params();
    out.trajectory.h = opt.h;

    auto record = [&](long iter) {
        TrajectoryRow row;
        row.iteration = iter;
        row.time = static_cast<double>(iter) * opt.h;
        row.loss = out.model.loss(out.theta, train_batch);
        const ParamVector g = out.model.grad(out.theta, train_batch);
        row.slope = param_norm(g);
        row.r_ig = row.slope * row.slope /
                   static_cast<double>(out.model.param_count());
        row.param_norm = param_norm(out.theta);
        row.loss_modified = row.loss + (opt.h / 4.0) * row.slope * row.slope;
        row.train_accuracy = out.model.accuracy(out.theta, train_batch);
        row.test_accuracy = out.model.accuracy(out.theta, test_batch);
        out.trajectory.rows.push_back(std::move(row));
    };

    long iter = 0;
    record(0);
    try {
        for (long epoch = 0; epoch < opt.epochs; ++epoch) {
            for (Batch& b : batches(train, policy, epoch)) {
                const ParamVector g = out.model.grad(out.theta, b);
                kern::axpy(-opt.h, g.data(), out.theta.data(), out.theta.size());
                require_finite(out.theta, "train iterate", iter);
                ++iter;
                if (iter % opt.eval_every == 0) record(iter);
            }
        }
        if (out.trajectory.rows.back().iteration != iter) record(iter);
        out.trajectory.termination = Termination::completed;
    } catch (const DivergenceError&) {
        out.trajectory.termination = Termination::diverged;
    }
    out.trajectory.final_theta = out.theta;
    out.trajectory.final_iteration = iter;
    return out;
}

std::map<std::string, std::string> data_config(const DataOptions& d) {
    return {{"data", d.source},
            {"n_train", std::to_string(d.n_train)},
            {"n_test", std::to_string(d.n_test)},
            {"data_seed", std::to_string(d.data_seed)}};
}

int cmd_flow2d(const std::string& preset_name, const std::string& variant_name,
               const std::string& out_dir, double t_end_opt) {
    const Preset2d preset = parse_preset_2d(preset_name);
    const Variant2d variant = parse_variant_2d(variant_name);
    std::optional<double> t_end;
    if (t_end_opt >= 0.0) t_end = t_end_opt;
    const Trajectory traj = run_preset_2d(preset, variant, t_end);

    RunManifest manifest;
    manifest.command = "flow2d";
    manifest.config = {{"preset", preset_name}, {"variant", variant_name}};
    if (t_end) manifest.config["t_end"] = format_double(*t_end);
    manifest.termination_reasons = {termination_name(traj.termination)};
    persist_run(out_dir, {{"trajectory.csv", trajectory_csv(traj, traj.h * 2.0 / 4.0)}},
                std::move(manifest));
    return traj.termination == Termination::diverged ? 2 : 0;
}

int cmd_order_check(const std::string& preset_name, const std::string& out_dir) {
    const Preset2dConstants c = preset_constants(parse_preset_2d(preset_name));
    const BilinearModel model(c.x, c.y);
    const ParamVector theta0{c.a0, c.b0};
    const std::vector<double> h_grid{1e-4, 3.1623e-4, 1e-3, 3.1623e-3, 1e-2};
    const OrderFit fit = estimate_local_order(model, theta0, Batch{}, h_grid);

    std::printf("order vs exact flow:    %.4f (R^2 %.6f)\n", fit.order_vs_exact,
                fit.r2_exact);
    std::printf("order vs modified flow: %.4f (R^2 %.6f)\n", fit.order_vs_modified,
                fit.r2_modified);

    if (!out_dir.empty()) {
        std::ostringstream csv;
        csv << "h,err_vs_exact_flow,err_vs_modified_flow\n";
        for (std::size_t i = 0; i < fit.h_values.size(); ++i)
            csv << format_double(fit.h_values[i]) << ','
                << format_double(fit.err_exact[i]) << ','
                << format_double(fit.err_modified[i]) << '\n';
        RunManifest manifest;
        manifest.command = "order-check";
        manifest.config = {{"preset", preset_name},
                           {"order_vs_exact", format_double(fit.order_vs_exact)},
                           {"order_vs_modified", format_double(fit.order_vs_modified)}};
        persist_run(out_dir, {{"order_fit.csv", csv.str()}}, std::move(manifest));
    }
    return 0;
}

int cmd_train(const DataOptions& data_opt, const TrainOptions& train_opt,
              const std::string& out_dir) {
    const auto [train, test] = data_opt.load();
    const TrainOutput out = train_mlp(train, test, train_opt);

    RunManifest manifest;
    manifest.command = "train";
    manifest.config = data_config(data_opt);
    manifest.config["width"] = std::to_string(train_opt.width);
    manifest.config["layers"] = std::to_string(train_opt.hidden_layers);
    manifest.config["h"] = format_double(train_opt.h);
    manifest.config["epochs"] = std::to_string(train_opt.epochs);
    manifest.config["batch_size"] = std::to_string(train_opt.batch_size);
    manifest.config["init_seed"] = std::to_string(train_opt.init_seed);
    manifest.config["shuffle_seed"] = std::to_string(train_opt.shuffle_seed);
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(train.checksum));
    manifest.config["train_checksum"] = hex;
    manifest.termination_reasons = {termination_name(out.trajectory.termination)};
    const double lambda = reg_rate(train_opt.h, out.model.param_count());
    persist_run(out_dir, {{"trajectory.csv", trajectory_csv(out.trajectory, lambda)}},
                std::move(manifest));
    return out.trajectory.termination == Termination::diverged ? 2 : 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              int parallel) {
    const auto cfg = load_config(config_path);
    auto get = [&](const std::string& key, const std::string& fallback) {
        const auto it = cfg.find(key);
        return it == cfg.end() ? fallback : it->second;
    };
    if (get("schema_version", "") != "1")
        throw ConfigError("unsupported schema_version (expected 1)");

    DataOptions data_opt;
    data_opt.source = get("data", "synthetic");
    data_opt.images_path = get("images", "");
    data_opt.labels_path = get("labels", "");
    data_opt.n_train = std::stoul(get("n_train", "10000"));
    data_opt.n_test = std::stoul(get("n_test", "2000"));
    data_opt.data_seed = std::stoull(get("data_seed", "1"));

    SweepConfig sweep;
    sweep.h_grid = parse_double_list(get("h_grid", "0.005,0.05,0.5"));
    sweep.width_grid = parse_size_list(get("width_grid", "50,100,200"));
    sweep.hidden_layers = std::stoul(get("hidden_layers", "4"));
    sweep.epochs = std::stol(get("epochs", "20"));
    sweep.eval_every = std::stol(get("eval_every", "100"));
    sweep.init_seed = std::stoull(get("init_seed", "0"));
    sweep.parallel = parallel;
    const std::size_t batch_size = std::stoul(get("batch_size", "32"));
    if (batch_size == 0) {
        sweep.policy.kind = BatchPolicy::Kind::full;
    } else {
        sweep.policy.kind = BatchPolicy::Kind::minibatch;
        sweep.policy.size = batch_size;
        sweep.policy.shuffle_seed = std::stoull(get("shuffle_seed", "0"));
    }
    const std::string stopping = get("stopping", "max_test_accuracy");
    if (stopping == "max_test_accuracy")
        sweep.stopping.kind = StoppingCriterion::Kind::max_test_accuracy;
    else if (stopping == "fixed_iterations")
        sweep.stopping.kind = StoppingCriterion::Kind::fixed_iterations;
    else if (stopping == "fixed_physical_time")
        sweep.stopping.kind = StoppingCriterion::Kind::fixed_physical_time;
    else
        throw ConfigError("unknown stopping criterion: " + stopping);
    sweep.stopping.physical_time = std::stod(get("physical_time", "0"));
    sweep.stopping.require_full_train_accuracy =
        get("require_full_train_accuracy", "1") == "1";

    const auto [train, test] = data_opt.load();
    const SweepResult result = run_sweep(train, test, sweep);

    RunManifest manifest;
    manifest.command = "sweep";
    for (const auto& [k, v] : cfg) manifest.config[k] = v;
    for (const auto& c : result.cells)
        manifest.termination_reasons.push_back(c.excluded ? c.exclusion_reason
                                                          : "completed");
    persist_run(out_dir, {{"sweep.csv", sweep_csv(result)}}, std::move(manifest));
    return 0;
}

int cmd_perturb(const DataOptions& data_opt, const TrainOptions& train_opt,
                const std::string& sigmas, int realizations, std::uint64_t seed,
                const std::string& out_dir) {
    const auto [train, test] = data_opt.load();
    const TrainOutput out = train_mlp(train, test, train_opt);
    if (out.trajectory.termination == Termination::diverged) return 2;

    const std::vector<double> sigma_grid = parse_double_list(sigmas);
    const auto curves =
        perturb_robustness(out.model, out.theta, sigma_grid, realizations, seed,
                           as_batch(test), as_batch(train));

    RunManifest manifest;
    manifest.command = "perturb";
    manifest.config = data_config(data_opt);
    manifest.config["width"] = std::to_string(train_opt.width);
    manifest.config["h"] = format_double(train_opt.h);
    manifest.config["sigmas"] = sigmas;
    manifest.config["realizations"] = std::to_string(realizations);
    manifest.config["perturb_seed"] = std::to_string(seed);
    persist_run(out_dir, {{"robustness.csv", robustness_csv(curves)}},
                std::move(manifest));
    return 0;
}

int cmd_ntk_check(int count, std::uint64_t seed, double h, const std::string& out_dir) {
    std::mt19937_64 rng(seed);
    auto uniform = [&rng]() {
        return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
    };

    double worst = 0.0;
    std::ostringstream csv;
    csv << "instance,n,c,m,direct,ntk,rel_err\n";
    for (int i = 0; i < count; ++i) {
        const std::size_t c = (rng() % 2 == 0) ? 1 : 3;
        const std::size_t d = 1 + rng() % (c == 1 ? 6 : 5);
        const std::size_t n = 1 + rng() % 5;
        const LeastSquaresModel model(FeatureMap::identity, d, c);
        ParamVector theta(model.param_count());
        for (double& v : theta) v = uniform();
        Batch batch;
        batch.count = n;
        batch.input_dim = d;
        batch.inputs.resize(n * d);
        batch.targets.resize(n * c);
        for (double& v : batch.inputs) v = uniform();
        for (double& v : batch.targets) v = uniform();

        const double direct = modified_loss(model, theta, h, batch);
        const NtkRecord rec = ntk_modified_loss(model, theta, batch, h);
        const double rel = std::abs(rec.ntk_modified_loss - direct) /
                           std::max(std::abs(direct), 1e-30);
        worst = std::max(worst, rel);
        csv << i << ',' << n << ',' << c << ',' << model.param_count() << ','
            << format_double(direct) << ',' << format_double(rec.ntk_modified_loss)
            << ',' << format_double(rel) << '\n';
    }
    std::printf("ntk-check: %d instances, max relative error %.3e\n", count, worst);

    if (!out_dir.empty()) {
        RunManifest manifest;
        manifest.command = "ntk-check";
        manifest.config = {{"count", std::to_string(count)},
                           {"seed", std::to_string(seed)},
                           {"h", format_double(h)},
                           {"max_rel_err", format_double(worst)}};
        persist_run(out_dir, {{"ntk_check.csv", csv.str()}}, std::move(manifest));
    }
    return worst <= 1e-8 ? 0 : 2;
}

int cmd_egr(const std::string& preset_name, const std::string& out_dir) {
    const Preset2d preset = parse_preset_2d(preset_name);
    const Trajectory traj = run_preset_2d(preset, Variant2d::egr);
    RunManifest manifest;
    manifest.command = "egr";
    manifest.config = {{"preset", preset_name}};
    manifest.termination_reasons = {termination_name(traj.termination)};
    const double lambda = reg_rate(traj.h, 2);
    persist_run(out_dir, {{"trajectory.csv", trajectory_csv(traj, lambda)}},
                std::move(manifest));
    return traj.termination == Termination::diverged ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Implicit gradient regularization toolkit"};
    app.require_subcommand(1);

    // flow2d
    auto* flow2d = app.add_subcommand("flow2d", "Run a two-parameter preset");
    std::string f_preset = "point_I", f_variant = "gd_moderate", f_out = "runs";
    double f_tend = -1.0;
    flow2d->add_option("--preset", f_preset, "point_I or point_II");
    flow2d->add_option("--variant", f_variant,
                       "gd_small|gd_moderate|gd_large|exact_flow|modified_flow|egr");
    flow2d->add_option("--t-end", f_tend, "Flow horizon (flow variants)");
    flow2d->add_option("--out", f_out, "Output directory")->required();

    // order-check
    auto* order = app.add_subcommand("order-check", "Local-error order fit");
    std::string o_preset = "point_I", o_out;
    order->add_option("--preset", o_preset, "point_I or point_II");
    order->add_option("--out", o_out, "Output directory (optional)");

    // train
    auto* train = app.add_subcommand("train", "Train one MLP classifier");
    DataOptions t_data;
    TrainOptions t_train;
    std::string t_out = "runs";
    t_data.attach(train);
    t_train.attach(train);
    train->add_option("--out", t_out, "Output directory")->required();

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Learning-rate x width sweep");
    std::string s_config, s_out = "runs";
    int s_parallel = 1;
    sweep->add_option("--config", s_config, "Sweep config file")->required();
    sweep->add_option("--out", s_out, "Output directory")->required();
    sweep->add_option("--parallel", s_parallel, "Concurrent sweep cells");

    // perturb
    auto* perturb = app.add_subcommand("perturb", "Perturbation robustness");
    DataOptions p_data;
    TrainOptions p_train;
    std::string p_sigmas = "0.1,0.3,0.5", p_out = "runs";
    int p_realizations = 20;
    std::uint64_t p_seed = 0;
    p_data.attach(perturb);
    p_train.attach(perturb);
    perturb->add_option("--sigmas", p_sigmas, "Comma-separated sigma grid");
    perturb->add_option("--realizations", p_realizations, "Draws per sigma")
        ->check(CLI::Range(1, 100));
    perturb->add_option("--perturb-seed", p_seed, "Perturbation RNG seed");
    perturb->add_option("--out", p_out, "Output directory")->required();

    // ntk-check
    auto* ntk = app.add_subcommand("ntk-check", "Kernel-form modified loss check");
    int n_count = 20;
    std::uint64_t n_seed = 0;
    double n_h = 0.1;
    std::string n_out;
    ntk->add_option("--count", n_count, "Number of random instances");
    ntk->add_option("--seed", n_seed, "Instance RNG seed");
    ntk->add_option("--step", n_h, "Step size")->check(CLI::PositiveNumber);
    ntk->add_option("--out", n_out, "Output directory (optional)");

    // egr
    auto* egr = app.add_subcommand("egr", "Run the EGR preset");
    std::string e_preset = "point_I", e_out = "runs";
    egr->add_option("--preset", e_preset, "point_I or point_II");
    egr->add_option("--out", e_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (flow2d->parsed()) return cmd_flow2d(f_preset, f_variant, f_out, f_tend);
        if (order->parsed()) return cmd_order_check(o_preset, o_out);
        if (train->parsed()) return cmd_train(t_data, t_train, t_out);
        if (sweep->parsed()) return cmd_sweep(s_config, s_out, s_parallel);
        if (perturb->parsed())
            return cmd_perturb(p_data, p_train, p_sigmas, p_realizations, p_seed, p_out);
        if (ntk->parsed()) return cmd_ntk_check(n_count, n_seed, n_h, n_out);
        if (egr->parsed()) return cmd_egr(e_preset, e_out);
    } catch (const igr::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 3;
    } catch (const igr::DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << '\n';
        return 2;
    } catch (const igr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const igr::IdxParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
