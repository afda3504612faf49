#pragma once

// Experiment drivers: the two-parameter presets, learning-rate x width
// sweeps with three stopping criteria, and perturbation-robustness curves.

#include <cstdint>
#include <optional>

#include "igr/bilinear.hpp"
#include "igr/dataset.hpp"
#include "igr/egr.hpp"
#include "igr/flow.hpp"
#include "igr/mlp.hpp"

namespace igr {

enum class Preset2d { point_I, point_II };
enum class Variant2d { gd_small, gd_moderate, gd_large, exact_flow, modified_flow, egr };

struct Preset2dConstants {
    double a0, b0, x, y;
    double h_small, h_moderate;
    std::optional<double> h_large;  // not available for point II
    double mu;                      // 2-d convention of the regularized loss
    double h_euler;
};

Preset2dConstants preset_constants(Preset2d preset);

Preset2d parse_preset_2d(const std::string& name);
Variant2d parse_variant_2d(const std::string& name);

// Runs the preset with its table constants. Flow variants integrate to
// t_end (default: the moderate-rate run horizon) and sample every
// h_moderate; the egr variant maps the tabulated 2-d rate onto the general
// objective (coefficient mu/2).
Trajectory run_preset_2d(Preset2d preset, Variant2d variant,
                         std::optional<double> t_end = std::nullopt);

// max over matched physical times n*h_moderate of |theta_n - flow(n*h)| for
// the exact and the first-order modified flow.
struct FlowCloseness {
    double max_dist_exact = 0.0;
    double max_dist_modified = 0.0;
};
FlowCloseness compare_gd_to_flows(Preset2d preset, long steps);

// Loss on the held-out point (x = 0.5, y = 0.6) for a 2-d parameter vector
// trained on (x = 1, y = 0.6).
double test_error_2d(const ParamVector& theta);

struct StoppingCriterion {
    enum class Kind { fixed_iterations, fixed_physical_time, max_test_accuracy };
    Kind kind = Kind::fixed_iterations;
    double physical_time = 0.0;  // T, for fixed_physical_time
    bool require_full_train_accuracy = false;  // drop cells below 100% train acc
};

// Smallest n with n*h >= T.
long fixed_time_iterations(double h, double T);

// Earliest index attaining the maximum.
std::size_t best_checkpoint(const std::vector<double>& accuracies);

struct SweepCell {
    double h = 0.0;
    std::size_t width = 0;
    std::size_t m = 0;
    double lambda = 0.0;
    long stop_iteration = 0;
    double loss = 0.0;
    double r_ig = 0.0;
    double slope = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    bool excluded = false;
    std::string exclusion_reason;
    ParamVector theta;  // parameters at the stopping point
};

struct SweepConfig {
    std::vector<double> h_grid;
    std::vector<std::size_t> width_grid;
    std::size_t hidden_layers = 4;  // widths: input, hidden..., 10
    long epochs = 20;
    BatchPolicy policy;
    long eval_every = 100;  // test-accuracy checkpoint cadence, in steps
    StoppingCriterion stopping;
    std::uint64_t init_seed = 0;
    bool keep_theta = false;  // retain per-cell parameters (robustness study)
    int parallel = 1;         // concurrent cells; results are keyed by index
};

struct SweepResult {
    std::vector<SweepCell> cells;
};

// Trains every (h, width) cell on `train`, scoring on `test`. Metrics
// (loss, R_IG, slope, train accuracy) are evaluated on the full training
// subset at the selected stopping point. Divergent cells are flagged and
// the sweep continues.
SweepResult run_sweep(const Dataset& train, const Dataset& test,
                      const SweepConfig& config);

struct RobustnessPoint {
    double sigma = 0.0;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    double mean_slope = 0.0;
    double std_slope = 0.0;
};

// theta_p = theta * (1 + eta), eta ~ N(0, sigma) i.i.d. per parameter; the
// RNG stream is indexed by (sigma index, realization). Accuracy on `test`,
// slope on `eval_batch`.
std::vector<RobustnessPoint> perturb_robustness(const MlpModel& model,
                                                const ParamVector& theta_trained,
                                                const std::vector<double>& sigma_grid,
                                                int realizations, std::uint64_t seed,
                                                const Batch& test,
                                                const Batch& eval_batch);

// Spearman rank correlation with average ranks on ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace igr
