#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "igr/harness.hpp"
#include "igr/metrics.hpp"

using namespace igr;

TEST_CASE("preset table constants") {
    const Preset2dConstants I = preset_constants(Preset2d::point_I);
    CHECK(I.a0 == 2.8);
    CHECK(I.b0 == 3.5);
    CHECK(I.x == 1.0);
    CHECK(I.y == 0.6);
    CHECK(I.h_small == 1e-3);
    CHECK(I.h_moderate == 2.5e-2);
    CHECK(I.h_large == 1.8e-1);
    CHECK(I.mu == 0.5);
    CHECK(I.h_euler == 1e-4);

    const Preset2dConstants II = preset_constants(Preset2d::point_II);
    CHECK(II.a0 == 75.0);
    CHECK(II.b0 == 74.925);
    CHECK(II.h_small == 1e-6);
    CHECK(II.h_moderate == 0.5e-4);
    CHECK(!II.h_large.has_value());
    CHECK(II.mu == 4.1e-2);
    CHECK(II.h_euler == 5e-7);
}

TEST_CASE("point_II has no gd_large variant") {
    CHECK_THROWS_AS(run_preset_2d(Preset2d::point_II, Variant2d::gd_large),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_preset_2d("point_III"), std::invalid_argument);
    CHECK_THROWS_AS(parse_variant_2d("gd_enormous"), std::invalid_argument);
}

TEST_CASE("exact flow with vanishing horizon stays at the start") {
    const Trajectory traj =
        run_preset_2d(Preset2d::point_I, Variant2d::exact_flow, 0.0);
    REQUIRE(traj.rows.size() == 1);
    CHECK(traj.rows[0].theta[0] == 2.8);
    CHECK(traj.rows[0].theta[1] == 3.5);
}

TEST_CASE("moderate-rate GD tracks the modified flow more closely") {
    const FlowCloseness c = compare_gd_to_flows(Preset2d::point_I, 400);
    CHECK(c.max_dist_modified < c.max_dist_exact);
}

TEST_CASE("fixed physical time stopping") {
    CHECK(fixed_time_iterations(0.1, 50.0) == 500);
    CHECK(fixed_time_iterations(0.05, 50.0) == 1000);  // (h/2, 2n), same T
    CHECK(fixed_time_iterations(0.3, 1.0) == 4);       // smallest n with nh >= T
    CHECK_THROWS_AS(fixed_time_iterations(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(fixed_time_iterations(0.1, 0.0), std::invalid_argument);
}

TEST_CASE("best checkpoint takes the earliest maximum") {
    CHECK(best_checkpoint({0.3, 0.9, 0.9, 0.8}) == 1);
    CHECK(best_checkpoint({0.5}) == 0);
    CHECK_THROWS_AS(best_checkpoint({}), std::invalid_argument);
}

TEST_CASE("spearman rank correlation") {
    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
    // monotone in rank, not value
    CHECK(spearman({1, 2, 3}, {1, 100, 10000}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(spearman({1.0}, {2.0}), std::invalid_argument);
}

TEST_CASE("2-d held-out test error") {
    // exact fit of the held-out point (ab = 1.2) has zero test error
    CHECK(test_error_2d({2.0, 0.6}) == doctest::Approx(0.0));
    // the training minimum ab = 0.6 does not fit the held-out point
    CHECK(test_error_2d({1.0, 0.6}) > 0.0);
}

TEST_CASE("single-cell sweep record") {
    const Dataset train = make_synthetic(300, 0);
    const Dataset test = make_synthetic(100, 50);
    SweepConfig cfg;
    cfg.h_grid = {0.1};
    cfg.width_grid = {16};
    cfg.hidden_layers = 1;
    cfg.epochs = 5;
    cfg.policy.kind = BatchPolicy::Kind::minibatch;
    cfg.policy.size = 32;
    cfg.eval_every = 10;
    cfg.stopping.kind = StoppingCriterion::Kind::max_test_accuracy;
    cfg.stopping.require_full_train_accuracy = false;

    const SweepResult result = run_sweep(train, test, cfg);
    REQUIRE(result.cells.size() == 1);
    const SweepCell& cell = result.cells[0];
    CHECK(cell.h == 0.1);
    CHECK(cell.width == 16);
    CHECK(cell.m == 784 * 16 + 16 + 16 * 10 + 10);
    CHECK(cell.lambda == doctest::Approx(reg_rate(0.1, cell.m)));
    CHECK(!cell.excluded);
    CHECK(cell.test_accuracy > 0.2);  // way above chance
    // slope^2 = m * R_IG at the recorded point
    CHECK(cell.slope * cell.slope ==
          doctest::Approx(static_cast<double>(cell.m) * cell.r_ig).epsilon(1e-9));

    // identical config reproduces the record bit-exactly
    const SweepResult again = run_sweep(train, test, cfg);
    CHECK(again.cells[0].loss == cell.loss);
    CHECK(again.cells[0].test_accuracy == cell.test_accuracy);
    CHECK(again.cells[0].stop_iteration == cell.stop_iteration);
}

TEST_CASE("excluded cells carry a machine-checkable reason") {
    const Dataset train = make_synthetic(200, 1);
    const Dataset test = make_synthetic(50, 2);
    SweepConfig cfg;
    cfg.h_grid = {1e-6};  // far too small to memorize in one epoch
    cfg.width_grid = {8};
    cfg.hidden_layers = 1;
    cfg.epochs = 1;
    cfg.policy.kind = BatchPolicy::Kind::minibatch;
    cfg.policy.size = 32;
    cfg.eval_every = 5;
    cfg.stopping.kind = StoppingCriterion::Kind::max_test_accuracy;
    cfg.stopping.require_full_train_accuracy = true;

    const SweepResult result = run_sweep(train, test, cfg);
    REQUIRE(result.cells.size() == 1);
    CHECK(result.cells[0].excluded);
    CHECK(result.cells[0].exclusion_reason == "never reached 100% train accuracy");
}

TEST_CASE("sweep parallel assembly matches sequential") {
    const Dataset train = make_synthetic(150, 3);
    const Dataset test = make_synthetic(50, 4);
    SweepConfig cfg;
    cfg.h_grid = {0.05, 0.1};
    cfg.width_grid = {8, 12};
    cfg.hidden_layers = 1;
    cfg.epochs = 2;
    cfg.policy.kind = BatchPolicy::Kind::minibatch;
    cfg.policy.size = 32;
    cfg.eval_every = 5;
    cfg.stopping.kind = StoppingCriterion::Kind::fixed_iterations;
    cfg.stopping.require_full_train_accuracy = false;

    const SweepResult seq = run_sweep(train, test, cfg);
    cfg.parallel = 4;
    const SweepResult par = run_sweep(train, test, cfg);
    REQUIRE(seq.cells.size() == par.cells.size());
    for (std::size_t i = 0; i < seq.cells.size(); ++i) {
        CHECK(seq.cells[i].h == par.cells[i].h);
        CHECK(seq.cells[i].width == par.cells[i].width);
        CHECK(seq.cells[i].loss == par.cells[i].loss);
        CHECK(seq.cells[i].test_accuracy == par.cells[i].test_accuracy);
    }
}

TEST_CASE("perturbation with sigma 0 is exact and has zero deviation") {
    const Dataset train = make_synthetic(200, 5);
    const Dataset test = make_synthetic(80, 6);
    const MlpModel model({train.dim, 8, 10}, Activation::relu, 0);
    const ParamVector theta = model.initial_params();

    const auto curves = perturb_robustness(model, theta, {0.0, 0.2}, 5, 99,
                                           as_batch(test), as_batch(train));
    REQUIRE(curves.size() == 2);
    CHECK(curves[0].sigma == 0.0);
    CHECK(curves[0].std_accuracy == 0.0);
    CHECK(curves[0].std_slope == 0.0);
    CHECK(curves[0].mean_accuracy ==
          doctest::Approx(model.accuracy(theta, as_batch(test))));

    // stream is (sigma, realization)-keyed: repeat runs agree exactly
    const auto again = perturb_robustness(model, theta, {0.0, 0.2}, 5, 99,
                                          as_batch(test), as_batch(train));
    CHECK(again[1].mean_accuracy == curves[1].mean_accuracy);
    CHECK(again[1].mean_slope == curves[1].mean_slope);

    CHECK_THROWS_AS(perturb_robustness(model, theta, {0.1}, 0, 0, as_batch(test),
                                       as_batch(train)),
                    std::invalid_argument);
    CHECK_THROWS_AS(perturb_robustness(model, theta, {-0.1}, 1, 0, as_batch(test),
                                       as_batch(train)),
                    std::invalid_argument);
}
