#include "muhs/dynamics.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace muhs {
namespace {

using std::numbers::pi;

PeriodicField on(std::size_t n, auto f) { return PeriodicField::sample(n, f); }

Scenario scenario_with(ModeList initial, double lambda, double t_end, std::size_t n = 256) {
    Scenario s;
    s.lambda = lambda;
    s.initial = std::move(initial);
    s.t_end = t_end;
    s.grid_n = n;
    return s;
}

TEST(Rhs, ConstantFieldDecays) {
    for (double c : {2.0, -0.7}) {
        const auto r = rhs(PeriodicField::constant(64, c), 0.3, c, 0.4);
        EXPECT_LE(max_abs_difference(r, PeriodicField::constant(64, -0.4 * c)), 1e-14);
    }
}

TEST(Rhs, ZeroField) { EXPECT_EQ(max_abs(rhs(PeriodicField::constant(64, 0.0), 0.0, 0.0, 0.5)), 0.0); }

TEST(Rhs, CosineClosedForm) {
    const double lambda = 0.25;
    const auto u = on(256, [](double x) { return std::cos(two_pi * x); });
    const auto expect = on(256, [&](double x) { return 0.75 * pi * std::sin(4 * pi * x) - lambda * std::cos(two_pi * x); });
    EXPECT_LE(max_abs_difference(rhs(u, 0.0, 0.0, lambda), expect), 1e-12);
}

TEST(Rhs, AgreesWithQuadratureAssembly) {
    // Assemble the right-hand side on a 4x finer grid from analytic products
    // and the quadrature form of d/dx A^{-1}, then compare on the coarse grid.
    const double lambda = 0.25, mu0 = 0.0;
    const std::size_t n = 256, fine = 4 * n;
    const auto u = [](double x) { return std::cos(two_pi * x); };
    const auto ux = [](double x) { return -two_pi * std::sin(two_pi * x); };
    const auto energy = on(fine, [&](double x) { return 0.5 * ux(x) * ux(x) + 2 * mu0 * u(x); });
    const auto nonlocal = dx_Ainv_quadrature(energy);
    const auto coarse = rhs(on(n, u), 0.0, mu0, lambda);
    double err = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double x = coarse.x(j);
        const double oracle = -u(x) * ux(x) - nonlocal[4 * j] - lambda * u(x);
        err = std::max(err, std::abs(coarse[j] - oracle));
    }
    EXPECT_LE(err, 1e-8);
}

TEST(Step, ConstantFieldFollowsRk4Polynomial) {
    Scenario s;
    s.lambda = 0.5;
    const double c = 2.0, dt = 0.01, z = s.lambda * dt;
    const SimulationState st{0.0, PeriodicField::constant(64, c), c, 0.0};
    const auto next = step(st, dt, s);
    EXPECT_DOUBLE_EQ(next.t, dt);
    const double poly = c * (1 - z + z * z / 2 - z * z * z / 6 + z * z * z * z / 24);
    EXPECT_LE(max_abs_difference(next.u, PeriodicField::constant(64, poly)), 1e-14);
    EXPECT_LE(max_abs_difference(next.u, PeriodicField::constant(64, c * std::exp(-z))), c * std::pow(z, 5) / 100);
}

TEST(Step, ZeroField) {
    Scenario s;
    s.lambda = 0.3;
    const SimulationState st{0.0, PeriodicField::constant(64, 0.0), 0.0, 0.0};
    EXPECT_EQ(max_abs(step(st, 0.01, s).u), 0.0);
    EXPECT_THROW(step(st, 0.0, s), std::invalid_argument);
}

TEST(Step, RichardsonLocalErrorIsFifthOrder) {
    Scenario s;
    s.lambda = 0.0;
    const auto u0 = on(64, [](double x) { return std::cos(two_pi * x); });
    const SimulationState st{0.0, u0, 0.0, std::sqrt(h1_seminorm_sq(u0))};
    auto gap = [&](double dt) {
        const auto one = step(st, dt, s);
        const auto two = step(step(st, dt / 2, s), dt / 2, s);
        return max_abs_difference(one.u, two.u);
    };
    const double ratio = gap(0.02) / gap(0.01);
    EXPECT_GT(ratio, 26.0);
    EXPECT_LT(ratio, 38.0);
}

TEST(Run, ConstantDataDecaysExactly) {
    const auto r = run(scenario_with(ModeList{2.0, {}}, 0.5, 1.0));
    EXPECT_EQ(r.outcome, Outcome::completed);
    EXPECT_EQ(r.reason, StopReason::reached_t_end);
    EXPECT_DOUBLE_EQ(r.state_final.t, 1.0);
    EXPECT_NEAR(r.records.back().mu, 2 * std::exp(-0.5), 1e-8);
    EXPECT_NEAR(r.records.back().mu, 1.21306, 1e-5);
    for (const auto& d : r.records) EXPECT_LE(std::abs(d.mu_residual), 1e-8);
}

TEST(Run, OddDataBreaksBeforeBound) {
    const auto r = run(scenario_with(ModeList{0.0, {{1, 0.0, -0.5}}}, 0.1, 2.0));
    EXPECT_EQ(r.outcome, Outcome::breaking_detected) << to_string(r.reason);
    EXPECT_LE(r.state_final.t, 0.658);
    EXPECT_LT(r.records.back().min_ux, -10.0);
    EXPECT_DOUBLE_EQ(r.records.back().t, r.state_final.t);
}

TEST(Run, PositiveMomentumDataIsGlobal) {
    auto s = scenario_with(ModeList{1.0, {{1, 1 / (8 * pi * pi), 0.0}}}, 0.2, 10.0);
    s.output_stride = 10;
    const auto r = run(s);
    EXPECT_EQ(r.outcome, Outcome::completed);
    EXPECT_DOUBLE_EQ(r.state_final.t, 10.0);
    for (const auto& d : r.records) EXPECT_GE(d.min_ux, -1.0 - 1e-6) << "t=" << d.t;
}

TEST(Run, ZeroEndTimeRecordsOnlyInitialState) {
    const auto r = run(scenario_with(ModeList{0.5, {{2, 0.1, 0.0}}}, 0.3, 0.0));
    ASSERT_EQ(r.records.size(), 1u);
    EXPECT_EQ(r.accepted_steps, 0u);
    EXPECT_EQ(r.outcome, Outcome::completed);
}

TEST(Run, UnderResolvedDataWithoutCollapseIsResolutionExhausted) {
    // Energy near the top of the band trips the tail criterion at once while
    // the slope is nowhere near trapped.
    auto s = scenario_with(ModeList{0.0, {{1, 0.001, 0.0}, {20, 1e-4, 0.0}}}, 0.5, 1.0, 64);
    s.tail_stop = 1e-3;
    const auto r = run(s);
    EXPECT_EQ(r.outcome, Outcome::resolution_exhausted);
    EXPECT_EQ(r.reason, StopReason::tail_only);
}

TEST(Run, RejectsInvalidScenario) {
    auto s = scenario_with(ModeList{1.0, {}}, -1.0, 1.0);
    EXPECT_THROW(run(s), ScenarioError);
}

TEST(Run, OutputStrideAndSnapshots) {
    auto s = scenario_with(ModeList{0.3, {{1, 0.05, 0.02}}}, 0.5, 0.1);
    s.output_stride = 7;
    const auto r = run(s, RunOptions{5});
    EXPECT_EQ(r.accepted_steps, 100u);
    EXPECT_EQ(r.records.size(), 1 + 100 / 7 + 1);
    EXPECT_EQ(r.snapshots.size(), 1 + 100 / 5);
    EXPECT_DOUBLE_EQ(r.snapshots.back().t, 0.1);
}

TEST(Run, Reentrant) {
    const auto s = scenario_with(ModeList{0.2, {{1, 0.1, 0.05}, {3, 0.0, 0.02}}}, 0.4, 0.2);
    const auto a = run(s), b = run(s);
    EXPECT_EQ(diagnostics_csv(a.records), diagnostics_csv(b.records));
}

TEST(TrappingSlope, MeanZeroReducesToPureEnergy) {
    const double mu1 = 3.0, lambda = 0.2;
    EXPECT_DOUBLE_EQ(trapping_slope(0.0, mu1, lambda), -lambda - std::sqrt(mu1 * mu1 + lambda * lambda));
    EXPECT_LT(trapping_slope(1.0, mu1, lambda), trapping_slope(0.0, mu1, lambda));
}

TEST(Diagnostics, CsvHeaderAndRoundTrip) {
    const auto r = run(scenario_with(ModeList{0.2, {{1, 0.1, 0.05}}}, 0.4, 0.05));
    const std::string csv = diagnostics_csv(r.records);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,mu,mu_residual,h1_sq,h1_residual,min_ux,argmin_x,max_abs_u,tail_frac,dt");
    const auto back = diagnostics_from_csv(csv);
    ASSERT_EQ(back.size(), r.records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].t, r.records[i].t);
        EXPECT_EQ(back[i].h1_residual, r.records[i].h1_residual);
        EXPECT_EQ(back[i].min_ux, r.records[i].min_ux);
    }
    EXPECT_EQ(diagnostics_csv(back), csv);
}

TEST(Diagnostics, ResidualsAreExactDifferences) {
    const auto s = scenario_with(ModeList{0.7, {{2, 0.1, -0.2}}}, 0.3, 0.02);
    const auto r = run(s);
    const auto st = SimulationState::initial(s);
    for (const auto& d : r.records) {
        EXPECT_EQ(d.mu_residual, d.mu - st.mu0 * std::exp(-0.3 * d.t));
        EXPECT_EQ(d.h1_residual, d.h1_sq - st.mu1 * st.mu1 * std::exp(-0.6 * d.t));
    }
}

// ---------------------------------------------------------------------------
// Scenario parsing

TEST(ScenarioJson, DefaultsAndRoundTrip) {
    const auto s = parse_scenario(R"({"lambda": 0.1, "t_end": 1, "initial": {"mean": 0, "modes": [{"k": 1, "sin": -0.5}]}})");
    EXPECT_EQ(s.grid_n, 256u);
    EXPECT_EQ(s.dt_init, 1e-3);
    EXPECT_EQ(s.dt_min, 1e-10);
    EXPECT_EQ(s.safety, 0.5);
    EXPECT_EQ(s.m_stop, -1e4);
    EXPECT_EQ(s.tail_stop, 1e-4);
    EXPECT_EQ(s.output_stride, 1u);
    const auto again = scenario_from_json(to_json(s));
    EXPECT_EQ(to_json(again), to_json(s));
}

void expect_field_error(const std::string& text, const std::string& field) {
    try {
        parse_scenario(text);
        ADD_FAILURE() << "accepted: " << text;
    } catch (const ScenarioError& e) {
        EXPECT_EQ(e.field(), field) << e.what();
    }
}

TEST(ScenarioJson, ValidationErrorsNameTheField) {
    const std::string init = R"("initial": {"mean": 1})";
    expect_field_error("{" + init + R"(, "t_end": 1})", "lambda");
    expect_field_error("{" + init + R"(, "lambda": 0, "t_end": 1})", "lambda");
    expect_field_error("{" + init + R"(, "lambda": 0.1})", "t_end");
    expect_field_error(R"({"lambda": 0.1, "t_end": 1})", "initial");
    expect_field_error("{" + init + R"(, "lambda": 0.1, "t_end": 1, "grid_n": 48})", "grid_n");
    expect_field_error("{" + init + R"(, "lambda": 0.1, "t_end": 1, "grid_n": 16})", "grid_n");
    expect_field_error("{" + init + R"(, "lambda": 0.1, "t_end": 1, "dt_min": 0.01})", "dt_min");
    expect_field_error("{" + init + R"(, "lambda": 0.1, "t_end": 1, "m_stop": -5})", "m_stop");
    expect_field_error("{" + init + R"(, "lambda": 0.1, "t_end": 1, "safety": 1.5})", "safety");
    expect_field_error("{" + init + R"(, "lambda": 0.1, "t_end": 1, "tail_stop": 1})", "tail_stop");
    expect_field_error("{" + init + R"(, "lambda": 0.1, "t_end": 1, "output_stride": 0})", "output_stride");
    expect_field_error("{" + init + R"(, "lambda": "x", "t_end": 1})", "lambda");
    expect_field_error("{" + init + R"(, "lambda": 0.1, "t_end": 1, "lamda": 2})", "lamda");
    expect_field_error(R"({"lambda": 0.1, "t_end": 1, "grid_n": 32, "initial": {"modes": [{"k": 12, "cos": 1}]}})",
                       "initial");
}

TEST(ScenarioJson, SyntaxErrorReportsLine) {
    try {
        parse_scenario("{\n  \"lambda\": 0.1,\n  \"t_end\" 1\n}");
        FAIL();
    } catch (const ScenarioError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

// ---------------------------------------------------------------------------
// Properties

TEST(DynamicsProperty, DecayLawsOnSmoothRuns) {
    for (unsigned seed = 0; seed < 4; ++seed) {
        auto modes = test::random_modes(4, 300 + seed);
        modes = modes.scaled(0.2);
        const double lambda = 0.2 + 0.3 * seed;
        const auto r = run(scenario_with(modes, lambda, 0.5));
        ASSERT_EQ(r.outcome, Outcome::completed) << to_string(r.reason) << " seed " << seed;
        const double mu0 = r.state_final.mu0, mu1 = r.state_final.mu1;
        for (const auto& d : r.records) {
            EXPECT_LE(std::abs(d.mu_residual), 1e-8 * std::max(1.0, std::abs(mu0)));
            if (d.tail_frac < 1e-8) {
                EXPECT_LE(std::abs(d.h1_residual), 1e-6 * std::max(1.0, mu1 * mu1));
            }
            EXPECT_GE(d.linf_bound_margin, -1e-9);
        }
    }
}

TEST(DynamicsProperty, LinfBoundOnBreakingRun) {
    const auto r = run(scenario_with(ModeList{0.0, {{1, 0.0, -0.5}}}, 0.1, 1.0, 512));
    for (const auto& d : r.records)
        if (d.tail_frac < 1e-8) {
            EXPECT_GE(d.linf_bound_margin, -1e-9) << "t=" << d.t;
        }
}

TEST(DynamicsProperty, FourthOrderInTime) {
    Scenario s;
    s.lambda = 0.0;
    const auto u0 = dealias(on(64, [](double x) { return 1 + 0.05 * std::sin(two_pi * x) + 0.02 * std::cos(4 * pi * x); }));
    const SimulationState st{0.0, u0, mean(u0), std::sqrt(h1_seminorm_sq(u0))};
    auto solve = [&](double h) {
        SimulationState x = st;
        const int steps = static_cast<int>(std::lround(0.2 / h));
        for (int i = 0; i < steps; ++i) x = step(x, h, s);
        return x.u;
    };
    const auto ref = solve(0.01 / 32);
    const double e1 = max_abs_difference(solve(0.01), ref);
    const double e2 = max_abs_difference(solve(0.005), ref);
    const double e3 = max_abs_difference(solve(0.0025), ref);
    EXPECT_GE(std::log2(e1 / e2), 3.8);
    EXPECT_GE(std::log2(e2 / e3), 3.8);
}

}  // namespace
}  // namespace muhs
