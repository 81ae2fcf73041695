#include "muhs/analysis.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace muhs {
namespace {

using std::numbers::pi;

PeriodicField on(std::size_t n, auto f) { return PeriodicField::sample(n, f); }

TEST(Certify, OddSineBreaks) {
    const auto u0 = on(256, [](double x) { return -0.5 * std::sin(two_pi * x); });
    const auto r = certify(u0, 0.1);
    EXPECT_NEAR(r.mu0, 0.0, 1e-15);
    EXPECT_EQ(r.K_cubic, 0.0);
    EXPECT_EQ(r.K_slope, 0.0);
    EXPECT_TRUE(r.odd_origin.is_odd);
    EXPECT_NEAR(r.odd_origin.lhs, -pi, 1e-12);
    EXPECT_DOUBLE_EQ(r.odd_origin.threshold, -0.2);
    ASSERT_TRUE(r.odd_origin.fires);
    ASSERT_TRUE(r.odd_origin.t_bound);
    EXPECT_NEAR(*r.odd_origin.t_bound, 10 * std::log(pi / (pi - 0.2)), 1e-12);
    EXPECT_NEAR(*r.odd_origin.t_bound, 0.6578, 5e-5);

    EXPECT_TRUE(r.min_slope.fires);
    EXPECT_EQ(r.min_slope.threshold, -0.2);
    ASSERT_TRUE(r.min_slope.t_bound);
    // With K = 0 the slope bound reduces to the odd-data bound.
    EXPECT_NEAR(*r.min_slope.t_bound, *r.odd_origin.t_bound, 1e-12);
    // int (-pi cos)^3 = 0: the cubic criterion cannot fire.
    EXPECT_FALSE(r.cubic.fires);
    EXPECT_TRUE(r.predicts_breaking());
    EXPECT_NEAR(*r.tightest_bound(), 0.6578, 5e-5);
    EXPECT_FALSE(r.momentum_sign.sign_definite);
}

TEST(Certify, ConstantDataIsGlobal) {
    for (double c : {2.0, -0.5}) {
        const auto r = certify(PeriodicField::constant(64, c), 0.3);
        EXPECT_FALSE(r.cubic.fires);
        EXPECT_FALSE(r.min_slope.fires);
        EXPECT_FALSE(r.odd_origin.fires);
        EXPECT_FALSE(r.cubic.t_bound);
        EXPECT_TRUE(r.momentum_sign.sign_definite);
        EXPECT_NEAR(r.momentum_sign.y0_min, c, 1e-14);
        EXPECT_TRUE(r.third_derivative.certifies);
        EXPECT_TRUE(r.predicts_global());
        EXPECT_FALSE(r.tightest_bound());
    }
    // Zero data: the third-derivative certificate holds with equality.
    const auto z = certify(PeriodicField::constant(64, 0.0), 0.3);
    EXPECT_TRUE(z.third_derivative.certifies);
    EXPECT_FALSE(z.odd_origin.fires);
}

TEST(Certify, PositiveMomentumData) {
    const auto u0 = on(256, [](double x) { return 1 + std::cos(two_pi * x) / (8 * pi * pi); });
    const auto r = certify(u0, 0.2);
    EXPECT_TRUE(r.momentum_sign.sign_definite);
    EXPECT_NEAR(r.momentum_sign.y0_min, 0.5, 1e-10);
    EXPECT_NEAR(r.momentum_sign.y0_max, 1.5, 1e-10);
    EXPECT_NEAR(r.third_derivative.norm_d3, pi / std::sqrt(2.0), 1e-10);
    EXPECT_NEAR(r.third_derivative.norm_d3, 2.2214, 1e-4);
    EXPECT_NEAR(r.third_derivative.bound, 2 * std::sqrt(3.0), 1e-14);
    EXPECT_TRUE(r.third_derivative.certifies);
    EXPECT_FALSE(r.predicts_breaking());
    EXPECT_FALSE(r.odd_origin.is_odd);
}

TEST(Certify, MeanZeroThresholdCollapse) {
    for (unsigned seed = 0; seed < 10; ++seed) {
        const auto u0 = test::random_field(128, 6, seed, 0.0);
        for (double lambda : {0.05, 0.1, 1.0, 3.7}) {
            const auto r = certify(u0, lambda);
            EXPECT_LE(std::abs(r.K_slope), 1e-14);
            EXPECT_NEAR(r.min_slope.threshold, -2 * lambda, 1e-14);
        }
    }
    EXPECT_EQ(slope_threshold(0.3, 0.0), -0.6);
}

TEST(Certify, RejectsNonPositiveLambda) {
    EXPECT_THROW(certify(PeriodicField::constant(32, 1.0), 0.0), std::invalid_argument);
}

TEST(Certify, TimeBoundsArePositiveAndFinite) {
    int firing = 0;
    for (unsigned seed = 0; seed < 30; ++seed) {
        const auto modes = test::random_modes(5, 500 + seed).scaled(1.0 + seed % 4);
        const auto r = certify(sample(modes, 128), 0.1);
        for (const BlowupCriterion* c : {&r.cubic, &r.min_slope, static_cast<const BlowupCriterion*>(&r.odd_origin)}) {
            if (!c->t_bound) continue;
            ++firing;
            EXPECT_TRUE(c->fires);
            EXPECT_TRUE(std::isfinite(*c->t_bound));
            EXPECT_GT(*c->t_bound, 0.0);
        }
        if (r.odd_origin.fires) {
            EXPECT_TRUE(r.odd_origin.is_odd);
        }
    }
    EXPECT_GT(firing, 0);
}

TEST(Certify, CubicCriterionScaling) {
    // Negatively skewed slope profile; mean zero so K_cubic = 0 and the
    // threshold is -6 lambda mu1^2.
    const auto base = [](double x) { return std::sin(two_pi * x) - 0.5 * std::sin(4 * pi * x); };
    const double lambda = 0.5;
    const auto r1 = certify(on(128, base), lambda);
    ASSERT_LT(r1.cubic.lhs, 0.0);
    bool fired = false;
    for (double c = 0.05; c < 20; c *= 1.3) {
        const auto rc = certify(on(128, [&](double x) { return c * base(x); }), lambda);
        EXPECT_NEAR(rc.cubic.lhs, c * c * c * r1.cubic.lhs, 1e-10 * std::abs(c * c * c * r1.cubic.lhs));
        EXPECT_NEAR(rc.cubic.threshold, c * c * r1.cubic.threshold, 1e-10 * c * c * std::abs(r1.cubic.threshold));
        if (fired) {
            EXPECT_TRUE(rc.cubic.fires) << "c=" << c;
        }
        fired = fired || rc.cubic.fires;
        if (rc.cubic.fires) {
            ASSERT_TRUE(rc.cubic.t_bound);
            EXPECT_GT(*rc.cubic.t_bound, 0.0);
        }
    }
    EXPECT_TRUE(fired);
}

TEST(Certify, JsonShape) {
    const auto j = to_json(certify(on(64, [](double x) { return -0.5 * std::sin(two_pi * x); }), 0.1));
    EXPECT_TRUE(j["thm43"]["fires"].get<bool>());
    EXPECT_TRUE(j["thm43"]["is_odd"].get<bool>());
    EXPECT_TRUE(j["thm41"]["t_bound"].is_null());
    EXPECT_TRUE(j.contains("cor51"));
}

// ---------------------------------------------------------------------------

TEST(SlopeEquation, ConstantAndZeroFields) {
    EXPECT_LE(slope_equation_residual(PeriodicField::constant(256, 1.5), 0.0, 1.5, 0.0, 0.4), 1e-10);
    EXPECT_EQ(slope_equation_residual(PeriodicField::constant(256, 0.0), 0.0, 0.0, 0.0, 0.4), 0.0);
}

TEST(SlopeEquation, Cosine) {
    const auto u = on(256, [](double x) { return std::cos(two_pi * x); });
    EXPECT_LE(slope_equation_residual(u, 0.0, 0.0, std::sqrt(2.0) * pi, 0.3), 1e-8);
}

TEST(SlopeEquation, ConsistentRandomStates) {
    for (unsigned seed = 0; seed < 10; ++seed) {
        const double lambda = 0.1 + 0.2 * seed, t = 0.05 * seed;
        const auto u = test::random_field(256, 8, 900 + seed);
        const double mu0 = mean(u) * std::exp(lambda * t);
        const double mu1 = std::sqrt(h1_seminorm_sq(u)) * std::exp(lambda * t);
        EXPECT_LE(slope_equation_residual(u, t, mu0, mu1, lambda), 1e-8) << "seed " << seed;
    }
}

TEST(SlopeEquation, DetectsWrongConstants) {
    const auto u = on(256, [](double x) { return 0.5 + std::cos(two_pi * x); });
    EXPECT_GT(slope_equation_residual(u, 0.0, 0.5, 2.0 * std::sqrt(2.0) * pi, 0.3), 1.0);
}

// ---------------------------------------------------------------------------
// Rate fit

std::vector<DiagnosticsRecord> synthetic(auto m, double t0, double t1, int count) {
    std::vector<DiagnosticsRecord> out;
    for (int i = 0; i < count; ++i) {
        DiagnosticsRecord r;
        r.t = t0 + (t1 - t0) * i / (count - 1);
        r.min_ux = m(r.t);
        out.push_back(r);
    }
    return out;
}

TEST(RateFit, RecoversExactSeries) {
    const double T = 1.0, lambda = 0.3;
    const auto recs = synthetic([&](double t) { return -2 / (T - t) - lambda; }, 0.9, 0.99, 50);
    const auto rep = fit_blowup_rate(recs, 0.995, recs.back().min_ux, lambda, 1.2);
    EXPECT_NEAR(rep.rate_fit.slope, -2.0, 1e-6);
    EXPECT_NEAR(rep.rate_fit.t_blowup, T, 1e-8);
    EXPECT_EQ(rep.rate_fit.n_points, 50u);
    EXPECT_TRUE(rep.rate_in_band);
    EXPECT_TRUE(rep.respects_bound);
    EXPECT_LT(rep.t_detect, rep.t_estimate);
    EXPECT_LT(rep.rate_fit.t_b, rep.t_detect);
}

TEST(RateFit, NegativeControlIsRejected) {
    const double T = 1.0, lambda = 0.3;
    const auto recs = synthetic([&](double t) { return -1 / (T - t); }, 0.95, 0.999, 60);
    const auto rep = fit_blowup_rate(recs, 1.0, recs.back().min_ux, lambda);
    EXPECT_NEAR(rep.rate_fit.slope_unshifted, -1.0, 0.05);
    EXPECT_NEAR(rep.rate_fit.slope, -1.0, 0.05);
    EXPECT_FALSE(rep.rate_in_band);
}

TEST(RateFit, WindowRules) {
    const double T = 1.0, lambda = 0.3;
    auto recs = synthetic([&](double t) { return -2 / (T - t) - lambda; }, 0.5, 0.99, 1000);
    const auto rep = fit_blowup_rate(recs, 0.999, recs.back().min_ux, lambda, 0.9);
    EXPECT_EQ(rep.rate_fit.n_points, 200u);
    EXPECT_DOUBLE_EQ(rep.rate_fit.t_b, recs.back().t);
    EXPECT_FALSE(rep.respects_bound);

    // Only records strictly before detection are used.
    const auto cut = fit_blowup_rate(recs, 0.95, -40.3, lambda);
    EXPECT_LT(cut.rate_fit.t_b, 0.95);

    // Under-resolved records are excluded.
    for (auto& r : recs) r.tail_frac = r.t > 0.95 ? 1e-3 : 0.0;
    EXPECT_LT(fit_blowup_rate(recs, 0.999, -100, lambda).rate_fit.t_b, 0.951);
}

TEST(RateFit, InsufficientSamples) {
    const auto recs = synthetic([](double t) { return -2 / (1 - t); }, 0.0, 0.5, 100);
    EXPECT_THROW(fit_blowup_rate(recs, 0.6, -4.0, 0.1), InsufficientSamples);
    const auto few = synthetic([](double t) { return -2 / (1 - t); }, 0.9, 0.95, 9);
    EXPECT_THROW(fit_blowup_rate(few, 0.96, -40.0, 0.1), InsufficientSamples);
}

TEST(RateFit, JsonShape) {
    const auto recs = synthetic([](double t) { return -2 / (1 - t) - 0.3; }, 0.9, 0.99, 20);
    const auto j = to_json(fit_blowup_rate(recs, 0.995, -200.3, 0.3));
    EXPECT_TRUE(j["bound_used"].is_null());
    EXPECT_EQ(j["rate_fit"]["window"].size(), 2u);
    EXPECT_TRUE(j["rate_in_band"].get<bool>());
}

}  // namespace
}  // namespace muhs
