#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sta/units.hpp"
#include "sta/work_stats.hpp"

namespace {

using sta::Branch;
using sta::Level;
using sta::PaperSchedule;
using sta::units::energy2_to_hmhz2;
using sta::units::energy_to_hmhz;
using std::numbers::pi;

const double omega10 = sta::units::mhz_to_rad_per_ns(10.0);

// Ω(t~) of the reference sweep, evaluated directly.
double sweep_omega(double tb) { return omega10 * (1 + std::sin(pi * tb / 2)); }

double sign(Level n) { return n == Level::up ? 1.0 : -1.0; }

TEST(ConditionalProbs, StartInInitialEigenstate) {
    const auto sch = PaperSchedule::with_defaults(25.0);
    const auto p = sta::conditional_probs(sch, 0.0, Level::up);
    EXPECT_NEAR(p.p_plus, 1.0, 1e-15);
    EXPECT_NEAR(p.p_minus, 0.0, 1e-15);
    const auto q = sta::conditional_probs(sch, 0.0, Level::down);
    EXPECT_NEAR(q.p_minus, 1.0, 1e-15);
}

TEST(ConditionalProbs, FastDriveLeaksAboutTwentyPercent) {
    const auto sch = PaperSchedule::with_defaults(25.0);
    double worst = 0.0;
    double at = 0.0;
    for (double t = 0.0; t <= 25.0; t += 0.5) {
        const auto p = sta::conditional_probs(sch, t, Level::up);
        EXPECT_NEAR(p.p_plus + p.p_minus, 1.0, 1e-10);
        if (p.p_minus > worst) {
            worst = p.p_minus;
            at = t;
        }
    }
    EXPECT_GE(worst, 0.17);
    EXPECT_LE(worst, 0.23);
    EXPECT_GE(at, 14.0);
    EXPECT_LE(at, 18.0);
}

TEST(ConditionalProbs, SlowDriveIsNearlyAdiabatic) {
    const auto sch = PaperSchedule::with_defaults(500.0);
    const auto curve = sta::moment_curve(sch, Level::up, sta::reduced_time_grid(0.02));
    for (const auto& r : curve) {
        const auto p = sta::conditional_probs(sch, r.tbar * 500.0, Level::up);
        EXPECT_LT(p.p_minus, 0.01);
    }
}

TEST(WorkDistribution, InitialTimeGivesZeroWork) {
    const auto sch = PaperSchedule::with_defaults(25.0);
    const auto d = sta::work_distribution(sch, 0.0, Level::up);
    ASSERT_EQ(d.support.size(), 2u);
    EXPECT_NEAR(d.support[0].w, 0.0, 1e-15);
    EXPECT_NEAR(d.support[0].p, 1.0, 1e-15);
    EXPECT_NEAR(d.support[1].p, 0.0, 1e-15);
    for (int m : {1, 2, 3}) EXPECT_NEAR(sta::moment(d, m), 0.0, 1e-15);
}

TEST(WorkDistribution, EndpointSupportFromKnownFields) {
    for (double T : {25.0, 100.0}) {
        const auto sch = PaperSchedule::with_defaults(T);
        for (Level n : {Level::up, Level::down}) {
            const auto d = sta::work_distribution(sch, T, n);
            const double e0 = sign(n) * omega10 / 2;
            // |B(T)| = Ω(T) = 2 Ω0 since the CD field vanishes at T.
            EXPECT_NEAR(d.support[0].w, 2 * omega10 / 2 - e0, 1e-14);
            EXPECT_NEAR(d.support[1].w, -2 * omega10 / 2 - e0, 1e-14);
            EXPECT_NEAR(d.total_probability(), 1.0, 1e-10);
            for (const auto& o : d.support) {
                EXPECT_GE(o.p, -1e-12);
                EXPECT_LE(o.p, 1 + 1e-12);
            }
        }
    }
}

TEST(WorkDistribution, FirstMomentIsHalfAmplitudeChange) {
    for (double T : {25.0, 200.0}) {
        const auto sch = PaperSchedule::with_defaults(T);
        for (Level n : {Level::up, Level::down}) {
            for (double tb : {0.2, 0.64, 1.0}) {
                const auto d = sta::work_distribution(sch, tb * T, n);
                const double expected = sign(n) * (sweep_omega(tb) - sweep_omega(0.0)) / 2;
                EXPECT_NEAR(energy_to_hmhz(sta::moment(d, 1)), energy_to_hmhz(expected), 1e-6);
            }
        }
    }
}

TEST(WorkDistribution, SecondMomentGrowsForFasterDrives) {
    const auto fast = PaperSchedule::with_defaults(25.0);
    const auto slow = PaperSchedule::with_defaults(500.0);
    for (Level n : {Level::up, Level::down}) {
        const double w2_fast = sta::moment(sta::work_distribution(fast, 0.64 * 25.0, n), 2);
        const double w2_slow = sta::moment(sta::work_distribution(slow, 0.64 * 500.0, n), 2);
        EXPECT_GT(w2_fast, w2_slow);
    }
}

TEST(WorkDistribution, RequiresVanishingInitialCounterDiabaticField) {
    sta::CustomSchedule::Path p;
    p.omega = [](double) { return omega10; };
    p.d_omega = [](double) { return 0.0; };
    p.theta = [](double tb) { return 0.3 + tb; };
    p.d_theta = [](double) { return 1.0; };
    p.phi = [](double) { return 0.0; };
    p.d_phi = [](double) { return 0.0; };
    const sta::CustomSchedule sch(p, 30.0);
    EXPECT_THROW(sta::work_distribution(sch, 10.0, Level::up), sta::ProtocolError);
    EXPECT_THROW(sta::moment_curve(sch, Level::up, sta::reduced_time_grid(0.1)), sta::ProtocolError);
}

TEST(AdiabaticMoment, ClosedFormValues) {
    const auto sch = PaperSchedule::with_defaults(25.0);
    EXPECT_NEAR(energy_to_hmhz(sta::adiabatic_moment(sch, 25.0, Level::up, 1)), 5.0, 1e-12);
    EXPECT_NEAR(energy_to_hmhz(sta::adiabatic_moment(sch, 25.0, Level::down, 1)), -5.0, 1e-12);
    EXPECT_NEAR(energy2_to_hmhz2(sta::adiabatic_moment(sch, 25.0, Level::down, 2)), 25.0, 1e-10);
    for (int m : {1, 2, 3}) EXPECT_EQ(sta::adiabatic_moment(sch, 0.0, Level::up, m), 0.0);
}

TEST(ExcessFluctuation, VanishesAtEndpoints) {
    for (double T : {25.0, 100.0}) {
        const auto sch = PaperSchedule::with_defaults(T);
        for (Level n : {Level::up, Level::down}) {
            EXPECT_NEAR(energy2_to_hmhz2(sta::excess_fluctuation(sch, 0.0, n)), 0.0, 1e-8);
            EXPECT_NEAR(energy2_to_hmhz2(sta::excess_fluctuation(sch, T, n)), 0.0, 1e-8);
        }
    }
}

TEST(ExcessFluctuation, MatchesClosedFormInteriorOfPath) {
    const double T = 25.0;
    const auto sch = PaperSchedule::with_defaults(T);
    for (Level n : {Level::up, Level::down}) {
        for (double tb = 0.02; tb < 0.99; tb += 0.06) {
            const double expected = oracle::sweep_excess(T, tb);
            EXPECT_NEAR(sta::excess_fluctuation(sch, tb * T, n), expected, 1e-5 * expected);
        }
    }
}

TEST(ExcessFluctuation, EmpiricalReferenceSubtractsSlowRun) {
    // The T_ref estimator removes the slow run's own excess from the result.
    const auto sch = PaperSchedule::with_defaults(200.0);
    const auto ref = sta::AdiabaticReference::run_at(500.0);
    for (double tb : {0.3, 0.5, 0.7}) {
        const double est = sta::excess_fluctuation(sch, tb * 200.0, Level::up, {}, ref);
        const double expected = oracle::sweep_excess(200.0, tb) - oracle::sweep_excess(500.0, tb);
        EXPECT_NEAR(est, expected, 1e-4 * expected);
        EXPECT_LT(est, oracle::sweep_excess(200.0, tb));
    }
}

TEST(ThermalMoment, LimitsAndWeights) {
    const auto sch = PaperSchedule::with_defaults(25.0);
    const double t = 25.0;
    for (int m : {1, 2}) {
        const double up = sta::moment(sta::work_distribution(sch, t, Level::up), m);
        const double down = sta::moment(sta::work_distribution(sch, t, Level::down), m);
        EXPECT_NEAR(sta::thermal_moment(sch, t, 0.0, m), 0.5 * (up + down), 1e-15);
        // ε_down(0) = -Ω0/2 is the lower energy in the plotted convention.
        EXPECT_NEAR(sta::thermal_moment(sch, t, std::numeric_limits<double>::infinity(), m), down, 1e-15);
        const double beta = 1.0 / omega10;
        const double wu = std::exp(-beta * omega10 / 2);
        const double wd = std::exp(beta * omega10 / 2);
        EXPECT_NEAR(sta::thermal_moment(sch, t, beta, m), (wu * up + wd * down) / (wu + wd), 1e-14);
    }
    EXPECT_THROW(sta::thermal_moment(sch, t, -1.0, 1), sta::InputError);
}

TEST(MomentCurve, ConservationInequalityAndCollapse) {
    const auto grid = sta::reduced_time_grid(0.02);
    ASSERT_EQ(grid.size(), 51u);
    std::vector<std::vector<sta::MomentRecord>> up_curves;
    for (double T : {25.0, 50.0, 100.0, 200.0, 500.0}) {
        const auto sch = PaperSchedule::with_defaults(T);
        for (Level n : {Level::up, Level::down}) {
            const auto curve = sta::moment_curve(sch, n, grid);
            for (const auto& r : curve) {
                EXPECT_LT(std::abs(energy_to_hmhz(r.w1 - r.w1_ad)), 1e-6) << "T=" << T << " tbar=" << r.tbar;
                EXPECT_GE(energy2_to_hmhz2(r.excess2), -1e-10);
                EXPECT_GE(r.w2, r.w1 * r.w1 - 1e-12);
            }
            EXPECT_NEAR(energy_to_hmhz(curve.back().w1), sign(n) * 5.0, 1e-6);
            if (n == Level::up) up_curves.push_back(curve);
        }
    }
    for (const auto& c : up_curves)
        for (std::size_t i = 0; i < grid.size(); ++i)
            EXPECT_NEAR(energy_to_hmhz(c[i].w1), energy_to_hmhz(up_curves[0][i].w1), 1e-6);
}

TEST(MomentCurve, MatchesPointwiseDistribution) {
    const auto sch = PaperSchedule::with_defaults(50.0);
    const auto curve = sta::moment_curve(sch, Level::down, sta::reduced_time_grid(0.1));
    for (const auto& r : curve) {
        const auto d = sta::work_distribution(sch, r.tbar * 50.0, Level::down);
        EXPECT_NEAR(r.w2, sta::moment(d, 2), 1e-9 * std::max(1e-3, std::abs(r.w2)));
    }
}

TEST(ReducedTimeGrid, RejectsNonDividingStep) {
    EXPECT_THROW(sta::reduced_time_grid(0.03), sta::ConfigError);
    EXPECT_THROW(sta::reduced_time_grid(0.0), sta::ConfigError);
    EXPECT_EQ(sta::reduced_time_grid(0.25).size(), 5u);
}

TEST(GeometricEquality, ExcessEqualsProjectedRateNorm) {
    for (double T : {25.0, 100.0}) {
        const auto sch = PaperSchedule::with_defaults(T);
        const double h = sta::default_fd_step(sch);
        for (Level n : {Level::up, Level::down}) {
            for (double tb = 0.04; tb < 0.97; tb += 0.08) {
                const double t = tb * T;
                const double rhs = sta::projected_rate_norm(sch, t, n, h);
                EXPECT_NEAR(sta::excess_fluctuation(sch, t, n), rhs, 1e-5 * rhs);
            }
        }
    }
}

TEST(EigenRelation, ResidualBelowTolerance) {
    const double T = 25.0;
    const auto sch = PaperSchedule::with_defaults(T);
    const double h = sta::default_fd_step(sch);
    for (int i = 0; i < 50; ++i) {
        const double t = (i + 0.5) / 50.0 * T;
        for (Level n : {Level::up, Level::down})
            for (Branch k : {Branch::plus, Branch::minus})
                EXPECT_LT(sta::eigen_relation_residual(sch, t, n, k, h), 1e-7);
    }
}

}  // namespace
