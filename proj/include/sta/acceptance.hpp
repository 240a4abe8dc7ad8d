#pragma once

// The eleven acceptance checks, shared by `sta-workbench verify` and the
// acceptance test binary. Unitary checks always run without dissipation;
// only the dissipative check uses the configured relaxation times.

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "sta/config.hpp"
#include "sta/csv.hpp"
#include "sta/geometry.hpp"
#include "sta/units.hpp"
#include "sta/virtual_lab.hpp"
#include "sta/work_stats.hpp"

namespace sta {

struct CriterionResult {
    int id{0};
    std::string name;
    bool passed{false};
    std::string measured;   // ';'-separated key=value parts
    std::string tolerance;  // same layout as measured
};

namespace detail {

inline std::string kv(const std::string& key, double v) { return key + "=" + format_number(v); }

inline std::string join(const std::vector<std::string>& parts) {
    std::string s;
    for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? ";" : "") + parts[i];
    return s;
}

inline const std::vector<double>& unitary_times() {
    static const std::vector<double> t{25.0, 50.0, 100.0, 200.0, 500.0};
    return t;
}

inline double w1_sign(Level n) { return n == Level::up ? 1.0 : -1.0; }

}  // namespace detail

class AcceptanceSuite {
public:
    explicit AcceptanceSuite(RunConfig cfg) : cfg_(std::move(cfg)) {}

    std::vector<CriterionResult> run_all(const std::function<void(const CriterionResult&)>& on_result = {}) {
        using Check = CriterionResult (AcceptanceSuite::*)();
        static constexpr Check checks[] = {
            &AcceptanceSuite::work_conservation,     &AcceptanceSuite::fluctuation_inequality,
            &AcceptanceSuite::geometric_equality,    &AcceptanceSuite::inverse_square_collapse,
            &AcceptanceSuite::frozen_hamiltonian,    &AcceptanceSuite::frozen_population,
            &AcceptanceSuite::qgt_oracle,            &AcceptanceSuite::estimator_consistency,
            &AcceptanceSuite::appendix_identity,     &AcceptanceSuite::dissipative_ordering,
            &AcceptanceSuite::propagator_convergence};
        static const char* names[] = {"work conservation",       "fluctuation inequality",
                                      "geometric-tensor equality", "inverse-square collapse",
                                      "frozen-Hamiltonian fidelity", "frozen-population fidelity",
                                      "QGT oracle",              "estimator consistency",
                                      "eigenvalue identity",     "dissipative ordering",
                                      "propagator convergence"};
        std::vector<CriterionResult> out;
        for (int i = 0; i < 11; ++i) {
            CriterionResult r;
            try {
                r = (this->*checks[i])();
            } catch (const std::exception& e) {
                r.passed = false;
                r.measured = std::string("error: ") + e.what();
                std::replace(r.measured.begin(), r.measured.end(), ',', ';');
            }
            r.id = i + 1;
            r.name = names[i];
            if (on_result) on_result(r);
            out.push_back(r);
        }
        return out;
    }

    CriterionResult work_conservation() {
        double worst = 0.0;
        double worst_end = 0.0;
        const double expected_end = cfg_.omega1_mhz / 2.0;
        for (double T : detail::unitary_times())
            for (Level n : {Level::up, Level::down}) {
                const auto& c = curve(T, n);
                for (const auto& r : c) worst = std::max(worst, std::abs(units::energy_to_hmhz(r.w1 - r.w1_ad)));
                worst_end = std::max(worst_end,
                                     std::abs(units::energy_to_hmhz(c.back().w1) - detail::w1_sign(n) * expected_end));
            }
        return {0, "", worst < 1e-6 && worst_end < 1e-6,
                detail::join({detail::kv("max_dw1_hmhz", worst), detail::kv("max_endpoint_dev_hmhz", worst_end)}),
                detail::join({"max_dw1_hmhz<1e-06", "w1(1)=+-" + format_number(expected_end) + "+-1e-06"})};
    }

    CriterionResult fluctuation_inequality() {
        double lowest = std::numeric_limits<double>::infinity();
        for (double T : detail::unitary_times())
            for (Level n : {Level::up, Level::down})
                for (const auto& r : curve(T, n)) lowest = std::min(lowest, units::energy2_to_hmhz2(r.excess2));
        return {0, "", lowest >= -1e-10, detail::kv("min_excess2_hmhz2", lowest), "min_excess2_hmhz2>=-1e-10"};
    }

    CriterionResult geometric_equality() {
        const double T = 25.0;
        const auto sch = cfg_.schedule(T);
        double worst = 0.0;
        for (Level n : {Level::up, Level::down}) {
            const auto& c = curve(T, n);
            for (std::size_t k = 1; k + 1 < c.size(); ++k) {
                const double g = units::energy2_to_hmhz2(excess_from_qgt(sch, c[k].tbar));
                const double x = units::energy2_to_hmhz2(c[k].excess2);
                worst = std::max(worst, std::abs(x - g) / std::max(g, 1e-6));
            }
        }
        return {0, "", worst < 1e-4, detail::kv("max_rel_err", worst), "max_rel_err<1e-04"};
    }

    CriterionResult inverse_square_collapse() {
        double worst = 0.0;
        const auto grid = reduced_time_grid(cfg_.grid_step_tbar);
        for (Level n : {Level::up, Level::down})
            for (std::size_t k = 1; k + 1 < grid.size(); ++k) {
                double lo = std::numeric_limits<double>::infinity();
                double hi = -lo;
                for (double T : {25.0, 50.0, 100.0, 200.0}) {
                    const double v = T * T * curve(T, n)[k].excess2;
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                worst = std::max(worst, (hi - lo) / std::abs(hi));
            }
        return {0, "", worst < 1e-4, detail::kv("max_rel_spread", worst), "max_rel_spread<1e-04"};
    }

    CriterionResult frozen_hamiltonian() {
        const double T = 25.0;
        const auto sch = cfg_.schedule(T);
        double worst = 0.0;
        double bump = -std::numeric_limits<double>::infinity();
        double bump_at = 0.0;
        for (double tau = 0.0; tau <= T + 1e-9; tau += 1.0) {
            const auto fit = extract_eigenenergies(frozen_hamiltonian_run(sch, tau, cfg_.propagator()));
            const double e = units::rad_per_ns_to_mhz(fit.e_plus);
            const double exact = units::rad_per_ns_to_mhz(total_eigenbasis(sch, tau).e_plus);
            worst = std::max(worst, std::abs(e - exact));
            const double excess = e - units::rad_per_ns_to_mhz(reference_energy(sch, tau, Level::up));
            if (excess > bump) {
                bump = excess;
                bump_at = tau;
            }
        }
        const bool ok = worst < 0.05 && bump >= 7.0 && bump <= 9.0 && bump_at >= 14.0 && bump_at <= 18.0;
        return {0, "", ok,
                detail::join({detail::kv("max_fit_err_mhz", worst), detail::kv("bump_mhz", bump),
                              detail::kv("bump_tau_m_ns", bump_at)}),
                detail::join({"max_fit_err_mhz<0.05", "bump_mhz in [7;9]", "bump_tau_m_ns in [14;18]"})};
    }

    CriterionResult frozen_population() {
        const auto grid = reduced_time_grid(cfg_.grid_step_tbar);
        double worst = 0.0;
        double peak = 0.0;
        double peak_at = 0.0;
        for (double T : detail::unitary_times()) {
            const auto sch = cfg_.schedule(T);
            for (Level n : {Level::up, Level::down})
                for (double tb : grid) {
                    const double tau = tb * T;
                    const auto r = frozen_population_run(sch, tau, n, cfg_.drag_time_ns, cfg_.propagator());
                    const auto c = conditional_probs(sch, tau, n, cfg_.propagator());
                    worst = std::max({worst, std::abs(r.p_plus_given_n - c.p_plus),
                                      std::abs(r.p_minus_given_n - c.p_minus)});
                    if (T == 25.0 && n == Level::up && r.p_minus_given_n > peak) {
                        peak = r.p_minus_given_n;
                        peak_at = tau;
                    }
                }
        }
        const bool ok = worst < 1e-6 && peak >= 0.17 && peak <= 0.23 && peak_at >= 14.0 && peak_at <= 18.0;
        return {0, "", ok,
                detail::join({detail::kv("max_abs_err", worst), detail::kv("peak_p_minus_up", peak),
                              detail::kv("peak_tau_m_ns", peak_at)}),
                detail::join({"max_abs_err<1e-06", "peak_p_minus_up in [0.17;0.23]", "peak_tau_m_ns in [14;18]"})};
    }

    CriterionResult qgt_oracle() {
        std::mt19937_64 rng(20240607);
        std::uniform_real_distribution<double> th(0.0, std::numbers::pi);
        std::uniform_real_distribution<double> ph(-std::numbers::pi, std::numbers::pi);
        double worst = 0.0;
        double branch = 0.0;
        for (int i = 0; i < 100; ++i) {
            const double t = th(rng);
            const double p = ph(rng);
            const auto a = qgt_analytic(t, p);
            const auto up = qgt_numeric(Level::up, t, p);
            const auto down = qgt_numeric(Level::down, t, p);
            worst = std::max({worst, std::abs(up.g_theta_theta - a.g_theta_theta),
                              std::abs(up.g_theta_phi - a.g_theta_phi), std::abs(up.g_phi_phi - a.g_phi_phi)});
            branch = std::max({branch, std::abs(up.g_theta_theta - down.g_theta_theta),
                               std::abs(up.g_theta_phi - down.g_theta_phi), std::abs(up.g_phi_phi - down.g_phi_phi)});
        }
        return {0, "", worst < 1e-6 && branch < 1e-8,
                detail::join({detail::kv("max_abs_err", worst), detail::kv("max_up_down_diff", branch)}),
                detail::join({"max_abs_err<1e-06", "max_up_down_diff<1e-08"})};
    }

    CriterionResult estimator_consistency() {
        const auto sch = cfg_.schedule(25.0);
        const auto max_rel = [&](double step) {
            double worst = 0.0;
            for (const auto& e : geometric_quantity_estimator(exact_bloch_samples(sch, step), step)) {
                const double exact = path_speed_sq(sch, e.tbar);
                worst = std::max(worst, std::abs(e.value - exact) / exact);
            }
            return worst;
        };
        const double coarse = max_rel(0.02);
        const double fine = max_rel(0.01);
        const double ratio = coarse / fine;
        return {0, "", coarse < 0.05 && ratio >= 3.5 && ratio <= 4.5,
                detail::join({detail::kv("max_rel_err", coarse), detail::kv("halving_ratio", ratio)}),
                detail::join({"max_rel_err<0.05", "halving_ratio in [3.5;4.5]"})};
    }

    CriterionResult appendix_identity() {
        const double T = 25.0;
        const auto sch = cfg_.schedule(T);
        const double h = default_fd_step(sch);
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const double t = (i + 0.5) / 50.0 * T;
            for (Level n : {Level::up, Level::down})
                for (Branch k : {Branch::plus, Branch::minus})
                    worst = std::max(worst, eigen_relation_residual(sch, t, n, k, h));
        }
        return {0, "", worst < 1e-7, detail::kv("max_residual", worst), "max_residual<1e-07"};
    }

    CriterionResult dissipative_ordering() {
        std::vector<double> dev;
        double unitary = 0.0;
        for (double T : {25.0, 100.0, 500.0}) {
            const auto sch = cfg_.schedule(T);
            const double ad = units::energy_to_hmhz(adiabatic_moment(sch, T, Level::down, 1));
            const auto dd = work_distribution(sch, T, Level::down, cfg_.propagator(), cfg_.dissipation_on());
            const auto du = work_distribution(sch, T, Level::down, cfg_.propagator());
            dev.push_back(std::abs(units::energy_to_hmhz(moment(dd, 1)) - ad));
            unitary = std::max(unitary, std::abs(units::energy_to_hmhz(moment(du, 1)) - ad));
        }
        const bool ok = dev[0] < dev[1] && dev[1] < dev[2] && unitary < 1e-6;
        return {0, "", ok,
                detail::join({detail::kv("dev_T25_hmhz", dev[0]), detail::kv("dev_T100_hmhz", dev[1]),
                              detail::kv("dev_T500_hmhz", dev[2]), detail::kv("max_unitary_dev_hmhz", unitary)}),
                detail::join({"dev_T25<dev_T100<dev_T500", "max_unitary_dev_hmhz<1e-06"})};
    }

    /// Final-state error of the fast run at 2 dt and dt against dt/4.
    CriterionResult propagator_convergence() {
        const double T = 25.0;
        const auto sch = cfg_.schedule(T);
        const double dt = cfg_.dt_ns;
        const auto run = [&](double h) {
            return propagate_pure(sch, FieldSpec::total(), 0.0, T, PureState::up(), {h}).vec();
        };
        const Vector2c ref = run(dt / 4.0);
        const double coarse = (run(2.0 * dt) - ref).norm();
        const double fine = (run(dt) - ref).norm();
        const double ratio = coarse / fine;
        return {0, "", ratio >= 3.5 && ratio <= 4.5,
                detail::join({detail::kv("err_2dt", coarse), detail::kv("err_dt", fine), detail::kv("ratio", ratio)}),
                "ratio in [3.5;4.5]"};
    }

private:
    const std::vector<MomentRecord>& curve(double T, Level n) {
        for (const auto& e : curves_)
            if (e.T == T && e.n == n) return e.records;
        curves_.push_back({T, n, moment_curve(cfg_.schedule(T), n, reduced_time_grid(cfg_.grid_step_tbar),
                                              cfg_.propagator())});
        return curves_.back().records;
    }

    struct CachedCurve {
        double T;
        Level n;
        std::vector<MomentRecord> records;
    };

    RunConfig cfg_;
    std::deque<CachedCurve> curves_;
};

inline CsvTable verify_report(const std::vector<CriterionResult>& results) {
    CsvTable t({"criterion_id", "status", "measured", "tolerance"});
    for (const auto& r : results)
        t.add_row(std::vector<std::string>{std::to_string(r.id), r.passed ? "PASS" : "FAIL", r.measured, r.tolerance});
    return t;
}

inline std::string format_result_line(const CriterionResult& r) {
    return std::string(r.passed ? "PASS" : "FAIL") + " criterion " + std::to_string(r.id) + " (" + r.name +
           "): " + r.measured + " | required " + r.tolerance;
}

}  // namespace sta
