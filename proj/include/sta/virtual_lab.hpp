#pragma once

// Simulated frozen-Hamiltonian (Ramsey) and frozen-population measurements,
// with ideal pulses, optional dissipation and optional shot noise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "sta/core.hpp"
#include "sta/errors.hpp"
#include "sta/evolution.hpp"
#include "sta/protocol.hpp"
#include "sta/work_stats.hpp"

namespace sta {

enum class Preparation { up, down, superposition };

/// Ideal instantaneous pulses from |up>: a π pulse gives |down>, a π/2 pulse
/// about y gives (|up> + |down>)/√2.
inline PureState prepare_initial(Preparation p) {
    switch (p) {
        case Preparation::up:
            return PureState::up();
        case Preparation::down:
            return PureState::down();
        case Preparation::superposition:
            return PureState(Vector2c(1.0, 1.0) / std::sqrt(2.0));
    }
    return PureState::up();
}

inline PureState prepare_initial(Level n) {
    return prepare_initial(n == Level::up ? Preparation::up : Preparation::down);
}

/// exp(-i angle σy / 2)
inline Matrix2c rotation_y(double angle) {
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    Matrix2c r;
    r << c, -s, s, c;
    return r;
}

struct RamseyOptions {
    double tau_d_step{1.0};    // ns
    double tau_d_span{1000.0};  // ns
    // A closing π/2 pulse (inverse of the preparation pulse) maps the
    // transverse precession onto the z readout. Without it a field along z
    // leaves P_up constant.
    bool closing_pulse{true};
};

struct RamseyRecord {
    double tau_m{0.0};
    std::vector<double> tau_d;
    std::vector<double> p_up;
};

namespace detail {

inline std::size_t ramsey_sample_count(const RamseyOptions& opt) {
    if (!(opt.tau_d_step > 0.0) || !(opt.tau_d_span > 0.0)) throw ConfigError("invalid Ramsey hold grid");
    return static_cast<std::size_t>(std::lround(opt.tau_d_span / opt.tau_d_step)) + 1;
}

inline void check_tau_m(const Schedule& sch, double tau_m) {
    const double T = sch.duration();
    if (!(tau_m >= 0.0 && tau_m <= T * (1.0 + 1e-12))) throw RangeError("tau_m outside [0, T]");
}

}  // namespace detail

/// Prepare (|up>+|down>)/√2, drive with the total field up to tau_m, then hold
/// B(tau_m) and record P_up over the tau_d grid.
inline RamseyRecord frozen_hamiltonian_run(const Schedule& sch, double tau_m, const PropagatorConfig& cfg = {},
                                           const DissipationParams& diss = {}, const RamseyOptions& opt = {}) {
    detail::check_tau_m(sch, tau_m);
    const std::size_t n = detail::ramsey_sample_count(opt);
    const FieldVector frozen = total_field(sch, tau_m);
    const Matrix2c readout = opt.closing_pulse ? rotation_y(-std::numbers::pi / 2.0) : identity2();
    const PureState s0 = prepare_initial(Preparation::superposition);

    RamseyRecord rec;
    rec.tau_m = tau_m;
    rec.tau_d.resize(n);
    rec.p_up.resize(n);
    if (diss.enabled) {
        DensityMatrix rho =
            propagate_lindblad(sch, FieldSpec::total(), 0.0, tau_m, DensityMatrix::from_pure(s0), cfg, diss);
        const Superoperator hold = constant_field_channel(frozen, diss, opt.tau_d_step);
        for (std::size_t k = 0; k < n; ++k) {
            if (k > 0) rho = apply_channel(hold, rho);
            rec.tau_d[k] = k * opt.tau_d_step;
            rec.p_up[k] = (readout * rho.matrix() * readout.adjoint())(0, 0).real();
        }
    } else {
        Vector2c v = propagate_pure(sch, FieldSpec::total(), 0.0, tau_m, s0, cfg).vec();
        const Matrix2c hold = su2_propagator(frozen, opt.tau_d_step);
        for (std::size_t k = 0; k < n; ++k) {
            if (k > 0) v = hold * v;
            rec.tau_d[k] = k * opt.tau_d_step;
            rec.p_up[k] = std::norm((readout * v)(0));
        }
    }
    return rec;
}

struct EigenenergyFit {
    double e_plus{0.0};   // hbar rad/ns
    double e_minus{0.0};
    double angular_frequency{0.0};  // rad/ns
    double amplitude{0.0};
    double offset{0.0};
    double residual_rms{0.0};
};

/// Fits p_up(τ_d) = a cos ωτ_d + b sin ωτ_d + C: coarse ω from the peak of a
/// zero-padded periodogram, refined by Levenberg-Marquardt on (a, b, ω, C).
/// The oscillation frequency is (E+ - E-)/hbar = 2 E+/hbar.
inline EigenenergyFit extract_eigenenergies(const RamseyRecord& rec) {
    const std::size_t n = rec.p_up.size();
    if (n < 8 || rec.tau_d.size() != n) throw InputError("Ramsey record too short");
    const double step = rec.tau_d[1] - rec.tau_d[0];
    const double span = rec.tau_d.back() - rec.tau_d.front();
    if (!(step > 0.0)) throw InputError("Ramsey record needs increasing hold times");

    double mean = 0.0;
    for (double p : rec.p_up) mean += p;
    mean /= static_cast<double>(n);

    // Periodogram over [3/span, Nyquist] on a 4x zero-padded grid (angular units).
    const double w_min = 2.0 * std::numbers::pi * 3.0 / span;
    const double w_max = std::numbers::pi / step;
    const double dw = 2.0 * std::numbers::pi / (4.0 * span);
    const int nw = static_cast<int>((w_max - w_min) / dw);
    if (nw < 3) throw FitFailure("record too short to resolve three oscillation periods");
    std::vector<double> power(nw);
    for (int j = 0; j < nw; ++j) {
        const double w = w_min + j * dw;
        const Complex rot = std::polar(1.0, -w * step);
        Complex z = std::polar(1.0, -w * rec.tau_d[0]);
        Complex acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            acc += (rec.p_up[k] - mean) * z;
            z *= rot;
        }
        power[j] = std::norm(acc);
    }
    int peak = 0;
    for (int j = 1; j < nw; ++j)
        if (power[j] > power[peak]) peak = j;
    std::vector<double> sorted = power;
    std::nth_element(sorted.begin(), sorted.begin() + nw / 2, sorted.end());
    const double median = sorted[nw / 2];
    const double peak_amplitude = 2.0 * std::sqrt(power[peak]) / static_cast<double>(n);
    if (peak_amplitude < 1e-6 || !(power[peak] > 10.0 * median))
        throw FitFailure("no spectral peak above the noise floor");

    double w = w_min + peak * dw;
    if (peak > 0 && peak + 1 < nw) {
        const double l = power[peak - 1];
        const double c = power[peak];
        const double r = power[peak + 1];
        const double denom = l - 2.0 * c + r;
        if (denom < 0.0) w += 0.5 * (l - r) / denom * dw;
    }

    // Linear least squares for (a, b, C) at fixed ω, then joint refinement.
    const auto design = [&](double omega, Eigen::MatrixXd& a) {
        a.resize(static_cast<Eigen::Index>(n), 3);
        for (std::size_t k = 0; k < n; ++k) {
            const double t = rec.tau_d[k];
            a(k, 0) = std::cos(omega * t);
            a(k, 1) = std::sin(omega * t);
            a(k, 2) = 1.0;
        }
    };
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) y(k) = rec.p_up[k];
    Eigen::MatrixXd a;
    design(w, a);
    const Eigen::Vector3d lin = a.colPivHouseholderQr().solve(y);

    Eigen::Vector4d p(lin(0), lin(1), w, lin(2));
    const auto residuals = [&](const Eigen::Vector4d& q, Eigen::VectorXd& r) {
        r.resize(static_cast<Eigen::Index>(n));
        for (std::size_t k = 0; k < n; ++k) {
            const double t = rec.tau_d[k];
            r(k) = q(0) * std::cos(q(2) * t) + q(1) * std::sin(q(2) * t) + q(3) - y(k);
        }
    };
    Eigen::VectorXd r;
    residuals(p, r);
    double cost = r.squaredNorm();
    double lambda = 1e-3;
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(n), 4);
    bool converged = false;
    for (int iter = 0; iter < 100 && !converged; ++iter) {
        for (std::size_t k = 0; k < n; ++k) {
            const double t = rec.tau_d[k];
            const double c = std::cos(p(2) * t);
            const double s = std::sin(p(2) * t);
            jac(k, 0) = c;
            jac(k, 1) = s;
            jac(k, 2) = t * (-p(0) * s + p(1) * c);
            jac(k, 3) = 1.0;
        }
        const Eigen::Matrix4d jtj = jac.transpose() * jac;
        const Eigen::Vector4d jtr = jac.transpose() * r;
        bool improved = false;
        for (int tries = 0; tries < 20 && !improved; ++tries) {
            Eigen::Matrix4d damped = jtj;
            for (int i = 0; i < 4; ++i) damped(i, i) *= 1.0 + lambda;
            const Eigen::Vector4d delta = damped.ldlt().solve(-jtr);
            const Eigen::Vector4d trial = p + delta;
            Eigen::VectorXd rt;
            residuals(trial, rt);
            const double c_trial = rt.squaredNorm();
            if (c_trial <= cost) {
                converged = cost - c_trial <= 1e-15 * cost || delta.norm() < 1e-14;
                p = trial;
                r = rt;
                cost = c_trial;
                lambda = std::max(lambda * 0.3, 1e-12);
                improved = true;
            } else {
                lambda *= 10.0;
            }
        }
        if (!improved) break;
    }

    EigenenergyFit fit;
    fit.angular_frequency = std::abs(p(2));
    fit.e_plus = 0.5 * fit.angular_frequency;
    fit.e_minus = -fit.e_plus;
    fit.amplitude = std::hypot(p(0), p(1));
    fit.offset = p(3);
    fit.residual_rms = std::sqrt(cost / static_cast<double>(n));
    if (fit.angular_frequency * span < 3.0 * 2.0 * std::numbers::pi)
        throw FitFailure("record spans fewer than three oscillation periods");
    return fit;
}

/// Geodesic drag from B̂_start to +z at constant amplitude |B_start|:
/// θ'(t~) = θ_start (1 - s), s = (1 - cos π t~)/2, φ' constant.
class DragSchedule final : public Schedule {
public:
    DragSchedule(double amplitude, double theta_start, double phi_start, double T)
        : amplitude_(amplitude), theta_start_(theta_start), phi_start_(phi_start), T_(T) {
        if (!(T > 0.0)) throw ConfigError("drag time must be positive");
        if (!(amplitude > 0.0)) throw InputError("drag amplitude must be positive");
    }

    double omega(double) const override { return amplitude_; }
    double theta(double tb) const override { return theta_start_ * (1.0 - profile(tb)); }
    double phi(double) const override { return phi_start_; }
    double d_omega(double) const override { return 0.0; }
    double d_theta(double tb) const override {
        return -theta_start_ * 0.5 * std::numbers::pi * std::sin(std::numbers::pi * tb);
    }
    double d_phi(double) const override { return 0.0; }
    double duration() const override { return T_; }
    std::unique_ptr<Schedule> with_duration(double T) const override {
        return std::make_unique<DragSchedule>(amplitude_, theta_start_, phi_start_, T);
    }

    double theta_start() const { return theta_start_; }

private:
    static double profile(double tb) { return 0.5 * (1.0 - std::cos(std::numbers::pi * tb)); }

    double amplitude_;
    double theta_start_;
    double phi_start_;
    double T_;
};

inline DragSchedule make_drag_schedule(const FieldVector& b_start, double T_prime) {
    require_finite(b_start);
    const double a = b_start.norm();
    if (!(a > 0.0)) throw InputError("drag schedule needs a non-zero start field");
    const double theta = std::atan2(std::hypot(b_start.bx, b_start.by), b_start.bz);
    const double phi = (b_start.bx == 0.0 && b_start.by == 0.0) ? 0.0 : std::atan2(b_start.by, b_start.bx);
    return {a, theta, phi, T_prime};
}

struct FrozenPopResult {
    double tau_m{0.0};
    double p_plus_given_n{1.0};
    double p_minus_given_n{0.0};
    Level n{Level::up};
};

inline constexpr double kDefaultDragTime = 100.0;  // ns

/// Prepare |n(0)>, drive with the total field to tau_m, drag the eigenbasis of
/// B(tau_m) to z with a second counter-diabatic protocol of length T_prime,
/// then read P_up -> P_{+|n}, P_down -> P_{-|n}.
inline FrozenPopResult frozen_population_run(const Schedule& sch, double tau_m, Level n,
                                             double T_prime = kDefaultDragTime, const PropagatorConfig& cfg = {},
                                             const DissipationParams& diss = {}) {
    detail::check_tau_m(sch, tau_m);
    if (std::abs(sch.theta(0.0)) > 1e-12)
        throw ProtocolError("frozen-population readout assumes the reference field starts along +z");
    const DragSchedule drag = make_drag_schedule(total_field(sch, tau_m), T_prime);
    const PureState s0 = prepare_initial(n);

    FrozenPopResult res;
    res.tau_m = tau_m;
    res.n = n;
    if (diss.enabled) {
        DensityMatrix rho =
            propagate_lindblad(sch, FieldSpec::total(), 0.0, tau_m, DensityMatrix::from_pure(s0), cfg, diss);
        rho = propagate_lindblad(drag, FieldSpec::total(), 0.0, T_prime, rho, cfg, diss);
        res.p_plus_given_n = rho.population_up();
        res.p_minus_given_n = rho.population_down();
    } else {
        PureState s = propagate_pure(sch, FieldSpec::total(), 0.0, tau_m, s0, cfg);
        s = propagate_pure(drag, FieldSpec::total(), 0.0, T_prime, s, cfg);
        res.p_plus_given_n = std::norm(s.c_up());
        res.p_minus_given_n = std::norm(s.c_down());
    }
    return res;
}

/// Binomial readout noise: each probability is replaced by k/shots.
class ShotNoise {
public:
    ShotNoise(int shots, std::uint64_t seed) : shots_(shots), rng_(seed) {
        if (shots <= 0) throw ConfigError("shot count must be positive");
    }

    double sample(double p) {
        std::binomial_distribution<int> dist(shots_, std::clamp(p, 0.0, 1.0));
        return static_cast<double>(dist(rng_)) / shots_;
    }

    void apply(RamseyRecord& rec) {
        for (double& p : rec.p_up) p = sample(p);
    }

    void apply(FrozenPopResult& res) {
        const double total = res.p_plus_given_n + res.p_minus_given_n;
        res.p_plus_given_n = sample(res.p_plus_given_n / total);
        res.p_minus_given_n = 1.0 - res.p_plus_given_n;
    }

private:
    int shots_;
    std::mt19937_64 rng_;
};

}  // namespace sta
