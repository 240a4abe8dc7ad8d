#pragma once

// Control-parameter schedules lambda(t) = {Omega, theta, phi}, the reference
// field B0, the analytic counter-diabatic field and the projector-based
// counter-diabatic constructor used to cross-check it.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>

#include "sta/core.hpp"
#include "sta/errors.hpp"
#include "sta/units.hpp"

namespace sta {

/// Reference eigenstate label. `up` is the + branch of B0.sigma (energy +Omega/2).
enum class Level { up, down };

inline const char* to_string(Level n) { return n == Level::up ? "up" : "down"; }

/// A path lambda(t~) on reduced time t~ = t/T in [0, 1], with analytic
/// derivatives taken with respect to t~.
class Schedule {
public:
    virtual ~Schedule() = default;

    virtual double omega(double tb) const = 0;
    virtual double theta(double tb) const = 0;
    virtual double phi(double tb) const = 0;
    virtual double d_omega(double tb) const = 0;
    virtual double d_theta(double tb) const = 0;
    virtual double d_phi(double tb) const = 0;

    /// Operation time T in ns.
    virtual double duration() const = 0;

    /// Same path compressed to a different operation time.
    virtual std::unique_ptr<Schedule> with_duration(double T) const = 0;
};

/// Omega(t~) = Omega0 + Omega1 sin(pi t~/2), theta = (pi/6)(1 - cos pi t~),
/// phi = (pi/2)(1 - cos pi t~).
class PaperSchedule final : public Schedule {
public:
    PaperSchedule(double omega0, double omega1, double T) : omega0_(omega0), omega1_(omega1), T_(T) {
        if (!(T > 0.0)) throw ConfigError("operation time must be positive");
        if (!(omega0 > 0.0) || !(omega0 + omega1 > 0.0) || omega1 < 0.0)
            throw ConfigError("schedule amplitude must stay positive");
    }

    /// Omega0/2pi = Omega1/2pi = 10 MHz.
    static PaperSchedule with_defaults(double T) {
        return {units::mhz_to_rad_per_ns(10.0), units::mhz_to_rad_per_ns(10.0), T};
    }

    double omega(double tb) const override { return omega0_ + omega1_ * std::sin(pi * tb / 2.0); }
    double theta(double tb) const override { return pi / 6.0 * (1.0 - std::cos(pi * tb)); }
    double phi(double tb) const override { return pi / 2.0 * (1.0 - std::cos(pi * tb)); }
    double d_omega(double tb) const override { return omega1_ * pi / 2.0 * std::cos(pi * tb / 2.0); }
    double d_theta(double tb) const override { return pi * pi / 6.0 * std::sin(pi * tb); }
    double d_phi(double tb) const override { return pi * pi / 2.0 * std::sin(pi * tb); }
    double duration() const override { return T_; }
    std::unique_ptr<Schedule> with_duration(double T) const override {
        return std::make_unique<PaperSchedule>(omega0_, omega1_, T);
    }

    double omega0() const { return omega0_; }
    double omega1() const { return omega1_; }

private:
    static constexpr double pi = std::numbers::pi;
    double omega0_;
    double omega1_;
    double T_;
};

/// Schedule assembled from callables; the caller guarantees the derivatives
/// are consistent with the values.
class CustomSchedule final : public Schedule {
public:
    using Fn = std::function<double(double)>;

    struct Path {
        Fn omega, theta, phi;
        Fn d_omega, d_theta, d_phi;
    };

    CustomSchedule(Path path, double T) : path_(std::move(path)), T_(T) {
        if (!(T > 0.0)) throw ConfigError("operation time must be positive");
    }

    double omega(double tb) const override { return path_.omega(tb); }
    double theta(double tb) const override { return path_.theta(tb); }
    double phi(double tb) const override { return path_.phi(tb); }
    double d_omega(double tb) const override { return path_.d_omega(tb); }
    double d_theta(double tb) const override { return path_.d_theta(tb); }
    double d_phi(double tb) const override { return path_.d_phi(tb); }
    double duration() const override { return T_; }
    std::unique_ptr<Schedule> with_duration(double T) const override {
        return std::make_unique<CustomSchedule>(path_, T);
    }

private:
    Path path_;
    double T_;
};

namespace detail {

inline constexpr double kDomainSlack = 1e-12;

// t -> t~ with a range check; values within rounding of the ends are clamped.
inline double reduced_time(const Schedule& sch, double t) {
    const double T = sch.duration();
    const double slack = kDomainSlack * std::max(1.0, T);
    if (!(t >= -slack && t <= T + slack))
        throw RangeError("time " + std::to_string(t) + " ns outside schedule domain [0, " + std::to_string(T) + "]");
    return std::clamp(t / T, 0.0, 1.0);
}

}  // namespace detail

inline FieldVector field_from_angles(double amplitude, double theta, double phi) {
    const double s = std::sin(theta);
    return {amplitude * s * std::cos(phi), amplitude * s * std::sin(phi), amplitude * std::cos(theta)};
}

inline FieldVector reference_field(const Schedule& sch, double t) {
    const double tb = detail::reduced_time(sch, t);
    return field_from_angles(sch.omega(tb), sch.theta(tb), sch.phi(tb));
}

/// Counter-diabatic field for a qubit with theta_dot = d_theta/T, phi_dot = d_phi/T.
inline FieldVector cd_field_analytic(const Schedule& sch, double t) {
    const double tb = detail::reduced_time(sch, t);
    const double T = sch.duration();
    const double th = sch.theta(tb);
    const double ph = sch.phi(tb);
    const double th_dot = sch.d_theta(tb) / T;
    const double ph_dot = sch.d_phi(tb) / T;
    const double st = std::sin(th);
    const double ct = std::cos(th);
    return {-th_dot * std::sin(ph) - ph_dot * st * ct * std::cos(ph),
            th_dot * std::cos(ph) - ph_dot * st * ct * std::sin(ph),
            ph_dot * st * st};
}

inline FieldVector total_field(const Schedule& sch, double t) {
    return reference_field(sch, t) + cd_field_analytic(sch, t);
}

/// Reference instantaneous eigenstates of B0.sigma at angles (theta, phi):
/// |s_up> = cos(theta/2)|up> + sin(theta/2) e^{i phi}|down>,
/// |s_down> = -sin(theta/2) e^{-i phi}|up> + cos(theta/2)|down>.
inline PureState reference_eigenstate(Level n, double theta, double phi) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    if (n == Level::up) return PureState(Vector2c(c, s * std::polar(1.0, phi)));
    return PureState(Vector2c(-s * std::polar(1.0, -phi), c));
}

inline PureState reference_eigenstate(const Schedule& sch, double t, Level n) {
    const double tb = detail::reduced_time(sch, t);
    return reference_eigenstate(n, sch.theta(tb), sch.phi(tb));
}

/// epsilon_n(t) = +Omega/2 for up, -Omega/2 for down (hbar = 1).
inline double reference_energy(const Schedule& sch, double t, Level n) {
    const double tb = detail::reduced_time(sch, t);
    const double e = 0.5 * sch.omega(tb);
    return n == Level::up ? e : -e;
}

/// Rotates `v` by the phase that makes <ref|v> real and non-negative.
inline Vector2c align_phase(const Vector2c& v, const Vector2c& ref) {
    const Complex ov = ref.dot(v);
    const double m = std::abs(ov);
    if (m == 0.0) return v;
    return v * (std::conj(ov) / m);
}

/// Central-difference d/dt of a state-valued function with the stencil points
/// phase-aligned to the centre value.
template <class StateAt>
Vector2c smoothed_time_derivative(StateAt&& state_at, double t, double h) {
    const Vector2c centre = state_at(t);
    const Vector2c plus = align_phase(state_at(t + h), centre);
    const Vector2c minus = align_phase(state_at(t - h), centre);
    return (plus - minus) / (2.0 * h);
}

inline double default_fd_step(const Schedule& sch) { return 1e-4 * sch.duration(); }

/// |d_t n(t)> of a reference eigenstate by gauge-smoothed central differences.
inline Vector2c reference_eigenstate_rate(const Schedule& sch, double t, Level n, double dt_fd) {
    if (!(dt_fd > 0.0)) throw InputError("finite-difference step must be positive");
    const double T = sch.duration();
    if (t < dt_fd - detail::kDomainSlack * T || t > T - dt_fd + detail::kDomainSlack * T)
        throw RangeError("time too close to the schedule boundary for the difference stencil");
    const auto at = [&](double tt) { return reference_eigenstate(sch, tt, n).vec(); };
    return smoothed_time_derivative(at, t, dt_fd);
}

/// i hbar sum_n P_perp_n |d_t n><n| built from finite-differenced reference eigenstates.
inline Matrix2c cd_hamiltonian_generic(const Schedule& sch, double t, double dt_fd) {
    Matrix2c h = Matrix2c::Zero();
    for (Level n : {Level::up, Level::down}) {
        const Vector2c v = reference_eigenstate(sch, t, n).vec();
        const Vector2c dv = reference_eigenstate_rate(sch, t, n, dt_fd);
        const Matrix2c p_perp = identity2() - v * v.adjoint();
        h += kI * (p_perp * dv) * v.adjoint();
    }
    return h;
}

inline Matrix2c cd_hamiltonian_generic(const Schedule& sch, double t) {
    return cd_hamiltonian_generic(sch, t, default_fd_step(sch));
}

}  // namespace sta
