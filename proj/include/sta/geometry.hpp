#pragma once

// Quantum geometric tensor on the (theta, phi) sphere, the qubit closed form
// of the geometric excess of the work variance, and the Bloch-trajectory
// estimator of the geometric quantity.

#include <cmath>
#include <numbers>
#include <vector>

#include "sta/core.hpp"
#include "sta/errors.hpp"
#include "sta/evolution.hpp"
#include "sta/protocol.hpp"
#include "sta/work_stats.hpp"

namespace sta {

/// Real part of the quantum geometric tensor in the (theta, phi) coordinates.
struct GeometricTensor {
    double g_theta_theta{0.0};
    double g_theta_phi{0.0};
    double g_phi_phi{0.0};
    double theta{0.0};
    double phi{0.0};

    double min_eigenvalue() const {
        const double m = 0.5 * (g_theta_theta + g_phi_phi);
        const double r = std::hypot(0.5 * (g_theta_theta - g_phi_phi), g_theta_phi);
        return m - r;
    }

    /// Σ g_μν v_μ v_ν
    double contract(double v_theta, double v_phi) const {
        return g_theta_theta * v_theta * v_theta + 2.0 * g_theta_phi * v_theta * v_phi + g_phi_phi * v_phi * v_phi;
    }
};

/// diag(1/4, sin²θ/4), identical for both reference eigenstates.
inline GeometricTensor qgt_analytic(double theta, double phi = 0.0) {
    const double s = std::sin(theta);
    return {0.25, 0.0, 0.25 * s * s, theta, phi};
}

/// Re<∂_μ n|P_perp|∂_ν n> for an arbitrary state field `state_at(theta, phi)`,
/// using central differences whose stencil points are phase-aligned to the centre.
template <class StateAt>
GeometricTensor qgt_numeric_of(StateAt&& state_at, double theta, double phi, double d_lambda) {
    if (!(d_lambda > 0.0) || d_lambda > 1e-2) throw InputError("d_lambda must lie in (0, 1e-2]");
    const Vector2c centre = state_at(theta, phi);
    const auto along_theta = [&](double th) { return state_at(th, phi); };
    const auto along_phi = [&](double ph) { return state_at(theta, ph); };
    const Vector2c d_theta = smoothed_time_derivative(along_theta, theta, d_lambda);
    const Vector2c d_phi = smoothed_time_derivative(along_phi, phi, d_lambda);
    const Vector2c u = d_theta - centre * centre.dot(d_theta);
    const Vector2c v = d_phi - centre * centre.dot(d_phi);
    return {u.dot(u).real(), u.dot(v).real(), v.dot(v).real(), theta, phi};
}

inline GeometricTensor qgt_numeric(Level n, double theta, double phi, double d_lambda = 1e-4) {
    return qgt_numeric_of([n](double th, double ph) { return reference_eigenstate(n, th, ph).vec(); }, theta, phi,
                          d_lambda);
}

/// (1/4)[(dθ/dt~)² + sin²θ (dφ/dt~)²], the squared speed along the path in
/// reduced time.
inline double path_speed_sq(const Schedule& sch, double tbar) {
    return qgt_analytic(sch.theta(tbar)).contract(sch.d_theta(tbar), sch.d_phi(tbar));
}

/// hbar² Σ g_μν λ̇_μ λ̇_ν = (hbar²/4T²)[(dθ/dt~)² + sin²θ (dφ/dt~)²].
inline double excess_from_qgt(const Schedule& sch, double tbar) {
    const double T = sch.duration();
    return path_speed_sq(sch, tbar) / (T * T);
}

struct BlochSample {
    double tbar{0.0};
    double r_q{1.0};
    double theta_q{0.0};
    double phi_q{0.0};
    bool pole{false};  // theta_q below 1e-6: phi_q is reported as 0 and carries no information
};

inline constexpr double kPoleThreshold = 1e-6;

inline BlochSample bloch_from_density(const DensityMatrix& rho, double tbar) {
    const Complex c = rho.matrix()(1, 0);
    const double x = 2.0 * c.real();
    const double y = 2.0 * c.imag();
    const double z = (rho.matrix()(0, 0) - rho.matrix()(1, 1)).real();
    BlochSample b;
    b.tbar = tbar;
    b.r_q = std::sqrt(x * x + y * y + z * z);
    b.theta_q = std::atan2(std::hypot(x, y), z);
    b.pole = b.theta_q < kPoleThreshold;
    b.phi_q = b.pole ? 0.0 : std::atan2(y, x);
    return b;
}

/// Removes 2π jumps in phi_q along a trajectory.
inline void unwrap_azimuth(std::vector<BlochSample>& samples) {
    double prev = 0.0;
    for (auto& s : samples) {
        if (s.pole) continue;
        const double k = std::round((prev - s.phi_q) / (2.0 * std::numbers::pi));
        s.phi_q += 2.0 * std::numbers::pi * k;
        prev = s.phi_q;
    }
}

/// Bloch coordinates of the qubit started in |n(0)> and driven by the total
/// field, sampled every `step` in reduced time.
inline std::vector<BlochSample> bloch_trajectory(const Schedule& sch, const PropagatorConfig& cfg = {},
                                                 double step = 0.02, const DissipationParams& diss = {},
                                                 Level n = Level::up) {
    const auto grid = reduced_time_grid(step);
    const double T = sch.duration();
    std::vector<BlochSample> out;
    out.reserve(grid.size());
    PureState s = initial_eigenstate(sch, n);
    DensityMatrix rho = DensityMatrix::from_pure(s);
    double t_prev = 0.0;
    for (double tb : grid) {
        const double t = tb * T;
        if (diss.enabled) {
            rho = propagate_lindblad(sch, FieldSpec::total(), t_prev, t, rho, cfg, diss);
            out.push_back(bloch_from_density(rho, tb));
        } else {
            s = propagate_pure(sch, FieldSpec::total(), t_prev, t, s, cfg);
            out.push_back(bloch_from_density(DensityMatrix::from_pure(s), tb));
        }
        t_prev = t;
    }
    unwrap_azimuth(out);
    return out;
}

/// Ideal samples (r = 1, θ_q = θ, φ_q = φ) read directly off the schedule.
inline std::vector<BlochSample> exact_bloch_samples(const Schedule& sch, double step) {
    std::vector<BlochSample> out;
    for (double tb : reduced_time_grid(step)) {
        const double th = sch.theta(tb);
        out.push_back({tb, 1.0, th, th < kPoleThreshold ? 0.0 : sch.phi(tb), th < kPoleThreshold});
    }
    return out;
}

struct GeometricEstimate {
    double tbar{0.0};
    double value{0.0};
    bool high_uncertainty{false};
};

// Polar angle below which the azimuth read from tomography is unreliable.
inline constexpr double kAzimuthUncertaintyTheta = 0.05;

/// Central differences of θ_q and φ_q, combined into
/// (1/4)[(dθ_q/dt~)² + sin²θ_q (dφ_q/dt~)²] at interior grid points.
inline std::vector<GeometricEstimate> geometric_quantity_estimator(const std::vector<BlochSample>& samples,
                                                                   double step) {
    if (samples.size() < 3) throw InputError("estimator needs at least 3 samples");
    if (!(step > 0.0)) throw InputError("grid step must be positive");
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (std::abs(samples[i].tbar - samples[i - 1].tbar - step) > 1e-9)
            throw InputError("estimator needs a uniform grid matching the step");

    std::vector<GeometricEstimate> out;
    out.reserve(samples.size() - 2);
    for (std::size_t i = 1; i + 1 < samples.size(); ++i) {
        const auto& a = samples[i - 1];
        const auto& c = samples[i];
        const auto& b = samples[i + 1];
        const double d_theta = (b.theta_q - a.theta_q) / (2.0 * step);
        const double d_phi = (b.phi_q - a.phi_q) / (2.0 * step);
        const double s = std::sin(c.theta_q);
        const bool flag = a.pole || b.pole || c.pole || c.theta_q < kAzimuthUncertaintyTheta;
        out.push_back({c.tbar, 0.25 * (d_theta * d_theta + s * s * d_phi * d_phi), flag});
    }
    return out;
}

}  // namespace sta
