#pragma once

// Time propagation of pure states (midpoint exponential with exact SU(2)
// sub-steps) and density matrices (Lindblad, RK4 stepping; exact Liouvillian
// exponential over frozen-field holds).

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "sta/core.hpp"
#include "sta/errors.hpp"
#include "sta/protocol.hpp"
#include "sta/units.hpp"

namespace sta {

enum class PropagationMethod { midpoint_exponential };

struct PropagatorConfig {
    double dt{0.005};  // ns
    PropagationMethod method{PropagationMethod::midpoint_exponential};
};

struct DissipationParams {
    double t1{units::us_to_ns(22.0)};       // ns
    double t2_star{units::us_to_ns(64.0)};  // ns, pure dephasing
    bool enabled{false};

    static DissipationParams sweep_qubit() { return {units::us_to_ns(22.0), units::us_to_ns(64.0), true}; }

    /// T2 = [(2 T1)^-1 + (T2*)^-1]^-1
    double t2() const { return 1.0 / (1.0 / (2.0 * t1) + 1.0 / t2_star); }

    double relaxation_rate() const { return enabled ? 1.0 / t1 : 0.0; }
    double dephasing_rate() const { return enabled ? 1.0 / (2.0 * t2_star) : 0.0; }

    void validate() const {
        if (enabled && (!(t1 > 0.0) || !(t2_star > 0.0) || !std::isfinite(t1) || !std::isfinite(t2_star)))
            throw ConfigError("dissipation times must be positive");
    }
};

/// Which field drives the qubit: the reference B0, the total B0 + Bcd, or the
/// total field held constant at B(tau) for all t >= tau.
class FieldSpec {
public:
    enum class Kind { reference, total, frozen };

    static FieldSpec reference() { return FieldSpec(Kind::reference, 0.0); }
    static FieldSpec total() { return FieldSpec(Kind::total, 0.0); }
    static FieldSpec frozen(double tau) { return FieldSpec(Kind::frozen, tau); }

    Kind kind() const { return kind_; }
    double tau() const { return tau_; }

private:
    FieldSpec(Kind k, double tau) : kind_(k), tau_(tau) {}
    Kind kind_;
    double tau_;
};

inline FieldVector field_at(const Schedule& sch, const FieldSpec& spec, double t) {
    switch (spec.kind()) {
        case FieldSpec::Kind::reference:
            return reference_field(sch, t);
        case FieldSpec::Kind::total:
            return total_field(sch, t);
        case FieldSpec::Kind::frozen:
            if (t < 0.0) throw RangeError("negative time for frozen field");
            return total_field(sch, std::min(t, spec.tau()));
    }
    return {};
}

namespace detail {

inline void validate_config(const PropagatorConfig& cfg, double T) {
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("propagator dt must be positive");
    if (cfg.dt > T / 100.0 * (1.0 + 1e-12))
        throw ConfigError("propagator dt = " + std::to_string(cfg.dt) + " ns exceeds T/100 for T = " +
                          std::to_string(T) + " ns");
}

inline void validate_span(const Schedule& sch, const FieldSpec& spec, double t0, double t1) {
    if (!(t0 <= t1)) throw RangeError("propagation requires t0 <= t1");
    const double T = sch.duration();
    const double slack = kDomainSlack * std::max(1.0, T);
    if (t0 < -slack) throw RangeError("propagation starts before t = 0");
    if (spec.kind() == FieldSpec::Kind::frozen) {
        if (spec.tau() < -slack || spec.tau() > T + slack) throw RangeError("freeze time outside [0, T]");
    } else if (t1 > T + slack) {
        throw RangeError("propagation ends after the operation time");
    }
}

inline int step_count(double span, double dt) {
    return std::max(1, static_cast<int>(std::ceil(span / dt - 1e-9)));
}

inline void validate_rates(double dt, const DissipationParams& diss) {
    diss.validate();
    if (!diss.enabled) return;
    if (dt * std::max(1.0 / diss.t1, 1.0 / diss.t2_star) > 1e-3)
        throw ConfigError("propagator dt too large for the dissipation rates");
}

}  // namespace detail

/// Midpoint-exponential propagation of a pure state under an arbitrary field
/// callable `field(t) -> FieldVector`; the span is cut into equal steps of at
/// most `dt`.
template <class FieldFn>
PureState evolve_pure(FieldFn&& field, double t0, double t1, const PureState& s0, double dt) {
    if (t1 == t0) return s0;
    const double span = t1 - t0;
    const int n = detail::step_count(span, dt);
    const double h = span / n;
    Vector2c v = s0.vec();
    for (int i = 0; i < n; ++i) v = su2_propagator(field(t0 + (i + 0.5) * h), h) * v;
    return PureState(v);
}

inline PureState propagate_pure(const Schedule& sch, const FieldSpec& spec, double t0, double t1, const PureState& s0,
                                const PropagatorConfig& cfg = {}) {
    detail::validate_config(cfg, sch.duration());
    detail::validate_span(sch, spec, t0, t1);
    const auto field = [&](double t) { return field_at(sch, spec, t); };
    if (spec.kind() != FieldSpec::Kind::frozen || t1 <= spec.tau()) return evolve_pure(field, t0, t1, s0, cfg.dt);

    // Constant field after the freeze: one exact step.
    const double split = std::max(t0, spec.tau());
    const PureState before = evolve_pure(field, t0, split, s0, cfg.dt);
    if (t1 == split) return before;
    return PureState(su2_propagator(total_field(sch, spec.tau()), t1 - split) * before.vec());
}

/// dρ/dt for the qubit master equation with relaxation (σ-) and pure dephasing (σz).
inline Matrix2c lindblad_rhs(const Matrix2c& h, const Matrix2c& rho, double gamma1, double gamma_phi) {
    Matrix2c out = -kI * (h * rho - rho * h);
    if (gamma1 > 0.0) {
        const Matrix2c l = sigma_minus();
        const Matrix2c ldl = l.adjoint() * l;
        out += gamma1 * (l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl));
    }
    if (gamma_phi > 0.0) {
        const Matrix2c z = pauli_z();
        out += gamma_phi * (z * rho * z - rho);
    }
    return out;
}

/// Master-equation propagation with the same midpoint stepping as the pure
/// path: within each step the field is held at its midpoint value and the
/// constant-generator step is integrated by classical fourth-order Runge-Kutta.
template <class FieldFn>
DensityMatrix evolve_lindblad(FieldFn&& field, double t0, double t1, const DensityMatrix& rho0, double dt,
                              const DissipationParams& diss) {
    detail::validate_rates(dt, diss);
    if (t1 == t0) return rho0;
    const double g1 = diss.relaxation_rate();
    const double gp = diss.dephasing_rate();
    const double span = t1 - t0;
    const int n = detail::step_count(span, dt);
    const double h = span / n;
    Matrix2c rho = rho0.matrix();
    for (int i = 0; i < n; ++i) {
        const Matrix2c hm = hamiltonian_from_field(field(t0 + (i + 0.5) * h));
        const Matrix2c k1 = lindblad_rhs(hm, rho, g1, gp);
        const Matrix2c k2 = lindblad_rhs(hm, rho + 0.5 * h * k1, g1, gp);
        const Matrix2c k3 = lindblad_rhs(hm, rho + 0.5 * h * k2, g1, gp);
        const Matrix2c k4 = lindblad_rhs(hm, rho + h * k3, g1, gp);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        rho = 0.5 * (rho + rho.adjoint()).eval();
    }
    return DensityMatrix(rho);
}

using Superoperator = Eigen::Matrix4cd;

/// Liouvillian of a constant field acting on the column-major vectorization of ρ.
inline Superoperator liouvillian(const FieldVector& b, const DissipationParams& diss) {
    const Matrix2c h = hamiltonian_from_field(b);
    Superoperator l;
    for (int col = 0; col < 4; ++col) {
        Matrix2c e = Matrix2c::Zero();
        e(col % 2, col / 2) = 1.0;
        const Matrix2c r = lindblad_rhs(h, e, diss.relaxation_rate(), diss.dephasing_rate());
        for (int row = 0; row < 4; ++row) l(row, col) = r(row % 2, row / 2);
    }
    return l;
}

/// exp(L τ) for a constant field.
inline Superoperator constant_field_channel(const FieldVector& b, const DissipationParams& diss, double tau) {
    const Superoperator l = liouvillian(b, diss) * Complex(tau, 0.0);
    return l.exp();
}

inline DensityMatrix apply_channel(const Superoperator& channel, const DensityMatrix& rho) {
    Eigen::Vector4cd v;
    for (int i = 0; i < 4; ++i) v(i) = rho.matrix()(i % 2, i / 2);
    const Eigen::Vector4cd w = channel * v;
    Matrix2c out;
    for (int i = 0; i < 4; ++i) out(i % 2, i / 2) = w(i);
    return DensityMatrix(0.5 * (out + out.adjoint()));
}

inline DensityMatrix propagate_lindblad(const Schedule& sch, const FieldSpec& spec, double t0, double t1,
                                        const DensityMatrix& rho0, const PropagatorConfig& cfg,
                                        const DissipationParams& diss) {
    detail::validate_config(cfg, sch.duration());
    detail::validate_span(sch, spec, t0, t1);
    detail::validate_rates(cfg.dt, diss);
    const auto field = [&](double t) { return field_at(sch, spec, t); };
    if (spec.kind() != FieldSpec::Kind::frozen || t1 <= spec.tau())
        return evolve_lindblad(field, t0, t1, rho0, cfg.dt, diss);

    // The held segment has a constant generator and is integrated exactly.
    const double split = std::max(t0, spec.tau());
    const DensityMatrix before = evolve_lindblad(field, t0, split, rho0, cfg.dt, diss);
    if (t1 == split) return before;
    return apply_channel(constant_field_channel(total_field(sch, spec.tau()), diss, t1 - split), before);
}

}  // namespace sta
