#pragma once

// Two-point-measurement work statistics for a given initial reference
// eigenstate: conditional probabilities in the instantaneous eigenbasis of the
// total Hamiltonian, work distributions and their moments, adiabatic
// references, Gibbs averaging and the excess of the second moment.

#include <cmath>
#include <limits>
#include <vector>

#include "sta/core.hpp"
#include "sta/errors.hpp"
#include "sta/evolution.hpp"
#include "sta/protocol.hpp"

namespace sta {

struct ConditionalProbs {
    double p_plus{1.0};
    double p_minus{0.0};

    double p(Branch k) const { return k == Branch::plus ? p_plus : p_minus; }
};

inline ConditionalProbs project(const SpectralDecomposition& eig, const PureState& s) {
    return {fidelity(eig.psi_plus, s), fidelity(eig.psi_minus, s)};
}

inline ConditionalProbs project(const SpectralDecomposition& eig, const DensityMatrix& rho) {
    return {rho.probability(eig.psi_plus), rho.probability(eig.psi_minus)};
}

inline SpectralDecomposition total_eigenbasis(const Schedule& sch, double t) {
    return spectral_decompose(hamiltonian_from_field(total_field(sch, t)));
}

/// |n(0)>, the reference eigenstate the two-point measurement starts from.
inline PureState initial_eigenstate(const Schedule& sch, Level n) { return reference_eigenstate(sch, 0.0, n); }

/// P_{±|n}(t): propagate |n(0)> under the total field and project on the
/// instantaneous eigenbasis of H(t). With dissipation enabled the state is a
/// density matrix evolved by the master equation.
inline ConditionalProbs conditional_probs(const Schedule& sch, double t, Level n, const PropagatorConfig& cfg = {},
                                          const DissipationParams& diss = {}) {
    const auto eig = total_eigenbasis(sch, t);
    const PureState s0 = initial_eigenstate(sch, n);
    if (diss.enabled) {
        const auto rho = propagate_lindblad(sch, FieldSpec::total(), 0.0, t, DensityMatrix::from_pure(s0), cfg, diss);
        return project(eig, rho);
    }
    return project(eig, propagate_pure(sch, FieldSpec::total(), 0.0, t, s0, cfg));
}

struct WorkOutcome {
    double w{0.0};  // hbar rad/ns
    double p{0.0};
};

struct WorkDistribution {
    std::vector<WorkOutcome> support;
    double t{0.0};
    Level initial{Level::up};

    double total_probability() const {
        double s = 0.0;
        for (const auto& o : support) s += o.p;
        return s;
    }
};

inline void require_vanishing_initial_cd(const Schedule& sch) {
    if (cd_field_analytic(sch, 0.0).norm() > 1e-12)
        throw ProtocolError("two-point measurement requires a vanishing counter-diabatic field at t = 0");
}

/// Support {(E_±(t) - ε_n(0), P_{±|n}(t))} from already computed probabilities.
inline WorkDistribution make_work_distribution(const Schedule& sch, double t, Level n, const ConditionalProbs& probs) {
    const auto eig = total_eigenbasis(sch, t);
    const double e0 = reference_energy(sch, 0.0, n);
    return {{{eig.e_plus - e0, probs.p_plus}, {eig.e_minus - e0, probs.p_minus}}, t, n};
}

inline WorkDistribution work_distribution(const Schedule& sch, double t, Level n, const PropagatorConfig& cfg = {},
                                          const DissipationParams& diss = {}) {
    require_vanishing_initial_cd(sch);
    return make_work_distribution(sch, t, n, conditional_probs(sch, t, n, cfg, diss));
}

/// Σ_k w_k^m p_k
inline double moment(const WorkDistribution& dist, int m) {
    double s = 0.0;
    for (const auto& o : dist.support) s += std::pow(o.w, m) * o.p;
    return s;
}

/// [ε_n(t) - ε_n(0)]^m
inline double adiabatic_moment(const Schedule& sch, double t, Level n, int m) {
    return std::pow(reference_energy(sch, t, n) - reference_energy(sch, 0.0, n), m);
}

/// Source of the adiabatic second moment subtracted in excess_fluctuation.
struct AdiabaticReference {
    enum class Kind { analytic, run_at_T };
    Kind kind{Kind::analytic};
    double T_ref{500.0};

    static AdiabaticReference analytic() { return {}; }
    static AdiabaticReference run_at(double T_ref) { return {Kind::run_at_T, T_ref}; }
};

/// δW²_n(t) = W²_n(t) - W²_ad;n(t), the adiabatic part taken either in closed
/// form or as the measured second moment of the same path run over T_ref.
inline double excess_fluctuation(const Schedule& sch, double t, Level n, const PropagatorConfig& cfg = {},
                                 const AdiabaticReference& ref = AdiabaticReference::analytic()) {
    const double w2 = moment(work_distribution(sch, t, n, cfg), 2);
    if (ref.kind == AdiabaticReference::Kind::analytic) return w2 - adiabatic_moment(sch, t, n, 2);
    const auto slow = sch.with_duration(ref.T_ref);
    const double t_ref = t / sch.duration() * ref.T_ref;
    return w2 - moment(work_distribution(*slow, t_ref, n, cfg), 2);
}

/// Σ_n W^m_n(t) P_n(0) with P_n(0) ∝ exp(-β ε_n(0)); β = +inf selects the lower ε_n(0).
inline double thermal_moment(const Schedule& sch, double t, double beta, int m, const PropagatorConfig& cfg = {}) {
    if (!(beta >= 0.0)) throw InputError("inverse temperature must be non-negative");
    const double e_up = reference_energy(sch, 0.0, Level::up);
    const double e_down = reference_energy(sch, 0.0, Level::down);
    const double w_up = moment(work_distribution(sch, t, Level::up, cfg), m);
    const double w_down = moment(work_distribution(sch, t, Level::down, cfg), m);
    if (std::isinf(beta)) return e_up <= e_down ? w_up : w_down;
    const double e_min = std::min(e_up, e_down);
    const double a = std::exp(-beta * (e_up - e_min));
    const double b = std::exp(-beta * (e_down - e_min));
    return (a * w_up + b * w_down) / (a + b);
}

struct MomentRecord {
    double tbar{0.0};
    double w1{0.0};
    double w2{0.0};
    double w1_ad{0.0};
    double w2_ad{0.0};
    double excess2{0.0};
};

/// t~ = 0, step, 2 step, ..., 1.
inline std::vector<double> reduced_time_grid(double step) {
    if (!(step > 0.0) || step > 1.0) throw ConfigError("reduced-time grid step must be in (0, 1]");
    const int n = static_cast<int>(std::lround(1.0 / step));
    if (std::abs(n * step - 1.0) > 1e-9) throw ConfigError("reduced-time grid step must divide 1");
    std::vector<double> grid(n + 1);
    for (int i = 0; i <= n; ++i) grid[i] = static_cast<double>(i) / n;
    return grid;
}

inline MomentRecord make_moment_record(const Schedule& sch, double tbar, Level n, const ConditionalProbs& probs) {
    const double t = tbar * sch.duration();
    const auto dist = make_work_distribution(sch, t, n, probs);
    MomentRecord r;
    r.tbar = tbar;
    r.w1 = moment(dist, 1);
    r.w2 = moment(dist, 2);
    r.w1_ad = adiabatic_moment(sch, t, n, 1);
    r.w2_ad = adiabatic_moment(sch, t, n, 2);
    r.excess2 = r.w2 - r.w2_ad;
    return r;
}

/// Moments over a reduced-time grid, propagating once along the grid.
inline std::vector<MomentRecord> moment_curve(const Schedule& sch, Level n, const std::vector<double>& grid,
                                              const PropagatorConfig& cfg = {}, const DissipationParams& diss = {}) {
    require_vanishing_initial_cd(sch);
    const double T = sch.duration();
    std::vector<MomentRecord> out;
    out.reserve(grid.size());
    PureState s = initial_eigenstate(sch, n);
    DensityMatrix rho = DensityMatrix::from_pure(s);
    double t_prev = 0.0;
    for (double tb : grid) {
        const double t = tb * T;
        const auto eig = total_eigenbasis(sch, t);
        ConditionalProbs probs;
        if (diss.enabled) {
            rho = propagate_lindblad(sch, FieldSpec::total(), t_prev, t, rho, cfg, diss);
            probs = project(eig, rho);
        } else {
            s = propagate_pure(sch, FieldSpec::total(), t_prev, t, s, cfg);
            probs = project(eig, s);
        }
        out.push_back(make_moment_record(sch, tb, n, probs));
        t_prev = t;
    }
    return out;
}

/// <d_t n|P_perp_n|d_t n> from finite-differenced reference eigenstates.
inline double projected_rate_norm(const Schedule& sch, double t, Level n, double dt_fd) {
    const Vector2c v = reference_eigenstate(sch, t, n).vec();
    const Vector2c dv = reference_eigenstate_rate(sch, t, n, dt_fd);
    const Vector2c perp = dv - v * v.dot(dv);
    return perp.squaredNorm();
}

/// |[E_k - ε_n]<n|ψ_k> - i hbar Σ_m <n|P_perp_m|d_t m><m|ψ_k>|, the eigenvalue
/// relation of H = H0 + Hcd written in the reference basis.
inline double eigen_relation_residual(const Schedule& sch, double t, Level n, Branch k, double dt_fd) {
    const auto eig = total_eigenbasis(sch, t);
    const Vector2c psi = eig.state(k).vec();
    const Vector2c nv = reference_eigenstate(sch, t, n).vec();
    Complex rhs = 0.0;
    for (Level m : {Level::up, Level::down}) {
        const Vector2c mv = reference_eigenstate(sch, t, m).vec();
        const Vector2c dm = reference_eigenstate_rate(sch, t, m, dt_fd);
        const Vector2c perp = dm - mv * mv.dot(dm);
        rhs += kI * nv.dot(perp) * mv.dot(psi);
    }
    const Complex lhs = (eig.energy(k) - reference_energy(sch, t, n)) * nv.dot(psi);
    return std::abs(lhs - rhs);
}

}  // namespace sta
