#pragma once

// Two-level linear algebra: states, density matrices, the Pauli algebra, the
// closed-form spectral decomposition of a traceless qubit Hamiltonian and the
// exact SU(2) propagator of a constant field.

#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "sta/errors.hpp"

namespace sta {

using Complex = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;
using Vector2c = Eigen::Vector2cd;

inline constexpr Complex kI{0.0, 1.0};

inline Matrix2c identity2() { return Matrix2c::Identity(); }

inline Matrix2c pauli_x() {
    Matrix2c m;
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

inline Matrix2c pauli_y() {
    Matrix2c m;
    m << 0.0, -kI, kI, 0.0;
    return m;
}

inline Matrix2c pauli_z() {
    Matrix2c m;
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

// Lowering operator in the (up, down) basis: maps |down> (excited) to |up> (ground).
inline Matrix2c sigma_minus() {
    Matrix2c m;
    m << 0.0, 1.0, 0.0, 0.0;
    return m;
}

/// Drive vector B in rad/ns; the Hamiltonian it generates is hbar B.sigma / 2.
struct FieldVector {
    double bx{0.0};
    double by{0.0};
    double bz{0.0};

    double norm() const { return std::sqrt(bx * bx + by * by + bz * bz); }
    bool is_finite() const { return std::isfinite(bx) && std::isfinite(by) && std::isfinite(bz); }

    friend FieldVector operator+(const FieldVector& a, const FieldVector& b) {
        return {a.bx + b.bx, a.by + b.by, a.bz + b.bz};
    }
    friend FieldVector operator-(const FieldVector& a, const FieldVector& b) {
        return {a.bx - b.bx, a.by - b.by, a.bz - b.bz};
    }
    friend FieldVector operator*(double s, const FieldVector& a) { return {s * a.bx, s * a.by, s * a.bz}; }
};

inline double dot(const FieldVector& a, const FieldVector& b) { return a.bx * b.bx + a.by * b.by + a.bz * b.bz; }

inline void require_finite(const FieldVector& b) {
    if (!b.is_finite()) throw InvalidFieldError("field has non-finite components");
}

/// Normalized two-component state (c_up, c_down).
///
/// The raw constructor does not renormalize; use `normalized` when building a
/// state from arbitrary amplitudes.
class PureState {
public:
    PureState() : amp_(1.0, 0.0) {}
    explicit PureState(const Vector2c& amplitudes) : amp_(amplitudes) {}

    static PureState normalized(Complex c_up, Complex c_down) {
        Vector2c v(c_up, c_down);
        const double n = v.norm();
        if (!(n > 0.0) || !std::isfinite(n)) throw InputError("cannot normalize a zero or non-finite state");
        return PureState(v / n);
    }
    static PureState up() { return PureState(Vector2c(1.0, 0.0)); }
    static PureState down() { return PureState(Vector2c(0.0, 1.0)); }

    Complex c_up() const { return amp_(0); }
    Complex c_down() const { return amp_(1); }
    const Vector2c& vec() const { return amp_; }
    double norm() const { return amp_.norm(); }

    PureState times_phase(double alpha) const { return PureState(std::polar(1.0, alpha) * amp_); }

private:
    Vector2c amp_;
};

/// <a|b>
inline Complex overlap(const PureState& a, const PureState& b) { return a.vec().dot(b.vec()); }

inline double fidelity(const PureState& a, const PureState& b) { return std::norm(overlap(a, b)); }

class DensityMatrix {
public:
    DensityMatrix() { rho_ << 1.0, 0.0, 0.0, 0.0; }
    explicit DensityMatrix(const Matrix2c& rho) : rho_(rho) {}

    static DensityMatrix from_pure(const PureState& s) { return DensityMatrix(s.vec() * s.vec().adjoint()); }

    const Matrix2c& matrix() const { return rho_; }
    double trace() const { return rho_.trace().real(); }
    double population_up() const { return rho_(0, 0).real(); }
    double population_down() const { return rho_(1, 1).real(); }

    /// <psi|rho|psi>
    double probability(const PureState& psi) const { return psi.vec().dot(rho_ * psi.vec()).real(); }

    double min_eigenvalue() const {
        const Matrix2c h = 0.5 * (rho_ + rho_.adjoint());
        const double a = h(0, 0).real();
        const double d = h(1, 1).real();
        const double r = std::hypot(0.5 * (a - d), std::abs(h(1, 0)));
        return 0.5 * (a + d) - r;
    }

    bool is_valid(double tol = 1e-12) const {
        return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() <= tol && std::abs(rho_.trace() - 1.0) <= tol &&
               min_eigenvalue() >= -tol;
    }

private:
    Matrix2c rho_;
};

inline Matrix2c hamiltonian_from_field(const FieldVector& b) {
    require_finite(b);
    return 0.5 * (b.bx * pauli_x() + b.by * pauli_y() + b.bz * pauli_z());
}

// Inverse of hamiltonian_from_field for a traceless Hermitian matrix.
inline FieldVector field_from_hamiltonian(const Matrix2c& h) {
    const Complex off = h(1, 0) + std::conj(h(0, 1));
    return {off.real(), off.imag(), (h(0, 0) - h(1, 1)).real()};
}

/// Gauge convention: the largest-magnitude component is real and non-negative;
/// on a tie (|c_up| == |c_down| within 1e-12) the up component is.
inline PureState fix_gauge(const Vector2c& v) {
    const double n = v.norm();
    if (!(n > 0.0)) throw InputError("cannot fix the gauge of a zero vector");
    Vector2c w = v / n;
    const double a = std::abs(w(0));
    const double b = std::abs(w(1));
    const int pivot = (b > a + 1e-12) ? 1 : 0;
    const double m = std::abs(w(pivot));
    if (m > 0.0) w *= std::conj(w(pivot)) / m;
    w(pivot) = Complex(w(pivot).real(), 0.0);
    return PureState(w);
}

enum class Branch { plus, minus };

struct SpectralDecomposition {
    double e_plus{0.0};
    double e_minus{0.0};
    PureState psi_plus;
    PureState psi_minus;

    double energy(Branch k) const { return k == Branch::plus ? e_plus : e_minus; }
    const PureState& state(Branch k) const { return k == Branch::plus ? psi_plus : psi_minus; }
};

inline constexpr double kDegeneracyThreshold = 1e-12;

/// Eigenpairs of a traceless Hermitian 2x2 matrix, ordered e_plus >= e_minus.
inline SpectralDecomposition spectral_decompose(const Matrix2c& h) {
    if (!h.allFinite()) throw InputError("matrix has non-finite entries");
    if (std::abs(h(0, 1) - std::conj(h(1, 0))) > 1e-10 || std::abs(h(0, 0).imag()) > 1e-10 ||
        std::abs(h(1, 1).imag()) > 1e-10)
        throw InputError("matrix is not Hermitian");
    if (std::abs(h.trace()) > 1e-10) throw InputError("matrix is not traceless");

    const FieldVector b = field_from_hamiltonian(h);
    const double bn = std::hypot(b.bx, b.by, b.bz);
    if (bn < kDegeneracyThreshold) throw DegeneracyError("degenerate spectrum: |E+ - E-| below 1e-12");

    const double ux = b.bx / bn;
    const double uy = b.by / bn;
    const double uz = b.bz / bn;
    Vector2c vp;
    if (uz >= 0.0)
        vp = Vector2c(1.0 + uz, Complex(ux, uy));
    else
        vp = Vector2c(Complex(ux, -uy), 1.0 - uz);
    const Vector2c vm(-std::conj(vp(1)), std::conj(vp(0)));

    return {0.5 * bn, -0.5 * bn, fix_gauge(vp), fix_gauge(vm)};
}

/// U = exp(-i B.sigma dt / 2) as a matrix.
inline Matrix2c su2_propagator(const FieldVector& b, double dt) {
    require_finite(b);
    const double bn = b.norm();
    if (bn == 0.0) return identity2();
    const double half = 0.5 * bn * dt;
    const double c = std::cos(half);
    const double s = std::sin(half);
    const double ux = b.bx / bn;
    const double uy = b.by / bn;
    const double uz = b.bz / bn;
    Matrix2c u;
    u << Complex(c, -s * uz), Complex(-s * uy, -s * ux), Complex(s * uy, -s * ux), Complex(c, s * uz);
    return u;
}

/// Exact evolution of `s` over `dt` ns under a constant field.
inline PureState su2_step(const FieldVector& b, double dt, const PureState& s) {
    if (!(dt > 0.0)) throw InputError("su2_step requires dt > 0");
    return PureState(su2_propagator(b, dt) * s.vec());
}

}  // namespace sta
