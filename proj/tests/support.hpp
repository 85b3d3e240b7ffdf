#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ptspec/linalg.hpp"
#include "ptspec/system_model.hpp"

namespace ptspec::testing {

inline std::mt19937_64& rng() {
    static std::mt19937_64 engine(20240611);
    return engine;
}

inline cplx random_complex() {
    std::normal_distribution<double> n(0.0, 1.0);
    return {n(rng()), n(rng())};
}

inline CMatrix random_matrix(Eigen::Index rows, Eigen::Index cols) {
    CMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = random_complex();
    return m;
}

inline Matrix3 random_hermitian() {
    const CMatrix a = random_matrix(3, 3);
    return Matrix3(0.5 * (a + a.adjoint()));
}

inline Matrix3 random_density_matrix() {
    const CMatrix a = random_matrix(3, 3);
    CMatrix rho = a * a.adjoint();
    rho /= rho.trace();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return Matrix3(rho);
}

inline ComplexTensor random_tensor(std::vector<std::size_t> shape) {
    ComplexTensor t(std::move(shape));
    for (auto& x : t.data()) x = random_complex();
    return t;
}

inline double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

namespace detail {
template <class F>
double simpson_step(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                    double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double diff = left + right - whole;
    if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson quadrature; a test-side oracle independent of the library's quadrature.
template <class F>
double simpson(const F& f, double a, double b, double tol = 1e-12, int max_depth = 24) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// simpson summed over the consecutive intervals of `points`.
template <class F>
double simpson_pieces(const F& f, std::vector<double> points, double tol = 1e-12) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) s += simpson(f, points[i], points[i + 1], tol);
    return s;
}

}  // namespace ptspec::testing
