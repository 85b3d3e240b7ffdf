#pragma once

#include <functional>
#include <string_view>

#include "ptspec/linalg.hpp"

namespace ptspec::quad {

struct Result {
    double value = 0.0;
    double abs_error = 0.0;
};

/// Globally adaptive Gauss-Kronrod integration of f over [a, b].
/// Converged when the error estimate is below max(abs_tol, rel_tol * |I|);
/// throws IntegrationError otherwise.
Result integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                 std::string_view what, double rel_tol = 1e-12);

cplx integrate_complex(const std::function<cplx(double)>& f, double a, double b, double abs_tol,
                       std::string_view what, double rel_tol = 1e-12);

/// Principal value of the integral of f(x) / (x - c) over [a, b], a < c < b,
/// using the Cauchy-weight Clenshaw-Curtis rule.
Result integrate_cauchy(const std::function<double(double)>& f, double a, double b, double c,
                        double abs_tol, std::string_view what);

}  // namespace ptspec::quad
