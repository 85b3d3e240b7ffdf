#include "ptspec/quadrature.hpp"

#include <cmath>
#include <memory>
#include <string>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "ptspec/errors.hpp"

namespace ptspec::quad {

namespace {

constexpr std::size_t kWorkspaceIntervals = 4000;

struct WorkspaceDeleter {
    void operator()(gsl_integration_workspace* w) const { gsl_integration_workspace_free(w); }
};

double trampoline(double x, void* params) {
    return (*static_cast<const std::function<double(double)>*>(params))(x);
}

// The library reports failure through return codes; the default handler aborts.
void disable_gsl_abort() {
    static const bool once = [] {
        gsl_set_error_handler_off();
        return true;
    }();
    (void)once;
}

}  // namespace

Result integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                 std::string_view what, double rel_tol) {
    disable_gsl_abort();
    if (a == b) return {};
    std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter> ws(
        gsl_integration_workspace_alloc(kWorkspaceIntervals));
    gsl_function fn{&trampoline, const_cast<std::function<double(double)>*>(&f)};
    Result r;
    const int status = gsl_integration_qag(&fn, a, b, abs_tol, rel_tol, kWorkspaceIntervals,
                                           GSL_INTEG_GAUSS31, ws.get(), &r.value, &r.abs_error);
    if (!std::isfinite(r.value)) {
        throw IntegrationError(std::string(what) + ": non-finite integral", r.abs_error, abs_tol);
    }
    // Roundoff-limited results are accepted when they are still within a relaxed bound.
    if (status != GSL_SUCCESS &&
        r.abs_error > std::max(abs_tol, 1e-10 * std::abs(r.value))) {
        throw IntegrationError(std::string(what) + ": " + gsl_strerror(status), r.abs_error,
                               abs_tol);
    }
    return r;
}

cplx integrate_complex(const std::function<cplx(double)>& f, double a, double b, double abs_tol,
                       std::string_view what, double rel_tol) {
    const auto re = integrate([&](double x) { return f(x).real(); }, a, b, abs_tol, what, rel_tol);
    const auto im = integrate([&](double x) { return f(x).imag(); }, a, b, abs_tol, what, rel_tol);
    return {re.value, im.value};
}

Result integrate_cauchy(const std::function<double(double)>& f, double a, double b, double c,
                        double abs_tol, std::string_view what) {
    disable_gsl_abort();
    if (!(a < c && c < b)) throw DomainError(std::string(what) + ": pole outside the interval");
    std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter> ws(
        gsl_integration_workspace_alloc(kWorkspaceIntervals));
    gsl_function fn{&trampoline, const_cast<std::function<double(double)>*>(&f)};
    Result r;
    const int status = gsl_integration_qawc(&fn, a, b, c, abs_tol, 1e-12, kWorkspaceIntervals,
                                            ws.get(), &r.value, &r.abs_error);
    if (status != GSL_SUCCESS && r.abs_error > std::max(abs_tol, 1e-10 * std::abs(r.value))) {
        throw IntegrationError(std::string(what) + ": " + gsl_strerror(status), r.abs_error,
                               abs_tol);
    }
    return r;
}

}  // namespace ptspec::quad
