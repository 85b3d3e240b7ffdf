#include "ptspec/bath.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ptspec/errors.hpp"
#include "ptspec/quadrature.hpp"

namespace ptspec {

namespace {

constexpr double kAbsTol = 1e-9;

// x coth(x), finite at x = 0.
double xcoth(double x) {
    if (std::abs(x) < 1e-4) return 1.0 + x * x / 3.0;
    return x / std::tanh(x);
}

// sin(y) / y
double sinc(double y) {
    if (std::abs(y) < 1e-4) return 1.0 - y * y / 6.0;
    return std::sin(y) / y;
}

// (sin z - z) / z
double sin_minus_id_over_id(double z) {
    if (std::abs(z) < 1e-2) {
        const double z2 = z * z;
        return z2 * (-1.0 / 6.0 + z2 * (1.0 / 120.0 - z2 / 5040.0));
    }
    return (std::sin(z) - z) / z;
}

// x / (1 - exp(-x)) = x (N(x) + 1) in units of T, finite at x = 0.
double bose_weight(double x) {
    if (std::abs(x) < 1e-8) return 1.0 + 0.5 * x;
    return -x / std::expm1(-x);
}

double coth(double x) { return 1.0 / std::tanh(x); }

}  // namespace

void BathSpec::validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValidationError("bath: alpha must be >= 0");
    if (!(omega_c > 0.0) || !std::isfinite(omega_c)) {
        throw ValidationError("bath: omega_c must be > 0");
    }
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw ValidationError("bath: temperature must be > 0");
    }
}

ModeBath sample_modes(const BathSpec& b, std::size_t n_modes, double w_max) {
    if (n_modes == 0 || !(w_max > 0.0)) throw DomainError("sample_modes: need modes and w_max > 0");
    ModeBath out;
    out.temperature = b.temperature;
    const double dw = w_max / static_cast<double>(n_modes);
    for (std::size_t k = 0; k < n_modes; ++k) {
        const double w = (static_cast<double>(k) + 0.5) * dw;
        out.modes.push_back({w, std::sqrt(spectral_density(b, w) * dw)});
    }
    return out;
}

double spectral_density(const BathSpec& b, double w) {
    if (w < 0.0) return 0.0;
    return 2.0 * b.alpha * w * std::exp(-w / b.omega_c);
}

double reorganization_energy(const BathSpec& b) { return 2.0 * b.alpha * b.omega_c; }

double reorganization_energy(const ModeBath& b) {
    double l = 0.0;
    for (const auto& m : b.modes) l += m.coupling * m.coupling / m.omega;
    return l;
}

double bose_occupation(double w, double temperature) { return 1.0 / std::expm1(w / temperature); }

cplx autocorrelation(const BathSpec& b, double tau) {
    if (tau < 0.0) throw DomainError("autocorrelation: tau must be >= 0");
    if (b.alpha == 0.0) return {0.0, 0.0};
    const double T = b.temperature;
    // J(w) coth(w / 2T) = 2 alpha e^{-w/wc} 2T x coth(x), x = w / 2T
    auto re = [&](double w) {
        return 4.0 * b.alpha * T * std::exp(-w / b.omega_c) * xcoth(w / (2.0 * T)) *
               std::cos(w * tau);
    };
    auto im = [&](double w) { return -spectral_density(b, w) * std::sin(w * tau); };
    const double W = b.frequency_cutoff();
    return {quad::integrate(re, 0.0, W, kAbsTol, "autocorrelation").value,
            quad::integrate(im, 0.0, W, kAbsTol, "autocorrelation").value};
}

cplx autocorrelation(const ModeBath& b, double tau) {
    cplx c{0.0, 0.0};
    for (const auto& m : b.modes) {
        const double g2 = m.coupling * m.coupling;
        c += g2 * cplx(coth(m.omega / (2.0 * b.temperature)) * std::cos(m.omega * tau),
                       -std::sin(m.omega * tau));
    }
    return c;
}

double memory_time(const BathSpec& b, double ratio, double horizon) {
    if (b.alpha == 0.0) return 0.0;
    constexpr double step = 0.01;
    std::vector<double> mags;
    for (std::size_t i = 0; static_cast<double>(i) * step <= horizon; ++i) {
        mags.push_back(std::abs(autocorrelation(b, static_cast<double>(i) * step)));
    }
    const double c_max = *std::max_element(mags.begin(), mags.end());
    double last_above = 0.0;
    for (std::size_t i = 0; i < mags.size(); ++i) {
        if (mags[i] > ratio * c_max) last_above = static_cast<double>(i) * step;
    }
    return last_above + step;
}

cplx eta_function(const BathSpec& b, double t) {
    if (t < 0.0) throw DomainError("eta_function: t must be >= 0");
    if (b.alpha == 0.0 || t == 0.0) return {0.0, 0.0};
    const double T = b.temperature;
    const double W = b.frequency_cutoff();
    // (J / w^2) [(1 - cos wt) coth(w/2T) + i (sin wt - wt)]
    auto re = [&](double w) {
        const double s = sinc(0.5 * w * t);
        return 2.0 * b.alpha * std::exp(-w / b.omega_c) * T * t * t * s * s * xcoth(w / (2.0 * T));
    };
    auto im = [&](double w) {
        return 2.0 * b.alpha * std::exp(-w / b.omega_c) * t * sin_minus_id_over_id(w * t);
    };
    return {quad::integrate(re, 0.0, W, kAbsTol, "eta").value,
            quad::integrate(im, 0.0, W, kAbsTol, "eta").value};
}

EtaCoefficients eta_coefficients(const BathSpec& b, double dt, std::size_t max_distance) {
    if (!(dt > 0.0)) throw DomainError("eta_coefficients: dt must be > 0");
    EtaCoefficients out;
    out.dt = dt;
    out.values.assign(max_distance + 1, cplx{0.0, 0.0});
    if (b.alpha == 0.0) return out;

    out.values[0] = eta_function(b, dt);
    const double T = b.temperature;
    const double W = b.frequency_cutoff();
    for (std::size_t k = 1; k <= max_distance; ++k) {
        const double kk = static_cast<double>(k);
        // (J / w^2) 2 (1 - cos w dt) [cos(k w dt) coth(w/2T) - i sin(k w dt)]
        auto re = [&](double w) {
            const double s = sinc(0.5 * w * dt);
            return 4.0 * b.alpha * std::exp(-w / b.omega_c) * T * dt * dt * s * s *
                   xcoth(w / (2.0 * T)) * std::cos(kk * w * dt);
        };
        auto im = [&](double w) {
            const double y = 0.5 * w * dt;
            return -4.0 * b.alpha * std::exp(-w / b.omega_c) * dt * std::sin(y) * sinc(y) *
                   std::sin(kk * w * dt);
        };
        out.values[k] = {quad::integrate(re, 0.0, W, kAbsTol, "eta_k").value,
                         quad::integrate(im, 0.0, W, kAbsTol, "eta_k").value};
    }
    return out;
}

EtaCoefficients eta_coefficients(const ModeBath& b, double dt, std::size_t max_distance) {
    if (!(dt > 0.0)) throw DomainError("eta_coefficients: dt must be > 0");
    EtaCoefficients out;
    out.dt = dt;
    out.values.assign(max_distance + 1, cplx{0.0, 0.0});
    for (const auto& m : b.modes) {
        const double w = m.omega;
        const double pref = m.coupling * m.coupling / (w * w);
        const double ct = coth(w / (2.0 * b.temperature));
        const double one_minus_cos = 2.0 * std::pow(std::sin(0.5 * w * dt), 2);
        out.values[0] += pref * cplx(one_minus_cos * ct, std::sin(w * dt) - w * dt);
        for (std::size_t k = 1; k <= max_distance; ++k) {
            const double kwdt = static_cast<double>(k) * w * dt;
            out.values[k] += pref * 2.0 * one_minus_cos * cplx(std::cos(kwdt) * ct, -std::sin(kwdt));
        }
    }
    return out;
}

double lamb_shift(const BathSpec& b, double nu) {
    if (std::abs(nu) < 1e-10) throw DomainError("lamb_shift: |nu| too small to resolve");
    if (b.alpha == 0.0) return 0.0;
    const double T = b.temperature;
    const double W = b.frequency_cutoff();
    if (std::abs(nu) >= W) throw DomainError("lamb_shift: |nu| beyond the frequency cutoff");
    // h(w) = J(w)(N(w)+1) for w > 0 and J(-w) N(-w) for w < 0
    auto h = [&](double w) {
        return 2.0 * b.alpha * std::exp(-std::abs(w) / b.omega_c) * T * bose_weight(w / T);
    };
    const double h_nu = h(nu);
    auto subtracted = [&](double w) {
        const double d = nu - w;
        if (d == 0.0) return 0.0;
        return (h(w) - h_nu) / d;
    };
    std::vector<double> cuts{-W, 0.0, nu, W};
    std::sort(cuts.begin(), cuts.end());
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        s += quad::integrate(subtracted, cuts[i], cuts[i + 1], kAbsTol, "lamb_shift").value;
    }
    return s + h_nu * std::log((W + nu) / (W - nu));
}

double eigenstate_splitting(const BathSpec& b, double omega_el) {
    if (!(omega_el > 0.0)) throw DomainError("eigenstate_splitting: omega_el must be > 0");
    if (b.alpha == 0.0) return 2.0 * omega_el;
    const double T = b.temperature;
    const double W = b.frequency_cutoff();
    const double nu = 2.0 * omega_el;
    if (nu >= W) throw DomainError("eigenstate_splitting: 2 omega_el beyond the frequency cutoff");
    // J coth / (nu^2 - w^2) = F(w) / (nu - w), F(w) = J coth / (nu + w)
    auto F = [&](double w) {
        return 4.0 * b.alpha * T * std::exp(-w / b.omega_c) * xcoth(w / (2.0 * T)) / (nu + w);
    };
    const double f_nu = F(nu);
    auto subtracted = [&](double w) {
        const double d = nu - w;
        if (d == 0.0) return 0.0;
        return (F(w) - f_nu) / d;
    };
    const double pv = quad::integrate(subtracted, 0.0, nu, kAbsTol, "splitting").value +
                      quad::integrate(subtracted, nu, W, kAbsTol, "splitting").value +
                      f_nu * std::log(nu / (W - nu));
    return nu * (1.0 + 2.0 * pv);
}

WcmeRates wcme_rates(const BathSpec& b, double omega_el) {
    if (!(omega_el > 0.0)) throw DomainError("wcme_rates: omega_el must be > 0");
    const double nu = 2.0 * omega_el;
    const double j = spectral_density(b, nu);
    const double n = bose_occupation(nu, b.temperature);
    return {2.0 * std::numbers::pi * j * (n + 1.0), 2.0 * std::numbers::pi * j * n};
}

cplx phonon_propagator_diff(const BathSpec& b, double t) {
    if (t < 0.0) throw DomainError("phonon_propagator_diff: t must be >= 0");
    if (b.alpha == 0.0 || t == 0.0) return {0.0, 0.0};
    const double T = b.temperature;
    const double W = b.frequency_cutoff();
    // (J / w^2) [(cos wt - 1) coth(w/2T) - i sin wt]
    auto re = [&](double w) {
        const double s = sinc(0.5 * w * t);
        return -2.0 * b.alpha * std::exp(-w / b.omega_c) * T * t * t * s * s * xcoth(w / (2.0 * T));
    };
    auto im = [&](double w) {
        return -2.0 * b.alpha * std::exp(-w / b.omega_c) * t * sinc(w * t);
    };
    // the real-part integrand narrows to width ~ 1/t around w = 0
    const double split = std::min(W, 2.0 * std::numbers::pi / t);
    double r = quad::integrate(re, 0.0, split, kAbsTol, "phonon_propagator").value;
    double i = quad::integrate(im, 0.0, split, kAbsTol, "phonon_propagator").value;
    if (split < W) {
        r += quad::integrate(re, split, W, kAbsTol, "phonon_propagator").value;
        i += quad::integrate(im, split, W, kAbsTol, "phonon_propagator").value;
    }
    return {r, i};
}

PolaronRates polaron_rates(const BathSpec& b, double omega_el) {
    if (!(omega_el >= 0.0)) throw DomainError("polaron_rates: omega_el must be >= 0");
    if (omega_el == 0.0) return {};
    constexpr double kDecayed = 1e-10;
    constexpr double kHorizon = 200.0;
    auto kernel = [&](double t) { return std::exp(4.0 * phonon_propagator_diff(b, t)); };

    cplx total{0.0, 0.0};
    double t0 = 0.0;
    double chunk = 0.1;
    bool converged = false;
    while (t0 < kHorizon) {
        const double t1 = std::min(kHorizon, t0 + chunk);
        total += quad::integrate_complex(kernel, t0, t1, 1e-11, "polaron_rates", 1e-10);
        t0 = t1;
        if (std::abs(kernel(t0)) < kDecayed) {
            converged = true;
            break;
        }
        chunk = std::min(2.0 * chunk, 5.0);
    }
    if (!converged) {
        throw IntegrationError("polaron_rates: displacement correlation not decayed within 200 ps",
                               std::abs(kernel(kHorizon)), kDecayed);
    }
    const double w2 = omega_el * omega_el;
    PolaronRates r;
    r.L1 = w2 * total.real();
    r.L2 = r.L1;
    r.L3 = 2.0 * r.L1;
    r.lamb = w2 * total.imag();
    return r;
}

}  // namespace ptspec
