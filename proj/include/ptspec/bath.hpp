#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ptspec/linalg.hpp"

namespace ptspec {

/// Ohmic bath with exponential cutoff, J(w) = 2 alpha w exp(-w / omega_c).
/// Units: hbar = k_B = 1, frequencies and temperature in ps^-1.
struct BathSpec {
    double alpha = 0.0;
    double omega_c = 3.04;
    double temperature = 13.09;

    void validate() const;
    /// Upper limit used for every frequency integral.
    double frequency_cutoff() const { return 40.0 * omega_c; }
    bool operator==(const BathSpec&) const = default;
};

/// One harmonic mode of a discrete bath, coupled as g (b + b^dagger).
struct DiscreteMode {
    double omega = 1.0;
    double coupling = 0.0;
};

struct ModeBath {
    std::vector<DiscreteMode> modes;
    double temperature = 1.0;
};

/// Samples `n_modes` modes from J on equal-width bins of [0, w_max]; g_k^2 = J(w_k) dw.
ModeBath sample_modes(const BathSpec& b, std::size_t n_modes, double w_max);

double spectral_density(const BathSpec& b, double w);
double reorganization_energy(const BathSpec& b);
double reorganization_energy(const ModeBath& b);
double bose_occupation(double w, double temperature);

/// C(tau) = int_0^inf dw J(w) [cos(w tau) coth(w / 2T) - i sin(w tau)].
cplx autocorrelation(const BathSpec& b, double tau);
cplx autocorrelation(const ModeBath& b, double tau);

/// Smallest tau beyond which |C| stays below ratio * max|C| on a 0.01 ps scan up to `horizon`.
double memory_time(const BathSpec& b, double ratio = 1e-3, double horizon = 30.0);

/// Discretised influence-functional coefficients eta_0 ... eta_K for time step dt.
struct EtaCoefficients {
    double dt = 0.0;
    std::vector<cplx> values;

    std::size_t max_distance() const { return values.empty() ? 0 : values.size() - 1; }
};

/// eta(t) = int_0^t dt' int_0^t' dt'' C(t'').
cplx eta_function(const BathSpec& b, double t);

/// eta_0 = eta(dt); eta_k = int_{k dt}^{(k+1) dt} dt' int_0^{dt} dt'' C(t' - t'') for k >= 1.
EtaCoefficients eta_coefficients(const BathSpec& b, double dt, std::size_t max_distance);
EtaCoefficients eta_coefficients(const ModeBath& b, double dt, std::size_t max_distance);

/// Principal-value Lamb shift S(nu) of the weak-coupling master equation.
double lamb_shift(const BathSpec& b, double nu);

/// Excited-state splitting including the Lamb shifts, computed from the one-sided integral.
double eigenstate_splitting(const BathSpec& b, double omega_el);

struct WcmeRates {
    double gamma1 = 0.0;  // |+> -> |->
    double gamma2 = 0.0;  // |-> -> |+>
};
WcmeRates wcme_rates(const BathSpec& b, double omega_el);

/// phi(t) - phi(0) for the polaron displacement correlations; phi(0) alone diverges.
cplx phonon_propagator_diff(const BathSpec& b, double t);

struct PolaronRates {
    double L1 = 0.0;
    double L2 = 0.0;
    double L3 = 0.0;
    double lamb = 0.0;
};
PolaronRates polaron_rates(const BathSpec& b, double omega_el);

}  // namespace ptspec
