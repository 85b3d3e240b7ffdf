#pragma once

#include <optional>
#include <vector>

#include "ptspec/bath.hpp"
#include "ptspec/dynamics.hpp"
#include "ptspec/system_model.hpp"

namespace ptspec {

enum class MeFlavor { WCME, PME };

struct JumpOperator {
    Matrix3 op;
    double rate = 0.0;
};

struct LindbladModel {
    Matrix3 h_eff = Matrix3::Zero();
    std::vector<JumpOperator> jump_ops;
    MeFlavor flavor = MeFlavor::WCME;
    bool include_nonsecular = false;
    /// Polaron frame only: bath whose displacement correlations dress optical transitions.
    std::optional<BathSpec> dressing_bath;

    void validate() const;
    /// -i[h_eff, .] + sum_n rate_n D[L_n], plus the non-secular terms when requested.
    SuperOperator generator() const;
};

/// Weak-coupling model in the exciton basis; throws DomainError unless omega_el > 0.
LindbladModel build_wcme(const SystemModel& s, const BathSpec& b, bool include_nonsecular = false);

/// Polaron-frame model with vanishing renormalized coupling. The Lamb shift of the rate integral
/// moves |+> up and |-> down by the same amount.
LindbladModel build_pme(const SystemModel& s, const BathSpec& b);

SuperOperator lindblad_propagator(const LindbladModel& m, double t);
Matrix3 lindblad_propagate(const LindbladModel& m, const Matrix3& rho, double t);

/// phi(k dt) - phi(0) for k = 0 .. n_steps.
struct PolaronDressing {
    double dt = 0.0;
    std::vector<cplx> dphi;

    static PolaronDressing compute(const BathSpec& b, double dt, std::size_t n_steps);
    /// phi(k dt) - phi(0) for either sign of k.
    cplx at(long k) const;
};

/// Quantum-regression multi-time correlation on the grid k dt, k <= n_steps, with the same
/// schedule conventions as evolve_with_pt. Polaron models multiply each charge-resolved pathway
/// by its displacement correlation; `dressing` is computed on demand when absent.
CorrelationSeries me_multitime_correlation(const LindbladModel& m, const InterventionSchedule& sched,
                                           double dt, std::size_t n_steps,
                                           const PolaronDressing* dressing = nullptr);

}  // namespace ptspec
