#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ptspec/bath.hpp"
#include "ptspec/process_tensor.hpp"
#include "ptspec/system_model.hpp"

namespace ptspec {

/// Operator `op` applied from `side` at grid point `step` (time step * dt).
struct Intervention {
    std::size_t step = 0;
    Matrix3 op = Matrix3::Identity();
    Side side = Side::Left;

    SuperOperator superoperator() const;
};

/// Time-ordered interventions. The last entry is the trailing operator: it is applied at every
/// final time from its own step onward, just before the trace.
struct InterventionSchedule {
    std::vector<Intervention> entries;
    Matrix3 initial_state = ground_state();

    static Matrix3 ground_state();
    /// Throws ScheduleError for decreasing steps, ValidationError for an invalid initial state.
    void validate() const;
    std::size_t trailing_step() const { return entries.empty() ? 0 : entries.back().step; }
};

struct CorrelationSeries {
    std::vector<double> times;
    std::vector<cplx> values;
};

/// Half-step system propagator K = exp(L_S dt / 2) together with its dt.
struct SystemPropagator {
    double dt = 0.0;
    SuperOperator half_step = SuperOperator::Identity();

    static SystemPropagator from_model(const SystemModel& s, double dt);
};

/// R(M dt) for every M from the trailing step to pt.n_steps, computed in one pass.
CorrelationSeries evolve_with_pt(const ProcessTensorMPO& pt, const SystemModel& s,
                                 const InterventionSchedule& sched);
CorrelationSeries evolve_with_pt(const ProcessTensorMPO& pt, const SystemPropagator& k,
                                 const InterventionSchedule& sched);

/// Repeats evolve_with_pt while the entries `which` are moved together to each step in
/// [first_step, last_step]. Row r holds the run with the entries at first_step + r; column c is
/// the final time c steps after the trailing entry. Rows run concurrently.
struct SweepResult {
    std::vector<std::size_t> steps;
    CMatrix values;
};
SweepResult sweep_intervention(const ProcessTensorMPO& pt, const SystemPropagator& k,
                               const InterventionSchedule& sched, std::span<const std::size_t> which,
                               std::size_t first_step, std::size_t last_step);
SweepResult sweep_intervention(const ProcessTensorMPO& pt, const SystemModel& s,
                               const InterventionSchedule& sched, std::size_t which,
                               std::size_t first_step, std::size_t last_step);

struct OracleResult {
    CorrelationSeries series;
    std::vector<std::string> warnings;
};

/// Brute-force evolution of system plus discrete modes (each truncated to `fock_cut` levels,
/// initially thermal at modes.temperature) with the exact unitary of the total Hamiltonian
/// H_S + O sum_k g_k (b_k + b_k^dagger) + sum_k w_k b_k^dagger b_k. Same grid conventions as
/// evolve_with_pt.
OracleResult exact_few_mode_oracle(const SystemModel& s, const ModeBath& modes, std::size_t fock_cut,
                                   const InterventionSchedule& sched, double dt,
                                   std::size_t n_steps);

}  // namespace ptspec
