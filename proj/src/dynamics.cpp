#include "ptspec/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "ptspec/errors.hpp"

namespace ptspec {

SuperOperator Intervention::superoperator() const {
    return side == Side::Left ? left_action(op) : right_action(op);
}

Matrix3 InterventionSchedule::ground_state() {
    Matrix3 rho = Matrix3::Zero();
    rho(0, 0) = 1.0;
    return rho;
}

void InterventionSchedule::validate() const {
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].step < entries[i - 1].step) {
            throw ScheduleError("intervention steps must be non-decreasing (entry " +
                                std::to_string(i) + ")");
        }
    }
    validate_density_matrix(initial_state);
}

SystemPropagator SystemPropagator::from_model(const SystemModel& s, double dt) {
    return {dt, half_step_propagator(s, dt)};
}

namespace {

using StateMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, 9, Eigen::RowMajor>;

void check_compatible(const ProcessTensorMPO& pt, const SystemPropagator& k,
                      const InterventionSchedule& sched) {
    if (pt.sites.empty()) throw ValidationError("process tensor has no sites");
    if (std::abs(k.dt - pt.dt) > 1e-12 * std::max(1.0, pt.dt)) {
        throw ValidationError("system propagator dt " + std::to_string(k.dt) +
                              " differs from process tensor dt " + std::to_string(pt.dt));
    }
    sched.validate();
    for (const auto& e : sched.entries) {
        if (e.step > pt.n_steps) {
            throw ScheduleError("intervention at step " + std::to_string(e.step) +
                                " lies beyond the process tensor (" + std::to_string(pt.n_steps) +
                                " steps)");
        }
    }
}

// One pass through the chain. Non-trailing entries act when their grid point is reached;
// from the trailing step on, the trailing operator is applied to a copy and the copy traced.
CorrelationSeries evolve_impl(const ProcessTensorMPO& pt, const SystemPropagator& k,
                              const InterventionSchedule& sched, const std::vector<CVector>& caps) {
    const std::size_t n_early = sched.entries.empty() ? 0 : sched.entries.size() - 1;
    const std::size_t first = sched.trailing_step();
    std::vector<SuperOperator> ops;
    ops.reserve(sched.entries.size());
    for (const auto& e : sched.entries) ops.push_back(e.superoperator());
    const SuperOperator trailing = sched.entries.empty() ? SuperOperator::Identity() : ops.back();
    const Eigen::Matrix<cplx, 9, 9> kt = k.half_step.transpose();
    const LiouvilleVector t = trace_vector();

    StateMatrix state(1, 9);
    state.row(0) = vectorize(sched.initial_state).transpose();
    std::size_t next = 0;
    auto apply_due = [&](std::size_t step) {
        while (next < n_early && sched.entries[next].step == step) {
            state = state * ops[next].transpose();
            ++next;
        }
    };
    CorrelationSeries out;
    auto record = [&](std::size_t step) {
        const StateMatrix closed = state * trailing.transpose();
        const CVector per_bond = closed * t;
        out.times.push_back(static_cast<double>(step) * pt.dt);
        out.values.push_back(per_bond.cwiseProduct(caps[step]).sum());
    };

    apply_due(0);
    if (first == 0) record(0);
    for (std::size_t m = 0; m < pt.n_steps; ++m) {
        state = state * kt;
        const auto& site = pt.sites[m];
        const auto bl = static_cast<Eigen::Index>(site.dim(0));
        const auto br = static_cast<Eigen::Index>(site.dim(2));
        Eigen::Map<const RowMajorCMatrix> a(site.data().data(), bl * 9, br * 9);
        Eigen::Map<const Eigen::Matrix<cplx, 1, Eigen::Dynamic>> flat(state.data(), bl * 9);
        const Eigen::Matrix<cplx, 1, Eigen::Dynamic> moved = flat * a;
        state = Eigen::Map<const StateMatrix>(moved.data(), br, 9);
        state = state * kt;
        apply_due(m + 1);
        if (m + 1 >= first) record(m + 1);
    }
    return out;
}

}  // namespace

CorrelationSeries evolve_with_pt(const ProcessTensorMPO& pt, const SystemPropagator& k,
                                 const InterventionSchedule& sched) {
    check_compatible(pt, k, sched);
    return evolve_impl(pt, k, sched, pt.caps());
}

CorrelationSeries evolve_with_pt(const ProcessTensorMPO& pt, const SystemModel& s,
                                 const InterventionSchedule& sched) {
    return evolve_with_pt(pt, SystemPropagator::from_model(s, pt.dt), sched);
}

SweepResult sweep_intervention(const ProcessTensorMPO& pt, const SystemPropagator& k,
                               const InterventionSchedule& sched, std::span<const std::size_t> which,
                               std::size_t first_step, std::size_t last_step) {
    if (last_step < first_step) throw ScheduleError("sweep: empty step range");
    for (std::size_t w : which) {
        if (w >= sched.entries.size()) throw ScheduleError("sweep: entry index out of range");
    }
    std::vector<InterventionSchedule> rows;
    std::size_t latest_trailing = 0;
    for (std::size_t step = first_step; step <= last_step; ++step) {
        InterventionSchedule moved = sched;
        for (std::size_t w : which) moved.entries[w].step = step;
        check_compatible(pt, k, moved);
        latest_trailing = std::max(latest_trailing, moved.trailing_step());
        rows.push_back(std::move(moved));
    }
    const std::size_t width = pt.n_steps - latest_trailing + 1;
    const auto caps = pt.caps();

    SweepResult result;
    result.values = CMatrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t step = first_step; step <= last_step; ++step) result.steps.push_back(step);

    std::atomic<std::size_t> next_row{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t r = next_row++; r < rows.size(); r = next_row++) {
            try {
                const auto series = evolve_impl(pt, k, rows[r], caps);
                for (std::size_t c = 0; c < width; ++c) {
                    result.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = series.values[c];
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t n_threads =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, rows.size());
    std::vector<std::thread> threads;
    for (std::size_t i = 1; i < n_threads; ++i) threads.emplace_back(worker);
    worker();
    for (auto& th : threads) th.join();
    if (failure) std::rethrow_exception(failure);
    return result;
}

SweepResult sweep_intervention(const ProcessTensorMPO& pt, const SystemModel& s,
                               const InterventionSchedule& sched, std::size_t which,
                               std::size_t first_step, std::size_t last_step) {
    const std::size_t idx[1] = {which};
    return sweep_intervention(pt, SystemPropagator::from_model(s, pt.dt), sched, idx, first_step,
                              last_step);
}

}  // namespace ptspec
