#include "ptspec/master_equations.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ptspec/errors.hpp"

namespace ptspec {

namespace {

Matrix3 projector(const Eigen::Vector3cd& v) { return v * v.adjoint(); }

Eigen::Vector3cd exciton(std::size_t which) {
    return SystemModel::excited_eigenstates().col(static_cast<Eigen::Index>(which));
}

SuperOperator dissipator(const Matrix3& l) {
    const Matrix3 ldl = l.adjoint() * l;
    return kron(l, l.conjugate()) - 0.5 * kron(ldl, Matrix3::Identity()) -
           0.5 * kron(Matrix3::Identity(), ldl.transpose());
}

constexpr int kCharge[3] = {0, 1, -1};

struct Component {
    int charge = 0;
    Matrix3 op = Matrix3::Zero();
};

// Splits an operator by the displacement charge o_row - o_col of its matrix elements.
std::vector<Component> split_by_charge(const Matrix3& op) {
    std::map<int, Matrix3> parts;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            if (op(r, c) == cplx(0.0)) continue;
            auto [it, fresh] = parts.try_emplace(kCharge[r] - kCharge[c], Matrix3::Zero());
            it->second(r, c) = op(r, c);
        }
    }
    std::vector<Component> out;
    for (const auto& [q, m] : parts) out.push_back({q, m});
    if (out.empty()) out.push_back({0, Matrix3::Zero()});
    return out;
}

// Plain quantum regression with the given per-entry operators.
std::vector<cplx> regression(const SuperOperator& step_prop, const InterventionSchedule& sched,
                             const std::vector<Matrix3>& ops, std::size_t n_steps) {
    const std::size_t n_early = ops.empty() ? 0 : ops.size() - 1;
    const std::size_t first = sched.trailing_step();
    auto super = [&](std::size_t i) {
        return sched.entries[i].side == Side::Left ? left_action(ops[i]) : right_action(ops[i]);
    };
    const SuperOperator trailing = ops.empty() ? SuperOperator::Identity() : super(ops.size() - 1);
    const LiouvilleVector closing = (trace_vector().transpose() * trailing).transpose();

    LiouvilleVector v = vectorize(sched.initial_state);
    std::size_t next = 0;
    auto apply_due = [&](std::size_t step) {
        while (next < n_early && sched.entries[next].step == step) v = super(next++) * v;
    };
    std::vector<cplx> out;
    apply_due(0);
    if (first == 0) out.push_back(closing.transpose() * v);
    for (std::size_t m = 0; m < n_steps; ++m) {
        v = step_prop * v;
        apply_due(m + 1);
        if (m + 1 >= first) out.push_back(closing.transpose() * v);
    }
    return out;
}

struct BathOp {
    std::size_t step;
    std::size_t index;
    int charge;
    Side side;
};

// <prod_i exp(q_i X(t_i))> for the bath operators in trace order: right-side operators by
// increasing time, then left-side operators by decreasing time.
cplx displacement_correlation(std::vector<BathOp> ops, const PolaronDressing& dressing) {
    std::stable_sort(ops.begin(), ops.end(), [](const BathOp& a, const BathOp& b) {
        if (a.side != b.side) return a.side == Side::Right;
        if (a.side == Side::Right) return std::tie(a.step, a.index) < std::tie(b.step, b.index);
        return std::tie(a.step, a.index) > std::tie(b.step, b.index);
    });
    cplx exponent{0.0, 0.0};
    for (std::size_t i = 0; i < ops.size(); ++i) {
        for (std::size_t j = i + 1; j < ops.size(); ++j) {
            const long dk = static_cast<long>(ops[i].step) - static_cast<long>(ops[j].step);
            exponent -= static_cast<double>(ops[i].charge * ops[j].charge) * dressing.at(dk);
        }
    }
    return std::exp(exponent);
}

}  // namespace

void LindbladModel::validate() const {
    if ((h_eff - h_eff.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
        throw ValidationError("Lindblad model: h_eff is not Hermitian");
    }
    for (const auto& j : jump_ops) {
        if (!(j.rate >= 0.0) || !std::isfinite(j.rate)) {
            throw ValidationError("Lindblad model: rates must be finite and >= 0");
        }
    }
}

SuperOperator LindbladModel::generator() const {
    validate();
    SuperOperator g = liouvillian(h_eff);
    for (const auto& j : jump_ops) g += j.rate * dissipator(j.op);
    if (include_nonsecular) {
        for (const auto& j : jump_ops) {
            const Matrix3 ld = j.op.adjoint();
            g += j.rate * (kron(j.op, j.op.transpose()) + kron(ld, ld.transpose()));
        }
    }
    return g;
}

LindbladModel build_wcme(const SystemModel& s, const BathSpec& b, bool include_nonsecular) {
    const double omega = s.omega_el();
    if (!(omega > 0.0)) throw DomainError("build_wcme: omega_el must be > 0");
    b.validate();
    const Eigen::Vector3d e = s.energies();
    const double shift_minus = lamb_shift(b, -2.0 * omega);
    const double shift_plus = lamb_shift(b, 2.0 * omega);
    const WcmeRates rates = wcme_rates(b, omega);
    const Eigen::Vector3cd minus = exciton(0);
    const Eigen::Vector3cd plus = exciton(1);

    LindbladModel m;
    m.flavor = MeFlavor::WCME;
    m.include_nonsecular = include_nonsecular;
    m.h_eff = (e(1) + shift_minus) * projector(minus) + (e(2) + shift_plus) * projector(plus);
    m.jump_ops.push_back({minus * plus.adjoint(), rates.gamma1});
    m.jump_ops.push_back({plus * minus.adjoint(), rates.gamma2});
    return m;
}

LindbladModel build_pme(const SystemModel& s, const BathSpec& b) {
    b.validate();
    const PolaronRates r = polaron_rates(b, s.omega_el());
    const Eigen::Vector3cd minus = exciton(0);
    const Eigen::Vector3cd plus = exciton(1);

    LindbladModel m;
    m.flavor = MeFlavor::PME;
    m.dressing_bath = b;
    m.h_eff = (s.epsilon() - r.lamb) * projector(minus) + (s.epsilon() + r.lamb) * projector(plus);
    m.jump_ops.push_back({minus * plus.adjoint(), r.L1});
    m.jump_ops.push_back({plus * minus.adjoint(), r.L2});
    m.jump_ops.push_back({projector(minus) - projector(plus), r.L3});
    return m;
}

SuperOperator lindblad_propagator(const LindbladModel& m, double t) {
    if (!(t >= 0.0)) throw DomainError("lindblad_propagator: t must be >= 0");
    if (t == 0.0) return SuperOperator::Identity();
    return matrix_exp(m.generator() * t);
}

Matrix3 lindblad_propagate(const LindbladModel& m, const Matrix3& rho, double t) {
    validate_density_matrix(rho);
    return unvectorize(lindblad_propagator(m, t) * vectorize(rho));
}

PolaronDressing PolaronDressing::compute(const BathSpec& b, double dt, std::size_t n_steps) {
    if (!(dt > 0.0)) throw DomainError("polaron dressing: dt must be > 0");
    PolaronDressing d;
    d.dt = dt;
    d.dphi.reserve(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k) {
        d.dphi.push_back(phonon_propagator_diff(b, static_cast<double>(k) * dt));
    }
    return d;
}

cplx PolaronDressing::at(long k) const {
    const auto idx = static_cast<std::size_t>(k < 0 ? -k : k);
    if (idx >= dphi.size()) throw DomainError("polaron dressing: time difference beyond table");
    return k < 0 ? std::conj(dphi[idx]) : dphi[idx];
}

CorrelationSeries me_multitime_correlation(const LindbladModel& m, const InterventionSchedule& sched,
                                           double dt, std::size_t n_steps,
                                           const PolaronDressing* dressing) {
    if (!(dt > 0.0)) throw DomainError("me_multitime_correlation: dt must be > 0");
    sched.validate();
    for (const auto& e : sched.entries) {
        if (e.step > n_steps) throw ScheduleError("intervention beyond the final-time grid");
    }
    const SuperOperator step_prop = lindblad_propagator(m, dt);
    const std::size_t first = sched.trailing_step();

    CorrelationSeries out;
    for (std::size_t k = first; k <= n_steps; ++k) out.times.push_back(static_cast<double>(k) * dt);

    const bool dressed = m.flavor == MeFlavor::PME && m.dressing_bath && !sched.entries.empty();
    if (!dressed) {
        std::vector<Matrix3> ops;
        for (const auto& e : sched.entries) ops.push_back(e.op);
        out.values = regression(step_prop, sched, ops, n_steps);
        return out;
    }

    PolaronDressing local;
    if (dressing == nullptr) {
        local = PolaronDressing::compute(*m.dressing_bath, dt, n_steps);
        dressing = &local;
    } else if (std::abs(dressing->dt - dt) > 1e-12 * dt || dressing->dphi.size() < n_steps + 1) {
        throw ValidationError("polaron dressing table does not match the time grid");
    }

    std::vector<std::vector<Component>> parts;
    for (const auto& e : sched.entries) parts.push_back(split_by_charge(e.op));
    out.values.assign(out.times.size(), cplx{0.0, 0.0});
    std::vector<std::size_t> choice(parts.size(), 0);
    const std::size_t P = parts.size();
    while (true) {
        int total = 0;
        std::vector<Matrix3> ops;
        for (std::size_t i = 0; i < P; ++i) {
            total += parts[i][choice[i]].charge;
            ops.push_back(parts[i][choice[i]].op);
        }
        // Pathways with net displacement vanish: the thermal mean displacement is zero.
        if (total == 0) {
            const auto sys = regression(step_prop, sched, ops, n_steps);
            std::vector<BathOp> bath_ops;
            for (std::size_t i = 0; i + 1 < P; ++i) {
                const int q = parts[i][choice[i]].charge;
                if (q != 0) bath_ops.push_back({sched.entries[i].step, i, q, sched.entries[i].side});
            }
            const int q_last = parts[P - 1][choice[P - 1]].charge;
            for (std::size_t c = 0; c < sys.size(); ++c) {
                auto with_last = bath_ops;
                if (q_last != 0) with_last.push_back({first + c, P - 1, q_last, sched.entries[P - 1].side});
                out.values[c] += sys[c] * displacement_correlation(std::move(with_last), *dressing);
            }
        }
        std::size_t i = 0;
        while (i < P && ++choice[i] == parts[i].size()) choice[i++] = 0;
        if (i == P) break;
    }
    return out;
}

}  // namespace ptspec
