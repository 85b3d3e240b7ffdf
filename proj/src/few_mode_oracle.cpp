#include <cmath>
#include <iostream>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "ptspec/dynamics.hpp"
#include "ptspec/errors.hpp"

namespace ptspec {

namespace {

using RMatrix = Eigen::MatrixXd;

RMatrix identity(Eigen::Index n) { return RMatrix::Identity(n, n); }

// Operator `single` on mode `k` of `n_modes`, identity elsewhere.
RMatrix on_mode(const RMatrix& single, std::size_t k, std::size_t n_modes) {
    const Eigen::Index f = single.rows();
    RMatrix out = RMatrix::Identity(1, 1);
    for (std::size_t i = 0; i < n_modes; ++i) {
        const RMatrix factor = i == k ? single : identity(f);
        out = Eigen::kroneckerProduct(out, factor).eval();
    }
    return out;
}

}  // namespace

OracleResult exact_few_mode_oracle(const SystemModel& s, const ModeBath& modes, std::size_t fock_cut,
                                   const InterventionSchedule& sched, double dt,
                                   std::size_t n_steps) {
    const std::size_t n_modes = modes.modes.size();
    if (n_modes > 4 || fock_cut < 2 || fock_cut > 8) {
        throw DomainError("few-mode oracle: needs <= 4 modes and 2 <= fock_cut <= 8");
    }
    if (!(dt > 0.0)) throw DomainError("few-mode oracle: dt must be > 0");
    if (!(modes.temperature > 0.0)) throw DomainError("few-mode oracle: temperature must be > 0");
    sched.validate();
    for (const auto& e : sched.entries) {
        if (e.step > n_steps) throw ScheduleError("few-mode oracle: intervention beyond the grid");
    }

    const auto f = static_cast<Eigen::Index>(fock_cut);
    RMatrix lower = RMatrix::Zero(f, f);
    for (Eigen::Index n = 1; n < f; ++n) lower(n - 1, n) = std::sqrt(static_cast<double>(n));
    const RMatrix number = lower.transpose() * lower;

    Eigen::Index bath_dim = 1;
    for (std::size_t k = 0; k < n_modes; ++k) bath_dim *= f;
    RMatrix h_bath = RMatrix::Zero(bath_dim, bath_dim);
    RMatrix x_bath = RMatrix::Zero(bath_dim, bath_dim);
    RMatrix rho_bath = RMatrix::Identity(1, 1);
    for (std::size_t k = 0; k < n_modes; ++k) {
        const auto& m = modes.modes[k];
        h_bath += m.omega * on_mode(number, k, n_modes);
        x_bath += m.coupling * on_mode(lower + lower.transpose(), k, n_modes);
        RMatrix thermal = RMatrix::Zero(f, f);
        double z = 0.0;
        for (Eigen::Index n = 0; n < f; ++n) z += std::exp(-m.omega * n / modes.temperature);
        for (Eigen::Index n = 0; n < f; ++n) thermal(n, n) = std::exp(-m.omega * n / modes.temperature) / z;
        rho_bath = Eigen::kroneckerProduct(rho_bath, thermal).eval();
    }

    const RMatrix h_sys = s.hamiltonian().real();
    const RMatrix o = SystemModel::coupling_operator().real();
    const RMatrix h = Eigen::kroneckerProduct(h_sys, identity(bath_dim)).eval() +
                      Eigen::kroneckerProduct(identity(3), h_bath).eval() +
                      Eigen::kroneckerProduct(o, x_bath).eval();
    Eigen::SelfAdjointEigenSolver<RMatrix> es(h);
    const Eigen::VectorXcd phases =
        (es.eigenvalues().cast<cplx>() * cplx(0.0, -dt)).array().exp().matrix();
    const CMatrix vecs = es.eigenvectors().cast<cplx>();
    const CMatrix u = vecs * phases.asDiagonal() * vecs.adjoint();
    const CMatrix u_dag = u.adjoint();

    auto lift = [&](const Matrix3& op) -> CMatrix {
        return Eigen::kroneckerProduct(CMatrix(op), CMatrix::Identity(bath_dim, bath_dim)).eval();
    };
    std::vector<CMatrix> ops;
    for (const auto& e : sched.entries) ops.push_back(lift(e.op));

    // Indices of basis states with any mode in its top Fock level.
    std::vector<Eigen::Index> top;
    for (Eigen::Index i = 0; i < 3 * bath_dim; ++i) {
        Eigen::Index rest = i % bath_dim;
        bool edge = false;
        for (std::size_t k = 0; k < n_modes; ++k) {
            edge = edge || rest % f == f - 1;
            rest /= f;
        }
        if (edge) top.push_back(i);
    }
    double worst_leak = 0.0;
    auto track_leak = [&](const CMatrix& rho) {
        const double total = rho.diagonal().cwiseAbs().sum();
        if (total <= 0.0) return;
        double edge = 0.0;
        for (auto i : top) edge += std::abs(rho(i, i));
        worst_leak = std::max(worst_leak, edge / total);
    };

    CMatrix rho = Eigen::kroneckerProduct(CMatrix(sched.initial_state), rho_bath.cast<cplx>()).eval();
    const std::size_t n_early = sched.entries.empty() ? 0 : sched.entries.size() - 1;
    const std::size_t first = sched.trailing_step();
    std::size_t next = 0;
    auto apply_due = [&](std::size_t step) {
        while (next < n_early && sched.entries[next].step == step) {
            rho = sched.entries[next].side == Side::Left ? (ops[next] * rho).eval()
                                                          : (rho * ops[next]).eval();
            ++next;
        }
    };
    OracleResult result;
    auto record = [&](std::size_t step) {
        const cplx value = sched.entries.empty() ? rho.trace() : (ops.back() * rho).trace();
        result.series.times.push_back(static_cast<double>(step) * dt);
        result.series.values.push_back(value);
    };

    track_leak(rho);
    apply_due(0);
    if (first == 0) record(0);
    for (std::size_t m = 0; m < n_steps; ++m) {
        rho = u * rho * u_dag;
        apply_due(m + 1);
        track_leak(rho);
        if (m + 1 >= first) record(m + 1);
    }
    if (worst_leak > 1e-4) {
        std::ostringstream msg;
        msg << "few-mode oracle: top Fock level weight " << worst_leak << " exceeds 1e-4 at fock_cut "
            << fock_cut;
        result.warnings.push_back(msg.str());
        std::cerr << "warning: " << msg.str() << '\n';
    }
    return result;
}

}  // namespace ptspec
