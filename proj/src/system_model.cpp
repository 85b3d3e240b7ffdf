#include "ptspec/system_model.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "ptspec/errors.hpp"

namespace ptspec {

LiouvilleVector vectorize(const Matrix3& rho) {
    LiouvilleVector v;
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b) v(liouville_index(a, b)) = rho(a, b);
    return v;
}

Matrix3 unvectorize(const LiouvilleVector& v) {
    Matrix3 rho;
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b) rho(a, b) = v(liouville_index(a, b));
    return rho;
}

void validate_density_matrix(const Matrix3& rho) {
    if (!rho.allFinite()) throw ValidationError("density matrix has non-finite entries");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
        throw ValidationError("density matrix is not Hermitian");
    }
    if (std::abs(rho.trace() - cplx(1.0)) > 1e-12) throw ValidationError("density matrix trace != 1");
    Eigen::SelfAdjointEigenSolver<Matrix3> es(rho);
    if (es.eigenvalues().minCoeff() < -1e-12) {
        throw ValidationError("density matrix is not positive semidefinite");
    }
}

LiouvilleVector trace_vector() { return vectorize(Matrix3::Identity()); }

SuperOperator kron(const Matrix3& a, const Matrix3& b) {
    SuperOperator k = Eigen::kroneckerProduct(a, b);
    return k;
}

SuperOperator left_action(const Matrix3& a) { return kron(a, Matrix3::Identity()); }

SuperOperator right_action(const Matrix3& b) { return kron(Matrix3::Identity(), b.transpose()); }

SuperOperator liouvillian(const Matrix3& h) {
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
        throw ValidationError("liouvillian: Hamiltonian is not Hermitian");
    }
    const cplx minus_i{0.0, -1.0};
    return minus_i * (left_action(h) - right_action(h));
}

SystemModel::SystemModel(double epsilon, double omega_el, double reorg)
    : epsilon_(epsilon), omega_el_(omega_el), reorg_(reorg) {
    if (!std::isfinite(epsilon) || !std::isfinite(omega_el) || !std::isfinite(reorg)) {
        throw ValidationError("system model: parameters must be finite");
    }
    if (omega_el < 0.0) throw ValidationError("system model: omega_el must be >= 0");
}

SystemModel SystemModel::with_bath(double epsilon, double omega_el, const BathSpec& bath) {
    return SystemModel(epsilon, omega_el, reorganization_energy(bath));
}

Matrix3 SystemModel::hamiltonian() const {
    Matrix3 h = Matrix3::Zero();
    h(1, 1) = h(2, 2) = epsilon_ + reorg_;
    h(1, 2) = h(2, 1) = omega_el_;
    return h;
}

Matrix3 SystemModel::coupling_operator() {
    Matrix3 o = Matrix3::Zero();
    o(1, 1) = 1.0;
    o(2, 2) = -1.0;
    return o;
}

Eigen::Matrix<cplx, 3, 2> SystemModel::excited_eigenstates() {
    const double r = 1.0 / std::sqrt(2.0);
    Eigen::Matrix<cplx, 3, 2> v = Eigen::Matrix<cplx, 3, 2>::Zero();
    v(1, 0) = r;
    v(2, 0) = -r;
    v(1, 1) = r;
    v(2, 1) = r;
    return v;
}

Eigen::Vector3d SystemModel::energies() const {
    const double e = epsilon_ + reorg_;
    return {0.0, e - omega_el_, e + omega_el_};
}

SuperOperator half_step_propagator(const SystemModel& s, double dt) {
    if (!(dt > 0.0)) throw DomainError("half_step_propagator: dt must be > 0");
    const CMatrix l = liouvillian(s.hamiltonian()) * (0.5 * dt);
    return matrix_exp(l);
}

Transition transition_from_string(std::string_view name) {
    if (name == "V2") return Transition::V2;
    if (name == "V1") return Transition::V1;
    throw ConfigError("unknown dipole transition '" + std::string(name) + "'");
}

std::string_view to_string(Transition t) { return t == Transition::V1 ? "V1" : "V2"; }

Side side_from_string(std::string_view name) {
    if (name == "L" || name == "left") return Side::Left;
    if (name == "R" || name == "right") return Side::Right;
    throw ConfigError("unknown operator side '" + std::string(name) + "'");
}

std::size_t excited_level(Transition which) { return which == Transition::V1 ? 1 : 2; }

Matrix3 dipole_operator(Transition which) {
    Matrix3 v = Matrix3::Zero();
    const auto e = excited_level(which);
    v(0, e) = v(e, 0) = 1.0;
    return v;
}

SuperOperator dipole_superoperator(Transition which, Side side) {
    const Matrix3 v = dipole_operator(which);
    return side == Side::Left ? left_action(v) : right_action(v);
}

}  // namespace ptspec
