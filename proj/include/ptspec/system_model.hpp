#pragma once

#include <cstddef>
#include <string_view>

#include "ptspec/bath.hpp"
#include "ptspec/linalg.hpp"

namespace ptspec {

using Matrix3 = Eigen::Matrix3cd;
using SuperOperator = Eigen::Matrix<cplx, 9, 9>;
using LiouvilleVector = Eigen::Matrix<cplx, 9, 1>;

// Liouville space convention: vec(rho)[3 a + b] = rho(a, b), so that
// vec(A rho B) = (A kron B^T) vec(rho).
constexpr std::size_t liouville_index(std::size_t row, std::size_t col) { return 3 * row + col; }

LiouvilleVector vectorize(const Matrix3& rho);
Matrix3 unvectorize(const LiouvilleVector& v);
/// Throws ValidationError unless rho is Hermitian, positive semidefinite and of unit trace (1e-12).
void validate_density_matrix(const Matrix3& rho);
/// Row vector t with t . vec(rho) = Tr(rho).
LiouvilleVector trace_vector();

/// A kron B for 3x3 operands.
SuperOperator kron(const Matrix3& a, const Matrix3& b);
SuperOperator left_action(const Matrix3& a);   // rho -> a rho
SuperOperator right_action(const Matrix3& b);  // rho -> rho b

/// -i [h, .]; h must be Hermitian to 1e-12.
SuperOperator liouvillian(const Matrix3& h);

/// Three-level electronic system: ground |0>, excited |1>, |2> at eps + lambda, coupled by Omega.
class SystemModel {
public:
    SystemModel(double epsilon, double omega_el, double reorg);
    /// Injects the reorganization energy of the bath into the excited levels.
    static SystemModel with_bath(double epsilon, double omega_el, const BathSpec& bath);

    double epsilon() const noexcept { return epsilon_; }
    double omega_el() const noexcept { return omega_el_; }
    double reorg() const noexcept { return reorg_; }
    static constexpr std::size_t dimension = 3;

    Matrix3 hamiltonian() const;
    /// |1><1| - |2><2|
    static Matrix3 coupling_operator();
    /// Excited eigenstates (|1> -/+ |2>)/sqrt(2) as columns 0 (|->) and 1 (|+>).
    static Eigen::Matrix<cplx, 3, 2> excited_eigenstates();
    /// {0, E_-, E_+}
    Eigen::Vector3d energies() const;

private:
    double epsilon_;
    double omega_el_;
    double reorg_;
};

/// exp(L_S dt / 2)
SuperOperator half_step_propagator(const SystemModel& s, double dt);

enum class Side { Left, Right };
enum class Transition { V1, V2 };

Transition transition_from_string(std::string_view name);
std::string_view to_string(Transition t);
Side side_from_string(std::string_view name);

/// |0><e| + H.c. for the excited state e named by the transition.
Matrix3 dipole_operator(Transition which);
std::size_t excited_level(Transition which);
SuperOperator dipole_superoperator(Transition which, Side side);

}  // namespace ptspec
