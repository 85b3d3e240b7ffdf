#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ptspec/bath.hpp"
#include "ptspec/linalg.hpp"

namespace ptspec {

inline constexpr std::size_t kLiouvilleDim = 9;

/// Coupling-operator eigenvalues of the (ket, bra) pair behind a Liouville index:
/// difference d = o_ket - o_bra and sum s = o_ket + o_bra.
int coupling_difference(std::size_t j);
int coupling_sum(std::size_t j);

/// I_k(j, jp) = exp[-d_j (Re(eta_k) d_jp + i Im(eta_k) s_jp)], j at the later time.
cplx influence_function(const EtaCoefficients& eta, std::size_t k, std::size_t j, std::size_t jp);

enum class BathTensorKind {
    Bulk,           // legs (alpha, j, alpha', j')
    LeftEdge,       // drops alpha': legs (alpha, j, j')
    TopEdge,        // drops j': legs (alpha, j, alpha')
};

/// [b_k]^{alpha, j}_{alpha', j'} = delta(j, j') delta(alpha, alpha') I_k(alpha, j).
ComplexTensor bath_tensor(const EtaCoefficients& eta, std::size_t k, BathTensorKind kind);

/// Process tensor in matrix product operator form. Site m carries the bath influence of
/// time step m and has legs (bond_in, system_in, bond_out, system_out); the outer bonds of the
/// chain have dimension 1.
struct ProcessTensorMPO {
    double dt = 0.0;
    std::size_t n_steps = 0;
    std::size_t dkmax = 0;
    double eps_rel = 0.0;
    std::optional<BathSpec> bath;  // absent for baths given directly as eta coefficients
    std::vector<ComplexTensor> sites;

    /// n_steps + 1 bond dimensions, first and last equal to 1.
    std::vector<std::size_t> bond_dims() const;
    std::size_t max_bond_dim() const;
    void validate() const;

    /// caps[m] closes bond m by tracing out all later steps; caps[n_steps] = [1].
    std::vector<CVector> caps() const;
};

struct PtBuildOptions {
    std::size_t max_bond_dim = 2048;
    /// subspace iterations of the randomized range finder behind each truncation
    int sketch_power_iterations = 1;
    /// called after each time step with (steps done, largest bond so far, seconds elapsed)
    std::function<void(std::size_t, std::size_t, double)> progress;
};

struct PtBuildReport {
    std::size_t peak_bond_dim = 0;
    double wall_seconds = 0.0;
    std::vector<std::string> warnings;
};

ProcessTensorMPO build_pt_mpo(const BathSpec& b, double dt, std::size_t n_steps, std::size_t dkmax,
                              double eps_rel, PtBuildReport* report = nullptr,
                              const PtBuildOptions& options = {});

/// Builds from precomputed coefficients; the memory cap is eta.max_distance().
ProcessTensorMPO build_pt_mpo(const EtaCoefficients& eta, std::size_t n_steps, double eps_rel,
                              PtBuildReport* report = nullptr, const PtBuildOptions& options = {});

void save_pt(const ProcessTensorMPO& pt, const std::filesystem::path& path);
ProcessTensorMPO load_pt(const std::filesystem::path& path);

}  // namespace ptspec
