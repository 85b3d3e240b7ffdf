#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ptspec {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RowMajorCMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense complex tensor stored in row-major order (last leg fastest).
class ComplexTensor {
public:
    ComplexTensor() = default;
    explicit ComplexTensor(std::vector<std::size_t> shape);
    ComplexTensor(std::vector<std::size_t> shape, std::vector<cplx> data);

    /// Rank-2 tensor holding the entries of `m`.
    static ComplexTensor from_matrix(const CMatrix& m);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t dim(std::size_t leg) const { return shape_.at(leg); }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<const cplx> data() const noexcept { return data_; }
    std::span<cplx> data() noexcept { return data_; }

    cplx& operator()(std::span<const std::size_t> index);
    const cplx& operator()(std::span<const std::size_t> index) const;
    cplx& operator()(std::initializer_list<std::size_t> index) {
        return (*this)(std::span<const std::size_t>(index.begin(), index.size()));
    }
    const cplx& operator()(std::initializer_list<std::size_t> index) const {
        return (*this)(std::span<const std::size_t>(index.begin(), index.size()));
    }

    ComplexTensor reshape(std::vector<std::size_t> shape) const;
    /// Leg `i` of the result is leg `perm[i]` of this tensor.
    ComplexTensor transpose(std::span<const std::size_t> perm) const;
    ComplexTensor transpose(std::initializer_list<std::size_t> perm) const {
        return transpose(std::span<const std::size_t>(perm.begin(), perm.size()));
    }

    /// Matrix whose rows run over the first `row_legs` legs.
    CMatrix matricize(std::size_t row_legs) const;

    bool operator==(const ComplexTensor&) const = default;

private:
    std::size_t offset(std::span<const std::size_t> index) const;

    std::vector<std::size_t> shape_;
    std::vector<cplx> data_;
};

/// Sum over paired legs. Result legs are the free legs of `a` followed by the free legs of `b`.
ComplexTensor contract(const ComplexTensor& a, std::span<const std::size_t> legs_a,
                       const ComplexTensor& b, std::span<const std::size_t> legs_b);
inline ComplexTensor contract(const ComplexTensor& a, std::initializer_list<std::size_t> legs_a,
                              const ComplexTensor& b, std::initializer_list<std::size_t> legs_b) {
    return contract(a, std::span<const std::size_t>(legs_a.begin(), legs_a.size()), b,
                    std::span<const std::size_t>(legs_b.begin(), legs_b.size()));
}

struct TruncatedSVD {
    CMatrix left;                     // m x r, orthonormal columns
    Eigen::VectorXd singular_values;  // r values, non-increasing
    CMatrix right;                    // n x r, orthonormal columns; m ~ left * diag(s) * right^H
    double discarded_weight = 0.0;    // root-sum-square of dropped singular values
    double largest_discarded = 0.0;

    std::size_t rank() const { return static_cast<std::size_t>(singular_values.size()); }
    CMatrix reconstruct() const;
};

/// Keeps singular values strictly above eps_rel * sigma_max, and at least one.
TruncatedSVD svd_truncate(const CMatrix& m, double eps_rel);

/// svd_truncate behind a randomized range finder with `power_iterations` subspace iterations, for
/// matrices whose retained rank is far below min(rows, cols). The probe width starts at
/// 1.25 rank_guess + 16 and doubles until at least 8 probe directions fall below the cutoff; falls
/// back to svd_truncate once the probe would cover half the smaller dimension. Deterministic for a
/// given seed.
TruncatedSVD svd_truncate_sketched(const CMatrix& m, double eps_rel, Eigen::Index rank_guess,
                                   std::uint64_t seed, int power_iterations = 2);

CMatrix matrix_exp(const CMatrix& m);

/// Spectral (largest singular value) norm.
double spectral_norm(const CMatrix& m);

}  // namespace ptspec
