#include "ptspec/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "ptspec/errors.hpp"

namespace ptspec {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void check_shape(const std::vector<std::size_t>& shape) {
    for (auto d : shape) {
        if (d == 0) throw ShapeError("tensor legs must have positive dimension");
    }
}

}  // namespace

ComplexTensor::ComplexTensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(product(shape_), cplx{0.0, 0.0});
}

ComplexTensor::ComplexTensor(std::vector<std::size_t> shape, std::vector<cplx> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (product(shape_) != data_.size()) {
        throw ShapeError("tensor data size does not match its shape");
    }
}

ComplexTensor ComplexTensor::from_matrix(const CMatrix& m) {
    ComplexTensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    Eigen::Map<RowMajorCMatrix>(t.data_.data(), m.rows(), m.cols()) = m;
    return t;
}

std::size_t ComplexTensor::offset(std::span<const std::size_t> index) const {
    if (index.size() != shape_.size()) throw ShapeError("index rank does not match tensor rank");
    std::size_t off = 0;
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= shape_[i]) throw ShapeError("tensor index out of range");
        off = off * shape_[i] + index[i];
    }
    return off;
}

cplx& ComplexTensor::operator()(std::span<const std::size_t> index) { return data_[offset(index)]; }

const cplx& ComplexTensor::operator()(std::span<const std::size_t> index) const {
    return data_[offset(index)];
}

ComplexTensor ComplexTensor::reshape(std::vector<std::size_t> shape) const {
    return ComplexTensor(std::move(shape), data_);
}

ComplexTensor ComplexTensor::transpose(std::span<const std::size_t> perm) const {
    const std::size_t r = rank();
    if (perm.size() != r) throw ShapeError("permutation rank does not match tensor rank");
    std::vector<bool> seen(r, false);
    for (auto p : perm) {
        if (p >= r || seen[p]) throw ShapeError("invalid leg permutation");
        seen[p] = true;
    }
    std::vector<std::size_t> new_shape(r);
    for (std::size_t i = 0; i < r; ++i) new_shape[i] = shape_[perm[i]];

    // strides of the source, reordered to the destination leg order
    std::vector<std::size_t> src_stride(r, 1);
    for (std::size_t i = r; i-- > 1;) src_stride[i - 1] = src_stride[i] * shape_[i];
    std::vector<std::size_t> stride(r);
    for (std::size_t i = 0; i < r; ++i) stride[i] = src_stride[perm[i]];

    ComplexTensor out(new_shape);
    std::vector<std::size_t> idx(r, 0);
    std::size_t src = 0;
    for (std::size_t n = 0; n < out.data_.size(); ++n) {
        out.data_[n] = data_[src];
        for (std::size_t leg = r; leg-- > 0;) {
            ++idx[leg];
            src += stride[leg];
            if (idx[leg] < new_shape[leg]) break;
            src -= stride[leg] * new_shape[leg];
            idx[leg] = 0;
        }
    }
    return out;
}

CMatrix ComplexTensor::matricize(std::size_t row_legs) const {
    if (row_legs > rank()) throw ShapeError("more row legs than tensor legs");
    std::size_t rows = 1;
    for (std::size_t i = 0; i < row_legs; ++i) rows *= shape_[i];
    const std::size_t cols = data_.size() / rows;
    return Eigen::Map<const RowMajorCMatrix>(data_.data(), rows, cols);
}

ComplexTensor contract(const ComplexTensor& a, std::span<const std::size_t> legs_a,
                       const ComplexTensor& b, std::span<const std::size_t> legs_b) {
    if (legs_a.size() != legs_b.size()) {
        throw ShapeError("contract: different numbers of paired legs");
    }
    for (std::size_t i = 0; i < legs_a.size(); ++i) {
        if (legs_a[i] >= a.rank() || legs_b[i] >= b.rank()) {
            throw ShapeError("contract: leg index out of range");
        }
        if (a.dim(legs_a[i]) != b.dim(legs_b[i])) {
            throw ShapeError("contract: paired legs have different dimensions");
        }
    }
    auto free_legs = [](const ComplexTensor& t, std::span<const std::size_t> paired) {
        std::vector<std::size_t> free;
        for (std::size_t l = 0; l < t.rank(); ++l) {
            if (std::find(paired.begin(), paired.end(), l) == paired.end()) free.push_back(l);
        }
        return free;
    };
    const auto free_a = free_legs(a, legs_a);
    const auto free_b = free_legs(b, legs_b);

    std::vector<std::size_t> perm_a = free_a;
    perm_a.insert(perm_a.end(), legs_a.begin(), legs_a.end());
    std::vector<std::size_t> perm_b(legs_b.begin(), legs_b.end());
    perm_b.insert(perm_b.end(), free_b.begin(), free_b.end());

    const CMatrix ma = a.transpose(perm_a).matricize(free_a.size());
    const CMatrix mb = b.transpose(perm_b).matricize(legs_b.size());
    const CMatrix prod = ma * mb;

    std::vector<std::size_t> shape;
    for (auto l : free_a) shape.push_back(a.dim(l));
    for (auto l : free_b) shape.push_back(b.dim(l));
    if (shape.empty()) shape.push_back(1);  // full contraction yields a scalar
    ComplexTensor out(shape);
    Eigen::Map<RowMajorCMatrix>(out.data().data(), prod.rows(), prod.cols()) = prod;
    return out;
}

CMatrix TruncatedSVD::reconstruct() const {
    return left * singular_values.cast<cplx>().asDiagonal() * right.adjoint();
}

TruncatedSVD svd_truncate(const CMatrix& m, double eps_rel) {
    if (!(eps_rel > 0.0) || eps_rel > 1.0) {
        throw DomainError("svd_truncate: eps_rel must lie in (0, 1]");
    }
    if (m.size() == 0) throw ShapeError("svd_truncate: empty matrix");
    if (!m.allFinite()) throw NumericError("svd_truncate: non-finite matrix entries");

    Eigen::BDCSVD<CMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double cutoff = eps_rel * s(0);
    Eigen::Index keep = 1;
    while (keep < s.size() && s(keep) > cutoff) ++keep;

    TruncatedSVD out;
    out.left = svd.matrixU().leftCols(keep);
    out.singular_values = s.head(keep);
    out.right = svd.matrixV().leftCols(keep);
    const auto dropped = s.tail(s.size() - keep);
    out.discarded_weight = dropped.norm();
    out.largest_discarded = dropped.size() > 0 ? dropped(0) : 0.0;
    return out;
}

namespace {

CMatrix orthonormal_columns(const CMatrix& y) {
    Eigen::HouseholderQR<CMatrix> qr(y);
    return qr.householderQ() * CMatrix::Identity(y.rows(), y.cols());
}

}  // namespace

TruncatedSVD svd_truncate_sketched(const CMatrix& m, double eps_rel, Eigen::Index rank_guess,
                                   std::uint64_t seed, int power_iterations) {
    constexpr Eigen::Index kMargin = 8;
    const Eigen::Index small = std::min(m.rows(), m.cols());
    Eigen::Index width = std::max<Eigen::Index>(rank_guess, 1) * 5 / 4 + 2 * kMargin;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    while (2 * width <= small) {
        if (!m.allFinite()) throw NumericError("svd_truncate: non-finite matrix entries");
        CMatrix omega(m.cols(), width);
        for (Eigen::Index c = 0; c < width; ++c)
            for (Eigen::Index r = 0; r < m.cols(); ++r) omega(r, c) = cplx(normal(rng), normal(rng));
        CMatrix q = orthonormal_columns(m * omega);
        for (int it = 0; it < power_iterations; ++it) {
            q = orthonormal_columns(m * orthonormal_columns(m.adjoint() * q));
        }
        // The projection is wide: B^H = Q2 R gives B = R^H Q2^H, so only R^H needs a dense SVD.
        const CMatrix b = q.adjoint() * m;
        Eigen::HouseholderQR<CMatrix> qr(b.adjoint());
        const CMatrix rh = qr.matrixQR().topRows(width).triangularView<Eigen::Upper>().toDenseMatrix().adjoint();
        TruncatedSVD inner = svd_truncate(rh, eps_rel);
        inner.right = qr.householderQ() * (CMatrix::Identity(b.cols(), width) * inner.right);
        if (static_cast<Eigen::Index>(inner.rank()) + kMargin <= width) {
            inner.left = q * inner.left;
            return inner;
        }
        width *= 2;
    }
    return svd_truncate(m, eps_rel);
}

CMatrix matrix_exp(const CMatrix& m) {
    if (m.rows() != m.cols()) throw ShapeError("matrix_exp: matrix is not square");
    if (!m.allFinite()) throw NumericError("matrix_exp: non-finite matrix entries");
    return m.exp();
}

double spectral_norm(const CMatrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<CMatrix> svd(m);
    return svd.singularValues()(0);
}

}  // namespace ptspec
