#include <doctest.h>

#include <cmath>
#include <vector>

#include "ptspec/errors.hpp"
#include "ptspec/linalg.hpp"
#include "support.hpp"

using namespace ptspec;
using ptspec::testing::max_abs;
using ptspec::testing::random_matrix;
using ptspec::testing::random_tensor;

namespace {

// Naive contraction: enumerate every index of a and b and accumulate when paired legs agree.
ComplexTensor contract_by_loops(const ComplexTensor& a, const std::vector<std::size_t>& la,
                                const ComplexTensor& b, const std::vector<std::size_t>& lb) {
    auto is_paired = [](const std::vector<std::size_t>& legs, std::size_t l) {
        for (auto x : legs)
            if (x == l) return true;
        return false;
    };
    std::vector<std::size_t> shape;
    for (std::size_t l = 0; l < a.rank(); ++l)
        if (!is_paired(la, l)) shape.push_back(a.dim(l));
    for (std::size_t l = 0; l < b.rank(); ++l)
        if (!is_paired(lb, l)) shape.push_back(b.dim(l));
    const bool scalar = shape.empty();
    if (scalar) shape.push_back(1);
    ComplexTensor out(shape);

    std::vector<std::size_t> ia(a.rank(), 0), ib(b.rank(), 0), io(shape.size(), 0);
    auto advance = [](std::vector<std::size_t>& idx, const std::vector<std::size_t>& dims) {
        for (std::size_t l = idx.size(); l-- > 0;) {
            if (++idx[l] < dims[l]) return true;
            idx[l] = 0;
        }
        return false;
    };
    do {
        std::fill(ib.begin(), ib.end(), 0);
        do {
            bool match = true;
            for (std::size_t p = 0; p < la.size(); ++p) match = match && ia[la[p]] == ib[lb[p]];
            if (!match) continue;
            std::size_t o = 0;
            for (std::size_t l = 0; l < a.rank(); ++l)
                if (!is_paired(la, l)) io[o++] = ia[l];
            for (std::size_t l = 0; l < b.rank(); ++l)
                if (!is_paired(lb, l)) io[o++] = ib[l];
            if (scalar) io[0] = 0;
            out(io) += a(ia) * b(ib);
        } while (advance(ib, b.shape()));
    } while (advance(ia, a.shape()));
    return out;
}

double max_diff(const ComplexTensor& x, const ComplexTensor& y) {
    REQUIRE(x.shape() == y.shape());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, std::abs(x.data()[i] - y.data()[i]));
    return d;
}

// Scaling and squaring around a 30-term Taylor series.
CMatrix taylor_exp(const CMatrix& m) {
    int squarings = 0;
    double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
    while (norm > 0.25) {
        norm /= 2.0;
        ++squarings;
    }
    const CMatrix a = m / std::pow(2.0, squarings);
    CMatrix term = CMatrix::Identity(m.rows(), m.cols());
    CMatrix sum = term;
    for (int k = 1; k <= 30; ++k) {
        term = (term * a / static_cast<double>(k)).eval();
        sum += term;
    }
    for (int s = 0; s < squarings; ++s) sum = (sum * sum).eval();
    return sum;
}

}  // namespace

TEST_CASE("tensor shape and storage invariants") {
    ComplexTensor t({2, 3, 4});
    CHECK(t.size() == 24);
    CHECK_THROWS_AS(ComplexTensor({2, 0}), ShapeError);
    CHECK_THROWS_AS(ComplexTensor({2, 2}, std::vector<cplx>(3)), ShapeError);

    const ComplexTensor r = random_tensor({2, 3, 4, 5});
    CHECK(r.reshape({6, 20}).reshape({2, 3, 4, 5}) == r);
    const ComplexTensor p = r.transpose({2, 0, 3, 1});
    CHECK(p.shape() == std::vector<std::size_t>{4, 2, 5, 3});
    CHECK(p({3, 1, 4, 2}) == r({1, 2, 3, 4}));
    CHECK(p.transpose({1, 3, 0, 2}) == r);
    CHECK_THROWS_AS(r.transpose({0, 0, 1, 2}), ShapeError);
}

TEST_CASE("contract: identity and inner product") {
    const ComplexTensor v = random_tensor({5});
    const ComplexTensor id = ComplexTensor::from_matrix(CMatrix::Identity(5, 5));
    CHECK(max_diff(contract(id, {1}, v, {0}), v) == 0.0);

    const ComplexTensor u = random_tensor({5});
    const ComplexTensor s = contract(u, {0}, v, {0});
    cplx expected = 0.0;
    for (std::size_t i = 0; i < 5; ++i) expected += u({i}) * v({i});
    CHECK(std::abs(s.data()[0] - expected) < 1e-13);
}

TEST_CASE("contract agrees with the nested-loop oracle") {
    const ComplexTensor a = random_tensor({3, 4, 5});
    const ComplexTensor b = random_tensor({5, 2, 3});
    CHECK(max_diff(contract(a, {0, 2}, b, {2, 0}), contract_by_loops(a, {0, 2}, b, {2, 0})) < 1e-12);

    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<std::size_t> rank_d(1, 4), dim_d(1, 5);
        std::vector<std::size_t> sa(rank_d(ptspec::testing::rng()));
        for (auto& d : sa) d = dim_d(ptspec::testing::rng());
        const std::size_t pairs = std::uniform_int_distribution<std::size_t>(0, sa.size())(ptspec::testing::rng());
        std::vector<std::size_t> la, lb, sb;
        for (std::size_t p = 0; p < pairs; ++p) {
            la.push_back(sa.size() - 1 - p);
            sb.push_back(sa[la.back()]);
            lb.push_back(p);
        }
        while (sb.size() < 4 && rank_d(ptspec::testing::rng()) > 2) sb.push_back(dim_d(ptspec::testing::rng()));
        if (sb.empty()) sb.push_back(dim_d(ptspec::testing::rng()));
        const ComplexTensor x = random_tensor(sa);
        const ComplexTensor y = random_tensor(sb);
        CHECK(max_diff(contract(x, la, y, lb), contract_by_loops(x, la, y, lb)) < 1e-12);
    }
}

TEST_CASE("contract is bilinear") {
    const ComplexTensor a1 = random_tensor({3, 4}), a2 = random_tensor({3, 4});
    const ComplexTensor b = random_tensor({4, 2});
    const cplx c{0.3, -1.7};
    ComplexTensor combo = a1;
    for (std::size_t i = 0; i < combo.size(); ++i) combo.data()[i] += c * a2.data()[i];
    ComplexTensor expected = contract(a1, {1}, b, {0});
    const ComplexTensor second = contract(a2, {1}, b, {0});
    for (std::size_t i = 0; i < expected.size(); ++i) expected.data()[i] += c * second.data()[i];
    CHECK(max_diff(contract(combo, {1}, b, {0}), expected) < 1e-12);
}

TEST_CASE("contract rejects mismatched legs") {
    CHECK_THROWS_AS(contract(random_tensor({3}), {0}, random_tensor({4}), {0}), ShapeError);
    CHECK_THROWS_AS(contract(random_tensor({3}), {1}, random_tensor({3}), {0}), ShapeError);
}

TEST_CASE("svd_truncate: spec examples") {
    const TruncatedSVD id = svd_truncate(CMatrix::Identity(4, 4), 1e-6);
    CHECK(id.rank() == 4);
    CHECK((id.singular_values.array() - 1.0).abs().maxCoeff() < 1e-14);
    CHECK(id.discarded_weight == 0.0);

    const CMatrix u = random_matrix(6, 1), v = random_matrix(5, 1);
    const TruncatedSVD r1 = svd_truncate(u * v.adjoint(), 1e-6);
    REQUIRE(r1.rank() == 1);
    CHECK(std::abs(r1.singular_values(0) - u.norm() * v.norm()) < 1e-12);

    CHECK(svd_truncate(CMatrix::Zero(3, 3), 0.5).rank() == 1);
    CHECK_THROWS_AS(svd_truncate(CMatrix::Identity(2, 2), 0.0), DomainError);
    CMatrix bad = CMatrix::Identity(2, 2);
    bad(0, 1) = std::nan("");
    CHECK_THROWS_AS(svd_truncate(bad, 1e-3), NumericError);
}

TEST_CASE("svd_truncate: truncation against a full Jacobi SVD oracle") {
    for (int trial = 0; trial < 10; ++trial) {
        // graded spectrum so that eps_rel = 1e-2 actually drops values
        const CMatrix q1 = Eigen::HouseholderQR<CMatrix>(random_matrix(8, 8)).householderQ();
        const CMatrix q2 = Eigen::HouseholderQR<CMatrix>(random_matrix(8, 8)).householderQ();
        Eigen::VectorXd s(8);
        for (int i = 0; i < 8; ++i) s(i) = std::pow(0.35, i);
        const CMatrix m = q1 * s.cast<cplx>().asDiagonal() * q2.adjoint();

        const Eigen::JacobiSVD<CMatrix> oracle(m);
        const Eigen::VectorXd& ref = oracle.singularValues();
        const TruncatedSVD t = svd_truncate(m, 1e-2);
        Eigen::Index expected_keep = 0;
        while (expected_keep < ref.size() && ref(expected_keep) > 1e-2 * ref(0)) ++expected_keep;
        REQUIRE(static_cast<Eigen::Index>(t.rank()) == expected_keep);
        for (Eigen::Index i = 0; i < expected_keep; ++i) CHECK(std::abs(t.singular_values(i) - ref(i)) < 1e-12);
        CHECK(std::abs(t.discarded_weight - ref.tail(8 - expected_keep).norm()) < 1e-12);
        CHECK(std::abs(t.largest_discarded - ref(expected_keep)) < 1e-12);
        CHECK(spectral_norm(m - t.reconstruct()) <= t.largest_discarded * (1.0 + 1e-10));
        for (Eigen::Index i = 1; i < t.singular_values.size(); ++i)
            CHECK(t.singular_values(i) <= t.singular_values(i - 1));
    }
}

TEST_CASE("svd_truncate with tiny eps_rel reproduces the input") {
    const CMatrix m = random_matrix(7, 11);
    CHECK(max_abs(svd_truncate(m, 1e-300).reconstruct() - m) < 1e-12);
}

TEST_CASE("svd_truncate_sketched matches the dense truncation on low-rank input") {
    const CMatrix a = random_matrix(120, 12), b = random_matrix(12, 200);
    CMatrix m = a * b;
    m += 1e-9 * random_matrix(120, 200);
    const TruncatedSVD dense = svd_truncate(m, 1e-6);
    for (int q : {0, 1, 2}) {
        const TruncatedSVD sk = svd_truncate_sketched(m, 1e-6, 4, 7, q);
        CHECK(sk.rank() == dense.rank());
        CHECK(max_abs(sk.reconstruct() - m) < 1e-6 * dense.singular_values(0));
        const TruncatedSVD again = svd_truncate_sketched(m, 1e-6, 4, 7, q);
        CHECK(again.reconstruct() == sk.reconstruct());
    }
    // too small to sketch: identical to the dense path
    const CMatrix small = random_matrix(10, 12);
    CHECK(svd_truncate_sketched(small, 1e-6, 8, 1).reconstruct() == svd_truncate(small, 1e-6).reconstruct());
}

TEST_CASE("matrix_exp: spec examples") {
    CHECK(max_abs(matrix_exp(CMatrix::Zero(9, 9)) - CMatrix::Identity(9, 9)) == 0.0);

    CVector d(5);
    for (int i = 0; i < 5; ++i) d(i) = ptspec::testing::random_complex();
    const CMatrix e = matrix_exp(d.asDiagonal().toDenseMatrix());
    CMatrix expected = CMatrix::Zero(5, 5);
    for (int i = 0; i < 5; ++i) expected(i, i) = std::exp(d(i));
    CHECK(max_abs(e - expected) < 1e-13);

    const CMatrix a = random_matrix(9, 9);
    const CMatrix h = 0.5 * (a + a.adjoint());
    const CMatrix u = matrix_exp(cplx(0.0, -1.0) * h);
    CHECK(max_abs(u.adjoint() * u - CMatrix::Identity(9, 9)) <= 1e-12);

    CHECK_THROWS_AS(matrix_exp(CMatrix::Zero(2, 3)), ShapeError);
}

TEST_CASE("matrix_exp agrees with a Taylor oracle on 9x9 generators") {
    for (int trial = 0; trial < 5; ++trial) {
        const CMatrix m = 0.5 * random_matrix(9, 9);
        const CMatrix ref = taylor_exp(m);
        CHECK(max_abs(matrix_exp(m) - ref) <= 1e-12 * max_abs(ref));
    }
}

TEST_CASE("matrix_exp of commuting summands factorizes") {
    const CMatrix a = 0.3 * random_matrix(9, 9);
    const CMatrix m1 = a + a * a;
    const CMatrix m2 = 0.5 * a - 0.3 * a * a * a;
    const CMatrix lhs = matrix_exp(m1) * matrix_exp(m2);
    const CMatrix rhs = matrix_exp(m1 + m2);
    CHECK(max_abs(lhs - rhs) <= 1e-10 * max_abs(rhs));
}
