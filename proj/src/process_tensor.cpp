#include "ptspec/process_tensor.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <iostream>

#include "ptspec/errors.hpp"

namespace ptspec {

namespace {

constexpr std::array<int, 3> kCouplingEigenvalues{0, 1, -1};
// Carried later-time index: the influence depends on it only through d in {-2, ..., 2}.
constexpr std::size_t kCarried = 5;

int carried_difference(std::size_t a) { return static_cast<int>(a) - 2; }

cplx influence_from_difference(const EtaCoefficients& eta, std::size_t k, int d, std::size_t jp) {
    const cplx e = eta.values[k];
    const double re = -d * e.real() * coupling_difference(jp);
    const double im = -d * e.imag() * coupling_sum(jp);
    return std::exp(cplx(re, im));
}

// MPS site of the influence functional: entry j is the (bl x br) matrix A^j.
struct Site {
    std::array<CMatrix, kLiouvilleDim> a;
    Eigen::Index left() const { return a[0].rows(); }
    Eigen::Index right() const { return a[0].cols(); }
};

// (9 bl) x br with row j * bl + l
CMatrix stack_rows(const Site& s) {
    const auto bl = s.left();
    CMatrix m(kLiouvilleDim * bl, s.right());
    for (std::size_t j = 0; j < kLiouvilleDim; ++j) m.middleRows(j * bl, bl) = s.a[j];
    return m;
}

Site unstack_rows(const CMatrix& m) {
    Site s;
    const auto bl = m.rows() / static_cast<Eigen::Index>(kLiouvilleDim);
    for (std::size_t j = 0; j < kLiouvilleDim; ++j) s.a[j] = m.middleRows(j * bl, bl);
    return s;
}

// bl x (9 br) with column j * br + r
CMatrix stack_cols(const Site& s) {
    const auto br = s.right();
    CMatrix m(s.left(), kLiouvilleDim * br);
    for (std::size_t j = 0; j < kLiouvilleDim; ++j) m.middleCols(j * br, br) = s.a[j];
    return m;
}

Site unstack_cols(const CMatrix& m) {
    Site s;
    const auto br = m.cols() / static_cast<Eigen::Index>(kLiouvilleDim);
    for (std::size_t j = 0; j < kLiouvilleDim; ++j) s.a[j] = m.middleCols(j * br, br);
    return s;
}

class InfluenceBuilder {
public:
    InfluenceBuilder(const EtaCoefficients& eta, std::size_t dkmax, double eps_rel,
                     const PtBuildOptions& options)
        : eta_(eta), dkmax_(dkmax), eps_rel_(eps_rel), options_(options) {}

    void add_step();
    std::vector<ComplexTensor> finish();
    std::size_t peak_bond() const { return peak_bond_; }

private:
    void orthogonalize_from(std::size_t first);
    void compress_from(std::size_t first);
    void track_bond(Eigen::Index dim);

    const EtaCoefficients& eta_;
    std::size_t dkmax_;
    double eps_rel_;
    PtBuildOptions options_;
    std::vector<Site> sites_;
    double log_scale_ = 0.0;
    std::size_t peak_bond_ = 1;
};

void InfluenceBuilder::track_bond(Eigen::Index dim) {
    peak_bond_ = std::max(peak_bond_, static_cast<std::size_t>(dim));
    if (peak_bond_ > options_.max_bond_dim) {
        throw ResourceError("process tensor bond dimension " + std::to_string(peak_bond_) +
                                " exceeds the limit " + std::to_string(options_.max_bond_dim),
                            peak_bond_);
    }
}

// Absorbs the column of bath tensors that couples the new time index to its past.
void InfluenceBuilder::add_step() {
    const std::size_t n = sites_.size();
    const std::size_t memory = std::min(n, dkmax_);
    const std::size_t first = n - memory;

    if (memory == 0) {
        Site s;
        for (std::size_t j = 0; j < kLiouvilleDim; ++j) {
            s.a[j] = CMatrix::Constant(1, 1, influence_function(eta_, 0, j, j));
        }
        sites_.push_back(std::move(s));
        orthogonalize_from(n);
        return;
    }

    // New site: left bond carries d of its own index.
    CMatrix fresh = CMatrix::Zero(kCarried, kLiouvilleDim);
    for (std::size_t j = 0; j < kLiouvilleDim; ++j) {
        fresh(coupling_difference(j) + 2, j) = influence_function(eta_, 0, j, j);
    }
    TruncatedSVD svd = svd_truncate(fresh, eps_rel_);
    sites_.push_back(unstack_cols(svd.right.adjoint()));
    CMatrix carry = svd.left * svd.singular_values.cast<cplx>().asDiagonal();

    // Zip the column into the memory window from right to left.
    for (std::size_t k = 1; k <= memory; ++k) {
        const std::size_t i = n - k;
        Site& site = sites_[i];
        const Eigen::Index bl = site.left();
        const Eigen::Index br = site.right();
        const Eigen::Index chi = carry.cols();
        // carry rows are (br, a) with a fastest
        std::array<CMatrix, kCarried> carry_a;
        for (std::size_t a = 0; a < kCarried; ++a) {
            carry_a[a].resize(br, chi);
            for (Eigen::Index r = 0; r < br; ++r) {
                carry_a[a].row(r) = carry.row(r * kCarried + a);
            }
        }
        if (i > first) {
            CMatrix m(bl * kCarried, kLiouvilleDim * chi);
            for (std::size_t j = 0; j < kLiouvilleDim; ++j) {
                for (std::size_t a = 0; a < kCarried; ++a) {
                    const cplx w = influence_from_difference(eta_, k, carried_difference(a), j);
                    const CMatrix g = site.a[j] * carry_a[a];
                    for (Eigen::Index l = 0; l < bl; ++l) {
                        m.block(l * kCarried + a, j * chi, 1, chi) = w * g.row(l);
                    }
                }
            }
            svd = svd_truncate_sketched(m, eps_rel_, bl, (static_cast<std::uint64_t>(n) << 32) | k,
                                         options_.sketch_power_iterations);
            track_bond(svd.rank());
            sites_[i] = unstack_cols(svd.right.adjoint());
            carry = svd.left * svd.singular_values.cast<cplx>().asDiagonal();
        } else {
            Site closed;
            for (std::size_t j = 0; j < kLiouvilleDim; ++j) {
                closed.a[j] = CMatrix::Zero(bl, chi);
                for (std::size_t a = 0; a < kCarried; ++a) {
                    const cplx w = influence_from_difference(eta_, k, carried_difference(a), j);
                    closed.a[j] += w * (site.a[j] * carry_a[a]);
                }
            }
            sites_[i] = std::move(closed);
        }
    }
    orthogonalize_from(first);
    compress_from(first);
    orthogonalize_from(first);
}

// Right-to-left SVD truncation of the bonds inside [first, end); sites before `first` and inside the
// window must be left-orthogonal so that every cut is truncated in canonical form.
void InfluenceBuilder::compress_from(std::size_t first) {
    for (std::size_t i = sites_.size() - 1; i > first; --i) {
        const CMatrix m = stack_cols(sites_[i]);
        TruncatedSVD svd = svd_truncate(m, eps_rel_);
        // gauge: the largest entry of each right singular vector is real positive
        for (Eigen::Index k = 0; k < svd.right.cols(); ++k) {
            Eigen::Index top = 0;
            svd.right.col(k).cwiseAbs().maxCoeff(&top);
            const cplx phase = std::conj(svd.right(top, k)) / std::abs(svd.right(top, k));
            svd.right.col(k) *= phase;
            svd.left.col(k) *= phase;
        }
        sites_[i] = unstack_cols(svd.right.adjoint());
        const CMatrix us = svd.left * svd.singular_values.cast<cplx>().asDiagonal();
        for (auto& a : sites_[i - 1].a) a = a * us;
    }
}

// Left-orthogonalizes sites [first, end) and moves the norm of the chain into log_scale_.
void InfluenceBuilder::orthogonalize_from(std::size_t first) {
    for (std::size_t i = first; i + 1 < sites_.size(); ++i) {
        const CMatrix m = stack_rows(sites_[i]);
        Eigen::HouseholderQR<CMatrix> qr(m);
        const Eigen::Index r = std::min(m.rows(), m.cols());
        CMatrix q = qr.householderQ() * CMatrix::Identity(m.rows(), r);
        CMatrix rr = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
        // gauge: real non-negative diagonal of R
        for (Eigen::Index k = 0; k < r; ++k) {
            const double mag = std::abs(rr(k, k));
            if (mag == 0.0) continue;
            const cplx phase = rr(k, k) / mag;
            q.col(k) *= phase;
            rr.row(k) *= std::conj(phase);
        }
        sites_[i] = unstack_rows(q);
        for (auto& a : sites_[i + 1].a) a = rr * a;
        track_bond(r);
    }
    Site& last = sites_.back();
    double norm2 = 0.0;
    for (const auto& a : last.a) norm2 += a.squaredNorm();
    const double norm = std::sqrt(norm2);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw NumericError("process tensor construction lost its norm");
    }
    for (auto& a : last.a) a /= norm;
    log_scale_ += std::log(norm);
}

std::vector<ComplexTensor> InfluenceBuilder::finish() {
    const double per_site = std::exp(log_scale_ / static_cast<double>(sites_.size()));
    std::vector<ComplexTensor> out;
    out.reserve(sites_.size());
    for (const auto& s : sites_) {
        const auto bl = static_cast<std::size_t>(s.left());
        const auto br = static_cast<std::size_t>(s.right());
        ComplexTensor t({bl, kLiouvilleDim, br, kLiouvilleDim});
        for (std::size_t l = 0; l < bl; ++l)
            for (std::size_t j = 0; j < kLiouvilleDim; ++j)
                for (std::size_t r = 0; r < br; ++r) t({l, j, r, j}) = per_site * s.a[j](l, r);
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

int coupling_difference(std::size_t j) {
    if (j >= kLiouvilleDim) throw DomainError("Liouville index out of range");
    return kCouplingEigenvalues[j / 3] - kCouplingEigenvalues[j % 3];
}

int coupling_sum(std::size_t j) {
    if (j >= kLiouvilleDim) throw DomainError("Liouville index out of range");
    return kCouplingEigenvalues[j / 3] + kCouplingEigenvalues[j % 3];
}

cplx influence_function(const EtaCoefficients& eta, std::size_t k, std::size_t j, std::size_t jp) {
    if (k >= eta.values.size()) throw DomainError("influence_function: k beyond eta range");
    return influence_from_difference(eta, k, coupling_difference(j), jp);
}

ComplexTensor bath_tensor(const EtaCoefficients& eta, std::size_t k, BathTensorKind kind) {
    constexpr std::size_t D = kLiouvilleDim;
    switch (kind) {
        case BathTensorKind::Bulk: {
            ComplexTensor t({D, D, D, D});
            for (std::size_t a = 0; a < D; ++a)
                for (std::size_t j = 0; j < D; ++j) t({a, j, a, j}) = influence_function(eta, k, a, j);
            return t;
        }
        case BathTensorKind::LeftEdge: {
            ComplexTensor t({D, D, D});
            for (std::size_t a = 0; a < D; ++a)
                for (std::size_t j = 0; j < D; ++j) t({a, j, j}) = influence_function(eta, k, a, j);
            return t;
        }
        case BathTensorKind::TopEdge: {
            ComplexTensor t({D, D, D});
            for (std::size_t a = 0; a < D; ++a)
                for (std::size_t j = 0; j < D; ++j) t({a, j, a}) = influence_function(eta, k, a, j);
            return t;
        }
    }
    throw DomainError("bath_tensor: unknown kind");
}

std::vector<std::size_t> ProcessTensorMPO::bond_dims() const {
    std::vector<std::size_t> dims;
    dims.reserve(sites.size() + 1);
    if (sites.empty()) return {1};
    dims.push_back(sites.front().dim(0));
    for (const auto& s : sites) dims.push_back(s.dim(2));
    return dims;
}

std::size_t ProcessTensorMPO::max_bond_dim() const {
    const auto dims = bond_dims();
    return *std::max_element(dims.begin(), dims.end());
}

void ProcessTensorMPO::validate() const {
    if (!(dt > 0.0)) throw ValidationError("process tensor: dt must be > 0");
    if (sites.size() != n_steps || n_steps == 0) {
        throw ValidationError("process tensor: site count does not match n_steps");
    }
    for (std::size_t m = 0; m < sites.size(); ++m) {
        const auto& s = sites[m];
        if (s.rank() != 4 || s.dim(1) != kLiouvilleDim || s.dim(3) != kLiouvilleDim) {
            throw ValidationError("process tensor: site " + std::to_string(m) + " has a bad shape");
        }
        if (m > 0 && sites[m - 1].dim(2) != s.dim(0)) {
            throw ValidationError("process tensor: bond " + std::to_string(m) + " mismatch");
        }
    }
    if (sites.front().dim(0) != 1 || sites.back().dim(2) != 1) {
        throw ValidationError("process tensor: outer bonds must have dimension 1");
    }
}

std::vector<CVector> ProcessTensorMPO::caps() const {
    // Feed the maximally mixed state into each later step and trace its output.
    constexpr std::size_t D = kLiouvilleDim;
    std::vector<CVector> caps(sites.size() + 1);
    caps.back() = CVector::Ones(1);
    for (std::size_t m = sites.size(); m-- > 0;) {
        const auto& s = sites[m];
        const std::size_t bl = s.dim(0);
        const std::size_t br = s.dim(2);
        CVector c = CVector::Zero(static_cast<Eigen::Index>(bl));
        const auto data = s.data();
        for (std::size_t l = 0; l < bl; ++l) {
            for (std::size_t ji = 0; ji < D; ++ji) {
                if (ji / 3 != ji % 3) continue;
                for (std::size_t r = 0; r < br; ++r) {
                    const cplx* row = &data[((l * D + ji) * br + r) * D];
                    cplx acc = 0.0;
                    for (std::size_t jo = 0; jo < D; jo += 4) acc += row[jo];  // diagonal outputs
                    c(l) += acc * caps[m + 1](r) / 3.0;
                }
            }
        }
        caps[m] = std::move(c);
    }
    return caps;
}

ProcessTensorMPO build_pt_mpo(const EtaCoefficients& eta, std::size_t n_steps, double eps_rel,
                              PtBuildReport* report, const PtBuildOptions& options) {
    if (n_steps == 0) throw DomainError("build_pt_mpo: n_steps must be >= 1");
    if (!(eps_rel > 0.0) || eps_rel > 1.0) throw DomainError("build_pt_mpo: eps_rel must be in (0, 1]");
    if (eta.values.empty()) throw DomainError("build_pt_mpo: empty eta coefficients");
    const auto start = std::chrono::steady_clock::now();

    const std::size_t dkmax = eta.max_distance();
    InfluenceBuilder builder(eta, dkmax, eps_rel, options);
    for (std::size_t m = 0; m < n_steps; ++m) {
        builder.add_step();
        if (options.progress) {
            options.progress(m + 1, builder.peak_bond(),
                             std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        }
    }

    ProcessTensorMPO pt;
    pt.dt = eta.dt;
    pt.n_steps = n_steps;
    pt.dkmax = dkmax;
    pt.eps_rel = eps_rel;
    pt.sites = builder.finish();
    if (report) {
        report->peak_bond_dim = std::max(builder.peak_bond(), pt.max_bond_dim());
        report->wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return pt;
}

ProcessTensorMPO build_pt_mpo(const BathSpec& b, double dt, std::size_t n_steps, std::size_t dkmax,
                              double eps_rel, PtBuildReport* report, const PtBuildOptions& options) {
    b.validate();
    if (!(dt > 0.0)) throw DomainError("build_pt_mpo: dt must be > 0");
    if (n_steps == 0) throw DomainError("build_pt_mpo: n_steps must be >= 1");
    const auto start = std::chrono::steady_clock::now();
    const std::size_t memory = std::min(dkmax, n_steps - 1);

    std::vector<std::string> warnings;
    if (memory < n_steps - 1 && b.alpha > 0.0) {
        const double ratio = std::abs(autocorrelation(b, dt * static_cast<double>(dkmax))) /
                             std::abs(autocorrelation(b, 0.0));
        if (ratio > 1e-3) {
            warnings.push_back("memory cutoff dt*dkmax = " + std::to_string(dt * dkmax) +
                               " ps is shorter than the bath memory time (|C| ratio " +
                               std::to_string(ratio) + ")");
            std::cerr << "warning: " << warnings.back() << '\n';
        }
    }

    const EtaCoefficients eta = eta_coefficients(b, dt, memory);
    ProcessTensorMPO pt = build_pt_mpo(eta, n_steps, eps_rel, report, options);
    pt.dkmax = dkmax;
    pt.bath = b;
    if (report) {
        report->wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report->warnings = std::move(warnings);
    }
    return pt;
}

}  // namespace ptspec
