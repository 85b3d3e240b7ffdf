#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "ptspec/dynamics.hpp"
#include "ptspec/errors.hpp"
#include "ptspec/process_tensor.hpp"
#include "support.hpp"

using namespace ptspec;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / "ptspec_test_process_tensor";
    fs::create_directories(dir);
    return dir;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Explicit path sum of the discretized influence functional: every sequence of mid-step
// Liouville indices j_0 .. j_{n-1} weighted by prod I_0(j_m, j_m) prod_{0<k<=K} I_k(j_m, j_{m-k}),
// read out with the row vector `observe` after the last step.
cplx path_sum(const EtaCoefficients& eta, std::size_t n, const SuperOperator& half, const Matrix3& rho0,
              const LiouvilleVector& observe) {
    const std::size_t K = eta.max_distance();
    std::vector<std::size_t> path(n);
    cplx total = 0.0;
    auto recurse = [&](auto&& self, std::size_t m, const LiouvilleVector& v, cplx weight) -> void {
        if (m == n) {
            total += weight * observe.dot(v);
            return;
        }
        const LiouvilleVector pre = half * v;
        for (std::size_t j = 0; j < 9; ++j) {
            path[m] = j;
            cplx w = weight * influence_function(eta, 0, j, j);
            for (std::size_t k = 1; k <= std::min(K, m); ++k) w *= influence_function(eta, k, j, path[m - k]);
            LiouvilleVector picked = LiouvilleVector::Zero();
            picked(j) = pre(j);
            self(self, m + 1, half * picked, w);
        }
    };
    recurse(recurse, 0, vectorize(rho0), 1.0);
    return total;
}

}  // namespace

TEST_CASE("influence function") {
    EtaCoefficients zero{0.1, std::vector<cplx>(3, cplx(0.0))};
    for (std::size_t j = 0; j < 9; ++j)
        for (std::size_t jp = 0; jp < 9; ++jp) CHECK(influence_function(zero, 2, j, jp) == cplx(1.0));

    EtaCoefficients eta{0.1, {cplx(0.3, -0.2), cplx(0.05, 0.01)}};
    // ground-state diagonal index (0, 0) and the other d = 0 indices are bath-decoupled
    for (std::size_t j : {0u, 4u, 8u})
        for (std::size_t jp = 0; jp < 9; ++jp) CHECK(influence_function(eta, 1, j, jp) == cplx(1.0));

    // j = (1, 2): d = 2, s = 0; jp = (1, 0): d = 1, s = 1
    CHECK(coupling_difference(liouville_index(1, 2)) == 2);
    CHECK(coupling_sum(liouville_index(1, 0)) == 1);
    const cplx expected = std::exp(-2.0 * (0.05 * 1.0 + cplx(0.0, 1.0) * 0.01 * 1.0));
    CHECK(std::abs(influence_function(eta, 1, liouville_index(1, 2), liouville_index(1, 0)) - expected) < 1e-15);
    CHECK_THROWS_AS(influence_function(eta, 2, 0, 0), DomainError);
}

TEST_CASE("bath tensors carry the Kronecker structure") {
    EtaCoefficients eta{0.1, {cplx(0.3, -0.2), cplx(0.05, 0.01)}};
    const ComplexTensor bulk = bath_tensor(eta, 1, BathTensorKind::Bulk);
    const ComplexTensor left = bath_tensor(eta, 1, BathTensorKind::LeftEdge);
    const ComplexTensor top = bath_tensor(eta, 1, BathTensorKind::TopEdge);
    for (std::size_t a = 0; a < 9; ++a)
        for (std::size_t j = 0; j < 9; ++j)
            for (std::size_t ap = 0; ap < 9; ++ap)
                for (std::size_t jp = 0; jp < 9; ++jp) {
                    const cplx f = influence_function(eta, 1, a, j);
                    CHECK(bulk({a, j, ap, jp}) == (a == ap && j == jp ? f : cplx(0.0)));
                }
    for (std::size_t a = 0; a < 9; ++a)
        for (std::size_t j = 0; j < 9; ++j)
            for (std::size_t x = 0; x < 9; ++x) {
                const cplx f = influence_function(eta, 1, a, j);
                CHECK(left({a, j, x}) == (x == j ? f : cplx(0.0)));
                CHECK(top({a, j, x}) == (x == a ? f : cplx(0.0)));
            }
}

TEST_CASE("decoupled bath gives an identity process") {
    const ProcessTensorMPO pt = build_pt_mpo(BathSpec{0.0, 3.04, 13.09}, 0.1, 12, 5, 1e-6);
    CHECK_NOTHROW(pt.validate());
    for (auto d : pt.bond_dims()) CHECK(d == 1);
    for (const auto& s : pt.sites)
        for (std::size_t j = 0; j < 9; ++j)
            for (std::size_t jp = 0; jp < 9; ++jp)
                CHECK(std::abs(s({0, j, 0, jp}) - (j == jp ? cplx(1.0) : cplx(0.0))) < 1e-14);
}

TEST_CASE("single-step chain is valid") {
    const ProcessTensorMPO pt = build_pt_mpo(BathSpec{0.1, 3.04, 13.09}, 0.1, 1, 40, 1e-6);
    CHECK(pt.sites.size() == 1);
    CHECK(pt.bond_dims() == std::vector<std::size_t>{1, 1});
    CHECK_THROWS_AS(build_pt_mpo(BathSpec{0.1, 3.04, 13.09}, 0.1, 0, 40, 1e-6), DomainError);
    CHECK_THROWS_AS(build_pt_mpo(BathSpec{0.1, 3.04, 13.09}, 0.1, 4, 40, 0.0), DomainError);
}

TEST_CASE("PT contraction equals the explicit path sum of the influence functional") {
    const BathSpec b{0.2, 3.04, 5.0};
    const SystemModel s = SystemModel::with_bath(5.0, 2.0, b);
    const double dt = 0.2;
    const SuperOperator half = half_step_propagator(s, dt);
    const Matrix3 rho = ptspec::testing::random_density_matrix();
    for (std::size_t dkmax : {1u, 2u, 4u}) {
        const std::size_t n = 5;
        const ProcessTensorMPO pt = build_pt_mpo(b, dt, n, dkmax, 1e-13);
        const EtaCoefficients eta = eta_coefficients(b, dt, std::min<std::size_t>(dkmax, n - 1));
        // population of |1> after n steps, observed by a trailing projector
        InterventionSchedule sched;
        sched.initial_state = rho;
        Matrix3 proj = Matrix3::Zero();
        proj(1, 1) = 1.0;
        sched.entries.push_back({n, proj, Side::Left});
        const CorrelationSeries series = evolve_with_pt(pt, s, sched);
        REQUIRE(series.values.size() == 1);
        LiouvilleVector pop1 = LiouvilleVector::Zero();
        pop1(liouville_index(1, 1)) = 1.0;
        CHECK(std::abs(series.values[0] - path_sum(eta, n, half, rho, pop1)) < 1e-10);

        const cplx trace = evolve_with_pt(pt, s, InterventionSchedule{{}, rho}).values.back();
        CHECK(std::abs(trace - path_sum(eta, n, half, rho, trace_vector())) < 1e-10);
    }
}

TEST_CASE("trace consistency with identity system propagators") {
    // the trace is exact up to truncation, so the threshold sits well below the tolerance
    const ProcessTensorMPO pt = build_pt_mpo(BathSpec{0.1, 3.04, 13.09}, 0.1, 8, 8, 1e-12);
    const SystemPropagator identity{0.1, SuperOperator::Identity()};
    for (int trial = 0; trial < 3; ++trial) {
        InterventionSchedule sched;
        sched.initial_state = ptspec::testing::random_density_matrix();
        const CorrelationSeries series = evolve_with_pt(pt, identity, sched);
        for (const auto& v : series.values) CHECK(std::abs(v - cplx(1.0)) < 1e-10);
    }
}

TEST_CASE("memory containment: results converge as dkmax grows past the bath memory") {
    // dt = 1 ps puts the 10.4 ps memory inside 11 steps
    const BathSpec b{0.005, 3.04, 13.09};
    const SystemModel s = SystemModel::with_bath(5.0, 2.0, b);
    const std::size_t n = 16;
    Matrix3 excited = Matrix3::Zero();
    excited(1, 1) = 1.0;
    InterventionSchedule observed;
    observed.initial_state = excited;
    observed.entries.push_back({0, excited, Side::Left});
    auto population = [&](std::size_t dkmax) {
        return evolve_with_pt(build_pt_mpo(b, 1.0, n, dkmax, 1e-9), s, observed).values;
    };
    const auto reference = population(15);
    double previous = 1e300;
    for (std::size_t dkmax : {1u, 3u, 12u}) {
        const auto values = population(dkmax);
        double diff = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) diff = std::max(diff, std::abs(values[i] - reference[i]));
        MESSAGE("dkmax " << dkmax << ": " << diff);
        CHECK(diff < previous);
        previous = diff;
        if (dkmax == 12) CHECK(diff <= 1e-6);
    }
}

TEST_CASE("save and load round trip") {
    const BathSpec b{0.1, 3.04, 13.09};
    const ProcessTensorMPO pt = build_pt_mpo(b, 0.1, 8, 8, 1e-6);
    const fs::path dir = scratch_dir();
    save_pt(pt, dir / "a.ptmpo");
    const ProcessTensorMPO loaded = load_pt(dir / "a.ptmpo");
    CHECK(loaded.dt == pt.dt);
    CHECK(loaded.n_steps == pt.n_steps);
    CHECK(loaded.dkmax == pt.dkmax);
    CHECK(loaded.eps_rel == pt.eps_rel);
    CHECK(loaded.bath == pt.bath);
    REQUIRE(loaded.sites.size() == pt.sites.size());
    for (std::size_t m = 0; m < pt.sites.size(); ++m) CHECK(loaded.sites[m] == pt.sites[m]);
    save_pt(loaded, dir / "b.ptmpo");
    CHECK(read_bytes(dir / "a.ptmpo") == read_bytes(dir / "b.ptmpo"));
    CHECK(read_bytes(dir / "a.ptmpo").substr(0, 6) == "PTMPO1");

    const SystemModel s = SystemModel::with_bath(5.0, 2.0, b);
    InterventionSchedule sched;
    sched.entries.push_back({0, dipole_operator(Transition::V2), Side::Left});
    sched.entries.push_back({0, dipole_operator(Transition::V2), Side::Left});
    const auto in_memory = evolve_with_pt(pt, s, sched).values;
    const auto from_file = evolve_with_pt(loaded, s, sched).values;
    for (std::size_t i = 0; i < in_memory.size(); ++i) CHECK(std::abs(in_memory[i] - from_file[i]) <= 1e-14);
}

TEST_CASE("load rejects damaged files") {
    const ProcessTensorMPO pt = build_pt_mpo(BathSpec{0.1, 3.04, 13.09}, 0.1, 6, 6, 1e-6);
    const fs::path dir = scratch_dir();
    save_pt(pt, dir / "good.ptmpo");
    const std::string bytes = read_bytes(dir / "good.ptmpo");

    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream(dir / name, std::ios::binary) << content;
        return dir / name;
    };
    CHECK_THROWS_AS(load_pt(write("magic.ptmpo", "XXXXXX" + bytes.substr(6))), LoadError);
    CHECK_THROWS_AS(load_pt(write("short.ptmpo", bytes.substr(0, bytes.size() - 16))), LoadError);

    // declare a different bond dimension in the header
    std::string tampered = bytes;
    const auto pos = tampered.find("\"bond_dims\":[1,");
    REQUIRE(pos != std::string::npos);
    const auto digit = tampered.find_first_of("0123456789", pos + 15);
    tampered[digit] = tampered[digit] == '9' ? '8' : static_cast<char>(tampered[digit] + 1);
    CHECK_THROWS_AS(load_pt(write("bonds.ptmpo", tampered)), LoadError);

    std::string version = bytes;
    const auto vpos = version.find("\"format_version\":1");
    REQUIRE(vpos != std::string::npos);
    version[vpos + 17] = '7';
    CHECK_THROWS_AS(load_pt(write("version.ptmpo", version)), LoadError);

    CHECK_THROWS_AS(load_pt(dir / "missing.ptmpo"), IoError);
}

TEST_CASE("bond dimension cap raises a resource error with the peak") {
    PtBuildOptions options;
    options.max_bond_dim = 3;
    try {
        build_pt_mpo(BathSpec{0.1, 3.04, 13.09}, 0.1, 10, 10, 1e-8, nullptr, options);
        FAIL("expected a resource error");
    } catch (const ResourceError& e) {
        CHECK(e.peak_bond_dim() > 3);
    }
}

TEST_CASE("short memory cutoff is reported") {
    PtBuildReport report;
    build_pt_mpo(BathSpec{0.1, 3.04, 13.09}, 0.1, 8, 3, 1e-6, &report);
    CHECK(report.warnings.size() == 1);
    CHECK(report.peak_bond_dim >= 1);
}
