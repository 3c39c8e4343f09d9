#include <doctest.h>

#include <array>
#include <cmath>
#include <stdexcept>
#include <cstdlib>

#include "test_util.hpp"
#include "xsec/estimators.hpp"
#include "xsec/oracle.hpp"

using namespace xsec;

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kHexagonArea = 1.299038105676658;  // (3*sqrt(3)/2) * (1/2): side sqrt(1/2)

MCConfig quick_cfg(std::uint64_t samples = 200'000, std::uint64_t seed = 2026) {
    MCConfig cfg;
    cfg.samples = samples;
    cfg.batches = 20;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("MCConfig invariants are enforced") {
    MCConfig bad;
    bad.batches = 1;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    bad.batches = 3;
    bad.samples = 100;  // not divisible
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    bad.samples = 2;
    bad.batches = 4;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("estimate_codim: diagonal section of B_1^2 gives sqrt(2)") {
    const SubspaceSpec s = make_subspace(2, GivenAs::basis_of_H, {{1.0, 1.0}});
    const DilationVector a({1.0, 1.0});
    const VolumeEstimate est = estimate_codim(codim_profile(s), a, quick_cfg(1'000'000));
    CHECK(std::abs(est.value - kSqrt2) <= 3.0 * est.stderr_);
    CHECK(std::abs(est.value - kSqrt2) <= 0.01 * kSqrt2);
    CHECK(est.samples == 1'000'000);
    CHECK(est.method == Method::codim);
}

TEST_CASE("estimate_codim: axis-aligned section is a segment of length 2 a_1") {
    const SubspaceSpec s = make_subspace(2, GivenAs::basis_of_H, {{1.0, 0.0}});
    const DilationVector a({1.5, 0.7});
    const VolumeEstimate est = estimate_codim(codim_profile(s), a, quick_cfg(1'000'000));
    // The integrand here is (a_2^2 Y)^(-1/2): finite mean, infinite variance,
    // so keep the seed fixed and the tolerance loose.
    CHECK(std::abs(est.value - 3.0) <= 0.05);
}

TEST_CASE("estimate_codim: hexagon section of B_1^3") {
    const SubspaceSpec s = make_subspace(3, GivenAs::basis_of_complement, {{1.0, 1.0, 1.0}});
    const DilationVector a({1.0, 1.0, 1.0});
    const VolumeEstimate est = estimate_codim(codim_profile(s), a, quick_cfg(1'000'000));
    CHECK(std::abs(est.value - kHexagonArea) <= 3.0 * est.stderr_);
}

TEST_CASE("estimate_dim: full cross-polytope with the identity basis is exact") {
    const SubspaceSpec s =
        make_subspace(2, GivenAs::basis_of_H, {{1.0, 0.0}, {0.0, 1.0}});
    const DilationVector a({1.3, 0.8});
    const VolumeEstimate est = estimate_dim(dim_profile(s), a, quick_cfg(10'000));
    // Every sample evaluates to prod(a) exactly, so only rounding remains.
    CHECK(std::abs(est.value - 2.0 * 1.3 * 0.8) <= 1e-12 * est.value);
    CHECK(est.stderr_ <= 1e-12 * est.value);
}

TEST_CASE("estimate_dim: basis invariance with shared draws") {
    const SubspaceSpec s1 = make_subspace(2, GivenAs::basis_of_H, {{1.0, 1.0}});
    const SubspaceSpec s2 = make_subspace(2, GivenAs::basis_of_H, {{2.0, 2.0}});
    const DilationVector a({1.0, 1.0});
    const MCConfig cfg = quick_cfg(200'000);
    const VolumeEstimate e1 = estimate_dim(dim_profile(s1), a, cfg);
    const VolumeEstimate e2 = estimate_dim(dim_profile(s2), a, cfg);
    // Identical draws and a scalar basis rescale: the estimates agree to
    // rounding, and both sit near sqrt(2).
    CHECK(std::abs(e1.value - e2.value) <= 1e-12 * e1.value);
    CHECK(std::abs(e1.value - kSqrt2) <= 3.0 * e1.stderr_);
}

TEST_CASE("estimate_dim: hexagon section via a spanning basis") {
    const SubspaceSpec s =
        make_subspace(3, GivenAs::basis_of_H, {{1.0, -1.0, 0.0}, {1.0, 1.0, -2.0}});
    const DilationVector a({1.0, 1.0, 1.0});
    const VolumeEstimate est = estimate_dim(dim_profile(s), a, quick_cfg(1'000'000));
    CHECK(std::abs(est.value - kHexagonArea) <= 3.0 * est.stderr_);
}

TEST_CASE("codim and dim estimators agree on a random subspace") {
    const SubspaceSpec s = make_subspace(4, GivenAs::basis_of_H, testutil::random_rows(41, 0, 2, 4));
    const DilationVector a({0.9, 1.4, 0.6, 1.1});
    const MCConfig cfg = quick_cfg(400'000);
    const VolumeEstimate ec = estimate_codim(codim_profile(s), a, cfg);
    const VolumeEstimate ed = estimate_dim(dim_profile(s), a, cfg);
    const double tol = 3.0 * std::sqrt(ec.stderr_ * ec.stderr_ + ed.stderr_ * ed.stderr_);
    CHECK(std::abs(ec.value - ed.value) <= tol);
}

TEST_CASE("per-sample homogeneity: doubling a rescales exactly") {
    const SubspaceSpec s = make_subspace(4, GivenAs::basis_of_H, testutil::random_rows(43, 1, 2, 4));
    const Vector base{0.8, 1.2, 0.5, 1.9};
    Vector doubled = base;
    for (double& v : doubled) v *= 2.0;
    const MCConfig cfg = quick_cfg(50'000);

    const VolumeEstimate c1 = estimate_codim(codim_profile(s), DilationVector(base), cfg);
    const VolumeEstimate c2 = estimate_codim(codim_profile(s), DilationVector(doubled), cfg);
    CHECK(std::abs(c2.value / c1.value - 4.0) <= 1e-12 * 4.0);  // 2^dim_H, dim_H = 2

    const VolumeEstimate d1 = estimate_dim(dim_profile(s), DilationVector(base), cfg);
    const VolumeEstimate d2 = estimate_dim(dim_profile(s), DilationVector(doubled), cfg);
    CHECK(std::abs(d2.value / d1.value - 4.0) <= 1e-12 * 4.0);
}

TEST_CASE("integrands are exactly permutation equivariant") {
    const int n = 5;
    const SubspaceSpec s = make_subspace(n, GivenAs::basis_of_H, testutil::random_rows(47, 2, 2, n));
    Substream stream(55, 0, 0, Substream::kDomainTestData);
    Vector a(n), y(n);
    for (auto& v : a) v = stream.uniform(0.5, 2.0);
    for (auto& v : y) v = -std::log(stream.u01());

    const std::array<int, 5> perm{3, 0, 4, 1, 2};
    for (const ProfileMode mode : {ProfileMode::codim, ProfileMode::dim}) {
        const ColumnProfile p = mode == ProfileMode::codim ? codim_profile(s) : dim_profile(s);
        ColumnProfile pp = p;
        Vector ap(n), yp(n);
        for (int i = 0; i < n; ++i) {
            const auto j = static_cast<size_t>(perm[static_cast<size_t>(i)]);
            pp.columns[static_cast<size_t>(i)] = p.columns[j];
            ap[static_cast<size_t>(i)] = a[j];
            yp[static_cast<size_t>(i)] = y[j];
        }
        const auto f = mode == ProfileMode::codim ? codim_integrand : dim_integrand;
        const Integrand g1 = f(p, a, y);
        const Integrand g2 = f(pp, ap, yp);
        CHECK(g1.value == g2.value);  // bitwise, thanks to canonical term order
        CHECK(g1.singular == g2.singular);
    }
}

TEST_CASE("per-sample values are non-decreasing in each a_i") {
    // codim: the prod(a) prefactor dominates the determinant decrease;
    // dim: shrinking weights shrink the determinant. Both checked on the
    // full per-sample product form with shared draws.
    const int n = 5;
    const SubspaceSpec s = make_subspace(n, GivenAs::basis_of_H, testutil::random_rows(63, 0, 2, n));
    const ColumnProfile pc = codim_profile(s);
    const ColumnProfile pd = dim_profile(s);
    Substream stream(65, 0, 0, Substream::kDomainTestData);
    for (int trial = 0; trial < 50; ++trial) {
        Vector a(n), y(n);
        for (auto& v : a) v = stream.uniform(0.4, 2.5);
        for (auto& v : y) v = -std::log(stream.u01());
        const double prod_a = a[0] * a[1] * a[2] * a[3] * a[4];
        const double base_c = prod_a * codim_integrand(pc, a, y).value;
        const double base_d = dim_integrand(pd, a, y).value;
        for (int i = 0; i < n; ++i) {
            Vector bumped = a;
            bumped[static_cast<size_t>(i)] *= 1.25;
            const double prod_b = prod_a * 1.25;
            const double up_c = prod_b * codim_integrand(pc, bumped, y).value;
            const double up_d = dim_integrand(pd, bumped, y).value;
            CHECK(up_c >= base_c * (1.0 - 1e-16));
            CHECK(up_d >= base_d * (1.0 - 1e-16));
        }
    }
}

TEST_CASE("heavy-tail warning trips when few samples carry the mass") {
    const SubspaceSpec s = make_subspace(2, GivenAs::basis_of_H, {{1.0, 0.0}});
    const ColumnProfile p = codim_profile(s);
    const DilationVector a({1.0, 1.0});
    MCConfig cfg;
    cfg.samples = 2000;
    cfg.batches = 10;
    cfg.seed = 37;  // draws an extreme (a^2 Y)^(-1/2) outlier
    CHECK(estimate_codim(p, a, cfg).tail_warning);

    // A light-tailed case stays quiet.
    const SubspaceSpec hex = make_subspace(3, GivenAs::basis_of_complement, {{1.0, 1.0, 1.0}});
    CHECK(!estimate_codim(codim_profile(hex), DilationVector({1, 1, 1}), quick_cfg(50'000))
               .tail_warning);
}

TEST_CASE("singular samples are counted, not crashed") {
    // Healthy column Gram, but a huge dilation spread drives virtually every
    // per-sample matrix below the pivot tolerance in one direction.
    ColumnProfile p;
    p.mode = ProfileMode::dim;
    p.k = 2;
    p.n = 2;
    p.columns = {{1.0, 0.0}, {0.0, 1.0}};
    const DilationVector a({1e9, 1.0});
    const VolumeEstimate est = estimate_dim(p, a, quick_cfg(2'000));
    CHECK(est.singular_samples > 1'800);
    CHECK(est.value >= 0.0);
}

TEST_CASE("results do not depend on the worker count") {
    const SubspaceSpec s = make_subspace(3, GivenAs::basis_of_complement, {{1.0, 1.0, 1.0}});
    const DilationVector a({1.0, 2.0, 0.5});
    const MCConfig cfg = quick_cfg(100'000);
    setenv("XSEC_THREADS", "1", 1);
    const VolumeEstimate one = estimate_codim(codim_profile(s), a, cfg);
    setenv("XSEC_THREADS", "4", 1);
    const VolumeEstimate four = estimate_codim(codim_profile(s), a, cfg);
    unsetenv("XSEC_THREADS");
    CHECK(one.value == four.value);
    CHECK(one.stderr_ == four.stderr_);
}

TEST_CASE("median-of-means stays close to the mean aggregate") {
    const SubspaceSpec s = make_subspace(2, GivenAs::basis_of_H, {{1.0, 1.0}});
    const DilationVector a({1.0, 1.0});
    MCConfig cfg = quick_cfg(200'000);
    const VolumeEstimate mean_est = estimate_codim(codim_profile(s), a, cfg);
    cfg.median_of_means = true;
    const VolumeEstimate med_est = estimate_codim(codim_profile(s), a, cfg);
    CHECK(std::abs(mean_est.value - med_est.value) <= 6.0 * mean_est.stderr_);
}

TEST_CASE("estimate_logvol_path: repeated t gives bit-identical values") {
    const SubspaceSpec s = make_subspace(3, GivenAs::basis_of_H, testutil::random_rows(59, 3, 2, 3));
    const LogDilation t({0.3, -0.2, 0.7});
    const PathEstimate path = estimate_logvol_path(s, {t, t}, ProfileMode::codim, quick_cfg(20'000));
    CHECK(path.logvol[0] == path.logvol[1]);
    CHECK(path.stderr_log[0] == path.stderr_log[1]);
}

TEST_CASE("estimate_logvol_path: all-ones shift adds s * dim_H") {
    const SubspaceSpec s = make_subspace(4, GivenAs::basis_of_H, testutil::random_rows(61, 4, 2, 4));
    const double shift = 0.37;
    const Vector base{0.1, -0.4, 0.2, 0.5};
    Vector shifted = base;
    for (double& v : shifted) v += shift;
    for (const ProfileMode mode : {ProfileMode::codim, ProfileMode::dim}) {
        const PathEstimate path = estimate_logvol_path(
            s, {LogDilation(base), LogDilation(shifted)}, mode, quick_cfg(20'000));
        CHECK(std::abs(path.logvol[1] - path.logvol[0] - shift * s.dim_H) <= 1e-10);
    }
}

TEST_CASE("density identity holds under quadrature") {
    CHECK(density_identity_check(0.0, 2000) <= 1e-8);
    CHECK(density_identity_check(1.0, 2000) <= 1e-6);
    CHECK(density_identity_check(3.0, 2000) <= 1e-6);
    CHECK(density_identity_check(-1.0, 2000) <= 1e-6);  // even in x
    CHECK_THROWS_AS(density_identity_check(0.0, 50), std::invalid_argument);
}
