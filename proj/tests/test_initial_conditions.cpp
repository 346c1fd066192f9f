#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "helpers.hpp"
#include "nuvlasov/initial_conditions.hpp"

using namespace nuvlasov;

namespace {

// zero-mean random delta scaled to a fixed rms
std::vector<double> random_delta(const PhaseSpaceGrid& g, std::mt19937_64& rng, double rms) {
    std::vector<double> d(g.spatial_count());
    double mean = 0.0;
    for (auto& v : d) {
        v = uniform(rng, -1.0, 1.0);
        mean += v;
    }
    mean /= static_cast<double>(d.size());
    double ss = 0.0;
    for (auto& v : d) {
        v -= mean;
        ss += v * v;
    }
    const double scale = rms / std::sqrt(ss / static_cast<double>(d.size()));
    for (auto& v : d) v *= scale;
    return d;
}

}  // namespace

TEST_CASE("maxwell state matches the Gaussian formula and is x invariant", "[initcond]") {
    PhaseSpaceGrid g(1, 64, 2.0, 1.0);
    const double sigma = 0.1;
    DistributionState st = maxwell_demo(g, sigma);
    const auto& u = g.u_values();
    // nearest grid value to u = 0
    for (int iu : {31, 32}) {
        const double expect = std::exp(-u[iu] * u[iu] / (2 * sigma * sigma)) / std::sqrt(2 * M_PI * sigma * sigma);
        REQUIRE(st.values[g.flatten({0, iu})].real() == Catch::Approx(expect).epsilon(1e-14));
    }
    for (int ix = 0; ix < 64; ++ix)
        for (int iu = 0; iu < 64; ++iu)
            REQUIRE(st.values[g.flatten({ix, iu})] == st.values[g.flatten({0, iu})]);
    // Gaussian tail at |u| = 0.6 is ~ exp(-18) of the peak
    int iu06 = 0;
    for (int iu = 0; iu < 64; ++iu)
        if (std::fabs(u[iu] - 0.6) < std::fabs(u[iu06] - 0.6)) iu06 = iu;
    const double ratio = st.values[g.flatten({0, iu06})].real() / st.values[g.flatten({0, 32})].real();
    REQUIRE(ratio < 1e-7);
    REQUIRE_THROWS_AS(maxwell_demo(g, 0.0), std::invalid_argument);
}

TEST_CASE("fermi-dirac state evaluates (1+delta) F_FD(||v - v_b||)", "[initcond]") {
    PhaseSpaceGrid g(1, 16, 2.0, 1.0);
    PerturbationField pert = PerturbationField::zero(g);
    FermiDiracParams fd{0.3};
    DistributionState st = fermi_dirac_state(g, fd, pert);
    REQUIRE(fermi_dirac(0.0, 0.3) == 0.5);
    REQUIRE(fermi_dirac(0.3, 0.3) == Catch::Approx(1.0 / (std::exp(1.0) + 1.0)).epsilon(1e-15));
    // isotropy about the bulk velocity: v -> -v symmetry on the mirrored grid
    for (int iu = 0; iu < 16; ++iu)
        REQUIRE(st.values[g.flatten({3, iu})] == st.values[g.flatten({3, 15 - iu})]);
    // x factorization with delta = 0
    for (int ix = 0; ix < 16; ++ix)
        for (int iu = 0; iu < 16; ++iu)
            REQUIRE(st.values[g.flatten({ix, iu})] == st.values[g.flatten({0, iu})]);
}

TEST_CASE("fermi-dirac rejects unphysical density factors", "[initcond]") {
    PhaseSpaceGrid g(1, 4, 2.0, 1.0);
    std::vector<double> delta = {1.5, -1.5 - 0.001, 0.001, -0.001};
    double mean = (delta[0] + delta[1] + delta[2] + delta[3]) / 4.0;
    for (auto& v : delta) v -= mean;
    REQUIRE_THROWS_AS(fermi_dirac_state(g, FermiDiracParams{0.2},
                                        PerturbationField(1, 4, delta, {})),
                      std::domain_error);
}

TEST_CASE("perturbation fields validate zero mean and shape", "[initcond]") {
    PhaseSpaceGrid g(1, 4, 2.0, 1.0);
    REQUIRE_THROWS_AS(PerturbationField(1, 4, {0.1, 0.1, 0.0, 0.0}, {}), std::invalid_argument);
    REQUIRE_THROWS_AS(PerturbationField(1, 4, {0.1, -0.1}, {}), std::invalid_argument);
    PerturbationField ok(1, 4, {0.1, -0.1, 0.05, -0.05}, {0.2, 0.1, 0.0, -0.3});
    REQUIRE(ok.vb(1, 0) == 0.1);
}

TEST_CASE("perturbation container round trips through VQFF1", "[initcond]") {
    PhaseSpaceGrid g(2, 4, 2.0, 1.0);
    auto rng = make_rng(77);
    std::vector<PerturbationField> reals;
    for (int r = 0; r < 2; ++r) {
        std::vector<double> vb(2 * g.spatial_count());
        for (auto& v : vb) v = uniform(rng, -0.2, 0.2);
        reals.emplace_back(2, 4, random_delta(g, rng, 0.05), vb);
    }
    const std::string path =
        (std::filesystem::temp_directory_path() / "nuvlasov_pert.vqff").string();
    write_perturbation(path, g, reals);
    for (int r = 0; r < 2; ++r) {
        PerturbationField back = load_perturbation(path, g, r);
        for (std::uint64_t s = 0; s < g.spatial_count(); ++s) {
            REQUIRE(back.delta(s) == reals[r].delta(s));
            REQUIRE(back.vb(s, 1) == reals[r].vb(s, 1));
        }
    }
    REQUIRE_THROWS_AS(load_perturbation(path, g, 2), std::domain_error);
    std::remove(path.c_str());
}

TEST_CASE("C is 1 for uniform states and 1/N at extreme concentration", "[initcond]") {
    PhaseSpaceGrid g(1, 8, 2.0, 1.0);
    DistributionState uniform_state;
    uniform_state.values.assign(g.total_count(), 0.37);
    REQUIRE(compute_C(uniform_state) == Catch::Approx(1.0).epsilon(1e-14));

    DistributionState spike;
    spike.values.assign(g.total_count(), 0.0);
    spike.values[5] = 2.0;
    REQUIRE(compute_C(spike) == Catch::Approx(1.0 / 64.0).epsilon(1e-14));

    DistributionState zero;
    zero.values.assign(g.total_count(), 0.0);
    REQUIRE_THROWS_AS(compute_C(zero), std::domain_error);
}

TEST_CASE("C of the demo state matches a direct summation oracle", "[initcond]") {
    PhaseSpaceGrid g(1, 64, 2.0, 1.0);
    DistributionState st = maxwell_demo(g, 0.1);
    double sum = 0.0, sum2 = 0.0;
    for (const auto& v : st.values) {
        sum += v.real();
        sum2 += v.real() * v.real();
    }
    const double expect = (sum * sum / static_cast<double>(g.total_count())) / sum2;
    REQUIRE(compute_C(st) == Catch::Approx(expect).epsilon(1e-13));
    REQUIRE(compute_C(st) > 0.0);
    REQUIRE(compute_C(st) <= 1.0);
}

TEST_CASE("C is positive, at most 1, with equality only for uniform f", "[initcond]") {
    auto rng = make_rng(88);
    for (int rep = 0; rep < 10; ++rep) {
        PhaseSpaceGrid g(1, 8, 2.0, 1.0);
        DistributionState st = testutil::random_state(g, rng, false, true);
        const double c = compute_C(st);
        REQUIRE(c > 0.0);
        REQUIRE(c < 1.0);
    }
}

TEST_CASE("semianalytic C agrees with the exact sum in the resolved regime", "[initcond]") {
    FermiDiracParams fd{0.1};
    struct Case {
        int n;
        double V;
    };
    for (Case c : {Case{16, 0.5}, Case{64, 0.5}, Case{64, 1.0}}) {
        PhaseSpaceGrid g(1, c.n, 2.0, c.V);
        PerturbationField pert = PerturbationField::zero(g);
        const double exact = compute_C(fermi_dirac_state(g, fd, pert));
        const double semi = compute_C_semianalytic(g, fd, pert);
        INFO("n=" << c.n << " V=" << c.V);
        REQUIRE(std::fabs(semi / exact - 1.0) < 0.02);
    }
    // nonzero delta exercises the spatial factor
    PhaseSpaceGrid g(1, 64, 2.0, 0.5);
    auto rng = make_rng(99);
    PerturbationField pert(1, 64, random_delta(g, rng, 0.1), {});
    const double exact = compute_C(fermi_dirac_state(g, fd, pert));
    const double semi = compute_C_semianalytic(g, fd, pert);
    REQUIRE(std::fabs(semi / exact - 1.0) < 0.02);
}

TEST_CASE("doubling V halves the semianalytic C in 1D", "[initcond]") {
    // far from the tail-truncation regime (V >= 10 v_th) the dv bookkeeping
    // is the only V dependence
    FermiDiracParams fd{0.1};
    PhaseSpaceGrid g1(1, 128, 2.0, 1.0);
    PhaseSpaceGrid g2(1, 128, 2.0, 2.0);
    const double c1 = compute_C_semianalytic(g1, fd, PerturbationField::zero(g1));
    const double c2 = compute_C_semianalytic(g2, fd, PerturbationField::zero(g2));
    REQUIRE(c2 / c1 == Catch::Approx(0.5).epsilon(0.005));
}

TEST_CASE("C computed at T stays near C computed at 0 under dense evolution", "[initcond]") {
    PhaseSpaceGrid g(1, 32, 2.0, 1.0);
    ForceField ff = sample_analytic({-1.0, M_PI}, g, 2);
    DistributionState st = maxwell_demo(g, 0.1);
    const double c0 = compute_C(st);
    auto [out, rep] = evolve(st, g, ff, 0.2, 2, Backend::dense);
    const double cT = compute_C(out);
    REQUIRE(std::fabs(cT / c0 - 1.0) < 1e-8);
}

TEST_CASE("ensembles are block vectors scaled by 1/sqrt(n_IV)", "[initcond]") {
    PhaseSpaceGrid g(1, 4, 2.0, 1.0);
    DistributionState a = maxwell_demo(g, 0.2);

    EnsembleState one = build_ensemble({a});
    REQUIRE(one.n_iv == 1);
    REQUIRE(one.norm() == Catch::Approx(a.norm()).epsilon(1e-14));

    // disjoint-support states: ensemble norm^2 = (|f0|^2 + |f1|^2)/2
    DistributionState s0, s1;
    s0.values.assign(g.total_count(), 0.0);
    s1.values.assign(g.total_count(), 0.0);
    s0.values[1] = 3.0;
    s1.values[7] = 4.0;
    EnsembleState two = build_ensemble({s0, s1});
    REQUIRE(two.norm() * two.norm() == Catch::Approx((9.0 + 16.0) / 2.0).epsilon(1e-14));

    REQUIRE_THROWS_AS(build_ensemble({a, s0, s1}), std::invalid_argument);  // not a power of 2
    DistributionState bad;
    bad.values.assign(4, 1.0);
    REQUIRE_THROWS_AS(build_ensemble({a, bad}), std::invalid_argument);
}
