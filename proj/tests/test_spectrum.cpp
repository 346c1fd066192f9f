#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "nuvlasov/spectrum.hpp"

using namespace nuvlasov;

TEST_CASE("density integrates over the velocity axes", "[spectrum]") {
    PhaseSpaceGrid g(1, 8, 2.0, 1.0);
    double dvd = g.dv();

    DistributionState uniform_state;
    uniform_state.values.assign(g.total_count(), 0.3);
    auto rho = density(uniform_state, g);
    for (const auto& r : rho) REQUIRE(r.real() == Catch::Approx(0.3 * 8 * dvd).epsilon(1e-14));

    DistributionState spike;
    spike.values.assign(g.total_count(), 0.0);
    spike.values[g.flatten({3, 5})] = 1.0;
    rho = density(spike, g);
    for (int ix = 0; ix < 8; ++ix)
        REQUIRE(rho[ix].real() == Catch::Approx(ix == 3 ? dvd : 0.0).margin(1e-15));

    DistributionState mx = maxwell_demo(g, 0.2);
    rho = density(mx, g);
    for (int ix = 0; ix < 8; ++ix) REQUIRE(rho[ix].real() == Catch::Approx(rho[0].real()).epsilon(1e-12));
}

TEST_CASE("perturbation is the mean-relative contrast", "[spectrum]") {
    std::vector<std::complex<double>> rho = {2.0, 0.0};
    auto delta = perturbation(rho);
    REQUIRE(delta[0].real() == Catch::Approx(1.0).epsilon(1e-15));
    REQUIRE(delta[1].real() == Catch::Approx(-1.0).epsilon(1e-15));

    std::vector<std::complex<double>> flat(8, 0.7);
    for (const auto& d : perturbation(flat)) REQUIRE(std::abs(d) < 1e-15);

    std::vector<std::complex<double>> negative(4, -1.0);
    REQUIRE_THROWS_AS(perturbation(negative), std::domain_error);
}

TEST_CASE("fourier uses the positive-exponent 1/n^d convention", "[spectrum]") {
    PhaseSpaceGrid g(1, 8, 2.0, 1.0);
    std::vector<std::complex<double>> zero(8, 0.0);
    for (const auto& v : fourier(zero, g)) REQUIRE(std::abs(v) == 0.0);

    std::vector<std::complex<double>> cosine(8);
    for (int i = 0; i < 8; ++i) cosine[i] = std::cos(2.0 * M_PI * i / 8.0);
    auto dt = fourier(cosine, g);
    REQUIRE(dt[1].real() == Catch::Approx(0.5).epsilon(1e-13));
    REQUIRE(dt[7].real() == Catch::Approx(0.5).epsilon(1e-13));
    for (int k : {0, 2, 3, 4, 5, 6}) REQUIRE(std::abs(dt[k]) < 1e-14);
}

TEST_CASE("fourier matches the direct DFT oracle in 1D and 2D", "[spectrum]") {
    auto rng = make_rng(17);
    for (auto [d, n] : {std::pair{1, 16}, {2, 8}}) {
        PhaseSpaceGrid g(d, n, 2.0, 1.0);
        std::vector<std::complex<double>> delta(g.spatial_count());
        for (auto& v : delta) v = {uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)};
        auto fast = fourier(delta, g);
        auto slow = testutil::direct_dft(delta, g);
        for (std::uint64_t i = 0; i < fast.size(); ++i)
            REQUIRE(std::abs(fast[i] - slow[i]) < 1e-12);
    }
}

TEST_CASE("spectra satisfy zero-mode, conjugate-symmetry and Parseval identities", "[spectrum]") {
    auto rng = make_rng(27);
    PhaseSpaceGrid g(2, 8, 2.0, 1.0);
    DistributionState st = testutil::random_state(g, rng, false, true);
    auto rho = density(st, g);
    auto delta = perturbation(rho);
    auto dt = fourier(delta, g);
    REQUIRE(std::abs(dt[0]) < 1e-12);
    // conjugate symmetry for real input: dt[-k mod n] = conj(dt[k])
    const int n = 8;
    for (int kx = 0; kx < n; ++kx)
        for (int ky = 0; ky < n; ++ky) {
            const std::uint64_t k = kx + static_cast<std::uint64_t>(n) * ky;
            const std::uint64_t kneg = ((n - kx) % n) + static_cast<std::uint64_t>(n) * ((n - ky) % n);
            REQUIRE(std::abs(dt[kneg] - std::conj(dt[k])) < 1e-12);
        }
    double sum_p = 0.0, sum_d2 = 0.0;
    for (const auto& v : dt) sum_p += std::norm(v);
    for (const auto& v : delta) sum_d2 += std::norm(v);
    REQUIRE(sum_p == Catch::Approx(sum_d2 / static_cast<double>(g.spatial_count())).epsilon(1e-10));
}

TEST_CASE("shell sums are inclusive, literal-index and complete", "[spectrum]") {
    auto rng = make_rng(37);
    PhaseSpaceGrid g(1, 16, 2.0, 1.0);
    std::vector<std::complex<double>> delta(16);
    for (auto& v : delta) v = uniform(rng, -1.0, 1.0);
    double mean = 0.0;
    for (auto& v : delta) mean += v.real();
    for (auto& v : delta) v -= mean / 16.0;
    auto dt = fourier(delta, g);

    REQUIRE(shell_power(dt, g, 0.0, 0.0) == Catch::Approx(0.0).margin(1e-25));
    double total = 0.0;
    for (const auto& v : dt) total += std::norm(v);
    REQUIRE(shell_power(dt, g, 0.0, 1e9) == Catch::Approx(total).epsilon(1e-14));

    // isolate mode 1: k_1 = 2 pi / L = pi; mode 15 sits at 15 pi, outside
    const double k1 = 2.0 * M_PI / g.box_length();
    REQUIRE(shell_power(dt, g, k1 * 0.9, k1 * 1.1) == Catch::Approx(std::norm(dt[1])).epsilon(1e-14));
    REQUIRE_THROWS_AS(shell_power(dt, g, 2.0, 1.0), std::invalid_argument);
}

TEST_CASE("the W-operator amplitude identity holds to machine precision", "[spectrum]") {
    auto rng = make_rng(47);
    for (auto [d, n] : {std::pair{1, 8}, {2, 4}}) {
        PhaseSpaceGrid g(d, n, 2.0, 1.0);
        for (int rep = 0; rep < 5; ++rep) {
            DistributionState st = testutil::random_state(g, rng, true);
            const double C = compute_C(st);
            REQUIRE(w_operator_check(st, g, C) < 1e-12);
        }
    }
}

TEST_CASE("compute_spectrum bundles diagnostics consistently", "[spectrum]") {
    PhaseSpaceGrid g(1, 16, 2.0, 1.0);
    auto rng = make_rng(57);
    DistributionState st = testutil::random_state(g, rng, false, true);
    const double C = compute_C(st);
    SpectrumResult res = compute_spectrum(st, g, C);
    REQUIRE(res.power[0] == 0.0);
    REQUIRE(res.parseval_residual < 1e-10);
    REQUIRE(res.dominant_mode >= 1);
    REQUIRE(res.power[res.dominant_mode] >= res.power[1]);
}

TEST_CASE("ensemble power averages realizations and matches the amplitude route", "[spectrum]") {
    PhaseSpaceGrid g(1, 8, 2.0, 1.0);
    auto rng = make_rng(67);

    // identical states: the average equals the single-run power
    DistributionState a = testutil::random_state(g, rng, false, true);
    const double Ca = compute_C(a);
    EnsembleState same = build_ensemble({a, a, a, a});
    EnsemblePower ep = ensemble_power(same, g, Ca);
    auto dt = fourier(perturbation(density(a, g)), g);
    for (std::uint64_t ik = 1; ik < 8; ++ik)
        REQUIRE(ep.power[ik] == Catch::Approx(std::norm(dt[ik])).epsilon(1e-12));
    REQUIRE(ep.route_discrepancy < 1e-12);

    // single realization reduces to the plain spectrum
    EnsemblePower ep1 = ensemble_power(build_ensemble({a}), g, Ca);
    for (std::uint64_t ik = 1; ik < 8; ++ik)
        REQUIRE(ep1.power[ik] == Catch::Approx(std::norm(dt[ik])).epsilon(1e-12));

    // two pure-mode densities with disjoint dominant modes average to half each
    DistributionState m1, m2;
    m1.values.resize(g.total_count());
    m2.values.resize(g.total_count());
    for (int ix = 0; ix < 8; ++ix)
        for (int iu = 0; iu < 8; ++iu) {
            m1.values[g.flatten({ix, iu})] = 1.0 + 0.3 * std::cos(2 * M_PI * ix / 8.0);
            m2.values[g.flatten({ix, iu})] = 1.0 + 0.4 * std::cos(2 * M_PI * 2 * ix / 8.0);
        }
    EnsemblePower mixed = ensemble_power(build_ensemble({m1, m2}), g, compute_C(m1));
    auto d1 = fourier(perturbation(density(m1, g)), g);
    auto d2 = fourier(perturbation(density(m2, g)), g);
    REQUIRE(mixed.power[1] == Catch::Approx(0.5 * std::norm(d1[1])).epsilon(1e-12));
    REQUIRE(mixed.power[2] == Catch::Approx(0.5 * std::norm(d2[2])).epsilon(1e-12));
}
