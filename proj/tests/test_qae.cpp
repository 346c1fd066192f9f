#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "nuvlasov/qae.hpp"

using namespace nuvlasov;

TEST_CASE("degenerate amplitudes are recovered exactly", "[qae]") {
    for (QaeScheme scheme : {QaeScheme::sampling_mle, QaeScheme::iterative}) {
        for (int seed = 0; seed < 50; ++seed) {
            QaeConfig cfg{0.05, 0.05, static_cast<std::uint64_t>(seed), scheme, false};
            REQUIRE(qae_estimate(0.0, cfg).estimate == 0.0);
            REQUIRE(qae_estimate(1.0, cfg).estimate == 1.0);
        }
    }
}

TEST_CASE("estimates respect the (epsilon, delta) contract empirically", "[qae]") {
    // smaller companion of the full acceptance sweep
    for (QaeScheme scheme : {QaeScheme::sampling_mle, QaeScheme::iterative}) {
        for (double a : {0.1, 0.5}) {
            const double eps = 0.04;
            int failures = 0;
            const int trials = 200;
            for (int t = 0; t < trials; ++t) {
                QaeConfig cfg{eps, 0.05, splitmix64(1000 + t), scheme, false};
                QaeResult r = qae_estimate(a, cfg);
                REQUIRE(r.estimate >= 0.0);
                REQUIRE(r.estimate <= 1.0);
                REQUIRE(r.oracle_calls > 0);
                if (!r.success) ++failures;
            }
            INFO("scheme=" << (scheme == QaeScheme::sampling_mle ? "mle" : "iter") << " a=" << a);
            // 0.05 + 3 sigma binomial margin at 200 trials
            REQUIRE(failures <= static_cast<int>(trials * 0.05 + 3.0 * std::sqrt(trials * 0.05 * 0.95)));
        }
    }
}

TEST_CASE("oracle calls grow like 1/epsilon", "[qae]") {
    const double a = 0.25;
    std::vector<double> eps = {0.04, 0.02, 0.01};
    std::vector<double> calls;
    for (double e : eps) {
        QaeConfig cfg{e, 0.05, 2024, QaeScheme::sampling_mle, false};
        calls.push_back(static_cast<double>(qae_estimate(a, cfg).oracle_calls));
    }
    const double slope = std::log(calls.back() / calls.front()) / std::log(eps.front() / eps.back());
    REQUIRE(slope > 0.8);
    REQUIRE(slope < 1.2);
    // doubling precision costs at most ~2.5x
    REQUIRE(calls[1] / calls[0] < 2.5);
    REQUIRE(calls[2] / calls[1] < 2.5);
}

TEST_CASE("deterministic mode passes the amplitude through", "[qae]") {
    QaeConfig cfg{0.01, 0.05, 5, QaeScheme::sampling_mle, true};
    QaeResult r = qae_estimate(0.3721, cfg);
    REQUIRE(r.estimate == 0.3721);
    REQUIRE(r.success);
    REQUIRE(r.oracle_calls > 0);
}

TEST_CASE("configuration is validated", "[qae]") {
    REQUIRE_THROWS_AS(qae_estimate(0.5, QaeConfig{0.6, 0.05, 0, QaeScheme::sampling_mle, false}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(qae_estimate(0.5, QaeConfig{0.01, 1.5, 0, QaeScheme::sampling_mle, false}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(qae_estimate(1.5, QaeConfig{0.01, 0.05, 0, QaeScheme::sampling_mle, false}),
                      std::invalid_argument);
}

TEST_CASE("exact_amplitude is C |delta~|^2 and vanishes for uniform states", "[qae]") {
    PhaseSpaceGrid g(1, 16, 2.0, 1.0);
    DistributionState flat;
    flat.values.assign(g.total_count(), 0.8);
    REQUIRE(exact_amplitude(flat, g, 1) == Catch::Approx(0.0).margin(1e-26));
    REQUIRE_THROWS_AS(exact_amplitude(flat, g, 0), std::domain_error);

    auto rng = make_rng(7);
    DistributionState st = testutil::random_state(g, rng, false, true);
    const double C = compute_C(st);
    auto dt = fourier(perturbation(density(st, g)), g);
    for (std::uint64_t ik : {1ULL, 5ULL, 9ULL}) {
        REQUIRE(exact_amplitude(st, g, ik) == Catch::Approx(C * std::norm(dt[ik])).epsilon(1e-12));
        REQUIRE(exact_amplitude(st, g, ik) <= C * (1.0 + 1e-12));
    }
}

TEST_CASE("algorithm1 in deterministic mode reproduces the exact mode power", "[qae]") {
    QaeConfig cfg{0.05, 0.05, 3, QaeScheme::sampling_mle, true};

    // zero force conserves the entry sum to rounding, so C carries exactly
    // and the pipeline identity is machine precision
    PhaseSpaceGrid g(1, 16, 2.0, 1.0);
    ForceField zero = sample_analytic({0.0, 1.0}, g, 8);
    std::vector<double> dl(16, 0.0);
    for (int ix = 0; ix < 16; ++ix) dl[ix] = 0.1 * std::cos(2.0 * M_PI * ix / 16.0);
    DistributionState st0 =
        fermi_dirac_state(g, FermiDiracParams{0.2}, PerturbationField(1, 16, dl, {}));
    const double C = compute_C(st0);
    Algorithm1Result det = algorithm1(st0, g, zero, 0.2, 8, 1, C, cfg, Backend::dense);
    auto [fT, rep] = evolve(st0, g, zero, 0.2, 8, Backend::dense);
    auto dt = fourier(perturbation(density(fT, g)), g);
    REQUIRE(det.estimate == Catch::Approx(std::norm(dt[1])).epsilon(1e-11));
    REQUIRE_FALSE(det.clamped);
    REQUIRE_THROWS_AS(algorithm1(st0, g, zero, 0.2, 8, 0, C, cfg, Backend::dense), std::domain_error);

    // with forcing, the only systematic is the entry-sum drift entering C
    ForceField ff = sample_analytic({-1.0, M_PI}, g, 8);
    DistributionState mx = maxwell_demo(g, 0.1);
    const double Cm = compute_C(mx);
    Algorithm1Result fdet = algorithm1(mx, g, ff, 0.2, 8, 1, Cm, cfg, Backend::dense);
    auto [fTm, repm] = evolve(mx, g, ff, 0.2, 8, Backend::dense);
    auto dtm = fourier(perturbation(density(fTm, g)), g);
    const double cdrift = std::fabs(compute_C(fTm) / Cm - 1.0);
    REQUIRE(std::fabs(fdet.estimate / std::norm(dtm[1]) - 1.0) <= 2.0 * cdrift + 1e-12);
}

TEST_CASE("algorithm1 statistical runs land within epsilon of the dense oracle", "[qae]") {
    PhaseSpaceGrid g(1, 16, 2.0, 1.0);
    ForceField ff = sample_analytic({-1.0, M_PI}, g, 8);
    DistributionState st0 = maxwell_demo(g, 0.1);
    const double C = compute_C(st0);
    auto [fT, rep] = evolve(st0, g, ff, 0.2, 8, Backend::dense);
    const double exact = std::norm(fourier(perturbation(density(fT, g)), g)[1]);

    const double eps = 0.05;
    int ok = 0;
    const int trials = 40;
    for (int t = 0; t < trials; ++t) {
        QaeConfig cfg{eps, 0.05, splitmix64(900 + t), QaeScheme::sampling_mle, false};
        Algorithm1Result r = algorithm1(st0, g, ff, 0.2, 8, 1, C, cfg, Backend::krylov);
        if (std::fabs(r.estimate - exact) <= eps) ++ok;
    }
    REQUIRE(ok >= 36);  // 95% - margin at 40 trials
}

TEST_CASE("oversized error budgets are clamped and flagged", "[qae]") {
    PhaseSpaceGrid g(1, 8, 2.0, 1.0);
    ForceField ff = sample_analytic({-0.5, M_PI}, g, 2);
    DistributionState st0 = maxwell_demo(g, 0.15);
    const double C = compute_C(st0);
    QaeConfig silly{50.0, 0.05, 1, QaeScheme::sampling_mle, true};  // C eps/4 >= 1
    Algorithm1Result r = algorithm1(st0, g, ff, 0.1, 2, 1, C, silly, Backend::dense);
    REQUIRE(r.clamped);
    QaeConfig sane{0.2, 0.05, 1, QaeScheme::sampling_mle, true};
    REQUIRE_FALSE(algorithm1(st0, g, ff, 0.1, 2, 1, C, sane, Backend::dense).clamped);
}

TEST_CASE("algorithm1_shell matches the single mode and completes the range", "[qae]") {
    PhaseSpaceGrid g(1, 16, 2.0, 1.0);
    ForceField ff = sample_analytic({-1.0, M_PI}, g, 8);
    DistributionState st0 = maxwell_demo(g, 0.1);
    const double C = compute_C(st0);
    QaeConfig det{0.05, 0.05, 4, QaeScheme::sampling_mle, true};

    const double k1 = 2.0 * M_PI / g.box_length();
    Algorithm1Result single = algorithm1(st0, g, ff, 0.2, 8, 1, C, det, Backend::dense);
    Algorithm1Result shell = algorithm1_shell(st0, g, ff, 0.2, 8, 0.9 * k1, 1.1 * k1, C, det, Backend::dense);
    REQUIRE(shell.estimate == Catch::Approx(single.estimate).epsilon(1e-12));

    // completeness, with the shared C-drift systematic divided out
    auto [fT, rep] = evolve(st0, g, ff, 0.2, 8, Backend::dense);
    auto dt = fourier(perturbation(density(fT, g)), g);
    double total = 0.0;
    for (std::uint64_t ik = 1; ik < 16; ++ik) total += std::norm(dt[ik]);
    Algorithm1Result full = algorithm1_shell(st0, g, ff, 0.2, 8, 0.0, 1e9, C, det, Backend::dense);
    const double cdrift = std::fabs(compute_C(fT) / C - 1.0);
    REQUIRE(std::fabs(full.estimate / total - 1.0) <= 2.0 * cdrift + 1e-12);

    REQUIRE_THROWS_AS(algorithm1_shell(st0, g, ff, 0.2, 8, 1e8, 1e9, C, det, Backend::dense),
                      std::domain_error);
}

TEST_CASE("both schemes satisfy the contract on shared seeds", "[qae]") {
    const double a = 0.25, eps = 0.02;
    int fail_mle = 0, fail_iter = 0;
    for (int t = 0; t < 100; ++t) {
        QaeConfig mle{eps, 0.05, splitmix64(4000 + t), QaeScheme::sampling_mle, false};
        QaeConfig iter = mle;
        iter.scheme = QaeScheme::iterative;
        if (!qae_estimate(a, mle).success) ++fail_mle;
        if (!qae_estimate(a, iter).success) ++fail_iter;
    }
    REQUIRE(fail_mle <= 12);
    REQUIRE(fail_iter <= 12);
}
