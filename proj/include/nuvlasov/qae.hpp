#pragma once

// Classical emulation of quantum amplitude estimation at the
// measurement-statistics level: a Grover iterate of power k measures "good"
// with probability sin^2((2k+1) theta), theta = arcsin(sqrt(a)), and the
// estimators only ever see those outcomes. Two schemes are provided
// (maximum likelihood over a doubling power schedule, and iterative interval
// narrowing); both report equivalent oracle calls as sum (2k+1) * shots and
// both are driven to failure probability <= delta_fail by median
// amplification / confidence budgets.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "nuvlasov/initial_conditions.hpp"
#include "nuvlasov/propagator.hpp"
#include "nuvlasov/rng.hpp"
#include "nuvlasov/spectrum.hpp"

namespace nuvlasov {

enum class QaeScheme { sampling_mle, iterative };

inline QaeScheme qae_scheme_from_string(const std::string& s) {
    if (s == "sampling-mle") return QaeScheme::sampling_mle;
    if (s == "iterative") return QaeScheme::iterative;
    throw std::invalid_argument("unknown QAE scheme '" + s + "' (use sampling-mle|iterative)");
}

struct QaeConfig {
    double epsilon = 0.01;       // target accuracy on the amplitude
    double delta_fail = 0.05;    // failure probability
    std::uint64_t seed = 0;
    QaeScheme scheme = QaeScheme::sampling_mle;
    bool deterministic = false;  // pass the exact amplitude through (CI mode)

    void validate() const {
        if (!(epsilon > 0.0) || !(epsilon < 0.5))
            throw std::invalid_argument("qae: epsilon must lie in (0, 1/2)");
        if (!(delta_fail > 0.0) || !(delta_fail < 1.0))
            throw std::invalid_argument("qae: delta_fail must lie in (0, 1)");
    }
};

struct QaeResult {
    double estimate = 0.0;
    double true_amplitude = 0.0;
    std::uint64_t oracle_calls = 0;
    bool success = false;  // |estimate - true| <= epsilon
};

namespace detail {

struct PowerSample {
    std::uint64_t power = 0;  // Grover power k
    std::uint64_t shots = 0;
    std::uint64_t good = 0;
};

inline double loglik(double theta, const std::vector<PowerSample>& data) {
    double ll = 0.0;
    for (const PowerSample& d : data) {
        const double s = std::sin((2.0 * static_cast<double>(d.power) + 1.0) * theta);
        const double p = s * s;
        if (d.good > 0) {
            if (p <= 0.0) return -std::numeric_limits<double>::infinity();
            ll += static_cast<double>(d.good) * std::log(p);
        }
        if (d.good < d.shots) {
            if (p >= 1.0) return -std::numeric_limits<double>::infinity();
            ll += static_cast<double>(d.shots - d.good) * std::log1p(-p);
        }
    }
    return ll;
}

// argmax of the likelihood on [lo, hi]: uniform scan fine enough for the
// fastest oscillation, then golden-section refinement in the best bracket
inline double maximize_loglik(const std::vector<PowerSample>& data, double lo, double hi,
                              std::uint64_t max_power) {
    const int pts = static_cast<int>(std::min<std::uint64_t>(16 * (2 * max_power + 1) + 1, 200001));
    double best_t = lo, best_v = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < pts; ++i) {
        const double t = lo + (hi - lo) * static_cast<double>(i) / (pts - 1);
        const double v = loglik(t, data);
        if (v > best_v) {
            best_v = v;
            best_t = t;
        }
    }
    const double cell = (hi - lo) / (pts - 1);
    double a = std::max(lo, best_t - cell), b = std::min(hi, best_t + cell);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = loglik(x1, data), f2 = loglik(x2, data);
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = loglik(x2, data);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = loglik(x1, data);
        }
    }
    const double mid = 0.5 * (a + b);
    return loglik(mid, data) >= best_v ? mid : best_t;
}

// one maximum-likelihood run over the doubling schedule {0, 1, 2, 4, ...}
inline double mle_single_run(double theta_true, double epsilon, std::mt19937_64& rng,
                             std::uint64_t& calls) {
    const std::uint64_t shots = 100;
    std::uint64_t m_max = 1;
    while (static_cast<double>(m_max) < 0.20 / epsilon) m_max *= 2;
    std::vector<PowerSample> data;
    for (std::uint64_t m = 0; m <= m_max; m = (m == 0 ? 1 : m * 2)) {
        const double s = std::sin((2.0 * static_cast<double>(m) + 1.0) * theta_true);
        PowerSample d{m, shots, sample_binomial(rng, shots, s * s)};
        calls += (2 * m + 1) * shots;
        data.push_back(d);
    }
    return maximize_loglik(data, 0.0, M_PI / 2.0, m_max);
}

// interval-narrowing run: Hoeffding confidence intervals inverted through a
// monotone branch of sin^2(K theta), confidence budget delta split over rounds
inline double iterative_single_run(double theta_true, double epsilon, double delta,
                                   std::mt19937_64& rng, std::uint64_t& calls) {
    double lo = 0.0, hi = M_PI / 2.0;
    std::vector<PowerSample> data;
    const int max_rounds = 200;
    for (int r = 1; r <= max_rounds; ++r) {
        if (std::sin(hi) * std::sin(hi) - std::sin(lo) * std::sin(lo) <= 2.0 * epsilon) break;

        // largest odd K keeping [K lo, K hi] inside one monotone half-period
        const double width = std::max(hi - lo, 1e-15);
        std::uint64_t kmax = static_cast<std::uint64_t>((M_PI / 2.0) / width);
        if (kmax % 2 == 0) kmax = (kmax > 0) ? kmax - 1 : 1;
        std::uint64_t K = 1;
        for (std::uint64_t cand = std::max<std::uint64_t>(kmax, 1); cand >= 1; cand -= 2) {
            const double qlo = std::floor(cand * lo / (M_PI / 2.0) * (1.0 + 1e-15));
            const double qhi = std::floor(cand * hi / (M_PI / 2.0) * (1.0 - 1e-15));
            if (qlo == qhi) {
                K = cand;
                break;
            }
            if (cand == 1) break;
        }

        const double alpha_r = delta * (6.0 / (M_PI * M_PI)) / (static_cast<double>(r) * r);
        const std::uint64_t shots = static_cast<std::uint64_t>(std::ceil(std::log(2.0 / alpha_r) / (2.0 * 0.1 * 0.1)));
        const double p_true = std::pow(std::sin(K * theta_true), 2.0);
        const std::uint64_t good = sample_binomial(rng, shots, p_true);
        const std::uint64_t k_pow = (K - 1) / 2;
        calls += K * shots;
        data.push_back({k_pow, shots, good});

        const double w = std::sqrt(std::log(2.0 / alpha_r) / (2.0 * static_cast<double>(shots)));
        const double phat = static_cast<double>(good) / static_cast<double>(shots);
        const double pl = std::max(0.0, phat - w), pu = std::min(1.0, phat + w);

        const double q = std::floor(K * lo / (M_PI / 2.0) * (1.0 + 1e-15));
        double phi_lo, phi_hi;
        if (static_cast<long long>(q) % 2 == 0) {  // sin^2 increasing on the window
            phi_lo = std::asin(std::sqrt(pl));
            phi_hi = std::asin(std::sqrt(pu));
        } else {  // decreasing
            phi_lo = std::acos(std::sqrt(pu));
            phi_hi = std::acos(std::sqrt(pl));
        }
        const double base = q * (M_PI / 2.0);
        const double new_lo = (base + phi_lo) / K;
        const double new_hi = (base + phi_hi) / K;
        lo = std::max(lo, new_lo);
        hi = std::min(hi, new_hi);
        if (hi < lo) {  // numerically crossed; keep the midpoint as a point interval
            const double mid = 0.5 * (lo + hi);
            lo = hi = std::min(std::max(mid, 0.0), M_PI / 2.0);
        }
    }
    // maximum-likelihood point inside the final interval; exact at a = 0 or 1
    if (data.empty()) return 0.5 * (lo + hi);
    std::uint64_t maxp = 1;
    for (const auto& d : data) maxp = std::max(maxp, 2 * d.power + 1);
    return maximize_loglik(data, lo, hi, maxp);
}

}  // namespace detail

// Simulate a full QAE estimate of the amplitude a with the (epsilon,
// delta_fail) contract; failure probability is driven down by taking the
// median of independent runs.
inline QaeResult qae_estimate(double a, const QaeConfig& cfg) {
    cfg.validate();
    if (!(a >= 0.0) || !(a <= 1.0))
        throw std::invalid_argument("qae_estimate: amplitude must lie in [0, 1]");
    QaeResult res;
    res.true_amplitude = a;
    if (cfg.deterministic) {
        res.estimate = a;
        res.oracle_calls = 1;
        res.success = true;
        return res;
    }
    const double theta = std::asin(std::min(1.0, std::sqrt(a)));
    const int reps = 2 * std::max<int>(1, static_cast<int>(std::ceil(0.5 * std::log(1.0 / cfg.delta_fail)))) + 1;
    std::vector<double> estimates;
    std::uint64_t calls = 0;
    for (int rep = 0; rep < reps; ++rep) {
        std::mt19937_64 rng = make_rng(cfg.seed, 0x9ae0000 + static_cast<std::uint64_t>(rep));
        double theta_hat;
        if (cfg.scheme == QaeScheme::sampling_mle)
            theta_hat = detail::mle_single_run(theta, cfg.epsilon, rng, calls);
        else
            theta_hat = detail::iterative_single_run(theta, cfg.epsilon, cfg.delta_fail, rng, calls);
        const double s = std::sin(theta_hat);
        estimates.push_back(std::min(1.0, std::max(0.0, s * s)));
    }
    std::sort(estimates.begin(), estimates.end());
    res.estimate = estimates[estimates.size() / 2];
    res.oracle_calls = calls;
    res.success = std::fabs(res.estimate - a) <= cfg.epsilon;
    return res;
}

// a = C |delta~_target|^2 for the state's own C, computed through the exact
// spectrum route. target is the flat spatial mode index, nonzero.
inline double exact_amplitude(const DistributionState& state, const PhaseSpaceGrid& grid,
                              std::uint64_t target_ik) {
    if (target_ik == 0) throw std::domain_error("exact_amplitude: zero mode is excluded");
    if (target_ik >= grid.spatial_count()) throw std::domain_error("exact_amplitude: mode out of range");
    const double C = compute_C(state);
    const auto dt = fourier(perturbation(density(state, grid)), grid);
    return std::min(1.0, C * std::norm(dt[target_ik]));
}

struct Algorithm1Result {
    double estimate = 0.0;        // of |delta~_target|^2 (or the shell sum)
    double amplitude = 0.0;       // measured probability fed to QAE
    double qae_estimate = 0.0;    // p~ before dividing by C
    std::uint64_t oracle_calls = 0;
    bool clamped = false;         // C eps / 4 exceeded the valid QAE range
};

namespace detail {

inline Algorithm1Result algorithm1_impl(const DistributionState& state0, const PhaseSpaceGrid& grid,
                                        const ForceField& ff, double T, int n_t,
                                        const std::vector<std::uint64_t>& targets, double C,
                                        const QaeConfig& cfg, Backend backend) {
    if (!(C > 0.0) || C > 1.0 + 1e-12) throw std::invalid_argument("algorithm1: C must lie in (0, 1]");
    if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("algorithm1: epsilon must be positive");
    if (!(cfg.delta_fail > 0.0) || !(cfg.delta_fail < 1.0))
        throw std::invalid_argument("algorithm1: delta_fail must lie in (0, 1)");
    Algorithm1Result out;
    double eps_amp = C * cfg.epsilon / 4.0;
    if (eps_amp >= 0.5) {
        eps_amp = 0.499;  // degenerate budget; clamped and flagged
        out.clamped = true;
    }
    auto [st, rep] = evolve(state0, grid, ff, T, n_t, backend, eps_amp);
    (void)rep;
    const double nrm = st.norm();
    if (!(nrm > 0.0)) throw std::domain_error("algorithm1: evolved state has zero norm");
    std::vector<std::complex<double>> ket(st.values.size());
    for (std::size_t i = 0; i < ket.size(); ++i) ket[i] = st.values[i] / nrm;
    const auto wket = apply_w(ket, grid);
    double a = 0.0;
    for (std::uint64_t ik : targets) a += std::norm(wket[ik]);
    a = std::min(1.0, a);
    out.amplitude = a;

    QaeConfig qcfg = cfg;
    qcfg.epsilon = eps_amp;
    const QaeResult q = qae_estimate(a, qcfg);
    out.qae_estimate = q.estimate;
    out.oracle_calls = q.oracle_calls;
    out.estimate = q.estimate / C;
    return out;
}

}  // namespace detail

// Estimate |delta~_target|^2: evolve with tolerance C eps/4, apply W, QAE the
// target amplitude to C eps/4, output p~/C.
inline Algorithm1Result algorithm1(const DistributionState& state0, const PhaseSpaceGrid& grid,
                                   const ForceField& ff, double T, int n_t, std::uint64_t target_ik,
                                   double C, const QaeConfig& cfg, Backend backend) {
    if (target_ik == 0) throw std::domain_error("algorithm1: zero mode is excluded");
    if (target_ik >= grid.spatial_count()) throw std::domain_error("algorithm1: mode out of range");
    return detail::algorithm1_impl(state0, grid, ff, T, n_t, {target_ik}, C, cfg, backend);
}

// Shell variant: QAE on the summed probability over modes with
// k1 <= ||k_ik|| <= k2 (zero mode excluded).
inline Algorithm1Result algorithm1_shell(const DistributionState& state0, const PhaseSpaceGrid& grid,
                                         const ForceField& ff, double T, int n_t, double k1, double k2,
                                         double C, const QaeConfig& cfg, Backend backend) {
    std::vector<std::uint64_t> targets;
    for (std::uint64_t ik = 1; ik < grid.spatial_count(); ++ik) {
        const double kn = knorm_of_mode(grid, ik);
        if (kn >= k1 && kn <= k2) targets.push_back(ik);
    }
    if (targets.empty()) throw std::domain_error("algorithm1_shell: empty shell after zero-mode exclusion");
    return detail::algorithm1_impl(state0, grid, ff, T, n_t, targets, C, cfg, backend);
}

}  // namespace nuvlasov
