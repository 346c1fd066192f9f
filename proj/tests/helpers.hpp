#pragma once

// Test-only oracles, kept independent of the library's computational paths:
// a Taylor-series matrix exponential for propagator checks and a direct
// O(N^2) DFT for spectrum checks.

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "nuvlasov/force_field.hpp"
#include "nuvlasov/grid.hpp"
#include "nuvlasov/hamiltonian.hpp"
#include "nuvlasov/propagator.hpp"
#include "nuvlasov/rng.hpp"

namespace testutil {

// exp(dt A) x by scaling and squaring of the Taylor series on the vector
inline std::vector<std::complex<double>> taylor_expm_apply(const nuvlasov::SparseHamiltonian& A,
                                                           double dt,
                                                           std::vector<std::complex<double>> x) {
    const std::uint64_t N = A.n;
    double inf_norm = 0.0;
    for (std::uint64_t i = 0; i < N; ++i) {
        double row = 0.0;
        for (std::uint64_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p) row += std::fabs(A.val[p]);
        inf_norm = std::max(inf_norm, row);
    }
    int halvings = 0;
    double step = dt;
    while (std::fabs(step) * inf_norm > 0.5 && halvings < 60) {
        step /= 2.0;
        ++halvings;
    }
    std::vector<std::complex<double>> term(N), next(N);
    for (int rep = 0; rep < (1 << halvings); ++rep) {
        term = x;
        for (int order = 1; order <= 40; ++order) {
            std::fill(next.begin(), next.end(), std::complex<double>(0.0, 0.0));
            for (std::uint64_t i = 0; i < N; ++i) {
                std::complex<double> acc = 0.0;
                for (std::uint64_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p)
                    acc += A.val[p] * term[A.col[p]];
                next[i] = acc * (step / order);
            }
            std::swap(term, next);
            double tn = 0.0, xn = 0.0;
            for (std::uint64_t i = 0; i < N; ++i) {
                tn += std::norm(term[i]);
                xn += std::norm(x[i]);
            }
            for (std::uint64_t i = 0; i < N; ++i) x[i] += term[i];
            if (tn <= 1e-34 * xn) break;
        }
    }
    return x;
}

// delta~_k = (1/n^d) sum_x delta_x exp(+2 pi i k.x / n), elementwise
inline std::vector<std::complex<double>> direct_dft(const std::vector<std::complex<double>>& delta,
                                                    const nuvlasov::PhaseSpaceGrid& grid) {
    const std::uint64_t nsp = grid.spatial_count();
    const int n = grid.ngr(), d = grid.dim();
    std::vector<std::complex<double>> out(nsp, 0.0);
    for (std::uint64_t ik = 0; ik < nsp; ++ik) {
        std::complex<double> acc = 0.0;
        for (std::uint64_t ix = 0; ix < nsp; ++ix) {
            std::uint64_t kk = ik, xx = ix;
            double phase = 0.0;
            for (int a = 0; a < d; ++a) {
                phase += 2.0 * M_PI * static_cast<double>(kk % n) * static_cast<double>(xx % n) / n;
                kk /= n;
                xx /= n;
            }
            acc += delta[ix] * std::complex<double>(std::cos(phase), std::sin(phase));
        }
        out[ik] = acc / static_cast<double>(nsp);
    }
    return out;
}

// exp(dt A_{n_t-1}) ... exp(dt A_0) x, each factor by Taylor summation
inline std::vector<std::complex<double>> taylor_ref(std::vector<std::complex<double>> x,
                                                    const nuvlasov::PhaseSpaceGrid& grid,
                                                    const nuvlasov::ForceField& ff, double T,
                                                    int n_t, int i_iv = 0) {
    const double dt = T / n_t;
    for (int it = 0; it < n_t; ++it)
        x = taylor_expm_apply(nuvlasov::assemble(grid, ff, it, i_iv), dt, std::move(x));
    return x;
}

inline nuvlasov::ForceField random_force(const nuvlasov::PhaseSpaceGrid& grid, int n_t,
                                         double amplitude, std::mt19937_64& rng, int n_iv = 1) {
    const std::uint64_t count =
        static_cast<std::uint64_t>(n_iv) * n_t * grid.dim() * grid.spatial_count();
    std::vector<double> samples(count);
    for (auto& s : samples) s = nuvlasov::uniform(rng, -amplitude, amplitude);
    return nuvlasov::ForceField(grid.dim(), grid.ngr(), n_t, n_iv, std::move(samples));
}

inline nuvlasov::DistributionState random_state(const nuvlasov::PhaseSpaceGrid& grid,
                                                std::mt19937_64& rng, bool complex_valued = false,
                                                bool positive = false) {
    nuvlasov::DistributionState st;
    st.values.resize(grid.total_count());
    for (auto& v : st.values) {
        if (positive)
            v = nuvlasov::uniform(rng, 0.05, 1.0);
        else if (complex_valued)
            v = {nuvlasov::uniform(rng, -1.0, 1.0), nuvlasov::uniform(rng, -1.0, 1.0)};
        else
            v = nuvlasov::uniform(rng, -1.0, 1.0);
    }
    return st;
}

}  // namespace testutil
