#pragma once

// Time evolution by the exact piecewise-constant unitary product
// f(T) = exp(dt A_{n_t-1}) ... exp(dt A_0) f(0), with two backends:
//   dense  - eigendecomposition of each H_{i_t} = iA_{i_t} (machine precision)
//   krylov - skew-Lanczos action of the matrix exponential, per-step
//            tolerance tol/n_t so the total error composes linearly
// Norm, entry-sum and velocity-boundary-mass diagnostics are recorded per step.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nuvlasov/force_field.hpp"
#include "nuvlasov/grid.hpp"
#include "nuvlasov/hamiltonian.hpp"
#include "nuvlasov/skew_eig.hpp"

namespace nuvlasov {

struct DistributionState {
    std::vector<std::complex<double>> values;
    double time = 0.0;

    double norm() const {
        double s = 0.0;
        for (const auto& v : values) s += std::norm(v);
        return std::sqrt(s);
    }
    std::complex<double> sum() const {
        std::complex<double> s = 0.0;
        for (const auto& v : values) s += v;
        return s;
    }
    double max_imag() const {
        double m = 0.0;
        for (const auto& v : values) m = std::max(m, std::fabs(v.imag()));
        return m;
    }
    double min_real() const {
        double m = values.empty() ? 0.0 : values[0].real();
        for (const auto& v : values) m = std::min(m, v.real());
        return m;
    }
};

struct EvolutionReport {
    std::vector<double> norm_drift;              // per step, relative to ||f(0)||
    std::vector<double> sum_drift;               // per step, relative to |sum(0)|
    std::vector<double> boundary_mass_fraction;  // per step, of the evolved state
    double min_real = 0.0;                       // diagnostic; negativity is not enforced

    double max_norm_drift() const { return norm_drift.empty() ? 0.0 : *std::max_element(norm_drift.begin(), norm_drift.end()); }
    double total_sum_drift() const {
        double s = 0.0;
        for (double v : sum_drift) s += v;
        return s;
    }
    double max_boundary_mass() const {
        return boundary_mass_fraction.empty() ? 0.0 : *std::max_element(boundary_mass_fraction.begin(), boundary_mass_fraction.end());
    }
};

enum class Backend { dense, krylov };

inline Backend backend_from_string(const std::string& s) {
    if (s == "dense") return Backend::dense;
    if (s == "krylov") return Backend::krylov;
    throw std::invalid_argument("unknown backend '" + s + "' (use dense|krylov)");
}

inline double boundary_mass_fraction(const DistributionState& st, const PhaseSpaceGrid& grid) {
    double boundary = 0.0, total = 0.0;
    const std::uint64_t N = grid.total_count();
    for (std::uint64_t i = 0; i < N; ++i) {
        const double p = std::norm(st.values[i]);
        total += p;
        if (grid.on_velocity_boundary(grid.unflatten(i))) boundary += p;
    }
    return total > 0.0 ? boundary / total : 0.0;
}

namespace detail {

struct KrylovWorkspace {
    std::vector<std::vector<double>> basis;
    std::vector<double> w, betas;
};

// y = exp(dt A) x for real x; adaptive bisection of dt when the Lanczos cap
// is hit. Returns the residual estimate actually achieved.
inline double krylov_expm_real(const SparseHamiltonian& A, double dt, std::vector<double>& x,
                               double tol_abs, int m_cap, int depth, KrylovWorkspace& ws) {
    const std::uint64_t N = A.n;
    double beta0 = cblas_dnrm2(static_cast<int>(N), x.data(), 1);
    if (beta0 == 0.0) return 0.0;

    ws.basis.clear();
    ws.betas.clear();
    ws.basis.emplace_back(x);
    cblas_dscal(static_cast<int>(N), 1.0 / beta0, ws.basis[0].data(), 1);
    ws.w.assign(N, 0.0);

    int m = 1;
    bool breakdown = false;
    std::vector<double> col;
    double err = std::numeric_limits<double>::infinity();

    while (true) {
        // w = A v_{m-1} + beta_{m-1} v_{m-2}
        std::fill(ws.w.begin(), ws.w.end(), 0.0);
        A.apply(ws.basis[m - 1].data(), ws.w.data());
        if (m >= 2)
            cblas_daxpy(static_cast<int>(N), ws.betas[m - 2], ws.basis[m - 2].data(), 1, ws.w.data(), 1);
        // full reorthogonalization keeps the basis clean over long recurrences
        for (int i = 0; i < m; ++i) {
            const double c = cblas_ddot(static_cast<int>(N), ws.basis[i].data(), 1, ws.w.data(), 1);
            cblas_daxpy(static_cast<int>(N), -c, ws.basis[i].data(), 1, ws.w.data(), 1);
        }
        const double beta = cblas_dnrm2(static_cast<int>(N), ws.w.data(), 1);
        ws.betas.push_back(beta);
        if (beta <= 1e-14 * beta0) {
            breakdown = true;  // invariant subspace: projected result is exact
            col = nuvlasov::detail::skew_tridiag_expm_e1(ws.betas, m, dt);
            err = 0.0;
            break;
        }
        ws.basis.emplace_back(ws.w);
        cblas_dscal(static_cast<int>(N), 1.0 / beta, ws.basis[m].data(), 1);
        ++m;

        if (m >= 4 && (m % 4 == 0 || m >= m_cap)) {
            // augmented projected exponential: entry m is the correction weight
            col = nuvlasov::detail::skew_tridiag_expm_e1(ws.betas, m, dt);
            err = beta0 * std::fabs(col[m - 1]);
            if (err <= tol_abs) break;
        }
        if (m >= m_cap) break;
    }

    if (!breakdown && err > tol_abs) {
        if (depth <= 0)
            throw std::runtime_error("krylov backend did not converge: residual estimate " +
                                     std::to_string(err) + " > tolerance " + std::to_string(tol_abs));
        // halve the substep and recurse
        double e1 = krylov_expm_real(A, dt / 2.0, x, tol_abs / 2.0, m_cap, depth - 1, ws);
        double e2 = krylov_expm_real(A, dt / 2.0, x, tol_abs / 2.0, m_cap, depth - 1, ws);
        return e1 + e2;
    }

    const int mm = static_cast<int>(col.size());
    std::fill(x.begin(), x.end(), 0.0);
    for (int j = 0; j < mm && j < static_cast<int>(ws.basis.size()); ++j)
        cblas_daxpy(static_cast<int>(N), beta0 * col[j], ws.basis[j].data(), 1, x.data(), 1);
    return err;
}

}  // namespace detail

inline std::vector<double> dense_matrix_colmajor(const SparseHamiltonian& A) {
    const std::uint64_t N = A.n;
    std::vector<double> dense(N * N, 0.0);
    for (std::uint64_t i = 0; i < N; ++i)
        for (std::uint64_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p)
            dense[A.col[p] * N + i] = A.val[p];
    return dense;
}

inline std::pair<DistributionState, EvolutionReport> evolve(const DistributionState& state0,
                                                            const PhaseSpaceGrid& grid,
                                                            const ForceField& ff, double T, int n_t,
                                                            Backend backend, double tol = 1e-10,
                                                            int i_iv = 0) {
    if (state0.values.size() != grid.total_count())
        throw std::invalid_argument("evolve: state size does not match grid");
    DistributionState st = state0;
    EvolutionReport rep;
    if (n_t == 0 || T == 0.0) {
        rep.min_real = st.min_real();
        return {st, rep};
    }
    if (n_t < 0) throw std::invalid_argument("evolve: n_t must be >= 0");
    if (n_t != ff.n_t())
        throw std::invalid_argument("evolve: n_t=" + std::to_string(n_t) +
                                    " does not match force field n_t=" + std::to_string(ff.n_t()));
    if (backend == Backend::krylov && !(tol > 0.0))
        throw std::invalid_argument("evolve: krylov backend needs tol > 0");

    const double dt = T / n_t;
    const double norm0 = st.norm();
    const double sum0 = std::abs(st.sum());
    double prev_norm = norm0;
    double prev_sum_re = st.sum().real(), prev_sum_im = st.sum().imag();

    SkewEigen eig;
    bool factored = false;
    detail::KrylovWorkspace ws;
    std::vector<double> re, im;

    for (int it = 0; it < n_t; ++it) {
        const SparseHamiltonian A = assemble(grid, ff, it, i_iv);
        if (backend == Backend::dense) {
            if (!factored || !ff.time_independent()) {
                eig.factor(dense_matrix_colmajor(A), static_cast<int>(A.n));
                factored = true;
            }
            eig.apply_expm(dt, st.values);
        } else {
            const std::uint64_t N = A.n;
            re.resize(N);
            im.resize(N);
            bool any_imag = false;
            for (std::uint64_t k = 0; k < N; ++k) {
                re[k] = st.values[k].real();
                im[k] = st.values[k].imag();
                any_imag = any_imag || (im[k] != 0.0);
            }
            const double step_tol = (tol / n_t) * std::max(st.norm(), 1e-300);
            detail::krylov_expm_real(A, dt, re, step_tol, 200, 40, ws);
            if (any_imag) detail::krylov_expm_real(A, dt, im, step_tol, 200, 40, ws);
            for (std::uint64_t k = 0; k < N; ++k)
                st.values[k] = {re[k], any_imag ? im[k] : 0.0};
        }
        st.time += dt;

        const double nn = st.norm();
        const std::complex<double> ss = st.sum();
        rep.norm_drift.push_back(norm0 > 0 ? std::fabs(nn - prev_norm) / norm0 : 0.0);
        rep.sum_drift.push_back(sum0 > 0 ? std::abs(ss - std::complex<double>(prev_sum_re, prev_sum_im)) / sum0 : 0.0);
        rep.boundary_mass_fraction.push_back(boundary_mass_fraction(st, grid));
        prev_norm = nn;
        prev_sum_re = ss.real();
        prev_sum_im = ss.imag();
    }
    rep.min_real = st.min_real();
    return {st, rep};
}

// Reusable dense propagator for a fixed Hamiltonian slice: factor once,
// apply exp(dt A) any number of times.
class DensePropagator {
  public:
    explicit DensePropagator(const SparseHamiltonian& A) : n_(A.n) {
        eig_.factor(dense_matrix_colmajor(A), static_cast<int>(A.n));
    }
    void apply(DistributionState& st, double dt) const {
        if (st.values.size() != n_) throw std::invalid_argument("DensePropagator: size mismatch");
        if (dt != 0.0) eig_.apply_expm(dt, st.values);
        st.time += dt;
    }

  private:
    std::uint64_t n_;
    SkewEigen eig_;
};

// n_steps equal applications of the same propagator, with the per-step
// diagnostics of evolve()
inline std::pair<DistributionState, EvolutionReport> evolve_steps(const DensePropagator& prop,
                                                                  const DistributionState& state0,
                                                                  const PhaseSpaceGrid& grid,
                                                                  double dt, int n_steps) {
    DistributionState st = state0;
    EvolutionReport rep;
    const double norm0 = st.norm();
    const double sum0 = std::abs(st.sum());
    double prev_norm = norm0;
    std::complex<double> prev_sum = st.sum();
    for (int s = 0; s < n_steps; ++s) {
        prop.apply(st, dt);
        const double nn = st.norm();
        const std::complex<double> ss = st.sum();
        rep.norm_drift.push_back(norm0 > 0 ? std::fabs(nn - prev_norm) / norm0 : 0.0);
        rep.sum_drift.push_back(sum0 > 0 ? std::abs(ss - prev_sum) / sum0 : 0.0);
        rep.boundary_mass_fraction.push_back(boundary_mass_fraction(st, grid));
        prev_norm = nn;
        prev_sum = ss;
    }
    rep.min_real = st.min_real();
    return {st, rep};
}

struct BoxSizingReport {
    double vt_over_l = 0.0;   // V T / L
    double ft_over_v = 0.0;   // F_max T / V
    bool flagged = false;     // particles may exit the box
};

inline BoxSizingReport check_box_sizing(const PhaseSpaceGrid& grid, const ForceField& ff, double T) {
    BoxSizingReport r;
    r.vt_over_l = grid.vmax() * T / grid.box_length();
    r.ft_over_v = ff.fmax() * T / grid.vmax();
    r.flagged = r.vt_over_l > 1.0 || r.ft_over_v > 1.0;
    return r;
}

}  // namespace nuvlasov
