#pragma once

// Initial distribution states and the normalization constant
// C = ((sum_i f_i)^2 / N_gr) / sum_i f_i^2, the conversion factor between
// measured amplitudes and |delta~|^2. C is computed from f(0); the norm is
// conserved exactly and the entry sum approximately, so the value carries to
// the terminal time.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "nuvlasov/force_field.hpp"
#include "nuvlasov/grid.hpp"
#include "nuvlasov/propagator.hpp"

namespace nuvlasov {

struct FermiDiracParams {
    double v_th = 0.0;  // k_B T_nu / m_nu
};

class PerturbationField {
  public:
    // delta: n_gr^d samples; vb: d * n_gr^d samples (axis-major), may be empty for zero bulk flow.
    PerturbationField(int dim, int ngr, std::vector<double> delta, std::vector<double> vb)
        : d_(dim), ngr_(ngr), delta_(std::move(delta)), vb_(std::move(vb)) {
        std::uint64_t nsp = 1;
        for (int k = 0; k < d_; ++k) nsp *= static_cast<std::uint64_t>(ngr_);
        if (delta_.size() != nsp) throw std::invalid_argument("perturbation: delta sample count mismatch");
        if (vb_.empty()) vb_.assign(static_cast<std::uint64_t>(d_) * nsp, 0.0);
        if (vb_.size() != static_cast<std::uint64_t>(d_) * nsp)
            throw std::invalid_argument("perturbation: bulk velocity sample count mismatch");
        double mean = 0.0;
        for (double v : delta_) {
            if (!std::isfinite(v)) throw std::invalid_argument("perturbation: non-finite delta");
            mean += v;
        }
        mean /= static_cast<double>(nsp);
        if (std::fabs(mean) > 1e-12)
            throw std::invalid_argument("perturbation: delta must have zero grid mean");
        for (double v : vb_)
            if (!std::isfinite(v)) throw std::invalid_argument("perturbation: non-finite bulk velocity");
    }

    static PerturbationField zero(const PhaseSpaceGrid& grid) {
        return PerturbationField(grid.dim(), grid.ngr(),
                                 std::vector<double>(grid.spatial_count(), 0.0), {});
    }

    int dim() const { return d_; }
    int ngr() const { return ngr_; }
    double delta(std::uint64_t spatial_flat) const { return delta_[spatial_flat]; }
    double vb(std::uint64_t spatial_flat, int axis) const {
        return vb_[static_cast<std::uint64_t>(axis) * delta_.size() + spatial_flat];
    }
    const std::vector<double>& delta_samples() const { return delta_; }

  private:
    int d_, ngr_;
    std::vector<double> delta_, vb_;
};

// Perturbation files reuse the VQFF1 container with n_t = 2: time slice 0
// holds delta in axis channel 0, slice 1 holds the bulk velocity components.
inline PerturbationField load_perturbation(const std::string& path, const PhaseSpaceGrid& grid,
                                           int i_iv = 0) {
    Vqff1Raw raw = read_vqff1(path);
    if (raw.d != grid.dim() || raw.ngr != grid.ngr())
        throw std::runtime_error("perturbation: dimension mismatch in " + path);
    if (raw.n_t != 2)
        throw std::runtime_error("perturbation: expected n_t=2 channel layout in " + path);
    if (i_iv < 0 || i_iv >= raw.n_iv) throw std::domain_error("perturbation: i_IV out of range");
    const std::uint64_t nsp = grid.spatial_count();
    const int d = grid.dim();
    const std::uint64_t base = static_cast<std::uint64_t>(i_iv) * 2 * d * nsp;
    std::vector<double> delta(raw.samples.begin() + base, raw.samples.begin() + base + nsp);
    std::vector<double> vb(raw.samples.begin() + base + static_cast<std::uint64_t>(d) * nsp,
                           raw.samples.begin() + base + 2 * static_cast<std::uint64_t>(d) * nsp);
    return PerturbationField(d, grid.ngr(), std::move(delta), std::move(vb));
}

inline void write_perturbation(const std::string& path, const PhaseSpaceGrid& grid,
                               const std::vector<PerturbationField>& realizations) {
    if (realizations.empty()) throw std::invalid_argument("write_perturbation: empty list");
    const int d = grid.dim();
    const std::uint64_t nsp = grid.spatial_count();
    std::vector<double> samples;
    samples.reserve(realizations.size() * 2 * d * nsp);
    for (const PerturbationField& p : realizations) {
        if (p.dim() != d || p.ngr() != grid.ngr())
            throw std::invalid_argument("write_perturbation: shape mismatch");
        for (std::uint64_t s = 0; s < nsp; ++s) samples.push_back(p.delta(s));
        for (std::uint64_t s = 0; s < (static_cast<std::uint64_t>(d) - 1) * nsp; ++s)
            samples.push_back(0.0);  // unused channels of slice 0
        for (int a = 0; a < d; ++a)
            for (std::uint64_t s = 0; s < nsp; ++s) samples.push_back(p.vb(s, a));
    }
    write_vqff1(path, d, grid.ngr(), 2, static_cast<int>(realizations.size()), samples);
}

// f(0,x,u) constant in x, product of 1D Maxwell factors over velocity axes.
inline DistributionState maxwell_demo(const PhaseSpaceGrid& grid, double sigma_v) {
    if (!(sigma_v > 0.0)) throw std::invalid_argument("maxwell_demo: sigma_v must be positive");
    const int d = grid.dim(), n = grid.ngr();
    const double norm1d = 1.0 / std::sqrt(2.0 * M_PI * sigma_v * sigma_v);
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) {
        const double u = grid.u_values()[i];
        g[i] = norm1d * std::exp(-u * u / (2.0 * sigma_v * sigma_v));
    }
    DistributionState st;
    st.values.resize(grid.total_count());
    const std::uint64_t N = grid.total_count();
    for (std::uint64_t i = 0; i < N; ++i) {
        MultiIndex t = grid.unflatten(i);
        double v = 1.0;
        for (int a = 0; a < d; ++a) v *= g[t[d + a]];
        st.values[i] = v;
    }
    return st;
}

inline double fermi_dirac(double speed, double v_th) {
    return 1.0 / (std::exp(speed / v_th) + 1.0);
}

// f(0) = (1 + delta(x)) F_FD(||v - v_b(x)||)
inline DistributionState fermi_dirac_state(const PhaseSpaceGrid& grid, const FermiDiracParams& params,
                                           const PerturbationField& pert) {
    if (!(params.v_th > 0.0)) throw std::invalid_argument("fermi_dirac_state: v_th must be positive");
    if (pert.dim() != grid.dim() || pert.ngr() != grid.ngr())
        throw std::invalid_argument("fermi_dirac_state: perturbation shape mismatch");
    const int d = grid.dim();
    const std::uint64_t N = grid.total_count(), nsp = grid.spatial_count();
    for (std::uint64_t s = 0; s < nsp; ++s)
        if (1.0 + pert.delta(s) < 0.0)
            throw std::domain_error("fermi_dirac_state: 1 + delta < 0 (unphysical density)");
    DistributionState st;
    st.values.resize(N);
    for (std::uint64_t i = 0; i < N; ++i) {
        MultiIndex t = grid.unflatten(i);
        const std::uint64_t s = i % nsp;
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
            const double dvb = grid.u_values()[t[d + a]] - pert.vb(s, a);
            r2 += dvb * dvb;
        }
        st.values[i] = (1.0 + pert.delta(s)) * fermi_dirac(std::sqrt(r2), params.v_th);
    }
    return st;
}

// C = (|sum f|^2 / N) / ||f||^2; equals 1 iff f is uniform, 1/N at extreme
// concentration. Defined for complex states via |sum|^2.
inline double compute_C(const DistributionState& state) {
    const double nrm2 = state.norm() * state.norm();
    if (!(nrm2 > 0.0)) throw std::domain_error("compute_C: state has zero norm");
    const double s2 = std::norm(state.sum());
    return (s2 / static_cast<double>(state.values.size())) / nrm2;
}

namespace detail {

// integral over R^d of g(||v||): surface measure times adaptive Simpson in r,
// truncated where the integrand drops below 1e-16 of its peak.
inline double radial_integral(const std::function<double(double)>& g, int d, double scale) {
    const double omega = (d == 1) ? 2.0 : (d == 2 ? 2.0 * M_PI : 4.0 * M_PI);
    auto integrand = [&](double r) { return (d == 1 ? 1.0 : (d == 2 ? r : r * r)) * g(r); };
    double rmax = scale;
    while (g(rmax) > 1e-16 * g(0.0) && rmax < 1e6 * scale) rmax *= 1.5;
    // composite Simpson, fine enough for the smooth exponential tails involved
    const int m = 20001;
    const double h = rmax / (m - 1);
    double acc = integrand(0.0) + integrand(rmax);
    for (int k = 1; k + 1 < m; ++k) acc += integrand(k * h) * (k % 2 ? 4.0 : 2.0);
    const double val = omega * acc * h / 3.0;
    if (!std::isfinite(val)) throw std::runtime_error("radial_integral: quadrature failed");
    return val;
}

}  // namespace detail

// Semianalytic C for the Fermi-Dirac form: the full velocity sum of F_FD^2 is
// replaced by the closed integral over R^d (bulk-velocity independent by
// translation invariance); the numerator comes from the normalization of f,
// i.e. the exact mean, which only needs the cheap single-axis sums.
inline double compute_C_semianalytic(const PhaseSpaceGrid& grid, const FermiDiracParams& params,
                                     const PerturbationField& pert) {
    if (!(params.v_th > 0.0)) throw std::invalid_argument("compute_C_semianalytic: v_th must be positive");
    const int d = grid.dim(), n = grid.ngr();
    const std::uint64_t nsp = grid.spatial_count();

    // S1 = sum_v F_FD(||v||), exact (v_b dropped by translation invariance)
    double S1 = 0.0;
    MultiIndex t{};
    for (std::uint64_t iv = 0; iv < nsp; ++iv) {
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
            const double u = grid.u_values()[t[a]];
            r2 += u * u;
        }
        S1 += fermi_dirac(std::sqrt(r2), params.v_th);
        for (int k = 0; k < d; ++k) {
            if (++t[k] < n) break;
            t[k] = 0;
        }
    }

    const double I2 = detail::radial_integral(
        [&](double r) { const double f = fermi_dirac(r, params.v_th); return f * f; }, d,
        params.v_th);
    double G = 0.0;
    for (std::uint64_t s = 0; s < nsp; ++s) {
        const double w = 1.0 + pert.delta(s);
        G += w * w;
    }
    G /= static_cast<double>(nsp);

    double dvd = 1.0;
    for (int a = 0; a < d; ++a) dvd *= grid.dv();
    // C = S1^2 / (n^d * G * S2) with S2 ~ I2 / dv^d
    return S1 * S1 / (static_cast<double>(nsp) * G * (I2 / dvd));
}

// Block vector over [N_gr] x [n_IV]: block i_IV holds f^{(i_IV)} / sqrt(n_IV),
// the classical image of the superposed initial-value register.
struct EnsembleState {
    int n_iv = 0;
    std::uint64_t block_size = 0;
    std::vector<std::complex<double>> data;

    std::complex<double>* block(int i) { return data.data() + static_cast<std::uint64_t>(i) * block_size; }
    const std::complex<double>* block(int i) const {
        return data.data() + static_cast<std::uint64_t>(i) * block_size;
    }
    double norm() const {
        double s = 0.0;
        for (const auto& v : data) s += std::norm(v);
        return std::sqrt(s);
    }
};

inline EnsembleState build_ensemble(const std::vector<DistributionState>& states) {
    if (states.empty()) throw std::invalid_argument("build_ensemble: empty list");
    const int n_iv = static_cast<int>(states.size());
    if ((n_iv & (n_iv - 1)) != 0) throw std::invalid_argument("build_ensemble: n_IV must be a power of 2");
    const std::uint64_t N = states[0].values.size();
    for (const auto& s : states)
        if (s.values.size() != N) throw std::invalid_argument("build_ensemble: mismatched state sizes");
    EnsembleState ens;
    ens.n_iv = n_iv;
    ens.block_size = N;
    ens.data.resize(N * static_cast<std::uint64_t>(n_iv));
    const double w = 1.0 / std::sqrt(static_cast<double>(n_iv));
    for (int b = 0; b < n_iv; ++b)
        for (std::uint64_t k = 0; k < N; ++k) ens.data[static_cast<std::uint64_t>(b) * N + k] = states[b].values[k] * w;
    return ens;
}

}  // namespace nuvlasov
