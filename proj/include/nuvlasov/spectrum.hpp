#pragma once

// Density, perturbation and power-spectrum extraction, plus the operator-W
// route that mirrors how the amplitudes are read off a quantum register:
// W = (QFT per position axis) x (Hadamard-all per velocity axis), and
// |<Omega_ik | W | f>|^2 = C |delta~_ik|^2 for every nonzero mode.
//
// DFT convention (pinned): delta~_k = (1/n_gr^d) sum_x delta_x exp(+2 pi i k.x / n_gr),
// modes indexed literally in [n_gr]_0 per axis, no hermitian folding.

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nuvlasov/grid.hpp"
#include "nuvlasov/initial_conditions.hpp"
#include "nuvlasov/propagator.hpp"

namespace nuvlasov {

namespace detail {

// in-place radix-2 DIT transform, sign=+1 applies exp(+2 pi i jl / n), unnormalized
inline void fft_pow2(std::complex<double>* a, int n, int sign) {
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * M_PI / len;
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                const std::complex<double> even = a[i + k];
                const std::complex<double> odd = a[i + k + len / 2] * w;
                a[i + k] = even + odd;
                a[i + k + len / 2] = even - odd;
                w *= wl;
            }
        }
    }
}

// apply a length-n transform along one axis of a flat tensor with the given
// axis stride (x-fastest layout)
template <typename F>
inline void for_each_line(std::complex<double>* data, std::uint64_t total, int n,
                          std::uint64_t stride, F&& line_op) {
    std::vector<std::complex<double>> buf(n);
    const std::uint64_t block = stride * static_cast<std::uint64_t>(n);
    for (std::uint64_t base = 0; base < total; base += block)
        for (std::uint64_t off = 0; off < stride; ++off) {
            std::complex<double>* p = data + base + off;
            for (int k = 0; k < n; ++k) buf[k] = p[stride * static_cast<std::uint64_t>(k)];
            line_op(buf.data());
            for (int k = 0; k < n; ++k) p[stride * static_cast<std::uint64_t>(k)] = buf[k];
        }
}

inline void hadamard_pow2(std::complex<double>* a, int n) {
    for (int len = 1; len < n; len <<= 1)
        for (int i = 0; i < n; i += 2 * len)
            for (int k = 0; k < len; ++k) {
                const std::complex<double> x = a[i + k];
                const std::complex<double> y = a[i + k + len];
                a[i + k] = x + y;
                a[i + k + len] = x - y;
            }
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (int k = 0; k < n; ++k) a[k] *= s;
}

}  // namespace detail

// rho_{ix} = sum_{iv} f * dv^d
inline std::vector<std::complex<double>> density(const DistributionState& state,
                                                 const PhaseSpaceGrid& grid) {
    if (state.values.size() != grid.total_count())
        throw std::invalid_argument("density: state size mismatch");
    const std::uint64_t nsp = grid.spatial_count();
    double dvd = 1.0;
    for (int a = 0; a < grid.dim(); ++a) dvd *= grid.dv();
    std::vector<std::complex<double>> rho(nsp, 0.0);
    for (std::uint64_t i = 0; i < state.values.size(); ++i) rho[i % nsp] += state.values[i];
    for (auto& r : rho) r *= dvd;
    return rho;
}

// delta = rho / mean(rho) - 1; the mean must be positive for physical (real)
// densities, nonzero in general.
inline std::vector<std::complex<double>> perturbation(const std::vector<std::complex<double>>& rho) {
    if (rho.empty()) throw std::invalid_argument("perturbation: empty density");
    std::complex<double> mean = 0.0;
    bool complex_input = false;
    for (const auto& r : rho) {
        mean += r;
        complex_input = complex_input || (r.imag() != 0.0);
    }
    mean /= static_cast<double>(rho.size());
    if (!complex_input && !(mean.real() > 0.0))
        throw std::domain_error("perturbation: mean density must be positive");
    if (std::abs(mean) == 0.0) throw std::domain_error("perturbation: zero mean density");
    std::vector<std::complex<double>> delta(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) delta[i] = rho[i] / mean - 1.0;
    return delta;
}

// delta~ = (1/n^d) sum_x delta_x exp(+2 pi i k.x / n), via per-axis FFT
inline std::vector<std::complex<double>> fourier(const std::vector<std::complex<double>>& delta,
                                                 const PhaseSpaceGrid& grid) {
    const std::uint64_t nsp = grid.spatial_count();
    if (delta.size() != nsp) throw std::invalid_argument("fourier: size mismatch");
    std::vector<std::complex<double>> out = delta;
    const int n = grid.ngr();
    std::uint64_t stride = 1;
    for (int a = 0; a < grid.dim(); ++a) {
        detail::for_each_line(out.data(), nsp, n, stride,
                              [n](std::complex<double>* line) { detail::fft_pow2(line, n, +1); });
        stride *= static_cast<std::uint64_t>(n);
    }
    const double scale = 1.0 / static_cast<double>(nsp);
    for (auto& v : out) v *= scale;
    return out;
}

inline double knorm_of_mode(const PhaseSpaceGrid& grid, std::uint64_t ik_flat) {
    double k2 = 0.0;
    const double kunit = 2.0 * M_PI / grid.box_length();
    for (int a = 0; a < grid.dim(); ++a) {
        const double c = kunit * static_cast<double>(ik_flat % grid.ngr());
        ik_flat /= grid.ngr();
        k2 += c * c;
    }
    return std::sqrt(k2);
}

// sum of |delta~|^2 over modes with k1 <= ||k_ik|| <= k2, inclusive, modes
// counted at their literal DFT index (conjugate partners count separately)
inline double shell_power(const std::vector<std::complex<double>>& delta_tilde,
                          const PhaseSpaceGrid& grid, double k1, double k2) {
    if (!(k1 >= 0.0) || k2 < k1) throw std::invalid_argument("shell_power: need 0 <= k1 <= k2");
    double acc = 0.0;
    for (std::uint64_t ik = 0; ik < delta_tilde.size(); ++ik) {
        const double kn = knorm_of_mode(grid, ik);
        if (kn >= k1 && kn <= k2) acc += std::norm(delta_tilde[ik]);
    }
    return acc;
}

// W applied to the normalized ket: QFT (positive-sign, 1/sqrt(n)) on each
// position axis, Hadamard-all on each velocity axis.
inline std::vector<std::complex<double>> apply_w(const std::vector<std::complex<double>>& f,
                                                 const PhaseSpaceGrid& grid) {
    const std::uint64_t N = grid.total_count();
    if (f.size() != N) throw std::invalid_argument("apply_w: size mismatch");
    std::vector<std::complex<double>> out = f;
    const int n = grid.ngr();
    const double qscale = 1.0 / std::sqrt(static_cast<double>(n));
    std::uint64_t stride = 1;
    for (int a = 0; a < 2 * grid.dim(); ++a) {
        if (a < grid.dim()) {
            detail::for_each_line(out.data(), N, n, stride, [n, qscale](std::complex<double>* line) {
                detail::fft_pow2(line, n, +1);
                for (int k = 0; k < n; ++k) line[k] *= qscale;
            });
        } else {
            detail::for_each_line(out.data(), N, n, stride,
                                  [n](std::complex<double>* line) { detail::hadamard_pow2(line, n); });
        }
        stride *= static_cast<std::uint64_t>(n);
    }
    return out;
}

// Max over nonzero modes of | |<Omega_ik|W|f>|^2 - C |delta~_ik|^2 |.
inline double w_operator_check(const DistributionState& state, const PhaseSpaceGrid& grid, double C) {
    const double nrm = state.norm();
    if (!(nrm > 0.0)) throw std::domain_error("w_operator_check: zero-norm state");
    std::vector<std::complex<double>> ket(state.values.size());
    for (std::size_t i = 0; i < ket.size(); ++i) ket[i] = state.values[i] / nrm;
    const std::vector<std::complex<double>> wket = apply_w(ket, grid);
    const std::vector<std::complex<double>> dt = fourier(perturbation(density(state, grid)), grid);
    const std::uint64_t nsp = grid.spatial_count();
    double worst = 0.0;
    for (std::uint64_t ik = 1; ik < nsp; ++ik) {
        // amplitude at |ik> on position registers, |0...0> on velocity registers
        const double amp2 = std::norm(wket[ik]);
        worst = std::max(worst, std::fabs(amp2 - C * std::norm(dt[ik])));
    }
    return worst;
}

struct SpectrumResult {
    std::vector<double> rho;          // per spatial grid point
    std::vector<double> delta;        // per spatial grid point
    std::vector<std::complex<double>> delta_tilde;  // per mode, literal index
    std::vector<double> power;        // |delta~|^2 per mode, zero mode reported as 0
    double C = 0.0;
    double parseval_residual = 0.0;   // |sum_k |dt|^2 - (1/n^d) sum_x |delta|^2|
    std::uint64_t dominant_mode = 0;  // argmax of power over nonzero modes
    std::map<std::pair<double, double>, double> shells;
};

inline SpectrumResult compute_spectrum(const DistributionState& state, const PhaseSpaceGrid& grid,
                                       double C) {
    SpectrumResult res;
    res.C = C;
    const auto rho_c = density(state, grid);
    const auto delta_c = perturbation(rho_c);
    res.delta_tilde = fourier(delta_c, grid);
    const std::uint64_t nsp = grid.spatial_count();
    res.rho.resize(nsp);
    res.delta.resize(nsp);
    double sum_d2 = 0.0;
    for (std::uint64_t s = 0; s < nsp; ++s) {
        res.rho[s] = rho_c[s].real();
        res.delta[s] = delta_c[s].real();
        sum_d2 += std::norm(delta_c[s]);
    }
    res.power.resize(nsp);
    double sum_p = 0.0, best = -1.0;
    for (std::uint64_t ik = 0; ik < nsp; ++ik) {
        const double p = std::norm(res.delta_tilde[ik]);
        sum_p += p;
        res.power[ik] = (ik == 0) ? 0.0 : p;
        if (ik >= 1 && res.power[ik] > best) {
            best = res.power[ik];
            res.dominant_mode = ik;
        }
    }
    res.parseval_residual = std::fabs(sum_p - sum_d2 / static_cast<double>(nsp));
    return res;
}

struct EnsemblePower {
    std::vector<double> power;        // per-mode average of |delta~|^2 over realizations
    double route_discrepancy = 0.0;   // max relative gap between the classical average
                                      // and the summed-amplitude probability / C
};

inline EnsemblePower ensemble_power(const EnsembleState& ens, const PhaseSpaceGrid& grid, double C) {
    if (ens.n_iv < 1 || ens.block_size != grid.total_count())
        throw std::invalid_argument("ensemble_power: shape mismatch");
    const std::uint64_t nsp = grid.spatial_count();
    EnsemblePower out;
    out.power.assign(nsp, 0.0);

    // route 1: average the per-realization spectra (blocks carry f^i / sqrt(n_IV);
    // the 1/sqrt scale cancels inside the perturbation)
    for (int b = 0; b < ens.n_iv; ++b) {
        DistributionState st;
        st.values.assign(ens.block(b), ens.block(b) + ens.block_size);
        const auto dt = fourier(perturbation(density(st, grid)), grid);
        for (std::uint64_t ik = 0; ik < nsp; ++ik) out.power[ik] += std::norm(dt[ik]);
    }
    for (auto& p : out.power) p /= static_cast<double>(ens.n_iv);

    // route 2: summed measurement probability of (ik, 0_v, i_IV) on the
    // normalized superposed register, divided by C
    const double gnorm = ens.norm();
    if (!(gnorm > 0.0)) throw std::domain_error("ensemble_power: zero-norm ensemble");
    double worst = 0.0;
    std::vector<double> amp_route(nsp, 0.0);
    std::vector<std::complex<double>> block(ens.block_size);
    for (int b = 0; b < ens.n_iv; ++b) {
        for (std::uint64_t k = 0; k < ens.block_size; ++k) block[k] = ens.block(b)[k] / gnorm;
        const auto wblock = apply_w(block, grid);
        for (std::uint64_t ik = 0; ik < nsp; ++ik) amp_route[ik] += std::norm(wblock[ik]);
    }
    double max_ref = 0.0;
    for (std::uint64_t ik = 1; ik < nsp; ++ik) max_ref = std::max(max_ref, out.power[ik]);
    for (std::uint64_t ik = 1; ik < nsp; ++ik) {
        const double via_amp = amp_route[ik] / C;
        const double ref = out.power[ik];
        // modes at rounding level carry no meaningful relative error
        if (ref > 1e-12 * max_ref) worst = std::max(worst, std::fabs(via_amp - ref) / ref);
    }
    out.route_discrepancy = worst;
    return out;
}

}  // namespace nuvlasov
