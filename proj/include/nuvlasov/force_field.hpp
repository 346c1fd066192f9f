#pragma once

// Piecewise-time-constant CDM force samples on the spatial grid, acting as
// the classical stand-in for the QRAM-backed force oracles. Samples live in
// a self-describing little-endian container ("VQFF1"):
//
//   bytes 0..5   ASCII magic "VQFF1\n"
//   u32 d, n_gr, n_t, n_IV
//   n_IV * n_t * d * n_gr^d float64 samples, ordered i_IV outer, then i_t,
//   then axis, then spatial index row-major with x fastest.
//
// Perturbation fields reuse the same container with n_t = 2: slice 0 carves
// delta out of axis channel 0 (other axes ignored), slice 1 holds the bulk
// velocity components. See initial_conditions.hpp.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nuvlasov/grid.hpp"

namespace nuvlasov {

struct AnalyticForce {
    double amplitude = 0.0;   // A
    double wavenumber = 0.0;  // K; F_x(x) = A sin(K x), other axes zero
};

class ForceField {
  public:
    ForceField(int dim, int ngr, int n_t, int n_iv, std::vector<double> samples)
        : d_(dim), ngr_(ngr), nt_(n_t), niv_(n_iv), samples_(std::move(samples)) {
        if (nt_ < 1 || niv_ < 1) throw std::invalid_argument("force field: n_t and n_IV must be >= 1");
        nsp_ = 1;
        for (int k = 0; k < d_; ++k) nsp_ *= static_cast<std::uint64_t>(ngr_);
        const std::uint64_t expect = static_cast<std::uint64_t>(niv_) * nt_ * d_ * nsp_;
        if (samples_.size() != expect)
            throw std::invalid_argument("force field: sample count mismatch");
        fmax_ = 0.0;
        for (std::uint64_t r = 0; r < samples_.size(); ++r) {
            if (!std::isfinite(samples_[r]))
                throw std::runtime_error("force field: non-finite sample at record " + std::to_string(r));
            fmax_ = std::max(fmax_, std::fabs(samples_[r]));
        }
        time_independent_ = true;
        for (int it = 1; it < nt_ && time_independent_; ++it)
            for (std::uint64_t r = 0; r < static_cast<std::uint64_t>(d_) * nsp_; ++r)
                if (samples_[slice_offset(0, it) + r] != samples_[slice_offset(0, 0) + r]) {
                    time_independent_ = false;
                    break;
                }
    }

    int dim() const { return d_; }
    int ngr() const { return ngr_; }
    int n_t() const { return nt_; }
    int n_iv() const { return niv_; }
    double fmax() const { return fmax_; }
    bool time_independent() const { return time_independent_; }

    // Pure lookup; force is constant on [t_{i_t}, t_{i_t+1}).
    double force_at(int i_t, const MultiIndex& spatial, int axis, const PhaseSpaceGrid& grid,
                    int i_iv = 0) const {
        check_grid(grid);
        if (i_t < 0 || i_t >= nt_) throw std::domain_error("force field: i_t out of range");
        if (axis < 0 || axis >= d_) throw std::domain_error("force field: axis out of range");
        if (i_iv < 0 || i_iv >= niv_) throw std::domain_error("force field: i_IV out of range");
        const std::uint64_t s = grid.flatten_spatial(spatial);
        return samples_[(slice_offset(i_iv, i_t) + static_cast<std::uint64_t>(axis) * nsp_) + s];
    }

    double force_at_flat(int i_t, std::uint64_t spatial_flat, int axis, int i_iv = 0) const {
        return samples_[slice_offset(i_iv, i_t) + static_cast<std::uint64_t>(axis) * nsp_ + spatial_flat];
    }

    // Largest |F| within one realization; fmax() covers all realizations.
    double fmax_of(int i_iv) const {
        if (i_iv < 0 || i_iv >= niv_) throw std::domain_error("force field: i_IV out of range");
        double m = 0.0;
        const std::uint64_t per_iv = static_cast<std::uint64_t>(nt_) * d_ * nsp_;
        for (std::uint64_t r = 0; r < per_iv; ++r)
            m = std::max(m, std::fabs(samples_[per_iv * i_iv + r]));
        return m;
    }

    void check_grid(const PhaseSpaceGrid& grid) const {
        if (grid.dim() != d_ || grid.ngr() != ngr_)
            throw std::invalid_argument("force field: grid shape mismatch (field d=" + std::to_string(d_) +
                                        " n_gr=" + std::to_string(ngr_) + ")");
    }

    const std::vector<double>& samples() const { return samples_; }

  private:
    std::uint64_t slice_offset(int i_iv, int i_t) const {
        return (static_cast<std::uint64_t>(i_iv) * nt_ + i_t) * d_ * nsp_;
    }

    int d_, ngr_, nt_, niv_;
    std::uint64_t nsp_;
    std::vector<double> samples_;
    double fmax_ = 0.0;
    bool time_independent_ = false;
};

// F_x = A sin(K x) on every time slice, other axes zero.
inline ForceField sample_analytic(const AnalyticForce& f, const PhaseSpaceGrid& grid, int n_t,
                                  int n_iv = 1) {
    if (n_t < 1) throw std::invalid_argument("sample_analytic: n_t must be >= 1");
    const int d = grid.dim(), n = grid.ngr();
    const std::uint64_t nsp = grid.spatial_count();
    std::vector<double> slice(static_cast<std::uint64_t>(d) * nsp, 0.0);
    for (std::uint64_t s = 0; s < nsp; ++s)
        slice[s] = f.amplitude * std::sin(f.wavenumber * grid.x_values()[s % n]);
    std::vector<double> all;
    all.reserve(static_cast<std::uint64_t>(n_iv) * n_t * slice.size());
    for (int r = 0; r < n_iv * n_t; ++r) all.insert(all.end(), slice.begin(), slice.end());
    return ForceField(d, n, n_t, n_iv, std::move(all));
}

// One field per realization, all shapes equal.
inline ForceField merge_realizations(const std::vector<ForceField>& fields) {
    if (fields.empty()) throw std::invalid_argument("merge_realizations: empty list");
    const ForceField& f0 = fields.front();
    std::vector<double> all;
    for (const ForceField& f : fields) {
        if (f.dim() != f0.dim() || f.ngr() != f0.ngr() || f.n_t() != f0.n_t() || f.n_iv() != 1)
            throw std::invalid_argument("merge_realizations: mismatched shapes across realizations");
        all.insert(all.end(), f.samples().begin(), f.samples().end());
    }
    return ForceField(f0.dim(), f0.ngr(), f0.n_t(), static_cast<int>(fields.size()), std::move(all));
}

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is, const std::string& what) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw std::runtime_error("VQFF1: truncated header while reading " + what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace detail

inline void write_vqff1(const std::string& path, int d, int ngr, int n_t, int n_iv,
                        const std::vector<double>& samples) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("VQFF1: cannot open " + path + " for writing");
    os.write("VQFF1\n", 6);
    detail::put_u32(os, static_cast<std::uint32_t>(d));
    detail::put_u32(os, static_cast<std::uint32_t>(ngr));
    detail::put_u32(os, static_cast<std::uint32_t>(n_t));
    detail::put_u32(os, static_cast<std::uint32_t>(n_iv));
    static_assert(sizeof(double) == 8);
    os.write(reinterpret_cast<const char*>(samples.data()),
             static_cast<std::streamsize>(samples.size() * sizeof(double)));
    if (!os) throw std::runtime_error("VQFF1: write failed for " + path);
}

inline void write_vqff1(const std::string& path, const ForceField& ff) {
    write_vqff1(path, ff.dim(), ff.ngr(), ff.n_t(), ff.n_iv(), ff.samples());
}

struct Vqff1Raw {
    int d = 0, ngr = 0, n_t = 0, n_iv = 0;
    std::vector<double> samples;
};

inline Vqff1Raw read_vqff1(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("VQFF1: cannot open " + path);
    char magic[6];
    if (!is.read(magic, 6) || std::memcmp(magic, "VQFF1\n", 6) != 0)
        throw std::runtime_error("VQFF1: bad magic in " + path);
    Vqff1Raw raw;
    raw.d = static_cast<int>(detail::get_u32(is, "d"));
    raw.ngr = static_cast<int>(detail::get_u32(is, "n_gr"));
    raw.n_t = static_cast<int>(detail::get_u32(is, "n_t"));
    raw.n_iv = static_cast<int>(detail::get_u32(is, "n_IV"));
    if (raw.d < 1 || raw.d > 3 || raw.ngr < 2 || raw.n_t < 1 || raw.n_iv < 1)
        throw std::runtime_error("VQFF1: malformed header in " + path);
    std::uint64_t nsp = 1;
    for (int k = 0; k < raw.d; ++k) nsp *= static_cast<std::uint64_t>(raw.ngr);
    const std::uint64_t count = static_cast<std::uint64_t>(raw.n_iv) * raw.n_t * raw.d * nsp;
    raw.samples.resize(count);
    if (!is.read(reinterpret_cast<char*>(raw.samples.data()),
                 static_cast<std::streamsize>(count * sizeof(double))))
        throw std::runtime_error("VQFF1: truncated sample block in " + path);
    return raw;
}

inline ForceField load_force_field(const std::string& path, const PhaseSpaceGrid& grid) {
    Vqff1Raw raw = read_vqff1(path);
    if (raw.d != grid.dim() || raw.ngr != grid.ngr())
        throw std::runtime_error("VQFF1: dimension mismatch: file (d=" + std::to_string(raw.d) +
                                 ", n_gr=" + std::to_string(raw.ngr) + ") vs grid (d=" +
                                 std::to_string(grid.dim()) + ", n_gr=" + std::to_string(grid.ngr()) + ")");
    for (std::uint64_t r = 0; r < raw.samples.size(); ++r)
        if (!std::isfinite(raw.samples[r]))
            throw std::runtime_error("VQFF1: non-finite value at record " + std::to_string(r) +
                                     " in " + path);
    return ForceField(raw.d, raw.ngr, raw.n_t, raw.n_iv, std::move(raw.samples));
}

}  // namespace nuvlasov
