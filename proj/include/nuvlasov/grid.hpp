#pragma once

// Phase-space discretization: d position axes on [0, L) with periodic wrap,
// d velocity axes strictly inside (-V, V) with Dirichlet boundaries, n_gr
// points per axis. Flat indices follow the mixed-radix map with position
// axes first (x fastest), then velocity axes.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nuvlasov {

using MultiIndex = std::array<int, 6>;  // first 2d entries used

class PhaseSpaceGrid {
  public:
    PhaseSpaceGrid(int dim, int ngr, double box_length, double vmax)
        : d_(dim), ngr_(ngr), L_(box_length), V_(vmax) {
        if (dim < 1 || dim > 3)
            throw std::invalid_argument("grid: dim must be 1, 2 or 3");
        if (ngr < 2 || (ngr & (ngr - 1)) != 0)
            throw std::invalid_argument("grid: n_gr must be a power of 2, >= 2");
        if (!(box_length > 0.0) || !(vmax > 0.0))
            throw std::invalid_argument("grid: box sizes must be positive");

        dx_ = L_ / ngr_;
        dv_ = 2.0 * V_ / (ngr_ + 1);

        x_.resize(ngr_);
        for (int i = 0; i < ngr_; ++i) x_[i] = i * dx_;

        // Lower half from the formula, upper half mirrored so that
        // u[n-1-i] == -u[i] holds bit-exactly and the grid sums to zero.
        u_.resize(ngr_);
        for (int i = 0; i < ngr_ / 2; ++i) {
            u_[i] = -V_ + (i + 1) * dv_;
            u_[ngr_ - 1 - i] = -u_[i];
        }

        n_spatial_ = 1;
        for (int k = 0; k < d_; ++k) n_spatial_ *= static_cast<std::uint64_t>(ngr_);
        n_total_ = n_spatial_ * n_spatial_;
    }

    int dim() const { return d_; }
    int ngr() const { return ngr_; }
    double box_length() const { return L_; }
    double vmax() const { return V_; }
    double dx() const { return dx_; }
    double dv() const { return dv_; }
    std::uint64_t spatial_count() const { return n_spatial_; }   // n_gr^d
    std::uint64_t total_count() const { return n_total_; }       // n_gr^{2d}

    const std::vector<double>& x_values() const { return x_; }
    const std::vector<double>& u_values() const { return u_; }

    // i = sum_k i_k n_gr^k, position axes in slots [0,d), velocity in [d,2d).
    std::uint64_t flatten(const MultiIndex& t) const {
        std::uint64_t i = 0;
        for (int k = 2 * d_ - 1; k >= 0; --k) {
            if (t[k] < 0 || t[k] >= ngr_)
                throw std::domain_error("grid: axis index " + std::to_string(t[k]) +
                                        " out of range on axis " + std::to_string(k));
            i = i * ngr_ + static_cast<std::uint64_t>(t[k]);
        }
        return i;
    }

    MultiIndex unflatten(std::uint64_t i) const {
        if (i >= n_total_)
            throw std::domain_error("grid: flat index " + std::to_string(i) + " out of range");
        MultiIndex t{};
        for (int k = 0; k < 2 * d_; ++k) {
            t[k] = static_cast<int>(i % ngr_);
            i /= ngr_;
        }
        return t;
    }

    // Spatial-only flat index (x fastest), used for force samples and densities.
    std::uint64_t flatten_spatial(const MultiIndex& t) const {
        std::uint64_t i = 0;
        for (int k = d_ - 1; k >= 0; --k) {
            if (t[k] < 0 || t[k] >= ngr_)
                throw std::domain_error("grid: spatial index out of range");
            i = i * ngr_ + static_cast<std::uint64_t>(t[k]);
        }
        return i;
    }

    bool on_velocity_boundary(const MultiIndex& t) const {
        for (int a = 0; a < d_; ++a)
            if (t[d_ + a] == 0 || t[d_ + a] == ngr_ - 1) return true;
        return false;
    }

  private:
    int d_;
    int ngr_;
    double L_, V_;
    double dx_, dv_;
    std::uint64_t n_spatial_ = 0, n_total_ = 0;
    std::vector<double> x_, u_;
};

}  // namespace nuvlasov
