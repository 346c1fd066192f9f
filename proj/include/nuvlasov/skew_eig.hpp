#pragma once

// Eigendecomposition machinery for real skew-symmetric matrices, used by the
// dense propagator backend and by the Krylov backend's small projected
// exponentials.
//
// For skew-symmetric A, Hessenberg reduction Q^T A Q = T yields a tridiagonal
// skew matrix (subdiagonal beta_j). iT is Hermitian and phase-similar to the
// real symmetric tridiagonal S = tridiag(beta) via D = diag((-i)^j), so with
// S = Z Lambda Z^T the Hermitian H = iA factors as H = U Lambda U^dagger,
// U = Q diag(i^j) Z, and exp(tA) = exp(-iHt) = U exp(-i Lambda t) U^dagger.

#include <cblas.h>
#include <lapacke.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace nuvlasov {

namespace detail {

// col = exp(dt * T) e_1 for the skew tridiagonal T given by its subdiagonal
// betas (size m-1). Returns the real result (exp of a real matrix).
inline std::vector<double> skew_tridiag_expm_e1(const std::vector<double>& betas, int m, double dt) {
    std::vector<double> diag(m, 0.0);
    std::vector<double> off(betas.begin(), betas.begin() + (m > 1 ? m - 1 : 0));
    std::vector<double> z(static_cast<std::size_t>(m) * m);
    if (m == 1) {
        return {1.0};
    }
    int info = LAPACKE_dstedc(LAPACK_COL_MAJOR, 'I', m, diag.data(), off.data(), z.data(), m);
    if (info != 0) throw std::runtime_error("skew_tridiag_expm_e1: dstedc failed");
    std::vector<double> col(m, 0.0);
    for (int j = 0; j < m; ++j) {
        double sc = 0.0, ss = 0.0;
        for (int k = 0; k < m; ++k) {
            const double w = z[static_cast<std::size_t>(k) * m + j] * z[static_cast<std::size_t>(k) * m];
            sc += w * std::cos(diag[k] * dt);
            ss += w * std::sin(diag[k] * dt);
        }
        // real part of i^j (sc - i ss)
        switch (j & 3) {
            case 0: col[j] = sc; break;
            case 1: col[j] = ss; break;
            case 2: col[j] = -sc; break;
            default: col[j] = -ss; break;
        }
    }
    return col;
}

}  // namespace detail

class SkewEigen {
  public:
    // a: dense col-major n x n skew-symmetric matrix; consumed.
    void factor(std::vector<double>&& a, int n) {
        n_ = n;
        q_ = std::move(a);
        std::vector<double> tau(n_ > 0 ? n_ : 1);
        int info = LAPACKE_dgehrd(LAPACK_COL_MAJOR, n_, 1, n_, q_.data(), n_, tau.data());
        if (info != 0) throw std::runtime_error("SkewEigen: dgehrd failed");
        std::vector<double> beta(n_ > 1 ? n_ - 1 : 0);
        for (int j = 0; j + 1 < n_; ++j) beta[j] = q_[static_cast<std::size_t>(j) * n_ + j + 1];
        info = LAPACKE_dorghr(LAPACK_COL_MAJOR, n_, 1, n_, q_.data(), n_, tau.data());
        if (info != 0) throw std::runtime_error("SkewEigen: dorghr failed");

        lambda_.assign(n_, 0.0);
        z_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
        if (n_ == 1) {
            z_[0] = 1.0;
        } else {
            info = LAPACKE_dstedc(LAPACK_COL_MAJOR, 'I', n_, lambda_.data(), beta.data(), z_.data(), n_);
            if (info != 0) throw std::runtime_error("SkewEigen: dstedc failed");
        }
    }

    int size() const { return n_; }
    const std::vector<double>& eigenvalues() const { return lambda_; }  // of H = iA

    // state <- exp(t A) state = exp(-i H t) state
    void apply_expm(double t, std::vector<std::complex<double>>& state) const {
        if (static_cast<int>(state.size()) != n_)
            throw std::invalid_argument("SkewEigen::apply_expm: size mismatch");
        split(state, xr_, xi_);
        // w = Q^T x
        gemv(true, q_, xr_, wr_);
        gemv(true, q_, xi_, wi_);
        // w <- diag((-i)^j) w
        rotate(wr_, wi_, /*dagger=*/false);
        // y = Z^T w
        gemv(true, z_, wr_, yr_);
        gemv(true, z_, wi_, yi_);
        // y <- exp(-i lambda t) y
        for (int k = 0; k < n_; ++k) {
            const double c = std::cos(lambda_[k] * t), s = std::sin(lambda_[k] * t);
            const double a = yr_[k], b = yi_[k];
            yr_[k] = a * c + b * s;   // (a+ib)(c - is)
            yi_[k] = b * c - a * s;
        }
        // w = Z y
        gemv(false, z_, yr_, wr_);
        gemv(false, z_, yi_, wi_);
        // w <- diag(i^j) w
        rotate(wr_, wi_, /*dagger=*/true);
        // x = Q w
        gemv(false, q_, wr_, xr_);
        gemv(false, q_, wi_, xi_);
        for (int k = 0; k < n_; ++k) state[k] = {xr_[k], xi_[k]};
    }

  private:
    void split(const std::vector<std::complex<double>>& s, std::vector<double>& re,
               std::vector<double>& im) const {
        re.resize(n_);
        im.resize(n_);
        for (int k = 0; k < n_; ++k) {
            re[k] = s[k].real();
            im[k] = s[k].imag();
        }
    }

    void gemv(bool trans, const std::vector<double>& m, std::vector<double>& x,
              std::vector<double>& y) const {
        y.resize(n_);
        cblas_dgemv(CblasColMajor, trans ? CblasTrans : CblasNoTrans, n_, n_, 1.0, m.data(), n_,
                    x.data(), 1, 0.0, y.data(), 1);
    }

    // multiply component j by (-i)^j (dagger=false) or i^j (dagger=true)
    void rotate(std::vector<double>& re, std::vector<double>& im, bool dagger) const {
        for (int j = 0; j < n_; ++j) {
            const int ph = dagger ? (j & 3) : ((4 - (j & 3)) & 3);  // exponent of i
            const double a = re[j], b = im[j];
            switch (ph) {
                case 0: break;
                case 1: re[j] = -b; im[j] = a; break;
                case 2: re[j] = -a; im[j] = -b; break;
                default: re[j] = b; im[j] = -a; break;
            }
        }
    }

    int n_ = 0;
    std::vector<double> q_, z_, lambda_;
    mutable std::vector<double> xr_, xi_, wr_, wi_, yr_, yi_;
};

}  // namespace nuvlasov
