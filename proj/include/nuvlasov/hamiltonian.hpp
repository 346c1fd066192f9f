#pragma once

// Sparse antisymmetric generator A(t_{i_t}) of the discretized advection
// equation, df/dt = A f. H = iA is the Hermitian the propagator
// exponentiates; A is stored real. Two independent routes to the entries are
// provided: assemble() walks the tensor-product stencil row by row, while
// oracle_row/oracle_entry realize the sparse-access index arithmetic
// (r_ik = sigma(sigma^{-1}(i) + d_k) with the k-th displacement). The two
// must agree exactly; verify_oracles checks that.
//
// Displacement order: axis-major, -1 before +1, position axes before
// velocity axes. Position displacements wrap periodically; velocity
// displacements leaving [0, n_gr) return the sentinel i + N_gr.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nuvlasov/force_field.hpp"
#include "nuvlasov/grid.hpp"

namespace nuvlasov {

struct SparseHamiltonian {
    int i_t = 0;
    std::uint64_t n = 0;                  // N_gr
    std::vector<std::uint64_t> row_ptr;   // size n+1
    std::vector<std::uint64_t> col;
    std::vector<double> val;
    double max_abs = 0.0;
    int max_row_nnz = 0;

    // y += A x (real)
    void apply(const double* x, double* y) const {
        for (std::uint64_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::uint64_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
                acc += val[p] * x[col[p]];
            y[i] += acc;
        }
    }
};

inline double hmax_bound(const PhaseSpaceGrid& grid, double fmax) {
    const double a = grid.vmax() / grid.box_length();
    const double b = fmax / (2.0 * grid.vmax());
    return std::max(a, b) * grid.ngr() / 2.0;
}

inline SparseHamiltonian assemble(const PhaseSpaceGrid& grid, const ForceField& ff, int i_t,
                                  int i_iv = 0) {
    ff.check_grid(grid);
    if (i_t < 0 || i_t >= ff.n_t()) throw std::domain_error("assemble: i_t out of range");
    const int d = grid.dim(), n = grid.ngr();
    const std::uint64_t N = grid.total_count();
    const double dx = grid.dx(), dv = grid.dv();
    const std::vector<double>& u = grid.u_values();

    SparseHamiltonian h;
    h.i_t = i_t;
    h.n = N;
    h.row_ptr.assign(N + 1, 0);
    h.col.reserve(N * 4 * d);
    h.val.reserve(N * 4 * d);

    std::uint64_t stride[6];
    stride[0] = 1;
    for (int k = 1; k < 2 * d; ++k) stride[k] = stride[k - 1] * n;

    // scratch for one row; at most 4d entries, duplicates summed (n_gr = 2)
    std::vector<std::uint64_t> rc;
    std::vector<double> rv;
    rc.reserve(4 * d);
    rv.reserve(4 * d);

    MultiIndex t{};
    for (std::uint64_t i = 0; i < N; ++i) {
        rc.clear();
        rv.clear();
        auto push = [&](std::uint64_t j, double v) {
            for (std::size_t q = 0; q < rc.size(); ++q)
                if (rc[q] == j) {
                    rv[q] += v;
                    return;
                }
            rc.push_back(j);
            rv.push_back(v);
        };

        const std::uint64_t spatial_flat = i % grid.spatial_count();
        for (int a = 0; a < d; ++a) {
            // position advection: -u/(2dx) at +1 neighbor, +u/(2dx) at -1, periodic
            const double uval = u[t[d + a]];
            const int ia = t[a];
            const std::uint64_t base = i - static_cast<std::uint64_t>(ia) * stride[a];
            push(base + static_cast<std::uint64_t>((ia + 1) % n) * stride[a], -uval / (2.0 * dx));
            push(base + static_cast<std::uint64_t>((ia - 1 + n) % n) * stride[a], uval / (2.0 * dx));

            // velocity forcing: -F/(2dv) at +1 neighbor, +F/(2dv) at -1, Dirichlet
            const double fval = ff.force_at_flat(i_t, spatial_flat, a, i_iv);
            const int iv = t[d + a];
            if (iv + 1 < n) push(i + stride[d + a], -fval / (2.0 * dv));
            if (iv - 1 >= 0) push(i - stride[d + a], fval / (2.0 * dv));
        }

        // entries that are exactly zero (vanishing force, cancelled n_gr = 2
        // duplicates) are not stored; both access routes drop them alike
        std::size_t kept = 0;
        for (std::size_t q = 0; q < rc.size(); ++q) {
            if (rv[q] == 0.0) continue;
            h.col.push_back(rc[q]);
            h.val.push_back(rv[q]);
            h.max_abs = std::max(h.max_abs, std::fabs(rv[q]));
            ++kept;
        }
        h.row_ptr[i + 1] = h.row_ptr[i] + kept;
        h.max_row_nnz = std::max<int>(h.max_row_nnz, static_cast<int>(kept));

        // advance multi-index, x fastest
        for (int k = 0; k < 2 * d; ++k) {
            if (++t[k] < n) break;
            t[k] = 0;
        }
    }
    return h;
}

// Index of the k-th structural nonzero of row i, or i + N_gr when the
// displacement exits the velocity range. k in [0, 4d).
inline std::uint64_t oracle_row(const PhaseSpaceGrid& grid, std::uint64_t i, int k) {
    const int d = grid.dim(), n = grid.ngr();
    if (k < 0 || k >= 4 * d) throw std::domain_error("oracle_row: k out of range");
    MultiIndex t = grid.unflatten(i);
    const int axis = k / 2;               // 0..2d-1, position axes first
    const int step = (k % 2 == 0) ? -1 : +1;
    if (axis < d) {
        t[axis] = (t[axis] + step + n) % n;
    } else {
        t[axis] += step;
        if (t[axis] < 0 || t[axis] >= n) return i + grid.total_count();
    }
    return grid.flatten(t);
}

// Column oracle: by antisymmetry the structural pattern is symmetric, so the
// k-th nonzero of column i sits at the same index as the k-th of row i.
inline std::uint64_t oracle_col(const PhaseSpaceGrid& grid, std::uint64_t i, int k) {
    return oracle_row(grid, i, k);
}

// Entry A_ij as the sum of per-axis contributions, classified from the index
// difference alone; 0 when j is not a structural neighbor.
inline double oracle_entry(const PhaseSpaceGrid& grid, const ForceField& ff, int i_t,
                           std::uint64_t i, std::uint64_t j, int i_iv = 0) {
    const int d = grid.dim(), n = grid.ngr();
    if (i >= grid.total_count() || j >= grid.total_count())
        throw std::domain_error("oracle_entry: index out of range");
    const MultiIndex ti = grid.unflatten(i);
    const MultiIndex tj = grid.unflatten(j);

    int diff_axis = -1;
    for (int k = 0; k < 2 * d; ++k) {
        if (ti[k] == tj[k]) continue;
        if (diff_axis >= 0) return 0.0;  // differs on more than one axis
        diff_axis = k;
    }
    if (diff_axis < 0) return 0.0;  // diagonal

    const double dx = grid.dx(), dv = grid.dv();
    if (diff_axis < d) {
        // D_per picks +1 at the forward periodic neighbor and -1 at the backward one
        const int ia = ti[diff_axis], ja = tj[diff_axis];
        int dper = 0;
        if (ja == (ia + 1) % n) dper += 1;
        if (ja == (ia - 1 + n) % n) dper -= 1;
        if (dper == 0 && ja != (ia + 1) % n && ja != (ia - 1 + n) % n) return 0.0;
        const double uval = grid.u_values()[ti[d + diff_axis]];
        return -static_cast<double>(dper) * uval / (2.0 * dx);
    }
    const int axis = diff_axis - d;
    const int delta = tj[diff_axis] - ti[diff_axis];
    if (delta != 1 && delta != -1) return 0.0;
    MultiIndex sp{};
    for (int k = 0; k < d; ++k) sp[k] = ti[k];
    const double fval = ff.force_at(i_t, sp, axis, grid, i_iv);
    return -static_cast<double>(delta) * fval / (2.0 * dv);
}

struct OracleVerification {
    std::uint64_t checked = 0;
    std::uint64_t mismatches = 0;
    std::uint64_t first_i = 0, first_j = 0;
    bool ok() const { return mismatches == 0; }
};

// Rebuild the matrix from oracle_row/oracle_entry and compare entrywise,
// exactly, against the assembled form.
inline OracleVerification verify_oracles(const SparseHamiltonian& h, const PhaseSpaceGrid& grid,
                                         const ForceField& ff, int i_iv = 0) {
    OracleVerification rep;
    const int d = grid.dim();
    const std::uint64_t N = grid.total_count();
    auto note = [&](std::uint64_t i, std::uint64_t j) {
        if (rep.mismatches == 0) {
            rep.first_i = i;
            rep.first_j = j;
        }
        ++rep.mismatches;
    };

    std::vector<std::uint64_t> ocols;
    std::vector<double> ovals;
    for (std::uint64_t i = 0; i < N; ++i) {
        ocols.clear();
        ovals.clear();
        for (int k = 0; k < 4 * d; ++k) {
            const std::uint64_t r = oracle_row(grid, i, k);
            if (r >= N) continue;  // sentinel
            if (oracle_col(grid, i, k) != r) note(i, r);
            bool dup = false;
            for (std::size_t q = 0; q < ocols.size(); ++q)
                if (ocols[q] == r) {
                    dup = true;  // n_gr = 2: the entry already carries the net value
                    break;
                }
            if (dup) continue;
            ocols.push_back(r);
            ovals.push_back(oracle_entry(grid, ff, h.i_t, i, r, i_iv));
        }
        // compare with assembled row i; exact zeros are unstored on both routes
        const std::uint64_t lo = h.row_ptr[i], hi = h.row_ptr[i + 1];
        std::size_t nonzero_oracle = 0;
        for (std::size_t q = 0; q < ocols.size(); ++q) {
            if (ovals[q] == 0.0) continue;
            ++nonzero_oracle;
            bool found = false;
            for (std::uint64_t p = lo; p < hi; ++p)
                if (h.col[p] == ocols[q]) {
                    found = true;
                    ++rep.checked;
                    if (h.val[p] != ovals[q]) note(i, ocols[q]);
                    break;
                }
            if (!found) note(i, ocols[q]);
        }
        if (hi - lo != nonzero_oracle) note(i, N);  // nonzero counts differ
    }
    return rep;
}

}  // namespace nuvlasov
