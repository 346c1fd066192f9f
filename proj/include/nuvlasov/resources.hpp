#pragma once

// The query- and qubit-count formulas evaluated with unit leading constants
// and natural logarithms. The source expressions are asymptotic, so every
// output is an indicative "unit-constant estimate", not a gate count.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace nuvlasov {

struct ResourceParams {
    int d = 1;
    double n_gr = 64;
    double n_t = 8;
    double T = 0.2;
    double L = 2.0;
    double V = 1.0;
    double F_max = 1.0;
    double epsilon = 0.01;
    double delta_fail = 0.05;
    double C = 1.0;
    double n_iv = 1;

    void validate() const {
        if (d < 1 || d > 3) throw std::invalid_argument("resources: d must be 1, 2 or 3");
        if (!(n_gr > 0) || !(n_t > 0) || !(T > 0) || !(L > 0) || !(V > 0) || F_max < 0)
            throw std::invalid_argument("resources: parameters must be positive");
        if (!(epsilon > 0.0) || epsilon >= 0.5)
            throw std::domain_error("resources: epsilon must lie in (0, 1/2)");
        if (!(delta_fail > 0.0) || delta_fail >= 1.0)
            throw std::domain_error("resources: delta_fail must lie in (0, 1)");
        if (!(C > 0.0) || C > 1.0) throw std::domain_error("resources: C must lie in (0, 1]");
    }
};

// n_gr T max{V/L, F_max/V} + n_t log(n_t/eps): oracle and arithmetic queries
// per state-preparation build
inline double theorem1_queries(const ResourceParams& p) {
    p.validate();
    const double speed = std::max(p.V / p.L, p.F_max / p.V);
    return p.n_gr * p.T * speed + p.n_t * std::log(p.n_t / p.epsilon);
}

// The same expression with the first term reduced to n_gr, the sufficient-box
// simplification V T ~ L, F_max T ~ V.
inline double theorem1_queries_simplified(const ResourceParams& p) {
    p.validate();
    return p.n_gr + p.n_t * std::log(p.n_t / p.epsilon);
}

struct QubitCount {
    double working = 0.0;  // 2 lg N_gr + 5
    double ancilla = 0.0;  // log^{5/2}(argument)
    double total = 0.0;
};

inline QubitCount theorem1_qubits(const ResourceParams& p) {
    p.validate();
    const double speed = std::max(p.V / p.L, p.F_max / p.V);
    const double arg = p.n_gr * p.T * speed / p.epsilon;
    if (!(arg > 1.0)) throw std::domain_error("resources: log argument must exceed 1");
    QubitCount q;
    q.working = 2.0 * (2.0 * p.d) * std::log2(p.n_gr) + 5.0;
    q.ancilla = std::pow(std::log(arg), 2.5);
    q.total = q.working + q.ancilla;
    return q;
}

struct ResourceEstimate {
    ResourceParams params;
    double state_prep_queries = 0.0;        // per U_{f(T)} build, at accuracy C eps / 4
    double qae_repetitions = 0.0;           // (1/(C eps)) log(1/delta)
    double total_force_oracle_queries = 0.0;
    double initial_state_queries = 0.0;     // O_{f(0)} count, one per build
    double qubits = 0.0;
    double simplified_total = 0.0;          // under V T = L, F_max T = V
    double classical_queries = 0.0;         // n_t n_gr^{2d}
};

inline ResourceEstimate theorem2_totals(const ResourceParams& p) {
    p.validate();
    ResourceEstimate r;
    r.params = p;
    ResourceParams pp = p;
    pp.epsilon = p.C * p.epsilon / 4.0;  // per-build accuracy budget
    r.state_prep_queries = theorem1_queries(pp);
    r.qae_repetitions = (1.0 / (p.C * p.epsilon)) * std::log(1.0 / p.delta_fail);
    r.total_force_oracle_queries = r.state_prep_queries * r.qae_repetitions;
    r.initial_state_queries = r.qae_repetitions;
    const double speed = std::max(p.V / p.L, p.F_max / p.V);
    const double arg = p.n_gr * p.T * speed / (p.C * p.epsilon);
    if (!(arg > 1.0)) throw std::domain_error("resources: log argument must exceed 1");
    r.qubits = std::pow(std::log(arg), 2.5) + 2.0 * (2.0 * p.d) * std::log2(p.n_gr) + 5.0;
    r.simplified_total = theorem1_queries_simplified(pp) * r.qae_repetitions;
    r.classical_queries = p.n_t * std::pow(p.n_gr, 2.0 * p.d);
    return r;
}

struct QramFootprint {
    double force_entries_per_slice = 0.0;   // n_gr^d per axis per time slice
    double force_qram_count = 0.0;          // n_t slices x d axes
    double force_entries_total = 0.0;       // x n_IV realizations
    double delta_entries = 0.0;             // n_gr^d
    double bulk_velocity_entries = 0.0;     // d n_gr^d
};

inline QramFootprint qram_footprint(const ResourceParams& p) {
    QramFootprint q;
    const double nd = std::pow(p.n_gr, p.d);
    q.force_entries_per_slice = nd;
    q.force_qram_count = p.n_t * p.d;
    q.force_entries_total = p.n_t * p.d * nd * p.n_iv;
    q.delta_entries = nd;
    q.bulk_velocity_entries = p.d * nd;
    return q;
}

// Smallest power-of-two n_gr at which the quantum total undercuts the
// classical query count, holding everything else fixed. Unit-constant
// estimate; returns 0 if no crossover is found below the cap.
inline double crossover_ngr(ResourceParams p, double cap = 1 << 30) {
    for (double n = 2; n <= cap; n *= 2) {
        p.n_gr = n;
        const ResourceEstimate r = theorem2_totals(p);
        if (r.total_force_oracle_queries < r.classical_queries) return n;
    }
    return 0;
}

}  // namespace nuvlasov
