// lindblad.hpp: Pair-jump master equation for N spins, dark-state analysis and the
// grouped-superradiance comparison.
//
// Master equation in Kossakowski form over jump operators L_a:
//   drho/dt = -i[H, rho] + sum_ab G_ab (L_a rho L_b^+ - 1/2 {L_b^+ L_a, rho})
// For the pair equation L_a = sigma_i^- sigma_j^-, G_ab = Gamma_{ij,kl} and
// H = 1/2 sum_ab U_{ij,kl} (L_b^+ L_a + h.c.).
// Spin basis: bit j of the basis index set means spin j is excited.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/MatrixFunctions>

#include "nlwg/correlation.hpp"
#include "nlwg/io.hpp"
#include "nlwg/ode.hpp"
#include "nlwg/types.hpp"

namespace nlwg {

using SparseMatrixC = Eigen::SparseMatrix<cplx>;

inline constexpr int max_lindblad_spins = 8;

// ---- spin operators -------------------------------------------------------

inline SparseMatrixC spin_lowering(int n_spins, int j) {
    const int D = 1 << n_spins;
    std::vector<Eigen::Triplet<cplx>> t;
    for (int s = 0; s < D; ++s)
        if (s >> j & 1) t.emplace_back(s & ~(1 << j), s, 1.0);
    SparseMatrixC m(D, D);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

inline SparseMatrixC pair_lowering(int n_spins, int i, int j) {
    require(i != j, "pair_lowering: spins must differ");
    return spin_lowering(n_spins, i) * spin_lowering(n_spins, j);
}

inline SparseMatrixC collective_lowering(int n_spins) {
    SparseMatrixC s(1 << n_spins, 1 << n_spins);
    for (int j = 0; j < n_spins; ++j) s += spin_lowering(n_spins, j);
    return s;
}

// Diagonal of sum_j sigma_j^+ sigma_j^- (excitation count per basis state).
inline Eigen::VectorXd excitation_counts(int n_spins) {
    Eigen::VectorXd n(1 << n_spins);
    for (int s = 0; s < (1 << n_spins); ++s) n(s) = std::popcount(static_cast<unsigned>(s));
    return n;
}

// Symmetric Dicke state |S, m> with k = m + S excitations.
inline Eigen::VectorXcd dicke_state(int n_spins, int k) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(1 << n_spins);
    for (int s = 0; s < (1 << n_spins); ++s)
        if (std::popcount(static_cast<unsigned>(s)) == k) v(s) = 1.0;
    return v.normalized();
}

// ---- density matrix -------------------------------------------------------

struct DensityDiagnostics {
    double trace_error = 0.0;       // |tr rho - 1|
    double hermiticity_error = 0.0; // max |rho - rho^+|
    double min_eigenvalue = 0.0;
};

struct DensityMatrix {
    int n_spins = 0;
    Eigen::MatrixXcd rho;

    static DensityMatrix pure(int n_spins, const Eigen::VectorXcd& psi) {
        require(psi.size() == (1 << n_spins), "DensityMatrix: state dimension must be 2^N");
        const Eigen::VectorXcd v = psi.normalized();
        return {n_spins, v * v.adjoint()};
    }
    static DensityMatrix basis_state(int n_spins, unsigned mask) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(1 << n_spins);
        v(static_cast<Eigen::Index>(mask)) = 1.0;
        return pure(n_spins, v);
    }
    static DensityMatrix fully_excited(int n_spins) { return basis_state(n_spins, (1u << n_spins) - 1u); }

    int dim() const { return static_cast<int>(rho.rows()); }

    DensityDiagnostics diagnostics() const {
        DensityDiagnostics d;
        d.trace_error = std::abs(rho.trace() - 1.0);
        d.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
        const Eigen::MatrixXcd h = 0.5 * (rho + rho.adjoint());
        d.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(h, Eigen::EigenvaluesOnly).eigenvalues()(0);
        return d;
    }

    // sum_j <sigma_j^+ sigma_j^-> / N
    double excited_fraction() const {
        return (rho.diagonal().real().array() * excitation_counts(n_spins).array()).sum() / n_spins;
    }
};

// Populations of the symmetric Dicke states, index k = m + S.
inline std::vector<double> dicke_populations(const DensityMatrix& d) {
    std::vector<double> p;
    for (int k = 0; k <= d.n_spins; ++k) {
        const Eigen::VectorXcd v = dicke_state(d.n_spins, k);
        p.push_back(std::real(v.dot(d.rho * v)));
    }
    return p;
}

// ---- Liouvillian ------------------------------------------------------------

class Lindbladian {
public:
    Lindbladian(Eigen::MatrixXcd H, std::vector<SparseMatrixC> ops, Eigen::MatrixXcd kossakowski)
        : H_(std::move(H)), ops_(std::move(ops)), G_(std::move(kossakowski)) {
        const auto n = static_cast<Eigen::Index>(ops_.size());
        require(G_.rows() == n && G_.cols() == n, "Lindbladian: rate matrix must be square over the jump operators");
        require(H_.rows() == H_.cols(), "Lindbladian: H must be square");
        const double scale = std::max(1.0, G_.cwiseAbs().maxCoeff());
        require((G_ - G_.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
                "Lindbladian: rate tensor must be Hermitian (Gamma_ab = conj(Gamma_ba))");
        require((H_ - H_.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, H_.cwiseAbs().maxCoeff()),
                "Lindbladian: Hamiltonian must be Hermitian");
        const auto D = H_.rows();
        Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(D, D);
        for (Eigen::Index a = 0; a < n; ++a) {
            SparseMatrixC y(D, D);
            for (Eigen::Index b = 0; b < n; ++b)
                if (G_(a, b) != cplx{}) y += std::conj(G_(a, b)) * ops_[static_cast<std::size_t>(b)];
            y.prune(cplx{});
            if (y.nonZeros() == 0) continue;
            K += Eigen::MatrixXcd(SparseMatrixC(y.adjoint()) * ops_[static_cast<std::size_t>(a)]);
            active_.push_back(static_cast<int>(a));
            mixed_.push_back(SparseMatrixC(y.adjoint()));
        }
        K_ = K;
        Heff_ = H_ - 0.5 * I * K;
    }

    int dim() const { return static_cast<int>(H_.rows()); }
    const Eigen::MatrixXcd& hamiltonian() const { return H_; }
    const Eigen::MatrixXcd& kossakowski() const { return G_; }
    const std::vector<SparseMatrixC>& jump_operators() const { return ops_; }
    // K = sum_ab G_ab L_b^+ L_a; the no-jump decay generator.
    const Eigen::MatrixXcd& decay_operator() const { return K_; }

    void apply(const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) const {
        out.noalias() = -I * (Heff_ * rho);
        out.noalias() += I * (rho * Heff_.adjoint());
        for (std::size_t i = 0; i < active_.size(); ++i) {
            const Eigen::MatrixXcd left = ops_[static_cast<std::size_t>(active_[i])] * rho;
            out.noalias() += left * mixed_[i];
        }
    }

    // Dense generator acting on column-stacked vec(rho).
    Eigen::MatrixXcd superoperator() const {
        const int D = dim();
        const auto D2 = static_cast<Eigen::Index>(D) * D;
        Eigen::MatrixXcd S(D2, D2);
        Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(D, D), out(D, D);
        for (int c = 0; c < D; ++c)
            for (int r = 0; r < D; ++r) {
                e(r, c) = 1.0;
                apply(e, out);
                S.col(static_cast<Eigen::Index>(c) * D + r) = Eigen::Map<const Eigen::VectorXcd>(out.data(), D2);
                e(r, c) = 0.0;
            }
        return S;
    }

private:
    Eigen::MatrixXcd H_;
    std::vector<SparseMatrixC> ops_;
    Eigen::MatrixXcd G_;
    Eigen::MatrixXcd K_, Heff_;
    std::vector<int> active_;
    std::vector<SparseMatrixC> mixed_; // (sum_b conj(G_ab) L_b)^+ for each active a
};

// Pair-jump master equation from the rate tensors. Ordered pairs (i, j) and (j, i) share
// the operator sigma_i^- sigma_j^-, so their coefficients are summed into one channel.
inline Lindbladian build_pair_liouvillian(const RateMatrix& R) {
    const int N = R.n_spins;
    require(N >= 1 && N <= max_lindblad_spins,
            "build_pair_liouvillian: N = " + std::to_string(N) + " exceeds the cap of " +
                std::to_string(max_lindblad_spins) + " spins",
            "dimension_cap");
    const double scale = std::max(1.0, *std::max_element(R.Gamma.begin(), R.Gamma.end(),
                                                          [](double a, double b) { return std::abs(a) < std::abs(b); }));
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k)
                for (int l = 0; l < N; ++l) {
                    const bool sym = std::abs(R.gamma(i, j, k, l) - R.gamma(k, l, i, j)) <= 1e-12 * scale &&
                                     std::abs(R.ucoh(i, j, k, l) - R.ucoh(k, l, i, j)) <= 1e-12 * scale;
                    require(sym, "build_pair_liouvillian: rate tensor is not Hermitian (Gamma_{ij,kl} != Gamma_{kl,ij})");
                }

    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j) pairs.emplace_back(i, j);
    const auto P = static_cast<Eigen::Index>(pairs.size());
    const int D = 1 << N;
    std::vector<SparseMatrixC> ops;
    for (const auto& [i, j] : pairs) ops.push_back(pair_lowering(N, i, j));

    Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(P, P);
    Eigen::MatrixXd Uc = Eigen::MatrixXd::Zero(P, P);
    for (Eigen::Index a = 0; a < P; ++a)
        for (Eigen::Index b = 0; b < P; ++b) {
            const auto [i, j] = pairs[static_cast<std::size_t>(a)];
            const auto [k, l] = pairs[static_cast<std::size_t>(b)];
            for (auto [x, y] : {std::pair{i, j}, std::pair{j, i}})
                for (auto [z, w] : {std::pair{k, l}, std::pair{l, k}}) {
                    G(a, b) += R.gamma(x, y, z, w);
                    Uc(a, b) += R.ucoh(x, y, z, w);
                }
        }

    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(D, D);
    for (Eigen::Index a = 0; a < P; ++a)
        for (Eigen::Index b = 0; b < P; ++b) {
            if (Uc(a, b) == 0.0) continue;
            const Eigen::MatrixXcd t =
                Eigen::MatrixXcd(SparseMatrixC(ops[static_cast<std::size_t>(b)].adjoint()) * ops[static_cast<std::size_t>(a)]);
            H += 0.5 * Uc(a, b) * (t + t.adjoint());
        }
    return Lindbladian(std::move(H), std::move(ops), std::move(G));
}

// Single collective jump J with rate: drho/dt = rate (J rho J^+ - 1/2 {J^+ J, rho}).
inline Lindbladian build_collective_liouvillian(const SparseMatrixC& jump, double rate) {
    require(rate >= 0.0, "build_collective_liouvillian: rate must be >= 0");
    const auto D = jump.rows();
    Eigen::MatrixXcd G(1, 1);
    G(0, 0) = rate;
    return Lindbladian(Eigen::MatrixXcd::Zero(D, D), {jump}, G);
}

// Supercorrelated radiance of same-site spins: jump S_-^2.
inline Lindbladian supercorrelated_liouvillian(int n_spins, double rate) {
    const SparseMatrixC s = collective_lowering(n_spins);
    return build_collective_liouvillian(SparseMatrixC(s * s), rate);
}

// Dicke superradiance: jump S_-.
inline Lindbladian superradiance_liouvillian(int n_spins, double rate) {
    return build_collective_liouvillian(collective_lowering(n_spins), rate);
}

// ---- evolution --------------------------------------------------------------

struct LindbladOptions {
    OdeOptions ode{.rtol = 1e-10, .atol = 1e-13};
    int expm_max_spins = 5; // dense exp(L dt) propagator up to this N, matrix ODE beyond
    std::vector<double> snapshot_times;
    bool dicke_populations = false; // adds p_k columns (k = m + S excitations)
    double trace_tol = 1e-8;
    double hermiticity_tol = 1e-10;
    double positivity_tol = 1e-8;
};

struct LindbladResult {
    TimeSeries series; // P_e, trace_error, hermiticity_error, min_eigenvalue [, p_k ...]
    std::vector<std::pair<double, Eigen::MatrixXcd>> snapshots;
    DensityDiagnostics worst;
    std::string method;
};

inline LindbladResult evolve_density_matrix(const DensityMatrix& rho0, const Lindbladian& L,
                                            std::span<const double> t_grid, const LindbladOptions& opt = {}) {
    const int N = rho0.n_spins;
    const int D = rho0.dim();
    require(L.dim() == D, "evolve_density_matrix: Liouvillian and state dimensions differ");
    const auto d0 = rho0.diagnostics();
    require(d0.trace_error <= opt.trace_tol && d0.hermiticity_error <= opt.hermiticity_tol &&
                d0.min_eigenvalue >= -opt.positivity_tol,
            "evolve_density_matrix: initial state is not a valid density matrix");

    LindbladResult res;
    res.method = N <= opt.expm_max_spins ? "superoperator exponential" : "matrix ODE (Dormand-Prince 5(4))";
    res.series.metadata = {{"n_spins", std::to_string(N)}, {"method", res.method}};
    auto& pe = res.series.add_column("P_e");
    auto& tr = res.series.add_column("trace_error");
    auto& he = res.series.add_column("hermiticity_error");
    auto& me = res.series.add_column("min_eigenvalue");
    std::vector<std::vector<double>*> pk;
    if (opt.dicke_populations)
        for (int k = 0; k <= N; ++k) pk.push_back(&res.series.add_column("p_" + std::to_string(k)));

    std::vector<double> times(t_grid.begin(), t_grid.end());
    std::vector<double> snaps = opt.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    std::vector<double> all = times;
    all.insert(all.end(), snaps.begin(), snaps.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    require(all.empty() || all.front() >= 0.0, "evolve_density_matrix: times must be >= 0");

    auto record = [&](double t, const Eigen::MatrixXcd& rho) {
        const DensityMatrix dm{N, rho};
        if (std::binary_search(snaps.begin(), snaps.end(), t)) res.snapshots.emplace_back(t, rho);
        if (!std::binary_search(times.begin(), times.end(), t)) return;
        const auto d = dm.diagnostics();
        if (d.trace_error > opt.trace_tol || d.hermiticity_error > opt.hermiticity_tol ||
            d.min_eigenvalue < -opt.positivity_tol) {
            throw Error("positivity", "evolve_density_matrix: invalid state at t=" + format_number(t) +
                                          " (trace error " + format_number(d.trace_error) + ", hermiticity error " +
                                          format_number(d.hermiticity_error) + ", min eigenvalue " +
                                          format_number(d.min_eigenvalue) + ")");
        }
        res.worst.trace_error = std::max(res.worst.trace_error, d.trace_error);
        res.worst.hermiticity_error = std::max(res.worst.hermiticity_error, d.hermiticity_error);
        res.worst.min_eigenvalue = std::min(res.worst.min_eigenvalue, d.min_eigenvalue);
        res.series.times.push_back(t);
        pe.push_back(dm.excited_fraction());
        tr.push_back(d.trace_error);
        he.push_back(d.hermiticity_error);
        me.push_back(d.min_eigenvalue);
        if (opt.dicke_populations) {
            const auto p = dicke_populations(dm);
            for (int k = 0; k <= N; ++k) pk[static_cast<std::size_t>(k)]->push_back(p[static_cast<std::size_t>(k)]);
        }
    };

    if (N <= opt.expm_max_spins) {
        const Eigen::MatrixXcd S = L.superoperator();
        const auto D2 = static_cast<Eigen::Index>(D) * D;
        Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(rho0.rho.data(), D2);
        double t = 0.0;
        double cached_dt = -1.0;
        Eigen::MatrixXcd prop;
        for (double target : all) {
            const double dt = target - t;
            if (dt > 0.0) {
                if (!(std::abs(dt - cached_dt) <= 1e-12 * dt)) {
                    prop = (S * dt).exp();
                    cached_dt = dt;
                }
                v = prop * v;
                t = target;
            }
            record(target, Eigen::Map<const Eigen::MatrixXcd>(v.data(), D, D));
        }
    } else {
        auto rhs = [&L](double, const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) { L.apply(rho, out); };
        integrate_adaptive(rhs, Eigen::MatrixXcd(rho0.rho), 0.0, all, record, opt.ode);
    }
    return res;
}

// ---- dark states --------------------------------------------------------------

struct DarkState {
    int excitations = 0;
    double energy = 0.0;
    double initial_overlap = 0.0;  // |<psi0|dark>|^2
    double symmetric_weight = 0.0; // weight in the permutation-symmetric (S = N/2) manifold
    Eigen::VectorXcd vector;
};

namespace detail {

// Orthonormal basis of the null space of M (columns), singular values below tol * s_max.
inline Eigen::MatrixXcd null_space(const Eigen::MatrixXcd& M, double tol) {
    const auto n = M.cols();
    if (M.rows() == 0) return Eigen::MatrixXcd::Identity(n, n);
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > tol * std::max(smax, 1e-300)) ++rank;
    return svd.matrixV().rightCols(n - rank);
}

} // namespace detail

inline constexpr double dark_state_tolerance = 1e-10;

// Joint kernel of the decay channels (eigen-channels of the rate matrix with nonzero weight),
// reduced to its largest H-invariant subspace and diagonalized, per excitation sector.
inline std::vector<DarkState> find_subradiant_states(const Lindbladian& L, int n_spins,
                                                     const Eigen::VectorXcd& initial_state) {
    require(n_spins >= 1 && n_spins <= max_lindblad_spins, "find_subradiant_states: N exceeds the cap", "dimension_cap");
    const int D = 1 << n_spins;
    require(L.dim() == D && initial_state.size() == D, "find_subradiant_states: dimension mismatch");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ges(L.kossakowski());
    const double gmax = ges.eigenvalues().cwiseAbs().maxCoeff();
    std::vector<SparseMatrixC> channels;
    for (Eigen::Index k = 0; k < ges.eigenvalues().size(); ++k) {
        if (std::abs(ges.eigenvalues()(k)) <= dark_state_tolerance * std::max(gmax, 1e-300)) continue;
        SparseMatrixC m(D, D);
        for (std::size_t a = 0; a < L.jump_operators().size(); ++a)
            m += ges.eigenvectors()(static_cast<Eigen::Index>(a), k) * L.jump_operators()[a];
        channels.push_back(m);
    }

    Eigen::MatrixXcd sym(D, n_spins + 1);
    for (int k = 0; k <= n_spins; ++k) sym.col(k) = dicke_state(n_spins, k);
    const Eigen::VectorXcd psi0 = initial_state.normalized();
    const Eigen::MatrixXcd Hd = L.hamiltonian();

    std::vector<DarkState> out;
    for (int exc = 0; exc <= n_spins; ++exc) {
        std::vector<int> idx;
        for (int s = 0; s < D; ++s)
            if (std::popcount(static_cast<unsigned>(s)) == exc) idx.push_back(s);
        const auto n = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(D, n); // sector embedding
        for (Eigen::Index c = 0; c < n; ++c) E(idx[static_cast<std::size_t>(c)], c) = 1.0;

        Eigen::MatrixXcd stacked(static_cast<Eigen::Index>(channels.size()) * D, n);
        for (std::size_t c = 0; c < channels.size(); ++c)
            stacked.middleRows(static_cast<Eigen::Index>(c) * D, D) = channels[c] * E;
        Eigen::MatrixXcd Q = detail::null_space(stacked, dark_state_tolerance);

        // Largest H-invariant subspace inside the kernel.
        const Eigen::MatrixXcd Hs = E.adjoint() * Hd * E;
        for (int it = 0; it < n + 1 && Q.cols() > 0; ++it) {
            const Eigen::MatrixXcd leak = Hs * Q - Q * (Q.adjoint() * Hs * Q);
            if (leak.cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, Hs.cwiseAbs().maxCoeff())) break;
            const Eigen::MatrixXcd keep = detail::null_space(leak, dark_state_tolerance);
            Q = Q * keep;
        }
        if (Q.cols() == 0) continue;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> hes(Q.adjoint() * Hs * Q);
        for (Eigen::Index k = 0; k < Q.cols(); ++k) {
            DarkState ds;
            ds.excitations = exc;
            ds.energy = hes.eigenvalues()(k);
            ds.vector = E * (Q * hes.eigenvectors().col(k));
            ds.initial_overlap = std::norm(psi0.dot(ds.vector));
            ds.symmetric_weight = (sym.adjoint() * ds.vector).squaredNorm();
            out.push_back(std::move(ds));
        }
    }
    return out;
}

// ---- long-time prediction ------------------------------------------------------

struct PlateauPrediction {
    double excited_fraction = 0.0; // predicted P_e(t -> infinity)
    int kernel_dimension = 0;
    double slowest_rate = 0.0; // smallest nonzero |Re lambda| of the generator
};

// Projects rho0 onto the Liouvillian kernel with the biorthogonal left/right null vectors.
inline PlateauPrediction predict_plateau(const Lindbladian& L, const DensityMatrix& rho0) {
    require(rho0.n_spins <= 5, "predict_plateau: dense spectral analysis limited to N <= 5", "dimension_cap");
    const int D = rho0.dim();
    const auto D2 = static_cast<Eigen::Index>(D) * D;
    const Eigen::MatrixXcd S = L.superoperator();

    Eigen::BDCSVD<Eigen::MatrixXcd> svd(S, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > dark_state_tolerance * s(0)) ++rank;
    const Eigen::MatrixXcd R = svd.matrixV().rightCols(D2 - rank);
    const Eigen::MatrixXcd Lk = svd.matrixU().rightCols(D2 - rank);
    const Eigen::VectorXcd v0 = Eigen::Map<const Eigen::VectorXcd>(rho0.rho.data(), D2);
    const Eigen::MatrixXcd M = Lk.adjoint() * R;
    const Eigen::VectorXcd vinf = R * M.fullPivLu().solve(Lk.adjoint() * v0);
    const DensityMatrix rinf{rho0.n_spins, Eigen::Map<const Eigen::MatrixXcd>(vinf.data(), D, D)};

    PlateauPrediction p;
    p.excited_fraction = rinf.excited_fraction();
    p.kernel_dimension = static_cast<int>(D2 - rank);
    const Eigen::VectorXcd ev = Eigen::ComplexEigenSolver<Eigen::MatrixXcd>(S, false).eigenvalues();
    double slow = INFINITY;
    const double scale = ev.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (-ev(i).real() > 1e-9 * scale) slow = std::min(slow, -ev(i).real());
    p.slowest_rate = slow;
    return p;
}

// "Long time" for plateau reporting: 50 / (Gamma0 f^2(0)), extended to 25 slowest lifetimes.
inline double plateau_time(double same_site_rate, double slowest_rate) {
    double t = 50.0 / same_site_rate;
    if (std::isfinite(slowest_rate) && slowest_rate > 0.0) t = std::max(t, 25.0 / slowest_rate);
    return t;
}

// ---- grouped superradiance ----------------------------------------------------

struct GroupedReport {
    double U = 0.0;
    double K0 = 0.0;
    double omega_e = 0.0;
    double Gamma = 0.0;   // Gamma0 f_{K0}(0)^2
    double Gamma_D = 0.0; // 4 Gamma
    double f4_over_f0 = 0.0;
    std::vector<double> times;
    std::vector<double> full;    // pair master equation, positions [0,0,4,4]
    std::vector<double> reduced; // two emitters under S_- with rate Gamma_D
    double deviation_max = 0.0;
    double deviation_L2 = 0.0; // sqrt(mean squared deviation over the grid)
    std::vector<std::string> warnings;
};

struct GroupedOptions {
    double coupling = 0.1;
    double K0 = pi / 2.0;
    int t_points = 301;
    double t_max_in_lifetimes = 3.0; // t_max = this / Gamma
};

inline GroupedReport grouped_superradiance_experiment(double U, WaveguideParams p, const GroupedOptions& opt = {}) {
    p.nonlinearity = U;
    p.validate();
    SpinEnsemble ens;
    ens.positions = {0, 0, 4, 4};
    ens.coupling = opt.coupling;
    ens.frequency = resonant_spin_frequency(opt.K0, p);
    ens.validate(p);

    const RateMatrix R = pairwise_rate_matrix(ens, p);
    GroupedReport rep;
    rep.U = U;
    rep.K0 = R.K0;
    rep.omega_e = ens.frequency;
    rep.Gamma = R.Gamma0 * std::pow(R.f_by_separation.at(0), 2);
    rep.Gamma_D = 4.0 * rep.Gamma;
    rep.f4_over_f0 = R.f_by_separation.at(4) / R.f_by_separation.at(0);
    rep.warnings = R.warnings;
    rep.times = linspace(0.0, opt.t_max_in_lifetimes / rep.Gamma, opt.t_points);

    const auto full = evolve_density_matrix(DensityMatrix::fully_excited(4), build_pair_liouvillian(R), rep.times);
    const auto red = evolve_density_matrix(DensityMatrix::fully_excited(2), superradiance_liouvillian(2, rep.Gamma_D),
                                           rep.times);
    rep.full = full.series.column("P_e");
    rep.reduced = red.series.column("P_e");
    double ss = 0.0;
    for (std::size_t i = 0; i < rep.times.size(); ++i) {
        const double d = std::abs(rep.full[i] - rep.reduced[i]);
        rep.deviation_max = std::max(rep.deviation_max, d);
        ss += d * d;
    }
    rep.deviation_L2 = std::sqrt(ss / static_cast<double>(rep.times.size()));
    return rep;
}

} // namespace nlwg
