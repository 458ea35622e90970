// two_phonon_ed.hpp: Exact diagonalization of the two-phonon block on a periodic ring.
//
// Basis: symmetrized Fock states |n,m> with n <= m, normalized
// (|n,n> = (a_n^dag)^2/sqrt(2)|vac>, |n,m> = a_n^dag a_m^dag |vac> for n < m).
// Eigenstates are classified as bound when their weight in the span of the
// analytic dimer states Psi_K exceeds a threshold.

#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nlwg/types.hpp"
#include "nlwg/waveguide.hpp"

namespace nlwg {

class TwoPhononBasis {
public:
    explicit TwoPhononBasis(int n_sites) : n_(n_sites), index_(static_cast<std::size_t>(n_sites * n_sites), -1) {
        for (int a = 0; a < n_; ++a) {
            for (int b = a; b < n_; ++b) {
                index_[static_cast<std::size_t>(a * n_ + b)] = static_cast<int>(pairs_.size());
                pairs_.emplace_back(a, b);
            }
        }
    }

    int n_sites() const noexcept { return n_; }
    int dimension() const noexcept { return static_cast<int>(pairs_.size()); }
    const std::pair<int, int>& pair(int i) const { return pairs_.at(static_cast<std::size_t>(i)); }

    // Order-insensitive lookup.
    int index(int a, int b) const {
        if (a > b) std::swap(a, b);
        return index_[static_cast<std::size_t>(a * n_ + b)];
    }

private:
    int n_;
    std::vector<std::pair<int, int>> pairs_;
    std::vector<int> index_;
};

// Real symmetric two-phonon Hamiltonian (kappa ignored; the block is Hermitian).
inline Eigen::MatrixXd two_phonon_hamiltonian(const WaveguideParams& p, const TwoPhononBasis& basis) {
    const int N = p.n_sites;
    const int D = basis.dimension();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(D, D);
    for (int i = 0; i < D; ++i) {
        const auto [a, b] = basis.pair(i);
        H(i, i) = 2.0 * p.base_frequency - (a == b ? p.nonlinearity : 0.0);
        // Move one phonon by one site; bosonic factors sqrt(n_from) sqrt(n_to + 1).
        const int movers[2] = {a, b};
        for (int w = 0; w < 2; ++w) {
            if (a == b && w == 1) break; // both phonons sit on the same site: one distinct move set
            const int from = movers[w];
            const int other = movers[1 - w];
            for (int step : {+1, -1}) {
                const int to = ((from + step) % N + N) % N;
                const double n_from = (a == b) ? 2.0 : 1.0;
                const double n_to_after = (to == other) ? 2.0 : 1.0;
                H(basis.index(to, other), i) += -p.hopping * std::sqrt(n_from * n_to_after);
            }
        }
    }
    return H;
}

// Analytic dimer state Psi_K expressed in the symmetrized basis (both ring images of the
// relative coordinate), normalized to unit norm.
inline Eigen::VectorXcd bound_state_ansatz(double K, const WaveguideParams& p, const TwoPhononBasis& basis) {
    const int N = p.n_sites;
    Eigen::VectorXcd v(basis.dimension());
    for (int i = 0; i < basis.dimension(); ++i) {
        const auto [a, b] = basis.pair(i);
        const int d = b - a;
        if (d == 0) {
            v(i) = std::exp(I * K * static_cast<double>(a)) * relative_wavefunction(K, 0, p);
        } else {
            const cplx direct = std::exp(I * (K * (a + b) / 2.0)) * relative_wavefunction(K, d, p);
            const cplx wrapped = std::exp(I * (K * (a + b + N) / 2.0)) * relative_wavefunction(K, N - d, p);
            v(i) = std::sqrt(2.0) * (direct + wrapped);
        }
    }
    return v / v.norm();
}

struct TwoExcitationSpectrum {
    int dimension = 0;
    Eigen::VectorXd eigenvalues;  // ascending
    Eigen::MatrixXd eigenvectors; // columns, symmetrized basis
    Eigen::VectorXd bound_weight; // weight in span{Psi_K}
    std::vector<bool> is_bound;

    int bound_count() const { return static_cast<int>(std::count(is_bound.begin(), is_bound.end(), true)); }

    std::vector<double> bound_energies() const {
        std::vector<double> e;
        for (int i = 0; i < dimension; ++i)
            if (is_bound[static_cast<std::size_t>(i)]) e.push_back(eigenvalues(i));
        return e;
    }
};

struct EdOptions {
    int max_sites = 80;
    double bound_threshold = 0.5;
};

inline TwoExcitationSpectrum exact_two_excitation_spectrum(const WaveguideParams& p, const EdOptions& opt = {}) {
    p.validate();
    if (p.n_sites > opt.max_sites) {
        throw Error("dimension_cap", "exact_two_excitation_spectrum: n_sites " + std::to_string(p.n_sites) +
                                         " exceeds cap " + std::to_string(opt.max_sites));
    }
    const TwoPhononBasis basis(p.n_sites);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(two_phonon_hamiltonian(p, basis));
    if (solver.info() != Eigen::Success) throw Error("non_convergence", "two-phonon eigensolver failed");

    TwoExcitationSpectrum s;
    s.dimension = basis.dimension();
    s.eigenvalues = solver.eigenvalues();
    s.eigenvectors = solver.eigenvectors();
    s.bound_weight = Eigen::VectorXd::Zero(s.dimension);
    if (p.nonlinearity > 0.0) {
        const auto ks = momentum_grid(p.n_sites);
        Eigen::MatrixXcd ansatz(s.dimension, static_cast<Eigen::Index>(ks.size()));
        for (std::size_t j = 0; j < ks.size(); ++j)
            ansatz.col(static_cast<Eigen::Index>(j)) = bound_state_ansatz(ks[j], p, basis);
        const Eigen::MatrixXcd overlaps = ansatz.adjoint() * s.eigenvectors.cast<cplx>();
        s.bound_weight = overlaps.cwiseAbs2().colwise().sum().transpose();
    }
    s.is_bound.resize(static_cast<std::size_t>(s.dimension));
    for (int i = 0; i < s.dimension; ++i)
        s.is_bound[static_cast<std::size_t>(i)] = s.bound_weight(i) > opt.bound_threshold;
    return s;
}

// Energy of the bound eigenstate that best overlaps Psi_K (degenerate +-K pairs share it).
inline double numeric_bound_energy(const TwoExcitationSpectrum& s, double K, const WaveguideParams& p) {
    const TwoPhononBasis basis(p.n_sites);
    const Eigen::VectorXcd a = bound_state_ansatz(K, p, basis);
    double best = -1.0;
    double energy = 0.0;
    for (int i = 0; i < s.dimension; ++i) {
        const double w = std::norm(a.dot(s.eigenvectors.col(i).cast<cplx>()));
        if (w > best) {
            best = w;
            energy = s.eigenvalues(i);
        }
    }
    return energy;
}

// Relative-coordinate profile phi(d), d = 0..n_sites/2, of the lowest eigenvector (the K=0
// dimer for U > 0), averaged over centre-of-mass position and sign-fixed so phi(0) > 0.
inline std::vector<double> ground_state_relative_profile(const TwoExcitationSpectrum& s, int n_sites) {
    const TwoPhononBasis basis(n_sites);
    const Eigen::VectorXd v = s.eigenvectors.col(0);
    std::vector<double> phi(static_cast<std::size_t>(n_sites / 2 + 1), 0.0);
    for (int d = 0; d <= n_sites / 2; ++d) {
        double acc = 0.0;
        for (int n = 0; n < n_sites; ++n) {
            const double c = v(basis.index(n, (n + d) % n_sites));
            acc += (d == 0) ? c : c / std::sqrt(2.0);
        }
        // For d = n_sites/2 with even n_sites each pair is visited twice.
        if (n_sites % 2 == 0 && d == n_sites / 2 && d != 0) acc /= 2.0;
        phi[static_cast<std::size_t>(d)] = acc / std::sqrt(static_cast<double>(n_sites));
    }
    if (phi[0] < 0.0)
        for (double& x : phi) x = -x;
    return phi;
}

} // namespace nlwg
