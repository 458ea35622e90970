// sector.hpp: Fixed-excitation-number basis and Hamiltonian of spins + nonlinear ring.
//
// The Hamiltonian conserves the total excitation number (spin flips + phonons), so a
// sector with M <= 2 excitations is closed. Energies are in the frame rotating at omega_e
// per excitation. Phonon loss enters as the no-jump term -i kappa/2 per phonon.

#pragma once

#include <bit>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include <Eigen/Sparse>

#include "nlwg/types.hpp"

namespace nlwg {

struct SectorState {
    std::uint32_t spin_mask = 0; // bit j set: spin j excited
    int p1 = -1;                 // phonon sites, p1 <= p2, -1 when absent
    int p2 = -1;

    int phonons() const noexcept { return (p1 >= 0) + (p2 >= 0); }
};

class SectorBasis {
public:
    SectorBasis(int n_spins, int n_sites, int excitations) : n_spins_(n_spins), n_sites_(n_sites), m_(excitations) {
        require(n_spins >= 1 && n_spins <= 16, "SectorBasis: spin count must be in [1, 16]");
        require(excitations >= 0 && excitations <= 2, "SectorBasis: at most 2 excitations are tracked");
        const std::uint32_t full = (1u << n_spins) - 1u;
        for (int s = std::min(excitations, n_spins); s >= 0; --s) {
            const int nph = excitations - s;
            for (std::uint32_t mask = full;; --mask) {
                if (std::popcount(mask) == s) {
                    if (nph == 0) {
                        add({mask, -1, -1});
                    } else if (nph == 1) {
                        for (int a = 0; a < n_sites; ++a) add({mask, a, -1});
                    } else {
                        for (int a = 0; a < n_sites; ++a)
                            for (int b = a; b < n_sites; ++b) add({mask, a, b});
                    }
                }
                if (mask == 0) break;
            }
        }
    }

    int n_spins() const noexcept { return n_spins_; }
    int n_sites() const noexcept { return n_sites_; }
    int excitations() const noexcept { return m_; }
    int dimension() const noexcept { return static_cast<int>(states_.size()); }
    const SectorState& state(int i) const { return states_.at(static_cast<std::size_t>(i)); }

    // Lookup with phonon sites in any order; -1 when not in the basis.
    int index(std::uint32_t mask, int a, int b) const {
        if (a < 0) std::swap(a, b);
        if (b >= 0 && a > b) std::swap(a, b);
        const auto it = index_.find(key(mask, a, b));
        return it == index_.end() ? -1 : it->second;
    }

private:
    std::uint64_t key(std::uint32_t mask, int a, int b) const {
        const auto w = static_cast<std::uint64_t>(n_sites_ + 1);
        return (static_cast<std::uint64_t>(mask) * w + static_cast<std::uint64_t>(a + 1)) * w +
               static_cast<std::uint64_t>(b + 1);
    }
    void add(SectorState s) {
        index_.emplace(key(s.spin_mask, s.p1, s.p2), static_cast<int>(states_.size()));
        states_.push_back(s);
    }

    int n_spins_, n_sites_, m_;
    std::vector<SectorState> states_;
    std::unordered_map<std::uint64_t, int> index_;
};

// Expected sector dimension: sum over s excited spins of C(N, s) * (phonon configurations).
inline long sector_dimension(int n_spins, int n_sites, int excitations) {
    auto choose = [](int n, int k) {
        long r = 1;
        for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
        return r;
    };
    long d = 0;
    for (int s = 0; s <= std::min(excitations, n_spins); ++s) {
        const int nph = excitations - s;
        const long ph = nph == 0 ? 1 : nph == 1 ? n_sites : static_cast<long>(n_sites) * (n_sites + 1) / 2;
        d += choose(n_spins, s) * ph;
    }
    return d;
}

struct SectorOptions {
    long max_nonzeros = 200'000;
};

using SparseMatrixC = Eigen::SparseMatrix<cplx>;

inline SparseMatrixC build_sector_hamiltonian(const SpinEnsemble& ens, const WaveguideParams& p,
                                              const SectorBasis& basis, const SectorOptions& opt = {}) {
    const int N = p.n_sites;
    const int D = basis.dimension();
    const double omega_ph = p.base_frequency - ens.frequency;
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(static_cast<std::size_t>(D) * 6);

    auto occupation = [](const SectorState& s, int site) { return (s.p1 == site) + (s.p2 == site); };

    for (int i = 0; i < D; ++i) {
        const SectorState& s = basis.state(i);
        const int nph = s.phonons();
        const bool doubly = nph == 2 && s.p1 == s.p2;
        const cplx diag = nph * omega_ph - (doubly ? p.nonlinearity : 0.0) - I * (0.5 * p.phonon_loss * nph);
        if (diag != cplx{}) trip.emplace_back(i, i, diag);

        // Hopping of each distinct phonon.
        const int ph[2] = {s.p1, s.p2};
        for (int w = 0; w < nph; ++w) {
            if (w == 1 && doubly) break;
            const int from = ph[w];
            const int other = (nph == 2) ? ph[1 - w] : -1;
            for (int step : {+1, -1}) {
                const int to = ((from + step) % N + N) % N;
                const double n_from = doubly ? 2.0 : 1.0;
                const double n_to_after = (to == other) ? 2.0 : 1.0;
                trip.emplace_back(basis.index(s.spin_mask, to, other), i,
                                  -p.hopping * std::sqrt(n_from * n_to_after));
            }
        }

        // Spin j lowers and emits a phonon at its site; the transpose entry is the absorption.
        for (int j = 0; j < ens.size(); ++j) {
            if (!(s.spin_mask >> j & 1u)) continue;
            const int site = ens.positions[static_cast<std::size_t>(j)];
            const std::uint32_t lowered = s.spin_mask & ~(1u << j);
            const int a = s.p1 >= 0 ? s.p1 : site;
            const int b = s.p1 >= 0 ? site : -1;
            const int target = basis.index(lowered, a, b);
            if (target < 0) continue;
            const double amp = ens.coupling * std::sqrt(static_cast<double>(occupation(s, site) + 1));
            if (amp == 0.0) continue;
            trip.emplace_back(target, i, amp);
            trip.emplace_back(i, target, amp);
        }
    }
    if (static_cast<long>(trip.size()) > opt.max_nonzeros) {
        throw Error("dimension_cap", "build_sector_hamiltonian: " + std::to_string(trip.size()) +
                                         " nonzeros exceed cap " + std::to_string(opt.max_nonzeros));
    }
    SparseMatrixC H(D, D);
    H.setFromTriplets(trip.begin(), trip.end());
    return H;
}

} // namespace nlwg
