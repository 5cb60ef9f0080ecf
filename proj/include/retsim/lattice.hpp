#pragma once

#include <Eigen/Dense>
#include <vector>

namespace retsim {

// Units: energies in photon recoils E_rec, momenta in recoil momenta (the
// zone edge sits at |k| = 1), times in hbar/E_rec.
struct LatticeParams {
  double V0 = 2.0;            // lattice depth
  double F0 = 1.0;            // static tilt force
  double k0 = 0.0;            // initial quasi-momentum, in [-1, 1]
  int basis_halfwidth = 15;   // plane waves n = -N..N
  int bz_grid_points = 512;   // Brillouin-zone quadrature resolution
};

// Throws std::invalid_argument on out-of-range fields.
void validate(const LatticeParams& params);

// Plane-wave Hamiltonian at quasi-momentum k: diagonal (k + 2n)^2, both
// off-diagonals V0/4. Size (2N+1) x (2N+1), basis ordered n = -N..N.
Eigen::MatrixXd bloch_hamiltonian(const LatticeParams& params, double k);

struct BlochSpectrum {
  std::vector<double> k_grid;                   // uniform over [-1, 1]
  std::vector<Eigen::VectorXd> energies;        // ascending per k
  std::vector<Eigen::MatrixXd> eigenvectors;    // column b = band b
};

// Bands and eigenvectors over the Brillouin zone in a parallel-transport
// gauge (successive overlaps made real-positive).
BlochSpectrum band_spectrum(const LatticeParams& params);

// Trapezoid average of E2(k) - E1(k) over the Brillouin zone.
double average_band_gap(const LatticeParams& params);

// Shallow-lattice estimate of the averaged 1-2 gap; exact 2.0 limit at V0=0.
double gap_estimate_small_v(double V0);

// Deep-lattice estimate sqrt(4 V0) - 1; rejects V0 <= 0.25 where it loses
// meaning.
double gap_estimate_large_v(double V0);

// T_B = 2 pi / F0.
double bloch_period(double F0);

// Phase accumulated between bands 1 and 2 over one Bloch period,
// phi = T_B * average_band_gap.
double bloch_phase(const LatticeParams& params);

}  // namespace retsim
