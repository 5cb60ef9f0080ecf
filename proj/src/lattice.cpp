#include "retsim/lattice.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace retsim {

void validate(const LatticeParams& params) {
  if (!(params.V0 >= 0.0) || !std::isfinite(params.V0))
    throw std::invalid_argument("V0 must be finite and >= 0, got " +
                                std::to_string(params.V0));
  if (!(params.F0 >= 0.0) || !std::isfinite(params.F0))
    throw std::invalid_argument("F0 must be finite and >= 0, got " +
                                std::to_string(params.F0));
  if (!(params.k0 >= -1.0 && params.k0 <= 1.0))
    throw std::invalid_argument("k0 must lie in [-1, 1], got " +
                                std::to_string(params.k0));
  if (params.basis_halfwidth < 1)
    throw std::invalid_argument("basis_halfwidth must be >= 1, got " +
                                std::to_string(params.basis_halfwidth));
  if (params.bz_grid_points < 2)
    throw std::invalid_argument("bz_grid_points must be >= 2, got " +
                                std::to_string(params.bz_grid_points));
}

Eigen::MatrixXd bloch_hamiltonian(const LatticeParams& params, double k) {
  validate(params);
  const int N = params.basis_halfwidth;
  const int M = 2 * N + 1;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(M, M);
  for (int j = 0; j < M; ++j) {
    const double q = k + 2.0 * (j - N);
    H(j, j) = q * q;
    if (j + 1 < M) {
      H(j, j + 1) = params.V0 / 4.0;
      H(j + 1, j) = params.V0 / 4.0;
    }
  }
  return H;
}

BlochSpectrum band_spectrum(const LatticeParams& params) {
  validate(params);
  const int G = params.bz_grid_points;
  BlochSpectrum spectrum;
  spectrum.k_grid.resize(G);
  spectrum.energies.reserve(G);
  spectrum.eigenvectors.reserve(G);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  for (int i = 0; i < G; ++i) {
    const double k = -1.0 + 2.0 * i / (G - 1);
    spectrum.k_grid[i] = k;
    solver.compute(bloch_hamiltonian(params, k));
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("eigensolver failed at k = " +
                               std::to_string(k));
    Eigen::MatrixXd vectors = solver.eigenvectors();
    if (i > 0) {
      const Eigen::MatrixXd& prev = spectrum.eigenvectors.back();
      for (int b = 0; b < vectors.cols(); ++b)
        if (prev.col(b).dot(vectors.col(b)) < 0.0) vectors.col(b) *= -1.0;
    }
    spectrum.energies.push_back(solver.eigenvalues());
    spectrum.eigenvectors.push_back(std::move(vectors));
  }
  return spectrum;
}

double average_band_gap(const LatticeParams& params) {
  validate(params);
  const int G = params.bz_grid_points;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  double acc = 0.0;
  for (int i = 0; i < G; ++i) {
    const double k = -1.0 + 2.0 * i / (G - 1);
    solver.compute(bloch_hamiltonian(params, k), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("eigensolver failed at k = " +
                               std::to_string(k));
    const double gap = solver.eigenvalues()(1) - solver.eigenvalues()(0);
    const double weight = (i == 0 || i == G - 1) ? 0.5 : 1.0;
    acc += weight * gap;
  }
  const double h = 2.0 / (G - 1);
  return acc * h / 2.0;  // divide by the zone width
}

double gap_estimate_small_v(double V0) {
  if (V0 < 0.0 || !std::isfinite(V0))
    throw std::invalid_argument("V0 must be finite and >= 0");
  if (V0 == 0.0) return 2.0;
  return std::sqrt(64.0 + V0 * V0) / 4.0 +
         (V0 * V0 / 32.0) * std::asinh(8.0 / V0);
}

double gap_estimate_large_v(double V0) {
  if (!(V0 > 0.25))
    throw std::invalid_argument("deep-lattice estimate requires V0 > 0.25");
  return std::sqrt(4.0 * V0) - 1.0;
}

double bloch_period(double F0) {
  if (!(F0 > 0.0) || !std::isfinite(F0))
    throw std::invalid_argument("bloch_period requires F0 > 0");
  return 2.0 * std::numbers::pi / F0;
}

double bloch_phase(const LatticeParams& params) {
  return bloch_period(params.F0) * average_band_gap(params);
}

}  // namespace retsim
