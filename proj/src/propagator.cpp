#include "retsim/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "retsim/kernels.hpp"

namespace retsim {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNormDriftTol = 1e-8;  // per period, triggers step refinement

struct Fold {
  double kf;  // in [-1, 1)
  int s;      // k = kf + 2 s
};

Fold fold_momentum(double k) {
  const double f = std::floor((k + 1.0) / 2.0);
  return {k - 2.0 * f, static_cast<int>(f)};
}

struct NormDriftError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Split-storage work buffers for one propagation basis.
struct Workspace {
  int halfwidth = 0;
  std::vector<double> ar, ai;          // state
  std::vector<double> pr, pi;          // drift phase table
  std::vector<double> yr, yi;          // neighbor sums
  std::vector<double> tr, ti;          // current Taylor term
  std::vector<double> accr, acci;      // Taylor accumulator

  explicit Workspace(int N) : halfwidth(N) {
    const std::size_t M = 2 * N + 1;
    for (auto* v : {&ar, &ai, &pr, &pi, &yr, &yi, &tr, &ti, &accr, &acci})
      v->assign(M, 0.0);
  }
  std::size_t size() const { return ar.size(); }
};

int taylor_order(double theta) {
  const double x = 2.0 * std::abs(theta);  // the neighbor-sum operator has norm <= 2
  double bound = 1.0;
  int K = 0;
  do {
    ++K;
    bound *= x / K;
  } while (bound > 1e-18 && K < 48);
  return K;
}

// psi <- exp(-i theta J) psi, J the nearest-neighbor sum, by Taylor series.
void apply_kick(Workspace& w, const kernels::Ops& ops, double theta) {
  if (theta == 0.0) return;
  const int splits = std::max(1, static_cast<int>(std::ceil(std::abs(theta) / 0.5)));
  const double th = theta / splits;
  const int K = taylor_order(th);
  const std::size_t M = w.size();
  for (int split = 0; split < splits; ++split) {
    std::memcpy(w.accr.data(), w.ar.data(), M * sizeof(double));
    std::memcpy(w.acci.data(), w.ai.data(), M * sizeof(double));
    std::memcpy(w.tr.data(), w.ar.data(), M * sizeof(double));
    std::memcpy(w.ti.data(), w.ai.data(), M * sizeof(double));
    for (int k = 1; k <= K; ++k) {
      ops.neighbor_sum(w.tr.data(), w.ti.data(), w.yr.data(), w.yi.data(), M);
      ops.scale_accum(w.yr.data(), w.yi.data(), 0.0, -th / k, w.tr.data(),
                      w.ti.data(), w.accr.data(), w.acci.data(), M);
    }
    std::memcpy(w.ar.data(), w.accr.data(), M * sizeof(double));
    std::memcpy(w.ai.data(), w.acci.data(), M * sizeof(double));
  }
}

// psi_n <- exp(-i phi_n) psi_n with phi_n the exact kinetic phase integral
// over [0, tau] starting from quasi-momentum kappa_a under sweep rate r.
void apply_drift(Workspace& w, const kernels::Ops& ops, double tau,
                 double kappa_a, double r) {
  const double c0 =
      tau * kappa_a * kappa_a + r * tau * tau * kappa_a + r * r * tau * tau * tau / 3.0;
  const double c1 = 4.0 * tau * kappa_a + 2.0 * r * tau * tau;
  const double c2 = 4.0 * tau;
  const int N = w.halfwidth;
  const std::size_t M = w.size();
  for (std::size_t j = 0; j < M; ++j) {
    const double n = static_cast<double>(static_cast<int>(j) - N);
    const double ph = c0 + n * (c1 + n * c2);
    w.pr[j] = std::cos(ph);
    w.pi[j] = -std::sin(ph);
  }
  ops.complex_scale(w.ar.data(), w.ai.data(), w.pr.data(), w.pi.data(), M);
}

Eigen::MatrixXd hamiltonian_at(const LatticeParams& params, int halfwidth,
                               double k) {
  LatticeParams p = params;
  p.basis_halfwidth = halfwidth;
  p.k0 = 0.0;  // k passed explicitly; keep validation off the unfolded value
  return bloch_hamiltonian(p, k);
}

// Eigenvectors (ascending) of the small folded problem, gauge-fixed so the
// largest-magnitude component is positive.
Eigen::MatrixXd folded_bands(const LatticeParams& params, double kf,
                             Eigen::VectorXd* energies = nullptr) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      hamiltonian_at(params, params.basis_halfwidth, kf));
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigensolver failed at k = " + std::to_string(kf));
  Eigen::MatrixXd V = solver.eigenvectors();
  for (int b = 0; b < V.cols(); ++b) {
    int imax = 0;
    V.col(b).cwiseAbs().maxCoeff(&imax);
    if (V(imax, b) < 0.0) V.col(b) *= -1.0;
  }
  if (energies) *energies = solver.eigenvalues();
  return V;
}

bool halt_decision(const Protocol& protocol, int period_index) {
  if (protocol.kind == ProtocolKind::constant_force) return false;
  if (protocol.kind != ProtocolKind::randomized_halt) return true;
  if (protocol.halt_probability <= 0.0) return false;
  if (protocol.halt_probability >= 1.0) return true;
  std::mt19937_64 gen(protocol.rng_seed +
                      0x9e3779b97f4a7c15ULL *
                          static_cast<std::uint64_t>(period_index + 1));
  return std::uniform_real_distribution<double>(0.0, 1.0)(gen) <
         protocol.halt_probability;
}

// Stationary evolution exp(-i H t_halt) at fixed quasi-momentum kappa, in the
// workspace basis. The halt duration pi / (E2 - E1) swaps the relative phase
// of the two lowest bands; halted time is excluded from the time axis.
void apply_halt(Workspace& w, const LatticeParams& params, double kappa) {
  const Fold fold = fold_momentum(kappa);
  Eigen::VectorXd energies;
  folded_bands(params, fold.kf, &energies);
  const double gap = energies(1) - energies(0);
  if (!(gap > 0.0)) throw std::runtime_error("vanishing band gap during halt");
  const double t_halt = kPi / gap;

  const int M = static_cast<int>(w.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      hamiltonian_at(params, w.halfwidth, kappa));
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigensolver failed during halt");
  Eigen::VectorXcd psi(M);
  for (int j = 0; j < M; ++j) psi(j) = {w.ar[j], w.ai[j]};
  Eigen::VectorXcd coeff = solver.eigenvectors().transpose() * psi;
  for (int b = 0; b < M; ++b)
    coeff(b) *= std::exp(std::complex<double>(0.0, -solver.eigenvalues()(b) * t_halt));
  psi = solver.eigenvectors() * coeff;
  for (int j = 0; j < M; ++j) {
    w.ar[j] = psi(j).real();
    w.ai[j] = psi(j).imag();
  }
}

// Projection onto the lowest band at fixed kappa; returns the removed norm.
double apply_band_purge(Workspace& w, const LatticeParams& params,
                        double kappa) {
  const int M = static_cast<int>(w.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      hamiltonian_at(params, w.halfwidth, kappa));
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigensolver failed during band purge");
  const Eigen::VectorXd v = solver.eigenvectors().col(0);
  double dr = 0.0, di = 0.0, before = 0.0;
  for (int j = 0; j < M; ++j) {
    dr += v(j) * w.ar[j];
    di += v(j) * w.ai[j];
    before += w.ar[j] * w.ar[j] + w.ai[j] * w.ai[j];
  }
  for (int j = 0; j < M; ++j) {
    w.ar[j] = v(j) * dr;
    w.ai[j] = v(j) * di;
  }
  return before - (dr * dr + di * di);
}

// Returns the removed norm (zero except for empty_second_band).
double apply_action(Workspace& w, const LatticeParams& params,
                    const Protocol& protocol, double kappa, int period_index) {
  switch (protocol.kind) {
    case ProtocolKind::constant_force:
      return 0.0;
    case ProtocolKind::phase_reversal_halt:
      apply_halt(w, params, kappa);
      return 0.0;
    case ProtocolKind::randomized_halt:
      if (halt_decision(protocol, period_index)) apply_halt(w, params, kappa);
      return 0.0;
    case ProtocolKind::empty_second_band:
      return apply_band_purge(w, params, kappa);
  }
  throw std::invalid_argument("unknown protocol kind");
}

struct SampleProjector {
  // Folded small-basis eigenvectors per sample slot, reused across periods
  // (the folded quasi-momentum pattern repeats every Bloch period).
  std::vector<Eigen::MatrixXd> bands;
  std::vector<bool> ready;

  explicit SampleProjector(int slots) : bands(slots), ready(slots, false) {}
};

std::array<double, 4> project_bands(const Workspace& w,
                                    const LatticeParams& params, double kappa,
                                    SampleProjector* cache, int slot) {
  const Fold fold = fold_momentum(kappa);
  const Eigen::MatrixXd* V = nullptr;
  Eigen::MatrixXd local;
  if (cache) {
    if (!cache->ready[slot]) {
      cache->bands[slot] = folded_bands(params, fold.kf);
      cache->ready[slot] = true;
    }
    V = &cache->bands[slot];
  } else {
    local = folded_bands(params, fold.kf);
    V = &local;
  }
  const int Ns = params.basis_halfwidth;
  const int Nb = w.halfwidth;
  std::array<double, 4> pops{};
  const int n_bands = std::min<int>(4, V->cols());
  for (int b = 0; b < n_bands; ++b) {
    double dr = 0.0, di = 0.0;
    for (int m = -Ns; m <= Ns; ++m) {
      const int j = m - fold.s + Nb;  // folded component m sits at n = m - s
      if (j < 0 || j >= static_cast<int>(w.size()))
        throw std::runtime_error("propagation basis too small for projection");
      const double vm = (*V)(m + Ns, b);
      dr += vm * w.ar[j];
      di += vm * w.ai[j];
    }
    pops[b] = dr * dr + di * di;
  }
  return pops;
}

int rounded_steps(int steps_per_period, int samples_per_period) {
  const int q = (steps_per_period + samples_per_period - 1) / samples_per_period;
  return q * samples_per_period;
}

Trajectory evolve_once(const LatticeParams& params, const Protocol& protocol,
                       int n_periods, int samples_per_period,
                       int steps_per_period) {
  const kernels::Ops& ops = kernels::active();
  const double TB = bloch_period(params.F0);
  const int Ns = params.basis_halfwidth;
  const int Nb = Ns + n_periods + 2;
  const int spp = steps_per_period;
  const int stride = spp / samples_per_period;
  const double h = TB / spp;
  const double r = params.F0 / kPi;

  Workspace w(Nb);
  {
    const Eigen::MatrixXd V = folded_bands(params, params.k0);
    for (int m = -Ns; m <= Ns; ++m) w.ar[m + Nb] = V(m + Ns, 0);
  }

  Trajectory traj;
  traj.bloch_period = TB;
  const int total_samples = n_periods * samples_per_period + 1;
  traj.sample_times.reserve(total_samples);
  traj.band_populations.reserve(total_samples);
  traj.survival_series.reserve(total_samples);
  traj.norm_series.reserve(total_samples);

  SampleProjector cache(samples_per_period);
  const auto record = [&](long global_step) {
    const double t = global_step * h;
    const double kappa = params.k0 + 2.0 * static_cast<double>(global_step) / spp;
    const int slot = static_cast<int>((global_step % spp) / stride);
    const auto pops = project_bands(w, params, kappa, &cache, slot);
    traj.sample_times.push_back(t);
    traj.band_populations.push_back(pops);
    traj.survival_series.push_back(pops[0]);
    traj.norm_series.push_back(ops.norm_sq(w.ar.data(), w.ai.data(), w.size()));
  };

  record(0);
  const double w1 = 1.0 / (2.0 - std::cbrt(2.0));
  const double w0 = 1.0 - 2.0 * w1;
  const double coeffs[3] = {w1, w0, w1};
  double norm_ref = traj.norm_series.front();

  for (int p = 1; p <= n_periods; ++p) {
    for (int step = 0; step < spp; ++step) {
      const long g = static_cast<long>(p - 1) * spp + step;
      double offset = 0.0;
      for (double c : coeffs) {
        const double theta = params.V0 / 4.0 * c * h / 2.0;
        apply_kick(w, ops, theta);
        apply_drift(w, ops, c * h, params.k0 + r * (g * h + offset), r);
        offset += c * h;
        apply_kick(w, ops, theta);
      }
      if ((g + 1) % stride == 0) record(g + 1);
    }
    const double norm_now = ops.norm_sq(w.ar.data(), w.ai.data(), w.size());
    if (std::abs(norm_now - norm_ref) > kNormDriftTol)
      throw NormDriftError("norm drift " +
                           std::to_string(std::abs(norm_now - norm_ref)) +
                           " in period " + std::to_string(p));
    const double kappa_b = params.k0 + 2.0 * p;
    traj.lost_norm += apply_action(w, params, protocol, kappa_b, p);
    norm_ref = ops.norm_sq(w.ar.data(), w.ai.data(), w.size());
  }
  return traj;
}

}  // namespace

void validate(const Protocol& protocol) {
  if (!(protocol.halt_probability >= 0.0 && protocol.halt_probability <= 1.0))
    throw std::invalid_argument("halt_probability must lie in [0, 1]");
}

Trajectory evolve(const LatticeParams& params, const Protocol& protocol,
                  int n_bloch_periods, int samples_per_period,
                  int steps_per_period) {
  validate(params);
  validate(protocol);
  if (!(params.F0 > 0.0))
    throw std::invalid_argument("evolve requires a tilt F0 > 0");
  if (n_bloch_periods < 1)
    throw std::invalid_argument("n_bloch_periods must be >= 1");
  if (samples_per_period < 2)
    throw std::invalid_argument("samples_per_period must be >= 2");
  if (steps_per_period < 1)
    throw std::invalid_argument("steps_per_period must be >= 1");

  int spp = rounded_steps(std::max(steps_per_period, samples_per_period),
                          samples_per_period);
  for (int attempt = 0;; ++attempt) {
    try {
      return evolve_once(params, protocol, n_bloch_periods, samples_per_period,
                         spp);
    } catch (const NormDriftError& err) {
      if (attempt >= 3)
        throw std::runtime_error(std::string(err.what()) +
                                 " despite step refinement");
      spp *= 2;
    }
  }
}

std::vector<double> adiabatic_populations(const WavePacketState& state,
                                          const LatticeParams& params,
                                          int n_bands) {
  validate(params);
  const int N = state.halfwidth();
  const int M = 2 * N + 1;
  if (state.amplitudes.size() != M || M < 3)
    throw std::invalid_argument("state amplitudes must span n = -N..N");
  if (n_bands < 1 || n_bands > M)
    throw std::invalid_argument("n_bands must lie in [1, 2N+1]");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      hamiltonian_at(params, N, state.quasi_momentum));
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigensolver failed");
  std::vector<double> pops(n_bands);
  for (int b = 0; b < n_bands; ++b) {
    const std::complex<double> ov =
        solver.eigenvectors().col(b).cast<std::complex<double>>().dot(
            state.amplitudes);
    pops[b] = std::norm(ov);
  }
  return pops;
}

std::vector<double> adiabatic_coupling(const LatticeParams& params,
                                       const std::vector<double>& t_grid,
                                       bool normalize) {
  validate(params);
  if (t_grid.size() < 3)
    throw std::invalid_argument("need at least 3 time points");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1]))
      throw std::invalid_argument("time grid must be strictly increasing");

  const double r = params.F0 / kPi;
  double kmax = 0.0;
  for (double t : t_grid)
    kmax = std::max(kmax, std::abs(params.k0 + r * t));
  const int Nc =
      params.basis_halfwidth + static_cast<int>(std::ceil(kmax / 2.0)) + 2;

  const std::size_t n = t_grid.size();
  std::vector<Eigen::VectorXd> v1(n), v2(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  for (std::size_t i = 0; i < n; ++i) {
    solver.compute(hamiltonian_at(params, Nc, params.k0 + r * t_grid[i]));
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("eigensolver failed on the coupling grid");
    v1[i] = solver.eigenvectors().col(0);
    v2[i] = solver.eigenvectors().col(1);
    if (i > 0) {
      const double o1 = v1[i - 1].dot(v1[i]);
      const double o2 = v2[i - 1].dot(v2[i]);
      if (std::abs(o1) < 0.1 || std::abs(o2) < 0.1)
        throw std::runtime_error(
            "parallel-transport gauge failed: near-zero successive overlap");
      if (o1 < 0.0) v1[i] *= -1.0;
      if (o2 < 0.0) v2[i] *= -1.0;
    }
  }

  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = (i == 0) ? 0 : i - 1;
    const std::size_t hi = (i + 1 == n) ? i : i + 1;
    const double dt = t_grid[hi] - t_grid[lo];
    c[i] = std::abs(v1[i].dot(v2[hi] - v2[lo]) / dt);
  }
  if (normalize) {
    const double cmax = *std::max_element(c.begin(), c.end());
    if (cmax > 0.0)
      for (double& x : c) x /= cmax;
  }
  return c;
}

std::vector<double> lz_coupling_lorentzian(double gap, double sweep_rate,
                                           const std::vector<double>& t_grid,
                                           double t_center) {
  if (!(gap > 0.0)) throw std::invalid_argument("gap must be > 0");
  if (!(sweep_rate > 0.0))
    throw std::invalid_argument("sweep_rate must be > 0");
  const double w = gap / (2.0 * sweep_rate);
  std::vector<double> c(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double dt = t_grid[i] - t_center;
    c[i] = 0.5 * w / (w * w + dt * dt);
  }
  return c;
}

WavePacketState apply_protocol_action(const WavePacketState& state,
                                      const LatticeParams& params,
                                      const Protocol& protocol,
                                      int period_index) {
  validate(params);
  validate(protocol);
  if (period_index < 0)
    throw std::invalid_argument("period_index must be >= 0");
  const double TB = bloch_period(params.F0);
  if (std::abs(state.time - period_index * TB) > 1e-9 * TB)
    throw std::invalid_argument(
        "protocol actions apply only at integer multiples of the Bloch "
        "period");
  const int N = state.halfwidth();
  if (state.amplitudes.size() != 2 * N + 1 || N < 1)
    throw std::invalid_argument("state amplitudes must span n = -N..N");

  Workspace w(N);
  for (int j = 0; j < 2 * N + 1; ++j) {
    w.ar[j] = state.amplitudes(j).real();
    w.ai[j] = state.amplitudes(j).imag();
  }
  apply_action(w, params, protocol, state.quasi_momentum, period_index);
  WavePacketState out = state;
  for (int j = 0; j < 2 * N + 1; ++j)
    out.amplitudes(j) = {w.ar[j], w.ai[j]};
  return out;
}

}  // namespace retsim
