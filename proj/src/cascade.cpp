#include "retsim/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace retsim {

namespace {

constexpr double kPi = std::numbers::pi;

void check_amplitudes(double s12, double s23, double phi) {
  if (!(s12 >= 0.0 && s12 <= 1.0))
    throw std::invalid_argument("s12 must lie in [0, 1], got " +
                                std::to_string(s12));
  if (!(s23 >= 0.0 && s23 <= 1.0))
    throw std::invalid_argument("s23 must lie in [0, 1], got " +
                                std::to_string(s23));
  if (!std::isfinite(phi))
    throw std::invalid_argument("phi must be finite");
}

Eigen::Vector2cd eigvec(const Eigen::Matrix2cd& U, std::complex<double> e) {
  // Null vector of (U - e): one of the two analytic candidates is always
  // well-conditioned unless the matrix is defective.
  const Eigen::Vector2cd a(U(0, 1), e - U(0, 0));
  const Eigen::Vector2cd b(e - U(1, 1), U(1, 0));
  Eigen::Vector2cd v = (a.squaredNorm() >= b.squaredNorm()) ? a : b;
  const double nrm = v.norm();
  if (nrm < 1e-300) return Eigen::Vector2cd(1.0, 0.0);
  v /= nrm;
  const int lead = (std::abs(v(0)) > 1e-12) ? 0 : 1;
  v *= std::conj(v(lead)) / std::abs(v(lead));
  return v;
}

}  // namespace

double lz_probability(double delta_E, double alpha) {
  if (!(delta_E >= 0.0))
    throw std::invalid_argument("delta_E must be >= 0");
  if (!(alpha > 0.0))
    throw std::invalid_argument("sweep rate alpha must be > 0");
  return std::exp(-kPi * delta_E * delta_E / (4.0 * alpha));
}

std::pair<double, double> survival_amplitudes(double V0, double F0) {
  if (!(V0 >= 0.0)) throw std::invalid_argument("V0 must be >= 0");
  if (!(F0 > 0.0)) throw std::invalid_argument("F0 must be > 0");
  const double p12 = std::exp(-kPi * kPi * V0 * V0 / (32.0 * F0));
  const double p23 =
      std::exp(-kPi * kPi * V0 * V0 * V0 * V0 / (32.0 * 256.0 * 2.0 * F0));
  return {std::sqrt(1.0 - p12), std::sqrt(1.0 - p23)};
}

CascadeModel cascade_operator(double s12, double s23, double phi) {
  check_amplitudes(s12, s23, phi);
  CascadeModel m;
  m.s12 = s12;
  m.s23 = s23;
  m.phi = phi;
  const double p12 = std::sqrt(1.0 - s12 * s12);
  const std::complex<double> E = std::polar(1.0, phi);
  m.U << s12, -p12 * s23 * E, p12, s12 * s23 * E;

  const std::complex<double> tr = m.U(0, 0) + m.U(1, 1);
  const std::complex<double> det =
      m.U(0, 0) * m.U(1, 1) - m.U(0, 1) * m.U(1, 0);
  const std::complex<double> sd = std::sqrt(tr * tr - 4.0 * det);
  const std::complex<double> ea = 0.5 * (tr + sd);
  const std::complex<double> eb = 0.5 * (tr - sd);
  if (std::abs(ea) >= std::abs(eb)) {
    m.e1 = ea;
    m.e2 = eb;
  } else {
    m.e1 = eb;
    m.e2 = ea;
  }
  m.degenerate =
      std::abs(m.e1) - std::abs(m.e2) <= 1e-12 * std::max(1.0, std::abs(m.e1));

  m.psi1 = eigvec(m.U, m.e1);
  m.psi2 = eigvec(m.U, m.e2);
  const std::complex<double> D =
      m.psi1(0) * m.psi2(1) - m.psi1(1) * m.psi2(0);
  if (std::abs(D) < 1e-300) {
    m.c1 = m.c2 = std::numeric_limits<double>::quiet_NaN();
  } else {
    m.c1 = m.psi2(1) / D;
    m.c2 = -m.psi1(1) / D;
  }
  return m;
}

std::vector<double> iterate_cascade(const CascadeModel& model, int n_max) {
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  std::vector<double> P(n_max + 1);
  Eigen::Vector2cd v(1.0, 0.0);
  P[0] = 1.0;
  for (int n = 1; n <= n_max; ++n) {
    v = model.U * v;
    P[n] = std::norm(v(0));
  }
  return P;
}

double asymptotic_rate(const CascadeModel& model) {
  if (model.degenerate)
    throw std::runtime_error(
        "degenerate cascade (|e1| = |e2|): no asymptotic rate");
  return -2.0 * std::log(std::abs(model.e1));
}

double z_projection(const CascadeModel& model) {
  if (model.degenerate)
    throw std::runtime_error(
        "degenerate cascade (|e1| = |e2|): Z is undefined");
  return std::norm(model.c1) * std::norm(model.psi1(0));
}

double z_closed_form(double s12, double s23, double phi) {
  check_amplitudes(s12, s23, phi);
  const std::complex<double> E = std::polar(1.0, phi);
  const std::complex<double> tr = s12 * (1.0 + s23 * E);
  const std::complex<double> det = s23 * E;
  const std::complex<double> disc = tr * tr - 4.0 * det;
  const double K = disc.real() + std::abs(disc);
  if (K <= 1e-12)
    throw std::runtime_error(
        "degenerate cascade (|e1| = |e2|): Z is undefined");
  const double c = std::cos(phi);
  const double w = 2.0 - s12 * s12 * (1.0 + s23 * c);
  const double s2s = s23 * s23 * std::sin(phi) * std::sin(phi);
  const double A = 0.5 * s12 * (1.0 - s23 * c) + std::sqrt(K / 8.0);
  const double B = w / std::sqrt(2.0 * K) + 0.5 * s12;
  const double num = A * A + s2s * B * B;
  const double den = 0.5 * K + (2.0 * s2s / K) * w * w;
  const double Z = num / den;
  const double Zp = z_projection(cascade_operator(s12, s23, phi));
  if (std::abs(Z - Zp) > 1e-6)
    throw std::runtime_error(
        "closed-form Z disagrees with eigenvector projection: " +
        std::to_string(Z) + " vs " + std::to_string(Zp));
  return Z;
}

double z_first_order(double s12, double s23, double phi) {
  check_amplitudes(s12, s23, phi);
  if (s12 == 0.0)
    throw std::invalid_argument("first-order Z requires s12 > 0");
  const double r = (1.0 - s12 * s12) / (s12 * s12);
  return 1.0 + 2.0 * s23 * r * std::cos(phi);
}

std::pair<double, double> finite_step_estimates(const std::vector<double>& P,
                                                int N) {
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  if (static_cast<int>(P.size()) < N + 2)
    throw std::invalid_argument("need P_0..P_{N+1}: got " +
                                std::to_string(P.size()) + " entries");
  for (int n = 0; n <= N + 1; ++n)
    if (!(P[n] > 0.0))
      throw std::invalid_argument("survival probabilities must be positive");
  std::vector<double> gamma(N + 1);
  for (int n = 0; n <= N; ++n) gamma[n] = -std::log(P[n + 1] / P[n]);
  double acc = 0.0;
  for (int n = 0; n < N; ++n) acc += gamma[n];
  return {std::exp(N * gamma[N] - acc), gamma[N]};
}

std::vector<ResonancePoint> resonance_map(const LatticeParams& base,
                                          const std::vector<double>& F0_grid) {
  if (F0_grid.empty()) throw std::invalid_argument("empty F0 grid");
  const double gap = average_band_gap(base);
  std::vector<double> grid = F0_grid;
  std::sort(grid.begin(), grid.end());
  std::vector<ResonancePoint> out;
  out.reserve(grid.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (double F0 : grid) {
    if (!(F0 > 0.0)) throw std::invalid_argument("F0 grid entries must be > 0");
    ResonancePoint pt;
    pt.F0 = F0;
    pt.phi = 2.0 * kPi * gap / F0;
    std::tie(pt.s12, pt.s23) = survival_amplitudes(base.V0, F0);
    const CascadeModel m = cascade_operator(pt.s12, pt.s23, pt.phi);
    if (m.degenerate) {
      pt.gamma_per_period = pt.z_closed = pt.z_projection = nan;
    } else {
      pt.gamma_per_period = asymptotic_rate(m);
      pt.z_projection = z_projection(m);
      pt.z_closed = z_closed_form(pt.s12, pt.s23, pt.phi);
    }
    pt.z1 = (pt.s12 > 0.0) ? z_first_order(pt.s12, pt.s23, pt.phi) : nan;
    out.push_back(pt);
  }
  return out;
}

}  // namespace retsim
