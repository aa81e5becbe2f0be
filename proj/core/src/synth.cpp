// Copyright (c) the elastrec contributors.
// SPDX-License-Identifier: Apache-2.0

#include "elast/synth.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "elast/rng.hpp"

namespace elast {

Phantom make_phantom(const Mesh& mesh, double background_pa, double inclusion_pa,
                     std::array<double, 2> center, double radius,
                     std::vector<std::string>* warnings) {
  if (radius <= 0) throw std::invalid_argument("inclusion radius must be positive");
  if (background_pa <= 0 || inclusion_pa <= 0)
    throw std::invalid_argument("moduli must be positive");

  Phantom phantom;
  phantom.background_pa = background_pa;
  phantom.inclusion_pa = inclusion_pa;
  phantom.center = center;
  phantom.radius = radius;
  phantom.modulus.resize(mesh.node_count());

  int inside = 0;
  for (int i = 0; i < mesh.node_count(); ++i) {
    const double dx = mesh.nodes[i][0] - center[0];
    const double dy = mesh.nodes[i][1] - center[1];
    const bool in_inclusion = std::hypot(dx, dy) <= radius;
    phantom.modulus[i] = in_inclusion ? inclusion_pa : background_pa;
    inside += in_inclusion ? 1 : 0;
  }
  if (inside == 0 && warnings)
    warnings->push_back("inclusion covers no mesh node");
  return phantom;
}

FieldVector assemble_traction(const Mesh& mesh, double traction_per_length,
                              double indenter_fraction) {
  if (indenter_fraction <= 0 || indenter_fraction > 1)
    throw std::invalid_argument("indenter fraction must lie in (0, 1]");

  std::vector<int> top = mesh.boundary.top;
  std::sort(top.begin(), top.end(), [&](int a, int b) {
    return mesh.nodes[a][0] < mesh.nodes[b][0];
  });
  if (top.size() < 2) throw std::runtime_error("top boundary has fewer than 2 nodes");

  double lo_x = mesh.nodes[top.front()][0];
  double hi_x = mesh.nodes[top.back()][0];
  const double mid = 0.5 * (lo_x + hi_x);
  const double half_span = 0.5 * indenter_fraction * (hi_x - lo_x);
  const double a = mid - half_span;
  const double b = mid + half_span;

  FieldVector f = FieldVector::Zero(2 * mesh.node_count());
  for (size_t s = 0; s + 1 < top.size(); ++s) {
    const int n1 = top[s];
    const int n2 = top[s + 1];
    const double x1 = mesh.nodes[n1][0];
    const double x2 = mesh.nodes[n2][0];
    const double clip_lo = std::max(x1, a);
    const double clip_hi = std::min(x2, b);
    if (clip_hi <= clip_lo) continue;
    // Consistent loads of the clipped uniform line load over linear shape
    // functions on [x1, x2].
    const double len = clip_hi - clip_lo;
    const double mid_clip = 0.5 * (clip_lo + clip_hi);
    const double w2 = (mid_clip - x1) / (x2 - x1);
    const double w1 = 1.0 - w2;
    f[axial_dof(n1)] -= traction_per_length * len * w1;
    f[axial_dof(n2)] -= traction_per_length * len * w2;
  }
  return f;
}

ForwardResult forward_solve(const PsiTensor& psi, const ModulusField& modulus,
                            const FieldVector& f_applied) {
  if ((modulus.array() <= 0).any())
    throw std::invalid_argument("forward solve requires a positive modulus field");

  const SparseMatrix k_free = psi.restrict_matrix(stiffness_matrix(psi, modulus));
  Eigen::SimplicialLLT<SparseMatrix> llt(k_free);
  if (llt.info() != Eigen::Success) {
    // Report how indefinite the system is via the LDLT pivots.
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(k_free);
    std::ostringstream msg;
    msg << "stiffness factorization failed (indefinite)";
    if (ldlt.info() == Eigen::Success)
      msg << "; min pivot " << ldlt.vectorD().minCoeff();
    throw std::runtime_error(msg.str());
  }

  const Eigen::VectorXd f_free = psi.restrict_free(f_applied);
  const Eigen::VectorXd u_free = llt.solve(f_free);

  ForwardResult result;
  result.u = psi.expand_free(u_free);
  result.f_true = f_applied;
  for (int d = 0; d < psi.dof_count(); ++d)
    if (psi.is_constrained(d)) result.f_true[d] = 0.0;
  const double f_norm = f_free.norm();
  result.residual =
      f_norm > 0 ? (k_free * u_free - f_free).norm() / f_norm : 0.0;
  return result;
}

double calibrate_traction(const PsiTensor& psi, const ModulusField& modulus,
                          const Mesh& mesh, double deflection_fraction,
                          double indenter_fraction) {
  const FieldVector f_unit = assemble_traction(mesh, 1.0, indenter_fraction);
  const ForwardResult ref = forward_solve(psi, modulus, f_unit);
  double peak = 0;
  for (int i = 0; i < mesh.node_count(); ++i)
    peak = std::max(peak, std::abs(ref.u[axial_dof(i)]));
  if (peak == 0) throw std::runtime_error("unit traction produced no deflection");
  return deflection_fraction * mesh.height() / peak;
}

namespace {

FieldVector draw_displacement_noise(const NoiseModel& noise,
                                    const PsiTensor& psi) {
  Rng rng(Rng::substream(noise.seed, 0));
  FieldVector n = FieldVector::Zero(psi.dof_count());
  for (int d = 0; d < psi.dof_count(); ++d) {
    if (psi.is_constrained(d)) continue;
    const double sigma = (d % 2 == 0) ? noise.sigma_lat : noise.sigma_ax;
    n[d] = sigma > 0 ? rng.normal(0.0, sigma) : 0.0;
  }
  return n;
}

FieldVector draw_force_noise(const NoiseModel& noise, const PsiTensor& psi) {
  Rng rng(Rng::substream(noise.seed, 1));
  FieldVector w = FieldVector::Zero(psi.dof_count());
  for (int d = 0; d < psi.dof_count(); ++d) {
    if (psi.is_constrained(d)) continue;
    w[d] = noise.sigma_force > 0 ? rng.normal(0.0, noise.sigma_force) : 0.0;
  }
  return w;
}

double direction_norm(const FieldVector& v, int direction, const PsiTensor& psi,
                      int* count = nullptr) {
  double sq = 0;
  int n = 0;
  for (int d = direction; d < psi.dof_count(); d += 2) {
    if (psi.is_constrained(d)) continue;
    sq += v[d] * v[d];
    ++n;
  }
  if (count) *count = n;
  return std::sqrt(sq);
}

}  // namespace

FieldVector add_noise(const FieldVector& u, const NoiseModel& noise,
                      const PsiTensor& psi) {
  if (!std::isfinite(noise.sigma_lat) || !std::isfinite(noise.sigma_ax))
    throw std::invalid_argument("noise sigma must be finite");
  return u + draw_displacement_noise(noise, psi);
}

FieldVector add_force_noise(const FieldVector& f, const NoiseModel& noise,
                            const PsiTensor& psi) {
  if (!std::isfinite(noise.sigma_force))
    throw std::invalid_argument("force sigma must be finite");
  return f + draw_force_noise(noise, psi);
}

double noise_level(const FieldVector& u_measured, const FieldVector& u) {
  const double denom = u_measured.norm();
  if (denom == 0) throw std::invalid_argument("noise_level: zero measured field");
  return (u_measured - u).norm() / denom;
}

double noise_level_direction(const FieldVector& u_measured, const FieldVector& u,
                             int direction, const PsiTensor& psi) {
  const double denom = direction_norm(u_measured, direction, psi);
  if (denom == 0)
    throw std::invalid_argument("noise_level_direction: zero measured field");
  const FieldVector diff = u_measured - u;
  return direction_norm(diff, direction, psi) / denom;
}

NoiseModel calibrate_noise(const FieldVector& u, double delta_lat,
                           double delta_ax, const PsiTensor& psi) {
  if (delta_lat < 0 || delta_lat >= 1 || delta_ax < 0 || delta_ax >= 1)
    throw std::invalid_argument("noise level targets must lie in [0, 1)");

  NoiseModel noise;
  const double deltas[2] = {delta_lat, delta_ax};
  double* sigmas[2] = {&noise.sigma_lat, &noise.sigma_ax};
  for (int dir = 0; dir < 2; ++dir) {
    if (deltas[dir] == 0) {
      *sigmas[dir] = 0;
      continue;
    }
    int count = 0;
    const double norm = direction_norm(u, dir, psi, &count);
    if (norm == 0 || count == 0)
      throw std::invalid_argument(
          "calibrate_noise: displacement field vanishes in a direction");
    // E||n||² = sigma² N and E||u+n||² = ||u||² + sigma² N give
    // Δ² = sigma²N / (||u||² + sigma²N).
    const double delta = deltas[dir];
    *sigmas[dir] = delta / std::sqrt(1.0 - delta * delta) * norm /
                   std::sqrt(static_cast<double>(count));
  }
  return noise;
}

namespace {

double expected_noise_energy(const FieldVector& u, const NoiseModel& noise,
                             const PsiTensor& psi) {
  int n_lat = 0, n_ax = 0;
  direction_norm(u, 0, psi, &n_lat);
  direction_norm(u, 1, psi, &n_ax);
  return noise.sigma_lat * noise.sigma_lat * n_lat +
         noise.sigma_ax * noise.sigma_ax * n_ax;
}

}  // namespace

NoiseModel scale_noise_to_overall_delta(const FieldVector& u,
                                        const NoiseModel& base,
                                        double delta_overall,
                                        const PsiTensor& psi) {
  if (delta_overall < 0 || delta_overall >= 1)
    throw std::invalid_argument("overall noise level must lie in [0, 1)");
  NoiseModel scaled = base;
  if (delta_overall == 0) {
    scaled.sigma_lat = scaled.sigma_ax = 0;
    return scaled;
  }
  const double base_energy = expected_noise_energy(u, base, psi);
  if (base_energy <= 0)
    throw std::invalid_argument("base noise model has zero displacement noise");
  const double u_sq = psi.restrict_free(u).squaredNorm();
  const double target_energy =
      delta_overall * delta_overall * u_sq / (1.0 - delta_overall * delta_overall);
  const double s = std::sqrt(target_energy / base_energy);
  scaled.sigma_lat *= s;
  scaled.sigma_ax *= s;
  return scaled;
}

NoiseModel scale_noise_to_snr(const FieldVector& u, const NoiseModel& base,
                              double snr_db, const PsiTensor& psi) {
  NoiseModel scaled = base;
  const double base_energy = expected_noise_energy(u, base, psi);
  if (base_energy <= 0)
    throw std::invalid_argument("base noise model has zero displacement noise");
  const double u_sq = psi.restrict_free(u).squaredNorm();
  const double target_energy = u_sq * std::pow(10.0, -snr_db / 10.0);
  const double s = std::sqrt(target_energy / base_energy);
  scaled.sigma_lat *= s;
  scaled.sigma_ax *= s;
  return scaled;
}

Observations synthesize_observations(const FieldVector& u,
                                     const FieldVector& f_true,
                                     const NoiseModel& noise,
                                     const PsiTensor& psi) {
  Observations obs;
  obs.displacement_noise = draw_displacement_noise(noise, psi);
  obs.force_noise = draw_force_noise(noise, psi);
  obs.u_measured = u + obs.displacement_noise;
  obs.f_measured = f_true + obs.force_noise;
  return obs;
}

}  // namespace elast
