// Copyright (c) the elastrec contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "elast/fem.hpp"
#include "elast/mesh.hpp"

namespace elast {

/// Piecewise-constant ground truth: circular inclusion in a homogeneous
/// background.
struct Phantom {
  ModulusField modulus;  // length N, pascals
  double background_pa = 0;
  double inclusion_pa = 0;
  std::array<double, 2> center{0, 0};
  double radius = 0;
};

/// Nodes strictly farther than `radius` from `center` get the background
/// modulus, the rest the inclusion modulus. Appends a warning when the
/// inclusion covers no node.
Phantom make_phantom(const Mesh& mesh, double background_pa, double inclusion_pa,
                     std::array<double, 2> center, double radius,
                     std::vector<std::string>* warnings = nullptr);

/// Diagonal Gaussian observation noise: distinct lateral/axial displacement
/// std deviations and a force std deviation, all driven by one seed.
struct NoiseModel {
  double sigma_lat = 0;    // meters
  double sigma_ax = 0;     // meters
  double sigma_force = 0;  // newtons
  std::uint64_t seed = 0;
};

/// Consistent nodal loads for a uniform downward traction (N/m of edge
/// length) applied on the centered fraction of the top boundary.
FieldVector assemble_traction(const Mesh& mesh, double traction_per_length,
                              double indenter_fraction = 1.0);

struct ForwardResult {
  FieldVector u;       // full-length displacement, prescribed entries set
  FieldVector f_true;  // assembled applied load (zero at constrained DOFs)
  double residual;     // ||K u - f|| / ||f|| on free DOFs
};

/// Solves K(E) u = f on the free DOFs by sparse Cholesky.
/// Throws with the minimum pivot when the system is not positive definite.
ForwardResult forward_solve(const PsiTensor& psi, const ModulusField& modulus,
                            const FieldVector& f_applied);

/// Traction magnitude that makes the peak axial displacement equal
/// `deflection_fraction` of the domain height (linearity makes this exact).
double calibrate_traction(const PsiTensor& psi, const ModulusField& modulus,
                          const Mesh& mesh, double deflection_fraction,
                          double indenter_fraction = 1.0);

/// u + n with n ~ N(0, diag) on free DOFs; Dirichlet-constrained entries are
/// left exactly as given. Deterministic per noise.seed.
FieldVector add_noise(const FieldVector& u, const NoiseModel& noise,
                      const PsiTensor& psi);

/// f + w on free DOFs, drawn from an independent substream of noise.seed.
FieldVector add_force_noise(const FieldVector& f, const NoiseModel& noise,
                            const PsiTensor& psi);

/// Relative noise level  Δ = ||u_m - u|| / ||u_m||.
double noise_level(const FieldVector& u_measured, const FieldVector& u);

/// Per-direction Δ restricted to free DOFs of one direction
/// (0 = lateral, 1 = axial).
double noise_level_direction(const FieldVector& u_measured, const FieldVector& u,
                             int direction, const PsiTensor& psi);

/// Sigma per direction such that the expected realized per-direction Δ
/// matches the target: sigma = Δ/sqrt(1-Δ²) · ||u_dir|| / sqrt(N_dir).
/// sigma_force is left at zero. Rejects Δ ≥ 1.
NoiseModel calibrate_noise(const FieldVector& u, double delta_lat,
                           double delta_ax, const PsiTensor& psi);

/// Rescales both displacement sigmas of `base` jointly so the expected
/// overall Δ = ||n||/||u_m|| hits `delta_overall`.
NoiseModel scale_noise_to_overall_delta(const FieldVector& u,
                                        const NoiseModel& base,
                                        double delta_overall,
                                        const PsiTensor& psi);

/// Rescales both displacement sigmas of `base` jointly so the expected
/// overall SNR (dB) = 10 log10(||u||²/||n||²) hits `snr_db`.
NoiseModel scale_noise_to_snr(const FieldVector& u, const NoiseModel& base,
                              double snr_db, const PsiTensor& psi);

/// One noisy observation set with the latent noise draws kept for
/// bookkeeping checks.
struct Observations {
  FieldVector u_measured;
  FieldVector f_measured;
  FieldVector displacement_noise;
  FieldVector force_noise;
};

Observations synthesize_observations(const FieldVector& u,
                                     const FieldVector& f_true,
                                     const NoiseModel& noise,
                                     const PsiTensor& psi);

}  // namespace elast
