// Copyright (c) the elastrec contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/SparseCholesky>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "elast/fem.hpp"
#include "elast/synth.hpp"

namespace elast {

/// Weighted edge graph carrying the total-variation discretization.
struct TvGraph {
  int node_count = 0;
  std::vector<Edge> edges;  // weight = edge length
};

TvGraph tv_graph(const Mesh& mesh);

/// Graph total variation: sum over edges of w_ij |x_i - x_j|.
double total_variation(const Eigen::VectorXd& values, const TvGraph& graph);

/// Proximal operator of weight * TV via accelerated projected gradient on
/// the dual. Exact identity at weight = 0; iterates until the dual update
/// stalls or max_iterations is hit.
Eigen::VectorXd prox_tv(const Eigen::VectorXd& values, double weight,
                        const TvGraph& graph, int max_iterations = 300);

/// Componentwise max(x, floor); floor 0 projects onto the nonnegative
/// orthant.
Eigen::VectorXd prox_nonneg(const Eigen::VectorXd& values, double floor = 0.0);

/// Effective observation covariance Γ = Σ_w + K(E) Σ_n K(E)^T on the free
/// DOFs, held as a cached sparse Cholesky factorization. Γ^{-1} is never
/// formed.
class GammaOperator {
 public:
  /// Γ = I (the unweighted baseline).
  static GammaOperator identity(int dim);
  /// Γ = diag(variances).
  static GammaOperator diagonal(const Eigen::VectorXd& variances);
  /// Factorization of an explicit symmetric matrix (tests, small cases).
  static GammaOperator from_matrix(const SparseMatrix& gamma);

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  double log_det() const { return log_det_; }
  int dim() const { return dim_; }
  bool is_identity() const { return identity_; }

 private:
  GammaOperator() = default;
  int dim_ = 0;
  bool identity_ = false;
  double log_det_ = 0;
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> llt_;
};

/// Builds Γ from the current modulus estimate. On factorization failure adds
/// 1e-12 * trace/dim to the diagonal and retries once.
GammaOperator gamma_update(const PsiTensor& psi, const ModulusField& modulus,
                           const NoiseModel& noise);

/// g(E) = 1/2 (f - D E)^T Γ^{-1} (f - D E), via triangular solves.
double cost_g(const SparseMatrix& design, const Eigen::VectorXd& f,
              const GammaOperator& gamma, const ModulusField& modulus);

/// ∇g(E) = -D^T Γ^{-1} (f - D E).
Eigen::VectorXd grad_g(const SparseMatrix& design, const Eigen::VectorXd& f,
                       const GammaOperator& gamma, const ModulusField& modulus);

/// Largest eigenvalue of D^T Γ^{-1} D by seeded power iteration
/// (1% relative accuracy, at most max_iterations steps).
double power_lipschitz(const SparseMatrix& design, const GammaOperator& gamma,
                       std::uint64_t seed, int max_iterations = 200);

/// Step size 0.9 / L for the proximal gradient iteration.
double lipschitz_step(const SparseMatrix& design, const GammaOperator& gamma,
                      std::uint64_t seed = 0x3c6ef372fe94f82aull);

enum class Weighting { statistical, identity };
enum class CompositeProx { sequential, dykstra };

struct SolverConfig {
  double lambda = 3e-4;         // TV weight
  int outer_iterations = 10;    // Γ refreshes
  int inner_iterations = 300;   // proximal-gradient steps per refresh
  int tv_iterations = 300;      // dual iterations inside prox_tv
  double tolerance = 1e-6;      // inner relative-change stop
  double floor = 0.0;           // lower bound fed to prox_nonneg, Pa
  Weighting weighting = Weighting::statistical;
  CompositeProx composite_prox = CompositeProx::sequential;
  std::uint64_t power_seed = 0x3c6ef372fe94f82aull;
  std::optional<ModulusField> initial_modulus;  // default: fitted uniform field
};

struct InnerRecord {
  double g;
  double tv;
  double cost;  // g + lambda * tv
  double step;
  double rel_change;
};

struct OuterRecord {
  double gamma_build_seconds;
  double log_det_gamma;
  int inner_iterations;
};

struct SolverTrace {
  std::vector<InnerRecord> inner;
  std::vector<OuterRecord> outer;
  bool aborted = false;
  std::string abort_reason;
};

struct ReconstructionResult {
  ModulusField modulus;
  SolverTrace trace;
};

/// Fixed-point reconstruction: outer loop refreshes Γ from the current
/// estimate, inner loop runs prox_nonneg ∘ prox_tv ∘ gradient steps with a
/// monotone-descent guard (stepsize halved on increase, up to 10 times).
ReconstructionResult reconstruct(const PsiTensor& psi, const FieldVector& f,
                                 const FieldVector& u_measured,
                                 const NoiseModel& noise, const TvGraph& graph,
                                 const SolverConfig& config);

/// Identical loop with Γ fixed to the identity: the unweighted least-squares
/// comparator that isolates the value of the colored-noise weighting.
ReconstructionResult baseline_lsq(const PsiTensor& psi, const FieldVector& f,
                                  const FieldVector& u_measured,
                                  const TvGraph& graph, double lambda,
                                  int outer_iterations, int inner_iterations);

/// Uniform field c minimizing ||f - D(u) (c 1)||²; the default starting
/// point.
ModulusField fitted_uniform_modulus(const PsiTensor& psi, const FieldVector& f,
                                    const FieldVector& u_measured);

void write_trace_csv(const SolverTrace& trace, const std::filesystem::path& path);
void write_trace_summary_json(const SolverTrace& trace,
                              const std::filesystem::path& path);

}  // namespace elast
