// Copyright (c) the elastrec contributors.
// SPDX-License-Identifier: Apache-2.0

#include "elast/inverse.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "elast/rng.hpp"

namespace elast {

TvGraph tv_graph(const Mesh& mesh) {
  TvGraph graph;
  graph.node_count = mesh.node_count();
  graph.edges = extract_edges(mesh);
  return graph;
}

double total_variation(const Eigen::VectorXd& values, const TvGraph& graph) {
  double tv = 0;
  for (const auto& e : graph.edges)
    tv += e.length * std::abs(values[e.a] - values[e.b]);
  return tv;
}

Eigen::VectorXd prox_tv(const Eigen::VectorXd& values, double weight,
                        const TvGraph& graph, int max_iterations) {
  if (weight < 0) throw std::invalid_argument("prox_tv weight must be >= 0");
  if (weight == 0 || graph.edges.empty()) return values;

  const int m = static_cast<int>(graph.edges.size());
  const int n = graph.node_count;

  // Dual step 1/L with L <= 2 max_i sum_{e at i} w_e^2.
  Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
  for (const auto& e : graph.edges) {
    degree[e.a] += e.length * e.length;
    degree[e.b] += e.length * e.length;
  }
  const double dual_step = 1.0 / (2.0 * degree.maxCoeff());

  // FISTA on the dual: min over |p_e| <= weight of 1/2 ||B^T p - y||^2,
  // primal x = y - B^T p with row e of B equal to w_e (delta_a - delta_b).
  Eigen::VectorXd p = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd p_prev = p;
  Eigen::VectorXd momentum = p;
  Eigen::VectorXd x(n);
  double t = 1.0;

  for (int iter = 0; iter < max_iterations; ++iter) {
    x = values;
    for (int e = 0; e < m; ++e) {
      const auto& edge = graph.edges[e];
      const double contribution = edge.length * momentum[e];
      x[edge.a] -= contribution;
      x[edge.b] += contribution;
    }
    p_prev.swap(p);
    for (int e = 0; e < m; ++e) {
      const auto& edge = graph.edges[e];
      const double grad = edge.length * (x[edge.a] - x[edge.b]);
      p[e] = std::clamp(momentum[e] + dual_step * grad, -weight, weight);
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    momentum = p + ((t - 1.0) / t_next) * (p - p_prev);
    t = t_next;

    if ((p - p_prev).lpNorm<Eigen::Infinity>() <= 1e-14 * weight) break;
  }

  x = values;
  for (int e = 0; e < m; ++e) {
    const auto& edge = graph.edges[e];
    const double contribution = edge.length * p[e];
    x[edge.a] -= contribution;
    x[edge.b] += contribution;
  }
  return x;
}

Eigen::VectorXd prox_nonneg(const Eigen::VectorXd& values, double floor) {
  return values.cwiseMax(floor);
}

GammaOperator GammaOperator::identity(int dim) {
  GammaOperator gamma;
  gamma.dim_ = dim;
  gamma.identity_ = true;
  gamma.log_det_ = 0;
  return gamma;
}

GammaOperator GammaOperator::diagonal(const Eigen::VectorXd& variances) {
  SparseMatrix d(variances.size(), variances.size());
  std::vector<Eigen::Triplet<double>> triplets;
  for (int i = 0; i < variances.size(); ++i)
    triplets.emplace_back(i, i, variances[i]);
  d.setFromTriplets(triplets.begin(), triplets.end());
  return from_matrix(d);
}

GammaOperator GammaOperator::from_matrix(const SparseMatrix& matrix) {
  GammaOperator gamma;
  gamma.dim_ = static_cast<int>(matrix.rows());
  gamma.llt_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>();
  gamma.llt_->compute(matrix);
  if (gamma.llt_->info() != Eigen::Success ||
      gamma.llt_->vectorD().minCoeff() <= 0)
    throw std::runtime_error("covariance factorization failed (not SPD)");
  gamma.log_det_ = gamma.llt_->vectorD().array().log().sum();
  return gamma;
}

Eigen::VectorXd GammaOperator::solve(const Eigen::VectorXd& rhs) const {
  if (identity_) return rhs;
  if (!llt_) throw std::logic_error("GammaOperator is empty");
  return llt_->solve(rhs);
}

GammaOperator gamma_update(const PsiTensor& psi, const ModulusField& modulus,
                           const NoiseModel& noise) {
  if (!modulus.allFinite())
    throw std::invalid_argument("gamma_update: modulus contains NaN");

  const SparseMatrix k_free = psi.restrict_matrix(stiffness_matrix(psi, modulus));
  const int dim = psi.free_count();

  Eigen::VectorXd displacement_var(dim);
  for (int i = 0; i < dim; ++i) {
    const int dof = psi.free_dofs()[i];
    const double sigma = (dof % 2 == 0) ? noise.sigma_lat : noise.sigma_ax;
    displacement_var[i] = sigma * sigma;
  }

  SparseMatrix gamma =
      SparseMatrix(k_free * displacement_var.asDiagonal() * k_free.transpose());
  const double force_var = noise.sigma_force * noise.sigma_force;
  SparseMatrix identity(dim, dim);
  identity.setIdentity();
  gamma += force_var * identity;

  try {
    return GammaOperator::from_matrix(gamma);
  } catch (const std::runtime_error&) {
    double trace = 0;
    for (int i = 0; i < dim; ++i) trace += gamma.coeff(i, i);
    gamma += (1e-12 * trace / dim) * identity;
    return GammaOperator::from_matrix(gamma);
  }
}

double cost_g(const SparseMatrix& design, const Eigen::VectorXd& f,
              const GammaOperator& gamma, const ModulusField& modulus) {
  const Eigen::VectorXd residual = f - design * modulus;
  const double g = 0.5 * residual.dot(gamma.solve(residual));
  if (!std::isfinite(g)) throw std::runtime_error("cost_g produced NaN");
  return g;
}

Eigen::VectorXd grad_g(const SparseMatrix& design, const Eigen::VectorXd& f,
                       const GammaOperator& gamma, const ModulusField& modulus) {
  const Eigen::VectorXd residual = f - design * modulus;
  return -design.transpose() * gamma.solve(residual);
}

double power_lipschitz(const SparseMatrix& design, const GammaOperator& gamma,
                       std::uint64_t seed, int max_iterations) {
  const int n = static_cast<int>(design.cols());
  if (design.nonZeros() == 0)
    throw std::invalid_argument("power_lipschitz: zero operator");

  Rng rng(seed);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  v.normalize();

  double lambda = 0;
  for (int iter = 0; iter < max_iterations; ++iter) {
    const Eigen::VectorXd z = design.transpose() * gamma.solve(design * v);
    const double norm = z.norm();
    if (norm == 0) return 0;
    const double lambda_next = v.dot(z);
    v = z / norm;
    if (iter > 0 && std::abs(lambda_next - lambda) <= 0.01 * std::abs(lambda_next)) {
      return lambda_next;
    }
    lambda = lambda_next;
  }

  // Conservative fallback: ||D||_F^2 times a sampled bound on diag(Γ^{-1}).
  std::cerr << "power_lipschitz: no convergence in " << max_iterations
            << " iterations, using conservative bound\n";
  const int dim = static_cast<int>(design.rows());
  double diag_max = 0;
  Rng pick(seed ^ 0x5851f42d4c957f2dull);
  for (int k = 0; k < std::min(8, dim); ++k) {
    const int i = static_cast<int>(pick.next_u64() % dim);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    e[i] = 1.0;
    diag_max = std::max(diag_max, gamma.solve(e)[i]);
  }
  double frob_sq = 0;
  for (int c = 0; c < design.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(design, c); it; ++it)
      frob_sq += it.value() * it.value();
  return frob_sq * diag_max;
}

double lipschitz_step(const SparseMatrix& design, const GammaOperator& gamma,
                      std::uint64_t seed) {
  const double lipschitz = power_lipschitz(design, gamma, seed);
  if (lipschitz <= 0)
    throw std::runtime_error("lipschitz_step: nonpositive curvature estimate");
  return 0.9 / lipschitz;
}

ModulusField fitted_uniform_modulus(const PsiTensor& psi, const FieldVector& f,
                                    const FieldVector& u_measured) {
  const ModulusField ones = ModulusField::Ones(psi.node_count());
  const Eigen::VectorXd d = psi.restrict_free(apply_design(psi, u_measured, ones));
  const Eigen::VectorXd f_free = psi.restrict_free(f);
  const double denom = d.squaredNorm();
  if (denom == 0)
    throw std::invalid_argument("fitted_uniform_modulus: zero displacement data");
  double c = d.dot(f_free) / denom;
  if (!(c > 0)) c = 1.0;  // pathological data; any positive start works
  return c * ones;
}

namespace {

SparseMatrix restrict_rows(const SparseMatrix& full,
                           const std::vector<int>& rows, int full_rows) {
  std::vector<int> map(full_rows, -1);
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) map[rows[i]] = i;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(full.nonZeros());
  for (int c = 0; c < full.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(full, c); it; ++it)
      if (map[it.row()] >= 0)
        triplets.emplace_back(map[it.row()], static_cast<int>(c), it.value());
  SparseMatrix out(static_cast<int>(rows.size()), full.cols());
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

Eigen::VectorXd composite_prox_step(const Eigen::VectorXd& z, double tv_weight,
                                    const TvGraph& graph,
                                    const SolverConfig& config) {
  if (config.composite_prox == CompositeProx::sequential)
    return prox_nonneg(prox_tv(z, tv_weight, graph, config.tv_iterations),
                       config.floor);

  // Dykstra alternating projections: the exact prox of the sum, offered as
  // an alternative to the composed form.
  Eigen::VectorXd x = z;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(z.size());
  Eigen::VectorXd q = Eigen::VectorXd::Zero(z.size());
  for (int i = 0; i < 25; ++i) {
    const Eigen::VectorXd y = prox_tv(x + p, tv_weight, graph, config.tv_iterations);
    p = x + p - y;
    const Eigen::VectorXd x_next = prox_nonneg(y + q, config.floor);
    q = y + q - x_next;
    const double change = (x_next - x).norm();
    x = x_next;
    if (change <= 1e-12 * (x.norm() + 1e-30)) break;
  }
  return x;
}

}  // namespace

ReconstructionResult reconstruct(const PsiTensor& psi, const FieldVector& f,
                                 const FieldVector& u_measured,
                                 const NoiseModel& noise, const TvGraph& graph,
                                 const SolverConfig& config) {
  if (f.size() != psi.dof_count() || u_measured.size() != psi.dof_count())
    throw std::invalid_argument("reconstruct: field length mismatch");
  if (graph.node_count != psi.node_count())
    throw std::invalid_argument("reconstruct: graph does not match mesh");
  if (config.lambda < 0 || config.outer_iterations < 1 ||
      config.inner_iterations < 1)
    throw std::invalid_argument("reconstruct: invalid solver configuration");

  const SparseMatrix design =
      restrict_rows(design_matrix(psi, u_measured), psi.free_dofs(),
                    psi.dof_count());
  const Eigen::VectorXd f_free = psi.restrict_free(f);

  ModulusField estimate = config.initial_modulus
                              ? *config.initial_modulus
                              : fitted_uniform_modulus(psi, f, u_measured);
  if (estimate.size() != psi.node_count())
    throw std::invalid_argument("reconstruct: initial modulus length mismatch");
  estimate = prox_nonneg(estimate, config.floor);

  ReconstructionResult result;
  SolverTrace& trace = result.trace;
  double initial_cost = 0;
  bool have_initial_cost = false;

  for (int outer = 0; outer < config.outer_iterations; ++outer) {
    const auto t0 = std::chrono::steady_clock::now();
    const GammaOperator gamma =
        config.weighting == Weighting::statistical
            ? gamma_update(psi, estimate, noise)
            : GammaOperator::identity(psi.free_count());
    const double build_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    const double base_step = lipschitz_step(design, gamma, config.power_seed);

    // Current state, kept in sync with `estimate`.
    Eigen::VectorXd residual = f_free - design * estimate;
    Eigen::VectorXd weighted = gamma.solve(residual);
    double g = 0.5 * residual.dot(weighted);
    double tv = total_variation(estimate, graph);
    double cost = g + config.lambda * tv;
    if (!have_initial_cost) {
      initial_cost = cost;
      have_initial_cost = true;
    }

    int inner_count = 0;
    for (int inner = 0; inner < config.inner_iterations; ++inner) {
      if (!std::isfinite(cost)) {
        std::ostringstream msg;
        msg << "NaN cost at outer " << outer << " inner " << inner;
        throw std::runtime_error(msg.str());
      }

      const Eigen::VectorXd gradient = -design.transpose() * weighted;

      double step = base_step;
      ModulusField candidate;
      Eigen::VectorXd cand_residual, cand_weighted;
      double cand_g = 0, cand_tv = 0, cand_cost = 0;
      for (int halving = 0; halving <= 10; ++halving) {
        candidate = composite_prox_step(estimate - step * gradient,
                                        config.lambda * step, graph, config);
        cand_residual = f_free - design * candidate;
        cand_weighted = gamma.solve(cand_residual);
        cand_g = 0.5 * cand_residual.dot(cand_weighted);
        cand_tv = total_variation(candidate, graph);
        cand_cost = cand_g + config.lambda * cand_tv;
        if (cand_cost <= cost * (1.0 + 1e-12) + 1e-300 || halving == 10) break;
        step *= 0.5;
      }

      const double denom = estimate.norm();
      const double rel_change =
          denom > 0 ? (candidate - estimate).norm() / denom : 0.0;

      estimate = candidate;
      residual.swap(cand_residual);
      weighted.swap(cand_weighted);
      g = cand_g;
      tv = cand_tv;
      cost = cand_cost;
      trace.inner.push_back({g, tv, cost, step, rel_change});
      ++inner_count;

      if (cost > 1e6 * std::max(initial_cost, 1e-300)) {
        trace.outer.push_back({build_seconds, gamma.log_det(), inner_count});
        trace.aborted = true;
        std::ostringstream msg;
        msg << "diverged at outer " << outer << " inner " << inner << " (cost "
            << cost << " vs initial " << initial_cost << ")";
        trace.abort_reason = msg.str();
        result.modulus = estimate;
        return result;
      }
      if (rel_change < config.tolerance) break;
    }
    trace.outer.push_back({build_seconds, gamma.log_det(), inner_count});
  }

  result.modulus = estimate;
  return result;
}

ReconstructionResult baseline_lsq(const PsiTensor& psi, const FieldVector& f,
                                  const FieldVector& u_measured,
                                  const TvGraph& graph, double lambda,
                                  int outer_iterations, int inner_iterations) {
  SolverConfig config;
  config.lambda = lambda;
  config.outer_iterations = outer_iterations;
  config.inner_iterations = inner_iterations;
  config.weighting = Weighting::identity;
  return reconstruct(psi, f, u_measured, NoiseModel{}, graph, config);
}

void write_trace_csv(const SolverTrace& trace,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "iteration,g,tv,cost,step,rel_change\n";
  char buf[256];
  for (size_t i = 0; i < trace.inner.size(); ++i) {
    const auto& r = trace.inner[i];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", i,
                  r.g, r.tv, r.cost, r.step, r.rel_change);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_trace_summary_json(const SolverTrace& trace,
                              const std::filesystem::path& path) {
  nlohmann::json summary;
  summary["inner_iterations"] = trace.inner.size();
  summary["aborted"] = trace.aborted;
  if (trace.aborted) summary["abort_reason"] = trace.abort_reason;
  if (!trace.inner.empty()) {
    summary["final_cost"] = trace.inner.back().cost;
    summary["final_g"] = trace.inner.back().g;
    summary["final_tv"] = trace.inner.back().tv;
    summary["final_rel_change"] = trace.inner.back().rel_change;
  }
  auto& outers = summary["outer"] = nlohmann::json::array();
  for (const auto& o : trace.outer) {
    outers.push_back({{"gamma_build_seconds", o.gamma_build_seconds},
                      {"log_det_gamma", o.log_det_gamma},
                      {"inner_iterations", o.inner_iterations}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << summary.dump(2) << "\n";
}

}  // namespace elast
