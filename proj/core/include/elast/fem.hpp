// Copyright (c) the elastrec contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Sparse>
#include <array>
#include <utility>
#include <vector>

#include "elast/mesh.hpp"

namespace elast {

/// Length-2N nodal vector, node-major with (lateral, axial) interleaved.
/// Meters for displacements, newtons for forces.
using FieldVector = Eigen::VectorXd;

/// Length-N Young's modulus vector, pascals, one value per node.
using ModulusField = Eigen::VectorXd;

using SparseMatrix = Eigen::SparseMatrix<double>;

inline int lateral_dof(int node) { return 2 * node; }
inline int axial_dof(int node) { return 2 * node + 1; }

/// Plane-stress material matrix (mu / (1 - nu^2)) [[1,nu,0],[nu,1,0],[0,0,(1-nu)/2]].
Eigen::Matrix3d material_matrix(double mu, double nu);

/// Constant-strain-triangle B matrix (3x6), rows (du/dx, dv/dy, du/dy+dv/dx),
/// element DOFs ordered (u1,v1,u2,v2,u3,v3).
Eigen::Matrix<double, 3, 6> strain_displacement_matrix(const Mesh& mesh,
                                                       int element_index);

/// t_e * A_e * B^T M B. Symmetric PSD with three rigid-body null modes.
Eigen::Matrix<double, 6, 6> local_stiffness(const Mesh& mesh, int element_index,
                                            double mu, double nu);

/// Dirichlet constraint sets. `fixed` nodes lose both DOFs; `axial_only`
/// nodes roll laterally on a horizontal support; `lateral_only` is the
/// mirror case.
struct DirichletSet {
  std::vector<int> fixed;
  std::vector<int> axial_only;
  std::vector<int> lateral_only;

  bool empty() const {
    return fixed.empty() && axial_only.empty() && lateral_only.empty();
  }
};

/// Per-node stack of unit-modulus stiffness contributions.
///
/// Slice i collects one third of the unit-modulus stiffness of every element
/// touching node i (element modulus = mean of its vertex moduli), so
/// K(E) = sum_i E_i * slice(i) is linear in E. Dirichlet rows/columns are
/// zeroed symmetrically in every slice; the unit diagonal of constrained
/// DOFs is applied by the system solver, outside the modulus weighting.
class PsiTensor {
 public:
  int node_count() const { return static_cast<int>(slices_.size()); }
  int dof_count() const { return 2 * node_count(); }
  int free_count() const { return static_cast<int>(free_dofs_.size()); }

  const SparseMatrix& slice(int node) const { return slices_[node]; }
  bool is_constrained(int dof) const { return constrained_[dof] != 0; }
  const std::vector<int>& free_dofs() const { return free_dofs_; }
  const DirichletSet& dirichlet() const { return dirichlet_; }

  /// Gathers the free entries of a full-length vector.
  Eigen::VectorXd restrict_free(const Eigen::VectorXd& full) const;
  /// Scatters a free-DOF vector back to full length; constrained entries 0.
  Eigen::VectorXd expand_free(const Eigen::VectorXd& free_values) const;
  /// Drops constrained rows/columns of a full-size operator.
  SparseMatrix restrict_matrix(const SparseMatrix& full) const;

  friend PsiTensor assemble_psi(const Mesh& mesh, double nu,
                                const DirichletSet& dirichlet);

  /// Free-row x constrained-column couplings of slice i, needed to fold
  /// nonzero prescribed displacements into the right-hand side.
  const std::vector<Eigen::Triplet<double>>& coupling(int node) const {
    return coupling_[node];
  }

 private:
  std::vector<SparseMatrix> slices_;
  std::vector<std::vector<Eigen::Triplet<double>>> coupling_;
  std::vector<std::uint8_t> constrained_;
  std::vector<int> free_dofs_;
  DirichletSet dirichlet_;
};

/// Assembles the per-node stiffness slices for unit modulus and eliminates
/// the constrained DOFs. Refuses an empty set: rigid-body modes would make
/// every K(E) singular.
PsiTensor assemble_psi(const Mesh& mesh, double nu,
                       const DirichletSet& dirichlet);

/// Convenience: fully fix both DOFs of the given nodes.
PsiTensor assemble_psi(const Mesh& mesh, double nu,
                       const std::vector<int>& dirichlet_nodes);

/// K(E) = sum_i E_i slice(i), full size with zeroed constrained rows/columns.
SparseMatrix stiffness_matrix(const PsiTensor& psi, const ModulusField& modulus);

/// K(E) u via the assembled sparse matrix. Throws on NaN in E.
FieldVector apply_stiffness(const PsiTensor& psi, const ModulusField& modulus,
                            const FieldVector& u);

/// The 2N x N operator with column i = slice(i) u; maps a modulus field to
/// nodal forces for fixed displacements, which linearizes the inverse
/// problem in E.
SparseMatrix design_matrix(const PsiTensor& psi, const FieldVector& u);

/// design_matrix(psi, u) * E without forming the operator; equals
/// apply_stiffness(psi, E, u) up to floating-point reassociation.
FieldVector apply_design(const PsiTensor& psi, const FieldVector& u,
                         const ModulusField& modulus);

/// Prescribed displacement values for nodes whose DOFs were eliminated at
/// assembly. Duplicate nodes are rejected.
struct DirichletValues {
  std::vector<std::pair<int, std::array<double, 2>>> nodes;
};

/// Overwrites the constrained entries of a field with prescribed values.
void apply_dirichlet(const PsiTensor& psi, const DirichletValues& values,
                     FieldVector& field);

/// Right-hand side after symmetric elimination: free entries of f minus the
/// coupling terms K_fc(E) u_c; constrained entries carry prescribed values.
FieldVector apply_dirichlet(const PsiTensor& psi, const DirichletValues& values,
                            const ModulusField& modulus, const FieldVector& f);

}  // namespace elast
