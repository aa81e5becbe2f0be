// Copyright (c) the elastrec contributors.
// SPDX-License-Identifier: Apache-2.0

#include "elast/fem.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace elast {

Eigen::Matrix3d material_matrix(double mu, double nu) {
  if (std::abs(nu) >= 1.0)
    throw std::invalid_argument("Poisson ratio magnitude must be below 1");
  Eigen::Matrix3d m;
  const double s = mu / (1.0 - nu * nu);
  m << s, s * nu, 0.0,
       s * nu, s, 0.0,
       0.0, 0.0, s * (1.0 - nu) / 2.0;
  return m;
}

Eigen::Matrix<double, 3, 6> strain_displacement_matrix(const Mesh& mesh,
                                                       int element_index) {
  const double area = signed_area(mesh, element_index);
  if (area <= 0) {
    std::ostringstream msg;
    msg << "element " << element_index << " is singular (area " << area << ")";
    throw std::runtime_error(msg.str());
  }
  const auto& e = mesh.elements[element_index];
  const auto& p1 = mesh.nodes[e[0]];
  const auto& p2 = mesh.nodes[e[1]];
  const auto& p3 = mesh.nodes[e[2]];

  // b_i = (y_j - y_k) / 2A, c_i = (x_k - x_j) / 2A, (i, j, k) cyclic.
  const double inv = 1.0 / (2.0 * area);
  const double b1 = (p2[1] - p3[1]) * inv;
  const double b2 = (p3[1] - p1[1]) * inv;
  const double b3 = (p1[1] - p2[1]) * inv;
  const double c1 = (p3[0] - p2[0]) * inv;
  const double c2 = (p1[0] - p3[0]) * inv;
  const double c3 = (p2[0] - p1[0]) * inv;

  Eigen::Matrix<double, 3, 6> b;
  b << b1, 0, b2, 0, b3, 0,
       0, c1, 0, c2, 0, c3,
       c1, b1, c2, b2, c3, b3;
  return b;
}

Eigen::Matrix<double, 6, 6> local_stiffness(const Mesh& mesh, int element_index,
                                            double mu, double nu) {
  const auto b = strain_displacement_matrix(mesh, element_index);
  const auto m = material_matrix(mu, nu);
  const double area = signed_area(mesh, element_index);
  return mesh.thickness * area * b.transpose() * m * b;
}

Eigen::VectorXd PsiTensor::restrict_free(const Eigen::VectorXd& full) const {
  Eigen::VectorXd out(free_count());
  for (int i = 0; i < free_count(); ++i) out[i] = full[free_dofs_[i]];
  return out;
}

Eigen::VectorXd PsiTensor::expand_free(const Eigen::VectorXd& free_values) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dof_count());
  for (int i = 0; i < free_count(); ++i) out[free_dofs_[i]] = free_values[i];
  return out;
}

SparseMatrix PsiTensor::restrict_matrix(const SparseMatrix& full) const {
  std::vector<int> full_to_free(dof_count(), -1);
  for (int i = 0; i < free_count(); ++i) full_to_free[free_dofs_[i]] = i;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(full.nonZeros());
  for (int col = 0; col < full.outerSize(); ++col) {
    const int fc = full_to_free[col];
    if (fc < 0) continue;
    for (SparseMatrix::InnerIterator it(full, col); it; ++it) {
      const int fr = full_to_free[it.row()];
      if (fr >= 0) triplets.emplace_back(fr, fc, it.value());
    }
  }
  SparseMatrix out(free_count(), free_count());
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

PsiTensor assemble_psi(const Mesh& mesh, double nu,
                       const std::vector<int>& dirichlet_nodes) {
  return assemble_psi(mesh, nu, DirichletSet{dirichlet_nodes, {}, {}});
}

PsiTensor assemble_psi(const Mesh& mesh, double nu,
                       const DirichletSet& dirichlet) {
  if (dirichlet.empty())
    throw std::invalid_argument(
        "assemble_psi: empty Dirichlet set leaves rigid-body modes");

  const int n = mesh.node_count();
  const int dofs = 2 * n;

  PsiTensor psi;
  psi.constrained_.assign(dofs, 0);
  psi.dirichlet_ = dirichlet;
  auto check_node = [n](int node) {
    if (node < 0 || node >= n)
      throw std::out_of_range("Dirichlet node out of range");
  };
  for (int node : dirichlet.fixed) {
    check_node(node);
    psi.constrained_[lateral_dof(node)] = 1;
    psi.constrained_[axial_dof(node)] = 1;
  }
  for (int node : dirichlet.axial_only) {
    check_node(node);
    psi.constrained_[axial_dof(node)] = 1;
  }
  for (int node : dirichlet.lateral_only) {
    check_node(node);
    psi.constrained_[lateral_dof(node)] = 1;
  }
  for (int d = 0; d < dofs; ++d)
    if (!psi.constrained_[d]) psi.free_dofs_.push_back(d);

  std::vector<std::vector<Eigen::Triplet<double>>> slice_triplets(n);
  psi.coupling_.assign(n, {});

  for (int t = 0; t < mesh.element_count(); ++t) {
    const auto unit_k = local_stiffness(mesh, t, 1.0, nu);
    const auto& e = mesh.elements[t];
    int global[6];
    for (int v = 0; v < 3; ++v) {
      global[2 * v] = lateral_dof(e[v]);
      global[2 * v + 1] = axial_dof(e[v]);
    }
    // Element modulus = mean of vertex moduli, so each vertex owns 1/3.
    for (int v = 0; v < 3; ++v) {
      const int owner = e[v];
      for (int r = 0; r < 6; ++r) {
        for (int c = 0; c < 6; ++c) {
          const double value = unit_k(r, c) / 3.0;
          if (value == 0.0) continue;
          const int gr = global[r];
          const int gc = global[c];
          const bool row_fixed = psi.constrained_[gr];
          const bool col_fixed = psi.constrained_[gc];
          if (!row_fixed && !col_fixed)
            slice_triplets[owner].emplace_back(gr, gc, value);
          else if (!row_fixed && col_fixed)
            psi.coupling_[owner].emplace_back(gr, gc, value);
          // Constrained rows are dropped entirely.
        }
      }
    }
  }

  psi.slices_.reserve(n);
  for (int i = 0; i < n; ++i) {
    SparseMatrix s(dofs, dofs);
    s.setFromTriplets(slice_triplets[i].begin(), slice_triplets[i].end());
    psi.slices_.push_back(std::move(s));
  }
  return psi;
}

SparseMatrix stiffness_matrix(const PsiTensor& psi, const ModulusField& modulus) {
  if (modulus.size() != psi.node_count())
    throw std::invalid_argument("modulus length does not match node count");
  std::vector<Eigen::Triplet<double>> triplets;
  for (int i = 0; i < psi.node_count(); ++i) {
    if (modulus[i] == 0.0) continue;
    const SparseMatrix& s = psi.slice(i);
    for (int col = 0; col < s.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(s, col); it; ++it)
        triplets.emplace_back(it.row(), col, modulus[i] * it.value());
  }
  SparseMatrix k(psi.dof_count(), psi.dof_count());
  k.setFromTriplets(triplets.begin(), triplets.end());
  return k;
}

FieldVector apply_stiffness(const PsiTensor& psi, const ModulusField& modulus,
                            const FieldVector& u) {
  if (u.size() != psi.dof_count())
    throw std::invalid_argument("displacement length does not match DOF count");
  if (!modulus.allFinite())
    throw std::invalid_argument("modulus contains NaN or infinity");
  return stiffness_matrix(psi, modulus) * u;
}

SparseMatrix design_matrix(const PsiTensor& psi, const FieldVector& u) {
  if (u.size() != psi.dof_count())
    throw std::invalid_argument("displacement length does not match DOF count");
  std::vector<Eigen::Triplet<double>> triplets;
  for (int i = 0; i < psi.node_count(); ++i) {
    const Eigen::VectorXd column = psi.slice(i) * u;
    for (int r = 0; r < column.size(); ++r)
      if (column[r] != 0.0) triplets.emplace_back(r, i, column[r]);
  }
  SparseMatrix d(psi.dof_count(), psi.node_count());
  d.setFromTriplets(triplets.begin(), triplets.end());
  return d;
}

FieldVector apply_design(const PsiTensor& psi, const FieldVector& u,
                         const ModulusField& modulus) {
  if (u.size() != psi.dof_count() || modulus.size() != psi.node_count())
    throw std::invalid_argument("dimension mismatch in apply_design");
  FieldVector out = FieldVector::Zero(psi.dof_count());
  for (int i = 0; i < psi.node_count(); ++i) {
    if (modulus[i] == 0.0) continue;
    out += modulus[i] * (psi.slice(i) * u);
  }
  return out;
}

namespace {

void check_duplicates(const DirichletValues& values) {
  std::set<int> seen;
  for (const auto& [node, value] : values.nodes) {
    if (!seen.insert(node).second) {
      std::ostringstream msg;
      msg << "node " << node << " prescribed twice";
      throw std::invalid_argument(msg.str());
    }
  }
}

}  // namespace

void apply_dirichlet(const PsiTensor& psi, const DirichletValues& values,
                     FieldVector& field) {
  check_duplicates(values);
  for (const auto& [node, value] : values.nodes) {
    const bool lat = psi.is_constrained(lateral_dof(node));
    const bool ax = psi.is_constrained(axial_dof(node));
    if (!lat && !ax)
      throw std::invalid_argument("prescribed node was not eliminated at assembly");
    if (lat) field[lateral_dof(node)] = value[0];
    if (ax) field[axial_dof(node)] = value[1];
  }
}

FieldVector apply_dirichlet(const PsiTensor& psi, const DirichletValues& values,
                            const ModulusField& modulus, const FieldVector& f) {
  check_duplicates(values);
  FieldVector prescribed = FieldVector::Zero(psi.dof_count());
  apply_dirichlet(psi, values, prescribed);

  FieldVector rhs = f;
  for (int d = 0; d < psi.dof_count(); ++d)
    if (psi.is_constrained(d)) rhs[d] = prescribed[d];

  // rhs_free -= sum_i E_i K_fc(i) u_c
  for (int i = 0; i < psi.node_count(); ++i) {
    if (modulus.size() && modulus[i] == 0.0) continue;
    for (const auto& t : psi.coupling(i))
      rhs[t.row()] -= modulus[i] * t.value() * prescribed[t.col()];
  }
  return rhs;
}

}  // namespace elast
