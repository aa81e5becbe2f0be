// Copyright (c) the elastrec contributors.
// SPDX-License-Identifier: Apache-2.0

#include "elast/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace elast {

int RegionLabels::inclusion_count() const {
  int n = 0;
  for (bool b : inclusion) n += b ? 1 : 0;
  return n;
}

int RegionLabels::background_count() const {
  return static_cast<int>(inclusion.size()) - inclusion_count();
}

RegionLabels region_labels(const Mesh& mesh, const Phantom& phantom) {
  RegionLabels labels;
  labels.inclusion.resize(mesh.node_count());
  for (int i = 0; i < mesh.node_count(); ++i) {
    const double dx = mesh.nodes[i][0] - phantom.center[0];
    const double dy = mesh.nodes[i][1] - phantom.center[1];
    labels.inclusion[i] = std::hypot(dx, dy) <= phantom.radius;
  }
  return labels;
}

namespace {

void region_stats(const ModulusField& values, const RegionLabels& labels,
                  bool pick_inclusion, double& mean, double& variance) {
  double sum = 0;
  int n = 0;
  for (int i = 0; i < values.size(); ++i) {
    if (labels.inclusion[i] != pick_inclusion) continue;
    sum += values[i];
    ++n;
  }
  if (n == 0) throw std::invalid_argument("cnr: empty region");
  mean = sum / n;
  double sq = 0;
  for (int i = 0; i < values.size(); ++i) {
    if (labels.inclusion[i] != pick_inclusion) continue;
    sq += (values[i] - mean) * (values[i] - mean);
  }
  variance = sq / n;
}

}  // namespace

CnrResult cnr(const ModulusField& estimate, const RegionLabels& labels) {
  if (estimate.size() != static_cast<Eigen::Index>(labels.inclusion.size()))
    throw std::invalid_argument("cnr: label/field length mismatch");
  double mean_inc, var_inc, mean_bg, var_bg;
  region_stats(estimate, labels, true, mean_inc, var_inc);
  region_stats(estimate, labels, false, mean_bg, var_bg);

  const double pooled = var_inc + var_bg;
  const double contrast = mean_inc - mean_bg;
  if (pooled == 0) {
    // Perfectly flat regions: zero contrast is a plain 0, any real contrast
    // is the +infinity sentinel.
    if (contrast == 0) return {0.0, true};
    return {std::numeric_limits<double>::infinity(), true};
  }
  return {2.0 * contrast * contrast / pooled, false};
}

double rms_error(const ModulusField& estimate, const ModulusField& truth) {
  if (estimate.size() != truth.size())
    throw std::invalid_argument("rms_error: length mismatch");
  const double denom = truth.norm();
  if (denom == 0) throw std::invalid_argument("rms_error: zero reference");
  return (estimate - truth).norm() / denom;
}

double snr_db(const FieldVector& u, const FieldVector& u_measured) {
  const double noise_sq = (u_measured - u).squaredNorm();
  if (noise_sq == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(u.squaredNorm() / noise_sq);
}

}  // namespace elast
