// Copyright (c) the elastrec contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "elast/fem.hpp"
#include "elast/synth.hpp"

namespace elast {

/// Per-node inclusion/background partition derived from phantom geometry.
struct RegionLabels {
  std::vector<bool> inclusion;  // size N; false = background

  int inclusion_count() const;
  int background_count() const;
};

RegionLabels region_labels(const Mesh& mesh, const Phantom& phantom);

struct CnrResult {
  double value;     // +infinity when degenerate
  bool degenerate;  // both region variances vanished
};

/// Contrast-to-noise ratio 2 (m_inc - m_bg)^2 / (s_inc^2 + s_bg^2) with
/// region means and population variances over nodal values.
CnrResult cnr(const ModulusField& estimate, const RegionLabels& labels);

/// Normalized RMS error ||estimate - truth||_2 / ||truth||_2.
double rms_error(const ModulusField& estimate, const ModulusField& truth);

/// 10 log10(||u||^2 / ||u_m - u||^2); +infinity for zero noise.
double snr_db(const FieldVector& u, const FieldVector& u_measured);

}  // namespace elast
