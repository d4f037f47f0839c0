#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "rwdesat/linmodel.hpp"

namespace rwdesat {

/// Closed-form linearization used by the finite-difference suite. Replaceable
/// so that a deliberately corrupted model can prove the suite detects errors.
using Linearizer = std::function<ContinuousLinearModel(const SpacecraftParams&, const Reference&)>;

struct SuiteResult {
  std::string name;
  bool pass = false;
  double max_residual = 0.0;
  double tolerance = 0.0;
  int cases = 0;
  std::string detail;
};

struct ValidationOptions {
  Linearizer linearizer = linearize_analytic;
  unsigned seed = 1;
  int equilibrium_samples = 100;
  int simpson_panels = 2000;
};

/// Geometry and reference grid used by the linearization check:
/// alpha, beta in {-60, -30, 30, 60, 85} deg, r in {(0,0), (-1,1), (15,-37)}.
struct LinearizationGrid {
  std::vector<double> alpha_deg{-75.0, -45.0, -15.0, 15.0, 45.0, 75.0};
  std::vector<double> beta_deg{0.0, 15.0, 30.0};
  std::vector<Reference> refs{Reference(0.0, 0.0), Reference(-1.0, 1.0), Reference(50.0, -50.0)};
};

/// |f(x_eq(v), 0)|_inf over random (v, alpha, beta); tolerance 1e-12.
SuiteResult equilibrium_suite(const ValidationOptions& opt);
/// Closed-form A, B against central differences; tolerance max(1e-6 scale, 1e-9).
SuiteResult linearization_suite(const ValidationOptions& opt, const LinearizationGrid& grid = {});
/// Block-exponential gramian against composite Simpson; relative tolerance 1e-6.
SuiteResult gramian_suite(const ValidationOptions& opt);

std::vector<SuiteResult> run_validation(const ValidationOptions& opt = {});
void write_validation_table(std::ostream& os, const std::vector<SuiteResult>& results);

/// Copy of the closed-form linearization with the sign of a_46 flipped.
ContinuousLinearModel linearize_a46_flipped(const SpacecraftParams& p, const Reference& r);

}  // namespace rwdesat
