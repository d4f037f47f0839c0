#include "rwdesat/validation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "rwdesat/analysis.hpp"

namespace rwdesat {

SuiteResult equilibrium_suite(const ValidationOptions& opt) {
  SuiteResult res;
  res.name = "equilibrium_residual";
  res.tolerance = 1e-12;
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> speed(-100.0, 100.0), angle(-179.0, 179.0);
  for (int i = 0; i < opt.equilibrium_samples; ++i) {
    SpacecraftParams p;
    p.alpha = deg2rad(angle(rng));
    p.beta = deg2rad(angle(rng));
    const Reference v(speed(rng), speed(rng));
    res.max_residual = std::max(res.max_residual, eom_rhs(equilibrium(v, p), Input::Zero(), p).cwiseAbs().maxCoeff());
    ++res.cases;
  }
  res.pass = res.max_residual < res.tolerance;
  return res;
}

SuiteResult linearization_suite(const ValidationOptions& opt, const LinearizationGrid& grid) {
  SuiteResult res;
  res.name = "fd_vs_analytic";
  res.tolerance = 0.0;  // per-entry tolerance; max_residual reports the worst excess over it
  res.max_residual = -std::numeric_limits<double>::infinity();
  bool all = true;
  for (double a : grid.alpha_deg) {
    for (double b : grid.beta_deg) {
      for (const Reference& r : grid.refs) {
        SpacecraftParams p;
        p.alpha = deg2rad(a);
        p.beta = deg2rad(b);
        const JacobianComparison cmp = compare_jacobians(opt.linearizer(p, r), linearize_numeric(p, r));
        ++res.cases;
        if (cmp.worst_excess > res.max_residual) {
          res.max_residual = cmp.worst_excess;
          std::ostringstream d;
          d << "worst entry (" << cmp.worst_row + 1 << ", " << cmp.worst_col + 1 << ") at alpha " << a << " beta " << b
            << " r (" << r(0) << ", " << r(1) << ")";
          res.detail = d.str();
        }
        all = all && cmp.agree;
      }
    }
  }
  res.pass = all;
  return res;
}

SuiteResult gramian_suite(const ValidationOptions& opt) {
  SuiteResult res;
  res.name = "gramian_vs_simpson";
  res.tolerance = 1e-6;
  for (double a : {30.0, 45.0, 76.0}) {
    for (double horizon : {3600.0, 4.0 * 3600.0}) {
      SpacecraftParams p;
      p.alpha = deg2rad(a);
      const ContinuousLinearModel m = linearize_analytic(p, Reference::Zero());
      const Matrix exact = gramian(m.A, m.B, horizon);
      const Matrix quad = gramian_simpson(m.A, m.B, horizon, opt.simpson_panels);
      res.max_residual = std::max(res.max_residual, (exact - quad).norm() / exact.norm());
      ++res.cases;
    }
  }
  res.pass = res.max_residual < res.tolerance;
  return res;
}

std::vector<SuiteResult> run_validation(const ValidationOptions& opt) {
  return {equilibrium_suite(opt), linearization_suite(opt), gramian_suite(opt)};
}

void write_validation_table(std::ostream& os, const std::vector<SuiteResult>& results) {
  os << std::left << std::setw(22) << "suite" << std::setw(6) << "pass" << std::setw(8) << "cases" << std::setw(16)
     << "max_residual" << "tolerance\n";
  for (const auto& r : results) {
    os << std::setw(22) << r.name << std::setw(6) << (r.pass ? "yes" : "NO") << std::setw(8) << r.cases
       << std::setw(16) << r.max_residual << r.tolerance;
    if (!r.detail.empty()) os << "  " << r.detail;
    os << '\n';
  }
}

ContinuousLinearModel linearize_a46_flipped(const SpacecraftParams& p, const Reference& r) {
  ContinuousLinearModel m = linearize_analytic(p, r);
  m.A(3, 5) = -m.A(3, 5);
  return m;
}

}  // namespace rwdesat
