#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "rwdesat/linmodel.hpp"
#include "rwdesat/numerics.hpp"

namespace rwdesat {

/// [B, AB, ..., A^(n-1) B].
Matrix ctrb_matrix(const Matrix& a, const Matrix& b);

/// Finite-horizon gramian M = int_0^T e^{A t} B B' e^{A' t} dt via the
/// block exponential of [[-A, B B'], [0, A']] T.
Matrix gramian(const Matrix& a, const Matrix& b, double horizon);

/// Composite Simpson approximation of the same integral (even panel count).
Matrix gramian_simpson(const Matrix& a, const Matrix& b, double horizon, int panels);

/// Degree-of-controllability record for one geometry/horizon.
struct DocResult {
  double J_ind = 0.0;
  Vector x_ind;  // unit-norm worst initial condition
  double alpha = 0.0;
  double beta = 0.0;
  double deltaT = 0.0;
  /// Same metric from an unbalanced solve; reported when it differs by > 10%.
  double J_ind_unbalanced = 0.0;
  bool balancing_disagrees = false;
};

/// J_ind = lambda_max(e^{A'T} M^-1 e^{AT}). Throws NumericalError if the
/// gramian is numerically singular (uncontrollable pair).
DocResult doc_index(const Matrix& a, const Matrix& b, double horizon);

/// As doc_index, maximizing only over unit vectors supported on `coords`
/// (0-based state indices).
DocResult doc_index_restricted(const Matrix& a, const Matrix& b, double horizon, const std::vector<int>& coords);

/// Effort matrix W = e^{A'T} M^-1 e^{AT} (symmetrized), computed in Jacobi-balanced
/// coordinates and transformed back.
Matrix effort_matrix(const Matrix& a, const Matrix& b, double horizon);

struct RankScanOptions {
  int draws = 5;
  unsigned seed = 1;
  double tol = 1e-9;
  /// Random inertias are drawn around the nominal values unless fixed.
  bool randomize_inertia = true;
  double r_span = 90.0;  // references drawn uniformly in [-r_span, r_span]^2
};

struct RankRow {
  double alpha_deg = 0.0;
  double beta_deg = 0.0;
  int rank = 0;      // consensus rank (maximum over draws)
  int min_rank = 0;  // smallest rank seen across draws
  bool deficient = false;  // every draw rank-deficient
};

/// Controllability rank at a single geometry using randomized (r, inertia) draws.
RankRow rank_at(const SpacecraftParams& base, double alpha_deg, double beta_deg, const RankScanOptions& opt);

/// Rank over the cartesian grid alpha x beta (degrees). Grid points run in
/// parallel over `jobs` workers; output order follows the grid.
std::vector<RankRow> rank_scan(const SpacecraftParams& base, const std::vector<double>& alpha_deg,
                               const std::vector<double>& beta_deg, const RankScanOptions& opt, int jobs = 1);

/// Grid description for a DoC sweep. Angles in degrees, horizons in seconds.
struct SweepSpec {
  SpacecraftParams params;
  Reference r = Reference::Zero();
  std::vector<double> alpha_deg;
  std::vector<double> beta_deg{0.0};
  std::vector<double> deltaT_s;
  /// Optional inertia sweep: which axis (1, 2 or 3) and the values to visit.
  int inertia_axis = 0;
  std::vector<double> inertia_values;
  /// alpha values (degrees) skipped because the pair is uncontrollable there.
  std::vector<double> excluded_alpha_deg{-90.0, 0.0, 90.0};

  void validate() const;
};

struct SweepRow {
  double alpha_deg = 0.0;
  double beta_deg = 0.0;
  double deltaT_s = 0.0;
  double inertia = 0.0;  // value of the swept inertia (0 if none)
  DocResult doc;
  int rank = 0;
  bool ok = true;  // false if the DoC could not be evaluated
};

/// Minimum of J_ind over alpha for one (deltaT, beta, inertia) curve.
struct CurveMinimum {
  double deltaT_s = 0.0;
  double beta_deg = 0.0;
  double inertia = 0.0;
  double alpha_min_deg = 0.0;
  double J_ind_min = 0.0;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::vector<CurveMinimum> minima;
};

SweepTable doc_sweep(const SweepSpec& spec, int jobs = 1);

/// CSV with columns alpha_deg, beta_deg, deltaT_s, J_ind, log10_J_ind,
/// x_ind_1..x_ind_10, rank (plus inertia when an inertia sweep is active).
void write_sweep_csv(std::ostream& os, const SweepTable& table, bool with_inertia);
void write_minima_csv(std::ostream& os, const SweepTable& table);
void write_rank_csv(std::ostream& os, const std::vector<RankRow>& rows);

/// Runs fn(i) for i in [0, count) over `jobs` threads.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace rwdesat
