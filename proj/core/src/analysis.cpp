#include "rwdesat/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include "rwdesat/csv.hpp"

namespace rwdesat {

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::clamp<std::size_t>(jobs > 0 ? static_cast<std::size_t>(jobs) : 1, 1,
                                                      std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

Matrix ctrb_matrix(const Matrix& a, const Matrix& b) {
  const Eigen::Index n = a.rows(), m = b.cols();
  Matrix c(n, n * m);
  Matrix block = b;
  for (Eigen::Index k = 0; k < n; ++k) {
    c.middleCols(k * m, m) = block;
    block = a * block;
  }
  return c;
}

Matrix gramian(const Matrix& a, const Matrix& b, double horizon) {
  if (!(horizon > 0.0)) throw PreconditionError("gramian: horizon must be positive");
  const Eigen::Index n = a.rows();
  Matrix z = Matrix::Zero(2 * n, 2 * n);
  z.topLeftCorner(n, n) = -a;
  z.topRightCorner(n, n) = b * b.transpose();
  z.bottomRightCorner(n, n) = a.transpose();
  const Matrix f = expm(z * horizon);
  Matrix m = f.bottomRightCorner(n, n).transpose() * f.topRightCorner(n, n);
  return 0.5 * (m + m.transpose());
}

Matrix gramian_simpson(const Matrix& a, const Matrix& b, double horizon, int panels) {
  if (panels < 2 || panels % 2 != 0) throw PreconditionError("gramian_simpson: panels must be even and >= 2");
  const Eigen::Index n = a.rows();
  const double h = horizon / panels;
  const Matrix step = expm(a * h);
  const Matrix bbt = b * b.transpose();
  Matrix phi = Matrix::Identity(n, n);
  Matrix sum = Matrix::Zero(n, n);
  for (int k = 0; k <= panels; ++k) {
    const double w = (k == 0 || k == panels) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    sum += w * (phi * bbt * phi.transpose());
    phi = step * phi;
  }
  Matrix m = (h / 3.0) * sum;
  return 0.5 * (m + m.transpose());
}

namespace {

// Below this reciprocal condition number (of the unit-diagonal scaled gramian)
// the pair is treated as uncontrollable.
constexpr double kGramianRcondFloor = 1e-15;

struct EffortPair {
  Matrix balanced;
  Matrix raw;
};

EffortPair effort_matrices(const Matrix& a, const Matrix& b, double horizon) {
  const Matrix m = gramian(a, b, horizon);
  const Matrix e = expm(a * horizon);
  const Vector d = m.diagonal().cwiseMax(0.0).cwiseSqrt();
  if ((d.array() <= 0.0).any()) throw NumericalError("doc_index: gramian has a zero diagonal entry (state unreachable)");
  const Vector dinv = d.cwiseInverse();
  const Matrix mz = dinv.asDiagonal() * m * dinv.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (mz + mz.transpose()), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(mz.rows() - 1);
  if (!(lo > kGramianRcondFloor * hi)) {
    std::ostringstream msg;
    msg << "doc_index: controllability gramian is singular (scaled rcond " << lo / hi << ")";
    throw NumericalError(msg.str());
  }
  const Matrix y = dinv.asDiagonal() * e;
  EffortPair out;
  out.balanced = y.transpose() * mz.ldlt().solve(y);
  out.balanced = 0.5 * (out.balanced + out.balanced.transpose());
  out.raw = e.transpose() * m.ldlt().solve(e);
  out.raw = 0.5 * (out.raw + out.raw.transpose());
  return out;
}

DocResult finish(const EffortPair& w, const std::vector<int>& coords, double horizon) {
  const Eigen::Index n = w.balanced.rows();
  const auto k = static_cast<Eigen::Index>(coords.size());
  Matrix sub(k, k), sub_raw(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      sub(i, j) = w.balanced(coords[i], coords[j]);
      sub_raw(i, j) = w.raw(coords[i], coords[j]);
    }
  }
  const EigPair top = sym_eig_max(sub);
  DocResult out;
  out.J_ind = top.value;
  out.x_ind = Vector::Zero(n);
  for (Eigen::Index i = 0; i < k; ++i) out.x_ind(coords[i]) = top.vector(i);
  // Fix the sign so the largest-magnitude entry is positive.
  Eigen::Index imax = 0;
  out.x_ind.cwiseAbs().maxCoeff(&imax);
  if (out.x_ind(imax) < 0.0) out.x_ind = -out.x_ind;
  out.deltaT = horizon;
  out.J_ind_unbalanced = sym_eig_max(sub_raw).value;
  out.balancing_disagrees = std::abs(out.J_ind_unbalanced - out.J_ind) > 0.1 * std::abs(out.J_ind);
  return out;
}

std::vector<int> all_coords(Eigen::Index n) {
  std::vector<int> c(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) c[static_cast<std::size_t>(i)] = static_cast<int>(i);
  return c;
}

}  // namespace

Matrix effort_matrix(const Matrix& a, const Matrix& b, double horizon) {
  return effort_matrices(a, b, horizon).balanced;
}

DocResult doc_index(const Matrix& a, const Matrix& b, double horizon) {
  return finish(effort_matrices(a, b, horizon), all_coords(a.rows()), horizon);
}

DocResult doc_index_restricted(const Matrix& a, const Matrix& b, double horizon, const std::vector<int>& coords) {
  if (coords.empty()) throw PreconditionError("doc_index_restricted: empty coordinate set");
  for (int c : coords) {
    if (c < 0 || c >= a.rows()) throw PreconditionError("doc_index_restricted: coordinate out of range");
  }
  return finish(effort_matrices(a, b, horizon), coords, horizon);
}

RankRow rank_at(const SpacecraftParams& base, double alpha_deg, double beta_deg, const RankScanOptions& opt) {
  // Seed per grid point so results do not depend on evaluation order.
  std::seed_seq seq{opt.seed, static_cast<unsigned>(std::lround((alpha_deg + 1000.0) * 1000.0)),
                    static_cast<unsigned>(std::lround((beta_deg + 1000.0) * 1000.0))};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> ref_dist(-opt.r_span, opt.r_span);
  std::uniform_real_distribution<double> scale_dist(0.8, 1.2);

  RankRow row;
  row.alpha_deg = alpha_deg;
  row.beta_deg = beta_deg;
  row.rank = 0;
  row.min_rank = std::numeric_limits<int>::max();
  for (int d = 0; d < opt.draws; ++d) {
    SpacecraftParams p = base;
    p.alpha = deg2rad(alpha_deg);
    p.beta = deg2rad(beta_deg);
    if (opt.randomize_inertia) {
      do {
        p.J1 = base.J1 * scale_dist(rng);
        p.J2 = base.J2 * scale_dist(rng);
        p.J3 = base.J3 * scale_dist(rng);
      } while (p.J1 > p.J2 + p.J3 || p.J2 > p.J1 + p.J3 || p.J3 > p.J1 + p.J2);
    }
    const Reference r(ref_dist(rng), ref_dist(rng));
    const ContinuousLinearModel lin = linearize_analytic(p, r);
    const int rank = matrix_rank(ctrb_matrix(lin.A, lin.B), opt.tol);
    row.rank = std::max(row.rank, rank);
    row.min_rank = std::min(row.min_rank, rank);
  }
  row.deficient = row.rank < kStateDim;
  return row;
}

std::vector<RankRow> rank_scan(const SpacecraftParams& base, const std::vector<double>& alpha_deg,
                               const std::vector<double>& beta_deg, const RankScanOptions& opt, int jobs) {
  if (alpha_deg.empty() || beta_deg.empty()) throw PreconditionError("rank_scan: empty grid");
  if (opt.draws < 1) throw PreconditionError("rank_scan: need at least one draw");
  std::vector<RankRow> rows(alpha_deg.size() * beta_deg.size());
  parallel_for(rows.size(), jobs, [&](std::size_t i) {
    rows[i] = rank_at(base, alpha_deg[i / beta_deg.size()], beta_deg[i % beta_deg.size()], opt);
  });
  return rows;
}

void SweepSpec::validate() const {
  if (alpha_deg.empty() || beta_deg.empty() || deltaT_s.empty()) throw PreconditionError("SweepSpec: empty grid");
  if (inertia_axis != 0 && inertia_values.empty()) throw PreconditionError("SweepSpec: empty inertia grid");
  if (inertia_axis < 0 || inertia_axis > 3) throw PreconditionError("SweepSpec: inertia_axis must be 0..3");
  for (double t : deltaT_s) {
    if (!(t > 0.0)) throw PreconditionError("SweepSpec: horizons must be positive");
  }
  params.validate();
}

namespace {

bool is_excluded(double alpha, const std::vector<double>& excluded) {
  return std::any_of(excluded.begin(), excluded.end(), [&](double e) { return std::abs(e - alpha) < 1e-9; });
}

}  // namespace

SweepTable doc_sweep(const SweepSpec& spec, int jobs) {
  spec.validate();
  std::vector<double> alphas;
  for (double a : spec.alpha_deg) {
    if (!is_excluded(a, spec.excluded_alpha_deg)) alphas.push_back(a);
  }
  if (alphas.empty()) throw PreconditionError("doc_sweep: every alpha is excluded");
  const std::vector<double> inertias = spec.inertia_axis == 0 ? std::vector<double>{0.0} : spec.inertia_values;

  struct Point {
    double inertia, beta, dt, alpha;
  };
  std::vector<Point> points;
  for (double j : inertias)
    for (double b : spec.beta_deg)
      for (double t : spec.deltaT_s)
        for (double a : alphas) points.push_back({j, b, t, a});

  SweepTable table;
  table.rows.resize(points.size());
  parallel_for(points.size(), jobs, [&](std::size_t i) {
    const Point& pt = points[i];
    SpacecraftParams p = spec.params;
    p.alpha = deg2rad(pt.alpha);
    p.beta = deg2rad(pt.beta);
    if (spec.inertia_axis == 1) p.J1 = pt.inertia;
    if (spec.inertia_axis == 2) p.J2 = pt.inertia;
    if (spec.inertia_axis == 3) p.J3 = pt.inertia;
    const ContinuousLinearModel lin = linearize_analytic(p, spec.r);
    SweepRow row;
    row.alpha_deg = pt.alpha;
    row.beta_deg = pt.beta;
    row.deltaT_s = pt.dt;
    row.inertia = pt.inertia;
    row.rank = matrix_rank(ctrb_matrix(lin.A, lin.B));
    try {
      row.doc = doc_index(lin.A, lin.B, pt.dt);
      row.doc.alpha = p.alpha;
      row.doc.beta = p.beta;
    } catch (const NumericalError&) {
      row.ok = false;
      row.doc.J_ind = std::numeric_limits<double>::infinity();
      row.doc.x_ind = Vector::Zero(kStateDim);
    }
    table.rows[i] = std::move(row);
  });

  // One minimum per (inertia, beta, deltaT) curve, in grid order.
  for (std::size_t start = 0; start < table.rows.size(); start += alphas.size()) {
    CurveMinimum m;
    m.J_ind_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = start; i < start + alphas.size(); ++i) {
      const SweepRow& row = table.rows[i];
      m.deltaT_s = row.deltaT_s;
      m.beta_deg = row.beta_deg;
      m.inertia = row.inertia;
      if (!row.ok) continue;
      // J_ind is even in alpha; report the non-negative angle of a mirrored pair.
      const bool mirror = std::abs(row.alpha_deg + m.alpha_min_deg) < 1e-9 && row.alpha_deg > 0.0 &&
                          std::abs(row.doc.J_ind - m.J_ind_min) <= 1e-6 * m.J_ind_min;
      if (row.doc.J_ind < m.J_ind_min || mirror) {
        m.J_ind_min = std::min(m.J_ind_min, row.doc.J_ind);
        m.alpha_min_deg = row.alpha_deg;
      }
    }
    table.minima.push_back(m);
  }
  return table;
}

void write_sweep_csv(std::ostream& os, const SweepTable& table, bool with_inertia) {
  CsvWriter csv(os);
  std::vector<std::string> header{"alpha_deg", "beta_deg", "deltaT_s", "J_ind", "log10_J_ind"};
  for (int i = 1; i <= kStateDim; ++i) header.push_back("x_ind_" + std::to_string(i));
  header.push_back("rank");
  if (with_inertia) header.push_back("inertia");
  csv.header(header);
  for (const SweepRow& row : table.rows) {
    csv.field(row.alpha_deg).field(row.beta_deg).field(row.deltaT_s).field(row.doc.J_ind);
    csv.field(std::log10(row.doc.J_ind));
    for (int i = 0; i < kStateDim; ++i) csv.field(row.doc.x_ind.size() == kStateDim ? row.doc.x_ind(i) : 0.0);
    csv.field(row.rank);
    if (with_inertia) csv.field(row.inertia);
    csv.end_row();
  }
}

void write_minima_csv(std::ostream& os, const SweepTable& table) {
  CsvWriter csv(os);
  csv.header({"deltaT_s", "beta_deg", "inertia", "alpha_min_deg", "J_ind_min", "log10_J_ind_min"});
  for (const CurveMinimum& m : table.minima) {
    csv.field(m.deltaT_s).field(m.beta_deg).field(m.inertia).field(m.alpha_min_deg).field(m.J_ind_min);
    csv.field(std::log10(m.J_ind_min)).end_row();
  }
}

void write_rank_csv(std::ostream& os, const std::vector<RankRow>& rows) {
  CsvWriter csv(os);
  csv.header({"alpha_deg", "beta_deg", "rank", "min_rank", "deficient"});
  for (const RankRow& r : rows) {
    csv.field(r.alpha_deg).field(r.beta_deg).field(r.rank).field(r.min_rank).field(r.deficient ? 1 : 0).end_row();
  }
}

}  // namespace rwdesat
