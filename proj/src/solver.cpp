#include "lowrankseg/solver.hpp"

#include "lowrankseg/prox.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace lowrankseg::solver {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double max_abs(const Mat& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

void check_step(const Mat& m, const char* step, int iteration) {
  if (!m.allFinite()) {
    throw DivergenceError(step, iteration);
  }
}

double noise_norm_value(const Mat& e, NoiseNorm kind) {
  return kind == NoiseNorm::l1 ? e.cwiseAbs().sum()
                               : e.colwise().norm().sum();
}

}  // namespace

NoiseNorm parse_noise_norm(std::string_view name) {
  if (name == "l1") return NoiseNorm::l1;
  if (name == "l21") return NoiseNorm::l21;
  throw ParameterError("unknown noise norm '" + std::string(name) +
                       "' (expected l1 or l21)");
}

std::string_view to_string(NoiseNorm norm) {
  return norm == NoiseNorm::l1 ? "l1" : "l21";
}

void AlmConfig::validate() const {
  if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
  if (!(mu0 > 0.0)) throw ParameterError("mu0 must be positive");
  if (!(mu_max > mu0)) throw ParameterError("mu_max must exceed mu0");
  if (!(rho > 1.0)) throw ParameterError("rho must be greater than 1");
  if (!(tol > 0.0)) throw ParameterError("tol must be positive");
  if (max_iter < 1) throw ParameterError("max_iter must be at least 1");
}

DivergenceError::DivergenceError(std::string step, int iteration)
    : std::runtime_error("ALM diverged: non-finite values in the " + step +
                         " at iteration " + std::to_string(iteration)),
      step_(std::move(step)),
      iteration_(iteration) {}

Mat lrr_closed_form(const Mat& x) { return linalg::row_space_projector(x); }

GramFactor::GramFactor(const Mat& x) : size_(x.cols()) {
  Mat gram = x.transpose() * x;
  gram.diagonal().array() += 1.0;
  llt_.compute(gram);
  if (llt_.info() != Eigen::Success) {
    throw ParameterError(
        "factorization of X^T X + I failed; input is non-finite or badly scaled");
  }
}

Mat GramFactor::solve(const Mat& rhs) const { return llt_.solve(rhs); }

Mat update_coefficient(const Mat& x, const Mat& e, const Mat& j, const Mat& y1,
                       const Mat& y2, double mu, const GramFactor& gram) {
  if (!(mu > 0.0)) throw ParameterError("update_coefficient: mu must be positive");
  const Eigen::Index n = x.cols();
  if (e.rows() != x.rows() || e.cols() != n || y1.rows() != x.rows() ||
      y1.cols() != n || j.rows() != n || j.cols() != n || y2.rows() != n ||
      y2.cols() != n || gram.size() != n) {
    throw DimensionError("update_coefficient: shapes are not conformant");
  }
  const Mat rhs = x.transpose() * (x - e) + j + (x.transpose() * y1 - y2) / mu;
  return gram.solve(rhs);
}

SolveResult solve(const Mat& x, const AlmConfig& cfg) {
  cfg.validate();
  if (x.size() == 0) throw DimensionError("solve: empty data matrix");
  linalg::require_finite(x, "solve input");

  const Eigen::Index d = x.rows();
  const Eigen::Index n = x.cols();
  const GramFactor gram(x);

  Mat z = Mat::Zero(n, n);
  Mat j = Mat::Zero(n, n);
  Mat e = Mat::Zero(d, n);
  Mat y1 = Mat::Zero(d, n);
  Mat y2 = Mat::Zero(n, n);
  double mu = cfg.mu0;

  SolveResult result;
  result.history.reserve(static_cast<std::size_t>(std::min(cfg.max_iter, 4096)));

  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    auto t = Clock::now();
    const Mat g = z + y2 / mu;
    const prox::Thresholded jt = cfg.psd ? prox::psd_eig_threshold_detailed(g, 1.0 / mu)
                                         : prox::svt_detailed(g, 1.0 / mu);
    j = jt.value;
    check_step(j, "J-step", iter);
    result.timing.j_step += seconds_since(t);

    t = Clock::now();
    z = update_coefficient(x, e, j, y1, y2, mu, gram);
    check_step(z, "Z-step", iter);
    result.timing.z_step += seconds_since(t);

    t = Clock::now();
    const Mat xz = x * z;
    const Mat q = x - xz + y1 / mu;
    e = cfg.noise_norm == NoiseNorm::l1 ? prox::shrink_l1(q, cfg.lambda / mu)
                                        : prox::shrink_l21(q, cfg.lambda / mu);
    check_step(e, "E-step", iter);
    result.timing.e_step += seconds_since(t);

    t = Clock::now();
    const Mat r1 = x - xz - e;
    const Mat r2 = z - j;
    y1 += mu * r1;
    y2 += mu * r2;
    check_step(y1, "multiplier step", iter);
    check_step(y2, "multiplier step", iter);
    mu = std::min(cfg.rho * mu, cfg.mu_max);
    result.timing.multiplier_step += seconds_since(t);

    IterationRecord rec;
    rec.iteration = iter;
    rec.primal_residual = max_abs(r1);
    if (cfg.psd) {
      // J is what gets returned, so its feasibility is what must meet tol.
      rec.primal_residual = std::max(rec.primal_residual, max_abs(x - x * j - e));
    }
    rec.gap = max_abs(r2);
    rec.objective = jt.nuclear_norm + cfg.lambda * noise_norm_value(e, cfg.noise_norm);
    result.history.push_back(rec);
    result.iterations = iter;

    if (rec.primal_residual <= cfg.tol && rec.gap <= cfg.tol) {
      result.converged = true;
      break;
    }
  }

  result.z = cfg.psd ? std::move(j) : std::move(z);
  result.e = std::move(e);
  return result;
}

SpectrumReport spectrum_report(const Mat& z) {
  if (z.rows() != z.cols()) {
    throw DimensionError("spectrum_report: expected a square matrix");
  }
  SpectrumReport report;
  report.eigenvalues = linalg::eigenvalues_sym(0.5 * (z + z.transpose()));
  report.singular_values = linalg::singular_values(z);
  for (const double threshold : kSpectrumThresholds) {
    report.eigen_count_above[threshold] =
        static_cast<std::size_t>((report.eigenvalues.array() > threshold).count());
    report.singular_count_above[threshold] = static_cast<std::size_t>(
        (report.singular_values.array() > threshold).count());
  }
  return report;
}

}  // namespace lowrankseg::solver
