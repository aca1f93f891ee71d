#pragma once

#include "lowrankseg/linalg.hpp"

#include <Eigen/Cholesky>

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lowrankseg::solver {

enum class NoiseNorm { l1, l21 };

NoiseNorm parse_noise_norm(std::string_view name);
std::string_view to_string(NoiseNorm norm);

/// Hyperparameters of the inexact ALM solver for
///   min ||Z||_* + lambda ||E||_noise  s.t.  X = XZ + E  (and Z >= 0 when psd).
struct AlmConfig {
  double lambda = 1.0;
  NoiseNorm noise_norm = NoiseNorm::l21;
  double mu0 = 1e-6;
  double rho = 1.1;
  double mu_max = 1e10;
  double tol = 1e-6;
  int max_iter = 1000;
  bool psd = true;

  /// Throws ParameterError on an invalid combination.
  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double primal_residual = 0.0;  // max |X - XZ - E| (and |X - XJ - E| when psd)
  double gap = 0.0;              // max |Z - J|
  double objective = 0.0;        // ||J||_* + lambda ||E||_noise
};

/// Wall-clock seconds accumulated in each ALM sub-step.
struct StepTiming {
  double z_step = 0.0;
  double e_step = 0.0;
  double j_step = 0.0;
  double multiplier_step = 0.0;
};

struct SolveResult {
  Mat z;  // n x n coefficients (the J iterate when psd)
  Mat e;  // d x n noise
  int iterations = 0;
  bool converged = false;
  std::vector<IterationRecord> history;
  StepTiming timing;
};

/// Raised when an ALM sub-step produces non-finite values.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::string step, int iteration);
  const std::string& step() const { return step_; }
  int iteration() const { return iteration_; }

 private:
  std::string step_;
  int iteration_;
};

/// Unique minimizer of min ||Z||_* s.t. X = XZ: the row-space projector of X.
/// Symmetric PSD, so it also solves the PSD-constrained problem.
Mat lrr_closed_form(const Mat& x);

/// Cholesky factor of (X^T X + I), computed once per solve.
class GramFactor {
 public:
  explicit GramFactor(const Mat& x);

  Mat solve(const Mat& rhs) const;
  Eigen::Index size() const { return size_; }

 private:
  Eigen::LLT<Mat> llt_;
  Eigen::Index size_;
};

/// Minimizer of the augmented Lagrangian over Z with E, J, Y1, Y2 fixed:
///   (X^T X + I) Z = X^T (X - E) + J + (X^T Y1 - Y2) / mu.
Mat update_coefficient(const Mat& x, const Mat& e, const Mat& j, const Mat& y1,
                       const Mat& y2, double mu, const GramFactor& gram);

/// Robust LRR (psd = false) or robust LRR-PSD (psd = true) by inexact ALM.
/// Reaching max_iter is reported through converged = false, not an exception.
SolveResult solve(const Mat& x, const AlmConfig& cfg);

inline const std::vector<double> kSpectrumThresholds = {1e-3, 0.5};

struct SpectrumReport {
  Vec eigenvalues;      // of (z + z^T) / 2, descending
  Vec singular_values;  // of z, descending
  std::map<double, std::size_t> eigen_count_above;
  std::map<double, std::size_t> singular_count_above;
};

SpectrumReport spectrum_report(const Mat& z);

}  // namespace lowrankseg::solver
