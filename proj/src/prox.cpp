#include "lowrankseg/prox.hpp"

#include <string>

namespace lowrankseg::prox {

namespace {

void require_positive(double tau, const char* op) {
  if (!(tau > 0.0)) {
    throw ParameterError(std::string(op) + ": tau must be positive");
  }
}

}  // namespace

Thresholded svt_detailed(const Mat& g, double tau) {
  require_positive(tau, "svt");
  const linalg::Svd f = linalg::svd(g);
  const Vec shrunk = (f.singular_values.array() - tau).max(0.0).matrix();
  const Eigen::Index r = (shrunk.array() > 0.0).count();

  Thresholded out;
  out.rank = static_cast<std::size_t>(r);
  out.nuclear_norm = shrunk.head(r).sum();
  out.value = f.u.leftCols(r) * shrunk.head(r).asDiagonal() *
              f.v.leftCols(r).transpose();
  return out;
}

Mat svt(const Mat& g, double tau) { return svt_detailed(g, tau).value; }

Thresholded psd_eig_threshold_detailed(const Mat& g, double tau) {
  require_positive(tau, "psd_eig_threshold");
  if (g.rows() != g.cols()) {
    throw DimensionError("psd_eig_threshold: expected a square matrix");
  }
  const Mat sym = 0.5 * (g + g.transpose());
  const linalg::EigSym f = linalg::eig_sym(sym);
  const Vec shrunk = (f.values.array() - tau).max(0.0).matrix();
  // values are descending, so the positive part is a leading block
  const Eigen::Index r = (shrunk.array() > 0.0).count();

  Thresholded out;
  out.rank = static_cast<std::size_t>(r);
  out.nuclear_norm = shrunk.head(r).sum();
  const Mat scaled = f.vectors.leftCols(r) * shrunk.head(r).asDiagonal();
  const Mat m = scaled * f.vectors.leftCols(r).transpose();
  out.value = 0.5 * (m + m.transpose());
  return out;
}

Mat psd_eig_threshold(const Mat& g, double tau) {
  return psd_eig_threshold_detailed(g, tau).value;
}

Mat shrink_l1(const Mat& g, double tau) {
  require_positive(tau, "shrink_l1");
  return g.unaryExpr([tau](double v) {
    if (v > tau) return v - tau;
    if (v < -tau) return v + tau;
    return 0.0;
  });
}

Mat shrink_l21(const Mat& g, double tau) {
  require_positive(tau, "shrink_l21");
  Mat out = Mat::Zero(g.rows(), g.cols());
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    const double len = g.col(j).norm();
    if (len > tau) {
      out.col(j) = ((len - tau) / len) * g.col(j);
    }
  }
  return out;
}

}  // namespace lowrankseg::prox
