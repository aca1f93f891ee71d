#include "lowrankseg/linalg.hpp"

#include "lapack_runtime.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lowrankseg::linalg {

namespace {

Mat symmetrized(const Mat& s, double symmetry_tol) {
  if (s.rows() != s.cols()) {
    throw DimensionError("eig_sym: expected a square matrix, got " +
                         std::to_string(s.rows()) + "x" +
                         std::to_string(s.cols()));
  }
  require_finite(s, "eig_sym input");
  const double asym = (s - s.transpose()).norm();
  if (asym > symmetry_tol * s.norm()) {
    throw SymmetryError("eig_sym: ||S - S^T||_F = " + std::to_string(asym) +
                        " exceeds tolerance");
  }
  return 0.5 * (s + s.transpose());
}

// dsyevd returns ascending values; reverse both values and vector columns.
void to_descending(Vec& values, Mat* vectors) {
  values.reverseInPlace();
  if (vectors != nullptr) {
    *vectors = vectors->rowwise().reverse().eval();
  }
}

void check_info(lapack_int info, const char* routine) {
  if (info < 0) {
    throw NumericalError(std::string(routine) + ": illegal argument " +
                         std::to_string(-info));
  }
  if (info > 0) {
    throw NumericalError(std::string(routine) + " failed to converge (info " +
                         std::to_string(info) + ")");
  }
}

void require_nonempty(const Mat& a, const char* what) {
  if (a.size() == 0) {
    throw DimensionError(std::string(what) + ": empty matrix");
  }
}

}  // namespace

void require_finite(const Mat& m, std::string_view what) {
  if (!m.allFinite()) {
    throw ParameterError(std::string(what) + " contains non-finite entries");
  }
}

EigSym eig_sym(const Mat& s, double symmetry_tol) {
  EigSym out;
  out.vectors = symmetrized(s, symmetry_tol);
  const auto n = static_cast<lapack_int>(s.rows());
  out.values.resize(n);
  if (n == 0) {
    return out;
  }
  check_info(detail::lapacke().dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                      out.vectors.data(), n, out.values.data()),
             "dsyevd");
  to_descending(out.values, &out.vectors);
  return out;
}

Vec eigenvalues_sym(const Mat& s, double symmetry_tol) {
  Mat work = symmetrized(s, symmetry_tol);
  const auto n = static_cast<lapack_int>(s.rows());
  Vec values(n);
  if (n == 0) {
    return values;
  }
  check_info(detail::lapacke().dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, work.data(),
                                      n, values.data()),
             "dsyevd");
  to_descending(values, nullptr);
  return values;
}

Svd svd(const Mat& a) {
  require_nonempty(a, "svd");
  require_finite(a, "svd input");
  const auto m = static_cast<lapack_int>(a.rows());
  const auto n = static_cast<lapack_int>(a.cols());
  const auto k = std::min(m, n);
  Mat work = a;
  Svd out;
  out.u.resize(m, k);
  out.singular_values.resize(k);
  Mat vt(k, n);
  check_info(detail::lapacke().dgesdd(LAPACK_COL_MAJOR, 'S', m, n, work.data(), m,
                                      out.singular_values.data(), out.u.data(), m,
                                      vt.data(), k),
             "dgesdd");
  out.v = vt.transpose();
  return out;
}

Vec singular_values(const Mat& a) {
  require_nonempty(a, "singular_values");
  require_finite(a, "singular_values input");
  const auto m = static_cast<lapack_int>(a.rows());
  const auto n = static_cast<lapack_int>(a.cols());
  Mat work = a;
  Vec sigma(std::min(m, n));
  check_info(detail::lapacke().dgesdd(LAPACK_COL_MAJOR, 'N', m, n, work.data(), m,
                                      sigma.data(), nullptr, 1, nullptr, 1),
             "dgesdd");
  return sigma;
}

double norm(const Mat& a, NormKind kind) {
  require_nonempty(a, "norm");
  switch (kind) {
    case NormKind::nuclear:
      return singular_values(a).sum();
    case NormKind::frobenius:
      return a.norm();
    case NormKind::spectral:
      return singular_values(a)(0);
    case NormKind::l1:
      return a.cwiseAbs().sum();
    case NormKind::l21:
      return a.colwise().norm().sum();
  }
  throw ParameterError("norm: unknown kind");
}

std::size_t numerical_rank(const Mat& a, double rel_tol) {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
    throw ParameterError("numerical_rank: rel_tol must lie in (0, 1)");
  }
  const Vec sigma = singular_values(a);
  if (sigma(0) == 0.0) {
    return 0;
  }
  const double cutoff = rel_tol * sigma(0);
  return static_cast<std::size_t>((sigma.array() > cutoff).count());
}

Mat row_space_projector(const Mat& x, double rel_tol) {
  const Svd f = svd(x);
  const double cutoff = rel_tol * f.singular_values(0);
  Eigen::Index r = 0;
  if (f.singular_values(0) > 0.0) {
    r = (f.singular_values.array() > cutoff).count();
  }
  const auto vr = f.v.leftCols(r);
  Mat p = vr * vr.transpose();
  return 0.5 * (p + p.transpose());
}

double inner(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("inner: shape mismatch");
  }
  return a.cwiseProduct(b).sum();
}

NormKind parse_norm_kind(std::string_view name) {
  if (name == "nuclear") return NormKind::nuclear;
  if (name == "frobenius") return NormKind::frobenius;
  if (name == "operator" || name == "spectral") return NormKind::spectral;
  if (name == "l1") return NormKind::l1;
  if (name == "l21") return NormKind::l21;
  throw ParameterError("unknown norm kind '" + std::string(name) + "'");
}

std::string_view to_string(NormKind kind) {
  switch (kind) {
    case NormKind::nuclear: return "nuclear";
    case NormKind::frobenius: return "frobenius";
    case NormKind::spectral: return "operator";
    case NormKind::l1: return "l1";
    case NormKind::l21: return "l21";
  }
  return "?";
}

}  // namespace lowrankseg::linalg
