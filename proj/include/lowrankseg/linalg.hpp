#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lowrankseg {

/// Dense real matrix carrying data, coefficients, noise and affinities.
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SymmetryError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A LAPACK routine reported failure (e.g. no convergence).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace linalg {

inline constexpr double kDefaultRankTol = 1e-8;
inline constexpr double kDefaultSymmetryTol = 1e-8;

/// Symmetric eigen-decomposition, values sorted descending.
struct EigSym {
  Mat vectors;
  Vec values;
};

/// Thin SVD: u is m x k, v is n x k with k = min(m, n).
struct Svd {
  Mat u;
  Vec singular_values;
  Mat v;
};

enum class NormKind { nuclear, frobenius, spectral, l1, l21 };

/// Throws ParameterError naming `what` if any entry is NaN or infinite.
void require_finite(const Mat& m, std::string_view what);

/// Factorizes (s + s^T) / 2. Throws DimensionError for non-square input and
/// SymmetryError when ||s - s^T||_F exceeds symmetry_tol * ||s||_F.
EigSym eig_sym(const Mat& s, double symmetry_tol = kDefaultSymmetryTol);

/// Eigenvalues only, descending. Same preconditions as eig_sym.
Vec eigenvalues_sym(const Mat& s, double symmetry_tol = kDefaultSymmetryTol);

Svd svd(const Mat& a);

/// Singular values only, descending.
Vec singular_values(const Mat& a);

double norm(const Mat& a, NormKind kind);

/// Number of singular values strictly above rel_tol * sigma_max.
std::size_t numerical_rank(const Mat& a, double rel_tol = kDefaultRankTol);

/// V_r V_r^T for the thin SVD of x truncated at its numerical rank r, i.e. the
/// orthogonal projector onto the row space of x (the shape interaction matrix).
Mat row_space_projector(const Mat& x, double rel_tol = kDefaultRankTol);

/// Entrywise <a, b> = trace(a^T b).
double inner(const Mat& a, const Mat& b);

NormKind parse_norm_kind(std::string_view name);
std::string_view to_string(NormKind kind);

}  // namespace linalg
}  // namespace lowrankseg
