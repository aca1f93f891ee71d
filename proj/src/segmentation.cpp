#include "lowrankseg/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace lowrankseg::segmentation {

namespace {

using Rng = std::mt19937_64;

void require_square(const Mat& m, const char* op) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(op) + ": expected a square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

Eigen::Index nearest_center(const Mat& points, Eigen::Index i, const Mat& centers,
                            double& dist2) {
  Eigen::Index best = 0;
  dist2 = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    const double dd = (points.row(i) - centers.row(c)).squaredNorm();
    if (dd < dist2) {
      dist2 = dd;
      best = c;
    }
  }
  return best;
}

Mat kmeanspp_seed(const Mat& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  Mat centers(k, points.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = points.row(first(rng));

  Vec d2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d2(i) = (points.row(i) - centers.row(0)).squaredNorm();
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index chosen = n - 1;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc > target && d2(i) > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      // every point coincides with a center already
      std::uniform_int_distribution<Eigen::Index> any(0, n - 1);
      chosen = any(rng);
    }
    centers.row(c) = points.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i) {
      d2(i) = std::min(d2(i), (points.row(i) - centers.row(c)).squaredNorm());
    }
  }
  return centers;
}

KmeansResult lloyd(const Mat& points, Mat centers) {
  const Eigen::Index n = points.rows();
  const Eigen::Index k = centers.rows();
  KmeansResult out;
  out.labels.assign(static_cast<std::size_t>(n), -1);
  Vec dist(n);

  for (int iter = 0; iter < kKmeansMaxIter; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = static_cast<int>(nearest_center(points, i, centers, dist(i)));
      if (out.labels[static_cast<std::size_t>(i)] != c) {
        out.labels[static_cast<std::size_t>(i)] = c;
        changed = true;
      }
    }
    if (!changed) break;

    Mat sums = Mat::Zero(k, points.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = out.labels[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
      } else {
        // empty cluster takes over the point farthest from its center
        Eigen::Index far = 0;
        dist.maxCoeff(&far);
        centers.row(c) = points.row(far);
        dist(far) = 0.0;
      }
    }
  }

  out.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.labels[static_cast<std::size_t>(i)] =
        static_cast<int>(nearest_center(points, i, centers, dist(i)));
    out.inertia += dist(i);
  }
  out.centers = std::move(centers);
  return out;
}

// Min-cost assignment (Kuhn-Munkres with potentials) for rows <= cols.
std::vector<int> hungarian_min(const Mat& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) assignment[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  }
  return assignment;
}

}  // namespace

AffinityMode parse_affinity_mode(std::string_view name) {
  if (name == "abs_sym") return AffinityMode::abs_sym;
  if (name == "psd_direct") return AffinityMode::psd_direct;
  throw ParameterError("unknown affinity mode '" + std::string(name) + "'");
}

std::string_view to_string(AffinityMode mode) {
  return mode == AffinityMode::abs_sym ? "abs_sym" : "psd_direct";
}

Mat affinity_from_representation(const Mat& z, AffinityMode mode) {
  require_square(z, "affinity_from_representation");
  // both forms are computed entrywise from the (i,j), (j,i) pair so that the
  // result is bit-exactly symmetric
  Mat w(z.rows(), z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double a = z(i, j);
      const double b = z(j, i);
      w(i, j) = mode == AffinityMode::abs_sym ? 0.5 * (std::abs(a) + std::abs(b))
                                              : std::abs(0.5 * (a + b));
    }
  }
  return w;
}

KmeansResult kmeans(const Mat& points, int k, std::uint64_t seed, int restarts) {
  if (k < 1 || k > points.rows()) {
    throw ParameterError("kmeans: k must lie in [1, number of points]");
  }
  if (restarts < 1) throw ParameterError("kmeans: restarts must be positive");
  Rng rng(seed);
  KmeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    KmeansResult run = lloyd(points, kmeanspp_seed(points, k, rng));
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

ClusteringResult spectral_cluster(const Mat& w, int k, std::uint64_t seed) {
  require_square(w, "spectral_cluster");
  const Eigen::Index n = w.rows();
  if (k < 1) throw ParameterError("spectral_cluster: k must be positive");
  if (k > n) {
    throw ParameterError("spectral_cluster: k = " + std::to_string(k) +
                         " exceeds the number of points " + std::to_string(n));
  }
  if ((w.array() < 0.0).any()) {
    throw ParameterError("spectral_cluster: affinity must be nonnegative");
  }
  linalg::require_finite(w, "affinity");
  if ((w - w.transpose()).norm() > linalg::kDefaultSymmetryTol * w.norm()) {
    throw SymmetryError("spectral_cluster: affinity must be symmetric");
  }

  const Vec degree = w.rowwise().sum();
  const Vec dinv = degree.unaryExpr(
      [](double dd) { return dd > 0.0 ? 1.0 / std::sqrt(dd) : 0.0; });
  Mat lap = -(dinv.asDiagonal() * w * dinv.asDiagonal());
  lap.diagonal().array() += 1.0;
  lap = 0.5 * (lap + lap.transpose());

  // eig_sym sorts descending, so the k smallest sit in the trailing columns
  const linalg::EigSym eig = linalg::eig_sym(lap);
  Mat embedding = eig.vectors.rightCols(k).rowwise().reverse();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double len = embedding.row(i).norm();
    if (len > 0.0) embedding.row(i) /= len;
  }

  KmeansResult km = kmeans(embedding, k, seed);
  ClusteringResult out;
  out.labels = std::move(km.labels);
  out.k = k;
  out.seed = seed;
  out.inertia = km.inertia;
  return out;
}

std::vector<int> max_weight_assignment(const Mat& weights) {
  if (weights.size() == 0) return {};
  const double top = weights.maxCoeff();
  if (weights.rows() <= weights.cols()) {
    return hungarian_min((top - weights.array()).matrix());
  }
  const std::vector<int> by_col = hungarian_min((top - weights.transpose().array()).matrix());
  std::vector<int> out(static_cast<std::size_t>(weights.rows()), -1);
  for (std::size_t c = 0; c < by_col.size(); ++c) {
    if (by_col[c] >= 0) out[static_cast<std::size_t>(by_col[c])] = static_cast<int>(c);
  }
  return out;
}

double segmentation_accuracy(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) {
    throw ParameterError("segmentation_accuracy: label vectors differ in length (" +
                         std::to_string(pred.size()) + " vs " +
                         std::to_string(truth.size()) + ")");
  }
  if (pred.empty()) throw ParameterError("segmentation_accuracy: empty labels");
  const auto min_p = *std::min_element(pred.begin(), pred.end());
  const auto min_t = *std::min_element(truth.begin(), truth.end());
  if (min_p < 0 || min_t < 0) {
    throw ParameterError("segmentation_accuracy: labels must be nonnegative");
  }
  const int kp = *std::max_element(pred.begin(), pred.end()) + 1;
  const int kt = *std::max_element(truth.begin(), truth.end()) + 1;

  Mat contingency = Mat::Zero(kp, kt);
  for (std::size_t i = 0; i < pred.size(); ++i) contingency(pred[i], truth[i]) += 1.0;

  const std::vector<int> match = max_weight_assignment(contingency);
  double hits = 0.0;
  for (int r = 0; r < kp; ++r) {
    if (match[static_cast<std::size_t>(r)] >= 0) {
      hits += contingency(r, match[static_cast<std::size_t>(r)]);
    }
  }
  return hits / static_cast<double>(pred.size());
}

double block_diagonal_mass(const Mat& z, std::span<const int> sizes) {
  require_square(z, "block_diagonal_mass");
  long total_size = 0;
  for (const int s : sizes) {
    if (s < 0) throw ParameterError("block_diagonal_mass: negative group size");
    total_size += s;
  }
  if (total_size != z.rows()) {
    throw ParameterError("block_diagonal_mass: group sizes sum to " +
                         std::to_string(total_size) + ", matrix has " +
                         std::to_string(z.rows()) + " rows");
  }
  const double total = z.cwiseAbs().sum();
  if (total == 0.0) return 1.0;
  double inside = 0.0;
  Eigen::Index offset = 0;
  for (const int s : sizes) {
    inside += z.block(offset, offset, s, s).cwiseAbs().sum();
    offset += s;
  }
  return inside / total;
}

std::vector<int> group_sizes(std::span<const int> sorted_labels) {
  std::vector<int> sizes;
  for (std::size_t i = 0; i < sorted_labels.size(); ++i) {
    if (i == 0 || sorted_labels[i] != sorted_labels[i - 1]) {
      if (i > 0 && sorted_labels[i] < sorted_labels[i - 1]) {
        throw ParameterError("group_sizes: labels are not sorted");
      }
      sizes.push_back(0);
    }
    ++sizes.back();
  }
  return sizes;
}

Mat gaussian_affinity(const Mat& x, double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("gaussian affinity needs sigma > 0");
  const Eigen::Index n = x.cols();
  Mat w(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double v = std::exp(-(x.col(i) - x.col(j)).squaredNorm() / (sigma * sigma));
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  return w;
}

Mat linear_affinity(const Mat& x) {
  Mat w = (x.transpose() * x).cwiseMax(0.0);
  return 0.5 * (w + w.transpose());
}

}  // namespace lowrankseg::segmentation
