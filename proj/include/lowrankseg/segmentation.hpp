#pragma once

#include "lowrankseg/linalg.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace lowrankseg::segmentation {

using Labels = std::vector<int>;

enum class AffinityMode {
  abs_sym,     // (|Z| + |Z^T|) / 2
  psd_direct,  // |(Z + Z^T) / 2|
};

AffinityMode parse_affinity_mode(std::string_view name);
std::string_view to_string(AffinityMode mode);

struct ClusteringResult {
  Labels labels;
  int k = 0;
  std::optional<double> accuracy;
  std::uint64_t seed = 0;
  double inertia = 0.0;  // best within-cluster sum of squares
};

inline constexpr int kKmeansRestarts = 20;
inline constexpr int kKmeansMaxIter = 300;

/// Symmetric, nonnegative affinity built from a learned representation.
Mat affinity_from_representation(const Mat& z, AffinityMode mode);

/// Ng-Jordan-Weiss spectral clustering: eigenvectors of the k smallest
/// eigenvalues of I - D^{-1/2} W D^{-1/2}, rows normalized to unit length,
/// then k-means++ with kKmeansRestarts restarts keeping the lowest inertia.
/// Zero-degree vertices get an identity row in the Laplacian.
ClusteringResult spectral_cluster(const Mat& w, int k, std::uint64_t seed);

struct KmeansResult {
  Labels labels;
  Mat centers;  // k x dim
  double inertia = 0.0;
};

/// k-means on the rows of `points`. Restarts run in order with one RNG
/// stream seeded by `seed`; ties keep the earliest restart.
KmeansResult kmeans(const Mat& points, int k, std::uint64_t seed,
                    int restarts = kKmeansRestarts);

/// Best fraction of matching points over all bijections between predicted
/// and true labels (Hungarian assignment on the contingency table).
double segmentation_accuracy(std::span<const int> pred, std::span<const int> truth);

/// Maximum-weight assignment on a square or rectangular weight matrix.
/// Returns for each row the assigned column (or -1 if rows > cols).
std::vector<int> max_weight_assignment(const Mat& weights);

/// Fraction of sum |z_ij| inside the diagonal blocks of consecutive groups.
double block_diagonal_mass(const Mat& z, std::span<const int> group_sizes);

/// Group sizes of a nondecreasing label vector.
std::vector<int> group_sizes(std::span<const int> sorted_labels);

/// exp(-||x_i - x_j||^2 / sigma^2) over the columns of x.
Mat gaussian_affinity(const Mat& x, double sigma);

/// max(x_i^T x_j, 0) over the columns of x.
Mat linear_affinity(const Mat& x);

}  // namespace lowrankseg::segmentation
