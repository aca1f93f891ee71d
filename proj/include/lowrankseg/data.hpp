#pragma once

#include "lowrankseg/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lowrankseg::data {

using Rng = std::mt19937_64;
using Labels = std::vector<int>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// i.i.d. N(0, 1) entries, drawn column by column.
Mat gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// rows x cols matrix with orthonormal columns (rows >= cols), Haar distributed.
Mat random_orthonormal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Random n x n rotation: orthogonal with determinant +1.
Mat random_rotation(Eigen::Index n, Rng& rng);

enum class CorruptionModel { random_entries, sample_specific };

CorruptionModel parse_corruption_model(std::string_view name);
std::string_view to_string(CorruptionModel model);

struct CorruptionSpec {
  CorruptionModel model = CorruptionModel::random_entries;
  double fraction = 0.0;
  /// Per-entry noise std is sigma_scale * ||X||_F / sqrt(d n), so a fully
  /// corrupted X receives noise of total magnitude about sigma_scale * ||X||_F.
  double sigma_scale = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DatasetMeta {
  int num_subspaces = 0;
  int subspace_dim = 0;
  int ambient_dim = 0;
  int samples_per_subspace = 0;
  std::uint64_t seed = 0;
  bool corrupted = false;
  CorruptionSpec corruption;
};

struct Dataset {
  Mat x;          // ambient_dim x n, columns ordered by group
  Labels labels;  // nondecreasing
  DatasetMeta meta;
};

struct ToyOptions {
  int num_subspaces = 5;
  int subspace_dim = 4;
  int ambient_dim = 100;
  int samples_per = 20;
};

/// Union of independent subspaces: U_1 random orthonormal, U_{i+1} = T U_i for
/// one random rotation T, X_i = U_i Q_i with Q_i i.i.d. standard normal.
Dataset generate_toy(std::uint64_t seed, const ToyOptions& opts = {});

struct Corrupted {
  Mat x;
  Mask mask;
};

Corrupted corrupt(const Mat& x, const CorruptionSpec& spec);

/// Applies `corrupt` and records the spec in the metadata.
Dataset corrupt(const Dataset& clean, const CorruptionSpec& spec);

struct ParseError : std::runtime_error {
  ParseError(const std::string& message, std::size_t line)
      : std::runtime_error(line == 0 ? message
                                     : "line " + std::to_string(line) + ": " + message),
        line(line) {}
  std::size_t line;  // 1-based, 0 when not tied to a line
};

/// Comma-separated, one row per line, no header. Throws ParseError.
Mat load_matrix(const std::filesystem::path& path);
Mat parse_matrix(std::string_view text);

/// Writes with 17 significant digits so load_matrix round-trips exactly.
void save_matrix(const std::filesystem::path& path, const Mat& m);
std::string format_matrix(const Mat& m);

/// Reads integer labels from a CSV (one row or one column).
Labels load_labels(const std::filesystem::path& path);

}  // namespace lowrankseg::data
