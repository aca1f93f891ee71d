#include "lowrankseg/data.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace lowrankseg::data {

Mat gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      m(i, j) = normal(rng);
    }
  }
  return m;
}

Mat random_orthonormal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  if (cols > rows) {
    throw ParameterError("random_orthonormal: need rows >= cols");
  }
  const Mat g = gaussian_matrix(rows, cols, rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(rows, cols);
  // sign fix on diag(R) makes the distribution Haar
  const Mat r = qr.matrixQR().topLeftCorner(cols, cols);
  for (Eigen::Index k = 0; k < cols; ++k) {
    if (r(k, k) < 0.0) q.col(k) *= -1.0;
  }
  return q;
}

Mat random_rotation(Eigen::Index n, Rng& rng) {
  Mat t = random_orthonormal(n, n, rng);
  if (t.determinant() < 0.0) t.col(0) *= -1.0;
  return t;
}

CorruptionModel parse_corruption_model(std::string_view name) {
  if (name == "random_entries" || name == "random") return CorruptionModel::random_entries;
  if (name == "sample_specific" || name == "sample") return CorruptionModel::sample_specific;
  throw ParameterError("unknown corruption model '" + std::string(name) +
                       "' (expected random_entries or sample_specific)");
}

std::string_view to_string(CorruptionModel model) {
  return model == CorruptionModel::random_entries ? "random_entries"
                                                  : "sample_specific";
}

void CorruptionSpec::validate() const {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ParameterError("corruption fraction must lie in [0, 1]");
  }
  if (!(sigma_scale >= 0.0) || !std::isfinite(sigma_scale)) {
    throw ParameterError("sigma_scale must be nonnegative");
  }
}

Dataset generate_toy(std::uint64_t seed, const ToyOptions& opts) {
  if (opts.num_subspaces < 1 || opts.subspace_dim < 1 || opts.samples_per < 1) {
    throw ParameterError("generate_toy: sizes must be positive");
  }
  if (static_cast<long>(opts.subspace_dim) * opts.num_subspaces > opts.ambient_dim) {
    throw ParameterError(
        "generate_toy: num_subspaces * subspace_dim exceeds ambient_dim");
  }
  if (opts.samples_per <= opts.subspace_dim) {
    throw ParameterError(
        "generate_toy: samples_per must exceed subspace_dim");
  }

  Rng rng(seed);
  const Eigen::Index d = opts.ambient_dim;
  const Eigen::Index n = static_cast<Eigen::Index>(opts.num_subspaces) * opts.samples_per;

  Mat basis = random_orthonormal(d, opts.subspace_dim, rng);
  const Mat rotation = random_rotation(d, rng);

  Dataset ds;
  ds.x.resize(d, n);
  ds.labels.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < opts.num_subspaces; ++i) {
    if (i > 0) basis = rotation * basis;
    const Mat coeffs = gaussian_matrix(opts.subspace_dim, opts.samples_per, rng);
    ds.x.middleCols(static_cast<Eigen::Index>(i) * opts.samples_per, opts.samples_per) =
        basis * coeffs;
    ds.labels.insert(ds.labels.end(), static_cast<std::size_t>(opts.samples_per), i);
  }
  ds.meta.num_subspaces = opts.num_subspaces;
  ds.meta.subspace_dim = opts.subspace_dim;
  ds.meta.ambient_dim = opts.ambient_dim;
  ds.meta.samples_per_subspace = opts.samples_per;
  ds.meta.seed = seed;
  return ds;
}

Corrupted corrupt(const Mat& x, const CorruptionSpec& spec) {
  spec.validate();
  Corrupted out{x, Mask::Constant(x.rows(), x.cols(), false)};
  if (x.size() == 0 || spec.fraction == 0.0) return out;

  Rng rng(spec.seed);
  const double per_entry_std =
      spec.sigma_scale * x.norm() / std::sqrt(static_cast<double>(x.size()));
  std::normal_distribution<double> noise(0.0, per_entry_std);

  const auto pick = [&rng](Eigen::Index total, double fraction) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(total));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
    // partial Fisher-Yates; std::shuffle would consume more draws than needed
    for (std::size_t k = 0; k < count; ++k) {
      std::uniform_int_distribution<std::size_t> u(k, idx.size() - 1);
      std::swap(idx[k], idx[u(rng)]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
  };

  if (spec.model == CorruptionModel::random_entries) {
    for (const Eigen::Index flat : pick(x.size(), spec.fraction)) {
      const Eigen::Index i = flat % x.rows();
      const Eigen::Index j = flat / x.rows();
      out.x(i, j) += noise(rng);
      out.mask(i, j) = true;
    }
  } else {
    for (const Eigen::Index j : pick(x.cols(), spec.fraction)) {
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        out.x(i, j) += noise(rng);
        out.mask(i, j) = true;
      }
    }
  }
  return out;
}

Dataset corrupt(const Dataset& clean, const CorruptionSpec& spec) {
  Dataset ds = clean;
  ds.x = corrupt(clean.x, spec).x;
  ds.meta.corrupted = true;
  ds.meta.corruption = spec;
  return ds;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_token(std::string_view token, std::size_t line) {
  token = trim(token);
  if (token.empty()) throw ParseError("empty field", line);
  if (token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError("non-numeric token '" + std::string(token) + "'", line);
  }
  if (!std::isfinite(value)) {
    throw ParseError("non-finite value '" + std::string(token) + "'", line);
  }
  return value;
}

}  // namespace

Mat parse_matrix(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (trim(line).empty()) continue;

    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      row.push_back(parse_token(line.substr(start, comma - start), line_no));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("expected " + std::to_string(rows.front().size()) +
                           " fields, found " + std::to_string(row.size()),
                       line_no);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("empty matrix", 0);

  Mat m(static_cast<Eigen::Index>(rows.size()),
        static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return m;
}

Mat load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_matrix(buf.str());
}

std::string format_matrix(const Mat& m) {
  std::string out;
  char field[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      const int len = std::snprintf(field, sizeof field, "%.17g", m(i, j));
      out.append(field, static_cast<std::size_t>(len));
    }
    out += '\n';
  }
  return out;
}

void save_matrix(const std::filesystem::path& path, const Mat& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << format_matrix(m);
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

Labels load_labels(const std::filesystem::path& path) {
  const Mat m = load_matrix(path);
  if (m.rows() != 1 && m.cols() != 1) {
    throw ParseError("labels must be a single row or column", 0);
  }
  Labels labels;
  labels.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    const double v = m.data()[k];
    if (v < 0.0 || v != std::floor(v)) {
      throw ParseError("labels must be nonnegative integers", 0);
    }
    labels.push_back(static_cast<int>(v));
  }
  return labels;
}

}  // namespace lowrankseg::data
