#include "lgm/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lgm/binary_io.hpp"
#include "lgm/error.hpp"
#include "lgm/random.hpp"

namespace lgm {

namespace {

constexpr std::string_view kMatrixMagic = "LGM1";

void check_finite(const Matrix& data) {
  for (Index j = 0; j < data.cols(); ++j) {
    for (Index i = 0; i < data.rows(); ++i) {
      if (!std::isfinite(data(i, j))) {
        throw DataError("latent matrix entry (" + std::to_string(i) + ", " + std::to_string(j) +
                        ") is not finite");
      }
    }
  }
}

template <typename Column>
void rank_column(const Column& column, Eigen::Ref<Eigen::VectorXi> out) {
  const auto n = static_cast<Index>(column.size());
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return column(a) < column(b); });
  // Walk runs of equal values; every member of a run gets the run's last
  // position (1-based), i.e. the count of values <= it.
  Index start = 0;
  while (start < n) {
    Index stop = start + 1;
    while (stop < n && column(order[stop]) == column(order[start])) ++stop;
    for (Index k = start; k < stop; ++k) out(order[k]) = static_cast<int>(stop);
    start = stop;
  }
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

void write_double(std::ostream& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, ptr - buf);
}

MatrixFile read_csv(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw DataError(name + ": zero rows");

  const auto header = split_csv_line(line);
  bool has_label = !header.empty() && header.back() == "label";
  const std::size_t d = header.size() - (has_label ? 1 : 0);
  if (d == 0) throw DataError(name + ": header has no dim_ columns");
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j] != "dim_" + std::to_string(j)) {
      throw DataError(name + ": header column " + std::to_string(j + 1) + " is '" + header[j] +
                      "', expected 'dim_" + std::to_string(j) + "'");
    }
  }

  std::vector<double> values;
  std::vector<std::string> labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError(name + ": parse error at row " + std::to_string(row) + ": expected " +
                      std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < d; ++j) {
      const auto& f = fields[j];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc{} || ptr != f.data() + f.size()) {
        throw DataError(name + ": parse error at row " + std::to_string(row) + ", column " +
                        std::to_string(j + 1) + ": '" + f + "' is not a number");
      }
      values.push_back(v);
    }
    if (has_label) labels.push_back(fields.back());
  }

  MatrixFile file;
  file.data = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Index>(row), static_cast<Index>(d));
  if (has_label) file.labels = std::move(labels);
  return file;
}

MatrixFile read_binary(std::istream& in, const std::string& name) {
  io::BinaryReader reader(in, name);
  reader.expect_magic(kMatrixMagic);
  const auto n = reader.u64();
  const auto d = reader.u64();
  if (d == 0) throw DataError(name + ": zero columns");
  if (n > (std::uint64_t{1} << 32) || d > (std::uint64_t{1} << 24)) throw DataError(name + ": implausible shape");
  MatrixFile file;
  file.data.resize(static_cast<Index>(n), static_cast<Index>(d));
  for (Index i = 0; i < file.data.rows(); ++i)
    for (Index j = 0; j < file.data.cols(); ++j) file.data(i, j) = reader.f64();
  return file;
}

}  // namespace

LatentMatrix::LatentMatrix(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 1) throw DataError("latent matrix has zero rows");
  if (data_.cols() < 1) throw DataError("latent matrix has zero columns");
  check_finite(data_);
}

LatentMatrix LatentMatrix::select_rows(const std::vector<Index>& rows) const {
  Matrix out(static_cast<Index>(rows.size()), cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = data_.row(rows[k]);
  return LatentMatrix(std::move(out));
}

LabeledLatentMatrix::LabeledLatentMatrix(LatentMatrix m, std::vector<std::string> l)
    : matrix(std::move(m)), labels(std::move(l)) {
  if (static_cast<Index>(labels.size()) != matrix.rows()) {
    throw DataError("label count " + std::to_string(labels.size()) + " does not match row count " +
                    std::to_string(matrix.rows()));
  }
}

RankMatrix compute_ranks(const LatentMatrix& y) {
  const Matrix& data = y.data();
  Eigen::MatrixXi ranks(data.rows(), data.cols());
  for (Index j = 0; j < data.cols(); ++j) rank_column(data.col(j), ranks.col(j));
  return RankMatrix(std::move(ranks));
}

RankMatrix compute_ranks(const Eigen::MatrixXi& values) {
  Eigen::MatrixXi ranks(values.rows(), values.cols());
  for (Index j = 0; j < values.cols(); ++j) rank_column(values.col(j), ranks.col(j));
  return RankMatrix(std::move(ranks));
}

std::pair<std::vector<Index>, std::vector<Index>> holdout_indices(Index n, std::size_t holdout_count,
                                                                  std::uint64_t seed) {
  if (holdout_count == 0) throw InvalidArgument("holdout_count must be positive");
  if (static_cast<Index>(holdout_count) >= n) {
    throw InvalidArgument("holdout_count (" + std::to_string(holdout_count) + ") must be smaller than n (" +
                          std::to_string(n) + ")");
  }
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(seed);
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);

  std::vector<Index> holdout(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(holdout_count));
  std::vector<Index> train(perm.begin() + static_cast<std::ptrdiff_t>(holdout_count), perm.end());
  std::sort(holdout.begin(), holdout.end());
  std::sort(train.begin(), train.end());
  return {std::move(train), std::move(holdout)};
}

HoldoutSplit split_holdout(const LatentMatrix& y, std::size_t holdout_count, std::uint64_t seed) {
  auto [train, holdout] = holdout_indices(y.rows(), holdout_count, seed);
  return {y.select_rows(train), y.select_rows(holdout)};
}

MatrixFormat format_for_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv" ? MatrixFormat::csv : MatrixFormat::binary;
}

void save_matrix(const Matrix& y, const std::filesystem::path& path, const std::vector<std::string>* labels) {
  if (labels && static_cast<Index>(labels->size()) != y.rows())
    throw InvalidArgument("label count does not match row count");
  const auto format = format_for_path(path);
  if (labels && format == MatrixFormat::binary)
    throw InvalidArgument("labels can only be stored in CSV files: " + path.string());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");

  if (format == MatrixFormat::csv) {
    for (Index j = 0; j < y.cols(); ++j) out << (j ? "," : "") << "dim_" << j;
    if (labels) out << ",label";
    out << '\n';
    for (Index i = 0; i < y.rows(); ++i) {
      for (Index j = 0; j < y.cols(); ++j) {
        if (j) out << ',';
        write_double(out, y(i, j));
      }
      if (labels) out << ',' << (*labels)[static_cast<std::size_t>(i)];
      out << '\n';
    }
  } else {
    io::BinaryWriter writer(out);
    writer.magic(kMatrixMagic);
    writer.u64(static_cast<std::uint64_t>(y.rows()));
    writer.u64(static_cast<std::uint64_t>(y.cols()));
    for (Index i = 0; i < y.rows(); ++i)
      for (Index j = 0; j < y.cols(); ++j) writer.f64(y(i, j));
  }
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

void save_matrix(const LatentMatrix& y, const std::filesystem::path& path) { save_matrix(y.data(), path); }

MatrixFile read_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  char head[4] = {0, 0, 0, 0};
  in.read(head, 4);
  const bool binary = in.gcount() == 4 && std::string_view(head, 4) == kMatrixMagic;
  in.clear();
  in.seekg(0);
  return binary ? read_binary(in, path.string()) : read_csv(in, path.string());
}

LatentMatrix load_matrix(const std::filesystem::path& path) {
  auto file = read_matrix_file(path);
  if (file.data.rows() == 0) throw DataError(path.string() + ": zero rows");
  return LatentMatrix(std::move(file.data));
}

LabeledLatentMatrix load_labeled_matrix(const std::filesystem::path& path) {
  auto file = read_matrix_file(path);
  if (file.data.rows() == 0) throw DataError(path.string() + ": zero rows");
  if (!file.labels) throw DataError(path.string() + ": no label column");
  return LabeledLatentMatrix(LatentMatrix(std::move(file.data)), std::move(*file.labels));
}

}  // namespace lgm
