#include "lgm/latent_model.hpp"

#include <fstream>

#include "lgm/binary_io.hpp"
#include "lgm/error.hpp"

namespace lgm {

namespace {

constexpr std::string_view kModelMagic = "LGMB";
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

using io::BinaryReader;
using io::BinaryWriter;

void write_matrix(BinaryWriter& w, const Matrix& m) {
  w.u64(static_cast<std::uint64_t>(m.rows()));
  w.u64(static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) w.f64(m(i, j));
}

Matrix read_matrix(BinaryReader& r) {
  const auto rows = r.count(kMaxElements);
  const auto cols = r.count(kMaxElements);
  if (rows * cols > kMaxElements) throw DataError(r.context() + ": matrix too large");
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = r.f64();
  return m;
}

void write_vector(BinaryWriter& w, const Vector& v) {
  w.u64(static_cast<std::uint64_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) w.f64(v(i));
}

Vector read_vector(BinaryReader& r) {
  Vector v(static_cast<Index>(r.count(kMaxElements)));
  for (Index i = 0; i < v.size(); ++i) v(i) = r.f64();
  return v;
}

void write_margins(BinaryWriter& w, const std::vector<MarginalModel>& margins) {
  w.u64(margins.size());
  for (const auto& m : margins) {
    w.u64(m.size());
    w.f64s(m.centers());
    w.f64(m.bandwidth());
  }
}

std::vector<MarginalModel> read_margins(BinaryReader& r) {
  std::vector<MarginalModel> margins;
  const auto d = r.count(kMaxElements);
  for (std::uint64_t j = 0; j < d; ++j) {
    std::vector<double> centers(r.count(kMaxElements));
    for (double& c : centers) c = r.f64();
    const double h = r.f64();
    margins.emplace_back(std::move(centers), h);
  }
  return margins;
}

void write_gaussian(BinaryWriter& w, const GaussianModel& g) {
  write_vector(w, g.mean());
  write_matrix(w, g.covariance());
}

GaussianModel read_gaussian(BinaryReader& r) {
  Vector mean = read_vector(r);
  Matrix cov = read_matrix(r);
  return GaussianModel(std::move(mean), std::move(cov));
}

void write_payload(BinaryWriter& w, const LatentModel& model) {
  std::visit(overloaded{
                 [&](const GaussianModel& m) { write_gaussian(w, m); },
                 [&](const IndependentModel& m) { write_margins(w, m.margins()); },
                 [&](const MkdeModel& m) {
                   write_matrix(w, m.centers());
                   write_vector(w, m.bandwidths());
                 },
                 [&](const GmmModel& m) {
                   write_vector(w, m.weights());
                   w.u64(m.components().size());
                   for (const auto& c : m.components()) write_gaussian(w, c);
                 },
                 [&](const VineModel& m) {
                   w.u32(static_cast<std::uint32_t>(m.truncation_level()));
                   write_margins(w, m.margins());
                   w.u64(m.trees().size());
                   for (const auto& tree : m.trees()) {
                     w.u64(tree.size());
                     for (const auto& e : tree) {
                       w.i64(e.first);
                       w.i64(e.second);
                       w.i64(e.child_first);
                       w.i64(e.child_second);
                       w.f64(e.rho);
                       w.u64(e.conditioning.size());
                       for (int c : e.conditioning) w.i64(c);
                     }
                   }
                 },
                 [&](const EbcModel& m) {
                   write_matrix(w, m.data().data());
                   const auto& ranks = m.ranks().ranks();
                   for (Index i = 0; i < ranks.rows(); ++i)
                     for (Index j = 0; j < ranks.cols(); ++j) w.i64(ranks(i, j));
                   write_margins(w, m.margins());
                   w.u32(m.labels() ? 1u : 0u);
                   if (m.labels())
                     for (const auto& l : *m.labels()) w.str(l);
                 },
             },
             model);
}

LatentModel read_payload(BinaryReader& r, ModelKind kind) {
  switch (kind) {
    case ModelKind::gauss: return read_gaussian(r);
    case ModelKind::indep: return IndependentModel(read_margins(r));
    case ModelKind::mkde: {
      Matrix centers = read_matrix(r);
      Vector bw = read_vector(r);
      return MkdeModel(std::move(centers), std::move(bw));
    }
    case ModelKind::gmm: {
      Vector weights = read_vector(r);
      std::vector<GaussianModel> comps;
      const auto m = r.count(kMaxElements);
      for (std::uint64_t k = 0; k < m; ++k) comps.push_back(read_gaussian(r));
      return GmmModel(std::move(weights), std::move(comps));
    }
    case ModelKind::vine: {
      const int truncation = static_cast<int>(r.u32());
      auto margins = read_margins(r);
      VineTrees trees(r.count(kMaxElements));
      for (auto& tree : trees) {
        tree.resize(r.count(kMaxElements));
        for (auto& e : tree) {
          e.first = static_cast<int>(r.i64());
          e.second = static_cast<int>(r.i64());
          e.child_first = static_cast<int>(r.i64());
          e.child_second = static_cast<int>(r.i64());
          e.rho = r.f64();
          e.conditioning.resize(r.count(kMaxElements));
          for (int& c : e.conditioning) c = static_cast<int>(r.i64());
        }
      }
      return VineModel(std::move(trees), truncation, std::move(margins));
    }
    case ModelKind::ebc: {
      LatentMatrix data(read_matrix(r));
      Eigen::MatrixXi ranks(data.rows(), data.cols());
      for (Index i = 0; i < ranks.rows(); ++i)
        for (Index j = 0; j < ranks.cols(); ++j) ranks(i, j) = static_cast<int>(r.i64());
      auto margins = read_margins(r);
      std::optional<std::vector<std::string>> labels;
      if (r.u32() != 0) {
        labels.emplace(static_cast<std::size_t>(data.rows()));
        for (auto& l : *labels) l = r.str();
      }
      return EbcModel(std::move(data), RankMatrix(std::move(ranks)), std::move(margins), std::move(labels));
    }
  }
  throw DataError(r.context() + ": unknown model kind");
}

void write_layers(BinaryWriter& w, const std::vector<DenseLayer>& layers) {
  w.u64(layers.size());
  for (const auto& l : layers) {
    w.u32(static_cast<std::uint32_t>(l.activation));
    write_matrix(w, l.weight);
    write_vector(w, l.bias);
  }
}

std::vector<DenseLayer> read_layers(BinaryReader& r) {
  std::vector<DenseLayer> layers(r.count(1024));
  for (auto& l : layers) {
    const auto a = r.u32();
    if (a > static_cast<std::uint32_t>(Activation::logistic)) throw DataError(r.context() + ": unknown activation");
    l.activation = static_cast<Activation>(a);
    l.weight = read_matrix(r);
    l.bias = read_vector(r);
  }
  return layers;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return in;
}

std::uint32_t read_header(BinaryReader& r) {
  r.expect_magic(kModelMagic);
  const auto version = r.u32();
  if (version != kModelFormatVersion)
    throw DataError(r.context() + ": unsupported model format version " + std::to_string(version));
  return r.u32();
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::gauss: return "gauss";
    case ModelKind::indep: return "indep";
    case ModelKind::mkde: return "mkde";
    case ModelKind::gmm: return "gmm";
    case ModelKind::vine: return "vine";
    case ModelKind::ebc: return "ebc";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  for (auto k : {ModelKind::gauss, ModelKind::indep, ModelKind::mkde, ModelKind::gmm, ModelKind::vine, ModelKind::ebc})
    if (to_string(k) == name) return k;
  throw InvalidArgument("unknown model kind '" + name + "' (expected gauss|indep|mkde|gmm|vine|ebc)");
}

ModelKind kind_of(const LatentModel& model) {
  return std::visit(overloaded{
                        [](const GaussianModel&) { return ModelKind::gauss; },
                        [](const IndependentModel&) { return ModelKind::indep; },
                        [](const MkdeModel&) { return ModelKind::mkde; },
                        [](const GmmModel&) { return ModelKind::gmm; },
                        [](const VineModel&) { return ModelKind::vine; },
                        [](const EbcModel&) { return ModelKind::ebc; },
                    },
                    model);
}

Index model_dim(const LatentModel& model) {
  return std::visit([](const auto& m) { return static_cast<Index>(m.dim()); }, model);
}

LatentModel fit_latent_model(ModelKind kind, const LatentMatrix& y, const FitOptions& options, std::uint64_t seed,
                             const std::vector<std::string>* labels) {
  switch (kind) {
    case ModelKind::gauss: return fit_gaussian(y);
    case ModelKind::indep: return fit_independent(y);
    case ModelKind::mkde: return fit_mkde_cv(y, options.mkde, seed).model;
    case ModelKind::gmm: return fit_gmm_em(y, options.gmm, seed).model;
    case ModelKind::vine: {
      const int d = static_cast<int>(y.cols());
      return fit_vine(y, options.truncation == 0 ? default_truncation(d) : options.truncation);
    }
    case ModelKind::ebc:
      return labels ? fit_ebc(y, *labels) : fit_ebc(y);
  }
  throw InvalidArgument("unknown model kind");
}

Matrix sample_latent(const LatentModel& model, std::size_t count, std::uint64_t seed) {
  return std::visit(overloaded{
                        [&](const GaussianModel& m) { return sample_gaussian(m, count, seed); },
                        [&](const IndependentModel& m) { return sample_independent(m, count, seed); },
                        [&](const MkdeModel& m) { return sample_mkde(m, count, seed); },
                        [&](const GmmModel& m) { return sample_gmm(m, count, seed); },
                        [&](const VineModel& m) { return sample_vine(m, count, seed).latent; },
                        [&](const EbcModel& m) { return sample_ebc(m, count, seed).latent; },
                    },
                    model);
}

void save_model(const LatentModel& model, const std::filesystem::path& path) {
  auto out = open_out(path);
  BinaryWriter w(out);
  w.magic(kModelMagic);
  w.u32(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(kind_of(model)));
  write_payload(w, model);
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

LatentModel load_model(const std::filesystem::path& path) {
  auto in = open_in(path);
  BinaryReader r(in, path.string());
  const auto tag = read_header(r);
  if (tag == kAutoencoderTag) throw DataError(path.string() + ": is an autoencoder checkpoint, not a latent model");
  if (tag < 1 || tag > 6) throw DataError(path.string() + ": unknown model kind tag " + std::to_string(tag));
  auto model = read_payload(r, static_cast<ModelKind>(tag));
  r.expect_end();
  return model;
}

void save_autoencoder(const MlpAutoencoder& model, const std::filesystem::path& path) {
  auto out = open_out(path);
  BinaryWriter w(out);
  w.magic(kModelMagic);
  w.u32(kModelFormatVersion);
  w.u32(kAutoencoderTag);
  write_layers(w, model.encoder());
  write_layers(w, model.decoder());
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

MlpAutoencoder load_autoencoder(const std::filesystem::path& path) {
  auto in = open_in(path);
  BinaryReader r(in, path.string());
  if (read_header(r) != kAutoencoderTag) throw DataError(path.string() + ": not an autoencoder checkpoint");
  auto encoder = read_layers(r);
  auto decoder = read_layers(r);
  r.expect_end();
  return MlpAutoencoder(std::move(encoder), std::move(decoder));
}

}  // namespace lgm
