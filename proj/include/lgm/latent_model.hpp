#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lgm/autoencoder.hpp"
#include "lgm/beta_copula.hpp"
#include "lgm/core.hpp"
#include "lgm/density_models.hpp"
#include "lgm/vine.hpp"

namespace lgm {

enum class ModelKind : std::uint32_t { gauss = 1, indep = 2, mkde = 3, gmm = 4, vine = 5, ebc = 6 };

std::string to_string(ModelKind kind);
//! Throws InvalidArgument for anything but gauss|indep|mkde|gmm|vine|ebc.
ModelKind parse_model_kind(const std::string& name);

using LatentModel = std::variant<GaussianModel, IndependentModel, MkdeModel, GmmModel, VineModel, EbcModel>;

ModelKind kind_of(const LatentModel& model);
Index model_dim(const LatentModel& model);

struct FitOptions {
  GmmOptions gmm;
  MkdeOptions mkde;
  //! 0 selects default_truncation(d).
  int truncation = 0;
};

LatentModel fit_latent_model(ModelKind kind, const LatentMatrix& y, const FitOptions& options, std::uint64_t seed,
                             const std::vector<std::string>* labels = nullptr);

//! Latent-scale samples from any model.
Matrix sample_latent(const LatentModel& model, std::size_t count, std::uint64_t seed);

// Model blobs: "LGMB", u32 format version, u32 kind tag, then the parameters.
// Autoencoder checkpoints use the same header with kind tag 7.

inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr std::uint32_t kAutoencoderTag = 7;

void save_model(const LatentModel& model, const std::filesystem::path& path);
LatentModel load_model(const std::filesystem::path& path);

void save_autoencoder(const MlpAutoencoder& model, const std::filesystem::path& path);
MlpAutoencoder load_autoencoder(const std::filesystem::path& path);

}  // namespace lgm
