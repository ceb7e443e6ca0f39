#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lgm/autoencoder.hpp"
#include "lgm/beta_copula.hpp"
#include "lgm/core.hpp"
#include "lgm/error.hpp"
#include "lgm/latent_model.hpp"
#include "lgm/metrics.hpp"
#include "lgm/vine.hpp"

namespace py = pybind11;

namespace {

// Opaque handle around the model variant.
struct Model {
  lgm::LatentModel model;

  std::string kind() const { return lgm::to_string(lgm::kind_of(model)); }
  lgm::Index dim() const { return lgm::model_dim(model); }

  const lgm::EbcModel& ebc() const {
    const auto* e = std::get_if<lgm::EbcModel>(&model);
    if (!e) throw lgm::DataError("operation requires a copula model (kind ebc), got kind " + kind());
    return *e;
  }
};

Model fit(const std::string& kind, const lgm::Matrix& y, std::uint64_t seed,
          std::optional<std::vector<std::string>> labels, lgm::Index components, int max_iters, double tol,
          const std::string& em_init, std::optional<std::vector<double>> grid, int folds, int truncation) {
  lgm::FitOptions opts;
  opts.gmm.components = components;
  opts.gmm.max_iters = max_iters;
  opts.gmm.tol = tol;
  if (em_init == "random") opts.gmm.init = lgm::GmmInit::random_rows;
  else if (em_init != "kmeans++") throw lgm::InvalidArgument("em_init must be 'kmeans++' or 'random'");
  if (grid) opts.mkde.grid = *grid;
  opts.mkde.folds = folds;
  opts.truncation = truncation;
  lgm::LatentMatrix data(y);
  return Model{lgm::fit_latent_model(lgm::parse_model_kind(kind), data, opts, seed, labels ? &*labels : nullptr)};
}

}  // namespace

PYBIND11_MODULE(_lgm, m) {
  m.doc() = "Latent-space generative models for autoencoders";

  auto base = py::register_exception<lgm::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<lgm::DataError>(m, "DataError", base.ptr());
  py::register_exception<lgm::InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<lgm::NumericError>(m, "NumericError", base.ptr());

  m.def(
      "compute_ranks", [](const lgm::Matrix& y) { return lgm::compute_ranks(lgm::LatentMatrix(y)).ranks(); },
      py::arg("y"), "Per-column ranks in 1..n; tied values share the largest rank.");
  m.def(
      "load_matrix",
      [](const std::filesystem::path& path) {
        auto file = lgm::read_matrix_file(path);
        return py::make_tuple(file.data, file.labels);
      },
      py::arg("path"), "Returns (data, labels or None).");
  m.def(
      "save_matrix",
      [](const lgm::Matrix& y, const std::filesystem::path& path, std::optional<std::vector<std::string>> labels) {
        lgm::save_matrix(y, path, labels ? &*labels : nullptr);
      },
      py::arg("y"), py::arg("path"), py::arg("labels") = std::nullopt);

  py::class_<Model>(m, "Model")
      .def_property_readonly("kind", &Model::kind)
      .def_property_readonly("dim", &Model::dim)
      .def(
          "sample", [](const Model& self, std::size_t count, std::uint64_t seed) {
            return lgm::sample_latent(self.model, count, seed);
          },
          py::arg("count"), py::arg("seed"))
      .def(
          "sample_targeted",
          [](const Model& self, const std::string& group, std::size_t count, std::uint64_t seed) {
            return lgm::sample_ebc_targeted(self.ebc(), group, count, seed).latent;
          },
          py::arg("group"), py::arg("count"), py::arg("seed"))
      .def(
          "recombine",
          [](const Model& self, const std::string& group_a, const std::string& group_b, std::size_t count,
             std::uint64_t seed, const Model* margins) {
            const auto& b = margins ? margins->ebc() : self.ebc();
            return lgm::recombine(self.ebc(), group_a, b, group_b, count, seed).latent;
          },
          py::arg("group_a"), py::arg("group_b"), py::arg("count"), py::arg("seed"),
          py::arg("margins") = nullptr)
      .def("groups",
           [](const Model& self) {
             std::vector<std::string> out;
             for (const auto& [label, rows] : self.ebc().group_index()) out.push_back(label);
             return out;
           })
      .def("save", [](const Model& self, const std::filesystem::path& path) { lgm::save_model(self.model, path); },
           py::arg("path"))
      .def("__repr__", [](const Model& self) {
        return "<lgm.Model kind=" + self.kind() + " dim=" + std::to_string(self.dim()) + ">";
      });

  m.def("fit", &fit, py::arg("kind"), py::arg("y"), py::arg("seed"), py::arg("labels") = std::nullopt,
        py::arg("components") = 10, py::arg("max_iters") = 100, py::arg("tol") = 1e-3,
        py::arg("em_init") = "kmeans++", py::arg("grid") = std::nullopt, py::arg("folds") = 10,
        py::arg("truncation") = 0);
  m.def(
      "load_model", [](const std::filesystem::path& path) { return Model{lgm::load_model(path)}; },
      py::arg("path"));

  m.def("kendall_tau", [](const std::vector<double>& x, const std::vector<double>& y) {
    return lgm::kendall_tau(x, y);
  });
  m.def("emd", &lgm::emd, py::arg("x"), py::arg("y"));
  m.def("mmd", &lgm::mmd, py::arg("x"), py::arg("y"), py::arg("bandwidth") = std::nullopt);
  m.def("one_nn_accuracy", &lgm::one_nn_accuracy, py::arg("x"), py::arg("y"));
  m.def(
      "evaluate",
      [](const lgm::Matrix& real, const lgm::Matrix& synth, std::optional<double> bandwidth) {
        auto r = lgm::evaluate(real, synth, bandwidth);
        py::dict d;
        d["emd"] = r.emd;
        d["mmd"] = r.mmd;
        d["onenn_accuracy"] = r.onenn_accuracy;
        d["sample_sizes"] = py::make_tuple(r.real_size, r.synthetic_size);
        return d;
      },
      py::arg("real"), py::arg("synthetic"), py::arg("bandwidth") = std::nullopt);

  py::class_<lgm::MlpAutoencoder>(m, "Autoencoder")
      .def_property_readonly("input_dim", &lgm::MlpAutoencoder::input_dim)
      .def_property_readonly("latent_dim", &lgm::MlpAutoencoder::latent_dim)
      .def_property_readonly("parameter_count", &lgm::MlpAutoencoder::parameter_count)
      .def("encode", &lgm::MlpAutoencoder::encode, py::arg("x"))
      .def("decode", &lgm::MlpAutoencoder::decode, py::arg("y"))
      .def("reconstruct", &lgm::MlpAutoencoder::reconstruct, py::arg("x"))
      .def("save", [](const lgm::MlpAutoencoder& self, const std::filesystem::path& p) {
        lgm::save_autoencoder(self, p);
      });

  m.def(
      "train_autoencoder",
      [](const lgm::Matrix& data, std::uint64_t seed, lgm::Index latent_dim, std::vector<lgm::Index> hidden,
         int epochs, lgm::Index batch_size, double lr, double weight_decay, const std::string& loss) {
        lgm::ArchitectureConfig arch;
        arch.input_dim = data.cols();
        arch.latent_dim = latent_dim;
        arch.hidden = std::move(hidden);
        lgm::TrainConfig cfg;
        cfg.seed = seed;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.learning_rate = lr;
        cfg.weight_decay = weight_decay;
        cfg.loss = lgm::parse_loss(loss);
        if (cfg.loss == lgm::Loss::squared_error) arch.output_activation = lgm::Activation::identity;
        auto result = lgm::train(data, arch, cfg);
        return py::make_tuple(std::move(result.model), result.loss_history);
      },
      py::arg("data"), py::arg("seed"), py::arg("latent_dim") = 8, py::arg("hidden") = std::vector<lgm::Index>{64},
      py::arg("epochs") = 50, py::arg("batch_size") = 100, py::arg("lr") = 1e-3, py::arg("weight_decay") = 1e-3,
      py::arg("loss") = "bce", "Returns (autoencoder, per-epoch loss history).");
  m.def(
      "load_autoencoder", [](const std::filesystem::path& p) { return lgm::load_autoencoder(p); }, py::arg("path"));
}
