#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "semcert/bounds.hpp"
#include "semcert/certify.hpp"
#include "semcert/config.hpp"
#include "semcert/errors.hpp"
#include "semcert/idx.hpp"
#include "semcert/model.hpp"
#include "semcert/pipeline.hpp"
#include "semcert/smoothing.hpp"
#include "semcert/synth.hpp"
#include "semcert/table_io.hpp"
#include "semcert/transforms.hpp"

namespace py = pybind11;
using namespace semcert;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (H, W) or (H, W, C) float array → image.
ImageTensor to_image(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw py::value_error("image must be a 2D or 3D array");
  const auto h = static_cast<std::size_t>(a.shape(0));
  const auto w = static_cast<std::size_t>(a.shape(1));
  const auto c = a.ndim() == 3 ? static_cast<std::size_t>(a.shape(2)) : std::size_t{1};
  return ImageTensor(h, w, c, std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_image(const ImageTensor& x) {
  std::vector<py::ssize_t> shape = {static_cast<py::ssize_t>(x.height()), static_cast<py::ssize_t>(x.width())};
  if (x.channels() != 1) shape.push_back(static_cast<py::ssize_t>(x.channels()));
  Array out(shape);
  std::copy(x.values().begin(), x.values().end(), out.mutable_data());
  return out;
}

std::vector<TransformKind> kinds_from(const std::vector<std::string>& names) {
  std::vector<TransformKind> out;
  for (const auto& n : names) out.push_back(parse_transform_kind(n));
  return out;
}

LabeledDataset dataset_from(const std::vector<Array>& images, const std::vector<int>& labels, int num_classes) {
  LabeledDataset data;
  for (const auto& a : images) data.images.push_back(to_image(a));
  data.labels = labels;
  data.num_classes = num_classes;
  return data;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Certification of image classifiers against parametric semantic transforms";

  auto base = py::register_exception<Error>(m, "SemcertError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<MissingArtifactError>(m, "MissingArtifactError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ContractError>(m, "ContractError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<UnsupportedError>(m, "UnsupportedError", base.ptr());

  // transforms
  m.def("brightness", [](const Array& x, double b) { return from_image(brightness(to_image(x), b)); });
  m.def("contrast", [](const Array& x, double c) { return from_image(contrast(to_image(x), c)); });
  m.def("gamma_correct", [](const Array& x, double g) { return from_image(gamma_correct(to_image(x), g)); });
  m.def("translate", [](const Array& x, long tx, long ty) { return from_image(translate(to_image(x), tx, ty)); });
  m.def("gaussian_blur", [](const Array& x, double r) { return from_image(gaussian_blur(to_image(x), r)); });

  py::class_<CompositeTransform>(m, "Transform")
      .def(py::init([](const std::vector<std::string>& names) { return CompositeTransform(kinds_from(names)); }),
           py::arg("kinds"))
      .def_property_readonly("dim", &CompositeTransform::dim)
      .def_property_readonly("kinds",
                             [](const CompositeTransform& t) {
                               std::vector<std::string> out;
                               for (const auto& p : t.parts()) out.emplace_back(to_string(p.kind()));
                               return out;
                             })
      .def("identity", &CompositeTransform::identity)
      .def("apply", [](const CompositeTransform& t, const Array& x, const Params& theta) {
        return from_image(t.apply(to_image(x), theta));
      })
      .def("resolve", &CompositeTransform::resolve, py::arg("alpha"), py::arg("beta"));

  py::class_<ParamMap>(m, "ParamMap")
      .def_static("normal", &ParamMap::normal, py::arg("scale"), py::arg("loc") = 0.0)
      .def_static("lognormal", &ParamMap::lognormal, py::arg("mu"), py::arg("s"))
      .def_static("rayleigh", &ParamMap::rayleigh, py::arg("scale"))
      .def_static("shifted_rayleigh", &ParamMap::shifted_rayleigh, py::arg("loc"), py::arg("scale"))
      .def("forward", &ParamMap::forward)
      .def("cdf", &ParamMap::cdf)
      .def("__repr__", &ParamMap::describe);

  py::class_<SmoothingSpec>(m, "SmoothingSpec")
      .def(py::init([](const CompositeTransform& t, const std::vector<ParamMap>& maps, double sigma,
                       std::size_t n_samples, std::size_t gn_iterations) {
             SmoothingSpec spec;
             spec.transform = t;
             spec.maps = maps;
             spec.sigma = sigma;
             spec.n_samples = n_samples;
             spec.gn_iterations = gn_iterations;
             spec.validate();
             return spec;
           }),
           py::arg("transform"), py::arg("maps"), py::arg("sigma") = 0.0, py::arg("n_samples") = 10000,
           py::arg("gn_iterations") = 1)
      .def_readonly("transform", &SmoothingSpec::transform)
      .def_readonly("maps", &SmoothingSpec::maps)
      .def_readwrite("sigma", &SmoothingSpec::sigma)
      .def_readwrite("n_samples", &SmoothingSpec::n_samples)
      .def_readwrite("gn_iterations", &SmoothingSpec::gn_iterations)
      .def_property_readonly("dim", &SmoothingSpec::dim);

  m.def("grad_log_rho_beta",
        [](const SmoothingSpec& spec, const Array& y, const Array& x, const Params& alpha, const Params& beta) {
          return grad_log_rho_beta(spec, to_image(y), to_image(x), alpha, beta);
        });

  // bounds and certification
  py::class_<ParameterGrid>(m, "ParameterGrid")
      .def_static(
          "tensor",
          [](const Params& beta0, const Params& lower, const Params& upper, const std::vector<std::size_t>& shape) {
            return ParameterGrid::tensor(beta0, lower, upper, shape);
          },
          py::arg("beta0"), py::arg("lower"), py::arg("upper"), py::arg("shape"))
      .def_readonly("beta0", &ParameterGrid::beta0)
      .def_readonly("lower", &ParameterGrid::lower)
      .def_readonly("upper", &ParameterGrid::upper)
      .def_readonly("shape", &ParameterGrid::shape)
      .def_readonly("points", &ParameterGrid::points)
      .def("__len__", &ParameterGrid::size);

  py::class_<BoundTable>(m, "BoundTable")
      .def_readonly("n_samples", &BoundTable::n_samples)
      .def_readonly("seed", &BoundTable::seed)
      .def_readonly("grid", &BoundTable::grid)
      .def_readonly("p", &BoundTable::p)
      .def_readonly("g", &BoundTable::g)
      .def_readonly("scale", &BoundTable::scale)
      .def_readonly("warnings", &BoundTable::warnings);

  m.def("worst_classifier_bound", [](const std::vector<double>& etas, double h) {
    return worst_classifier_bound(etas, h);
  });
  m.def(
      "compute_bounds",
      [](const SmoothingSpec& spec, const ParameterGrid& grid, std::optional<Array> image, std::uint64_t seed,
         std::size_t ray_samples, std::size_t threads) {
        BoundsOptions opt;
        opt.seed = seed;
        opt.ray_samples = ray_samples;
        opt.threads = threads;
        const ImageTensor x = image ? to_image(*image) : ImageTensor(1, 1, 1, 0.5);
        py::gil_scoped_release release;
        return compute_normed_bounds(x, spec, grid, opt, true);
      },
      py::arg("spec"), py::arg("grid"), py::arg("image") = py::none(), py::arg("seed") = 0,
      py::arg("ray_samples") = 8, py::arg("threads") = 1);

  py::class_<CertificationResult>(m, "CertificationResult")
      .def_readonly("certified", &CertificationResult::certified)
      .def_readonly("margin", &CertificationResult::margin)
      .def_readonly("h_lower", &CertificationResult::h_lower)
      .def_readonly("beta", &CertificationResult::beta)
      .def_readonly("ghat", &CertificationResult::ghat)
      .def_readonly("extrapolated", &CertificationResult::extrapolated);

  py::class_<RegionResult>(m, "RegionResult")
      .def_readonly("certified", &RegionResult::certified)
      .def_readonly("fraction", &RegionResult::fraction)
      .def_readonly("evaluated", &RegionResult::evaluated)
      .def_readonly("witnesses", &RegionResult::witnesses);

  py::class_<Certifier>(m, "Certifier")
      .def(py::init<BoundTable, double>(), py::arg("table"), py::arg("clip_floor") = 1e-4)
      .def("xi", &Certifier::xi)
      .def("threshold", &Certifier::threshold)
      .def("ghat", [](const Certifier& c, const Params& beta) { return c.ghat(beta).value; })
      .def_property_readonly("beta0", &Certifier::beta0)
      .def_property_readonly("table", &Certifier::table)
      .def("certify_point",
           [](const Certifier& c, double h_lower, const Params& beta) { return certify_point(c, h_lower, beta); })
      .def("certify_region", [](const Certifier& c, double h_lower, const Params& lower, const Params& upper,
                                const std::vector<std::size_t>& resolution) {
        return certify_region(c, h_lower, lower, upper, resolution);
      });

  m.def("analytic_additive_xi", &analytic_additive_xi, py::arg("h"), py::arg("sigma"), py::arg("kappa"));
  m.def("save_bound_table", [](const BoundTable& t, const std::filesystem::path& path, const std::string& digest) {
    save_bound_table(StoredTable{t, digest, ""}, path);
  }, py::arg("table"), py::arg("path"), py::arg("config_digest") = "");
  m.def("load_bound_table", [](const std::filesystem::path& path) { return load_bound_table(path).table; });

  // smoothing statistics
  m.def("clopper_pearson_lower", &clopper_pearson_lower, py::arg("n"), py::arg("n_max"), py::arg("alpha_star"));

  py::class_<SmoothedEstimate>(m, "SmoothedEstimate")
      .def_readonly("n", &SmoothedEstimate::n)
      .def_readonly("n_max", &SmoothedEstimate::n_max)
      .def_readonly("alpha_star", &SmoothedEstimate::alpha_star)
      .def_readonly("h_lower", &SmoothedEstimate::h_lower)
      .def_readonly("class_id", &SmoothedEstimate::class_id);

  // model
  py::class_<Classifier>(m, "Classifier")
      .def_property_readonly("num_classes", &Classifier::num_classes)
      .def("forward", [](const Classifier& c, const Array& x) { return c.forward(to_image(x)); });

  py::class_<MlpShape>(m, "MlpShape")
      .def(py::init([](std::size_t h, std::size_t w, std::size_t c, std::size_t hidden, std::size_t classes) {
             return MlpShape{h, w, c, hidden, classes};
           }),
           py::arg("height") = 28, py::arg("width") = 28, py::arg("channels") = 1, py::arg("hidden") = 128,
           py::arg("classes") = 10)
      .def_readonly("height", &MlpShape::height)
      .def_readonly("width", &MlpShape::width)
      .def_readonly("channels", &MlpShape::channels)
      .def_readonly("hidden", &MlpShape::hidden)
      .def_readonly("classes", &MlpShape::classes)
      .def_property_readonly("parameter_count", &MlpShape::parameter_count);

  py::class_<Mlp, Classifier>(m, "Mlp")
      .def(py::init<const MlpShape&>())
      .def_static("initialized", &Mlp::initialized, py::arg("shape"), py::arg("seed"))
      .def_property_readonly("shape", &Mlp::shape)
      .def("parameters", &Mlp::parameters)
      .def("set_parameters", &Mlp::set_parameters)
      .def("save", [](const Mlp& m, const std::string& path) { save_weights(m, path); })
      .def_static("load", &load_weights);

  m.def(
      "train",
      [](const std::vector<Array>& images, const std::vector<int>& labels, int num_classes, std::size_t epochs,
         double learning_rate, double momentum, std::size_t batch_size, std::size_t hidden,
         std::optional<SmoothingSpec> augmentation, std::uint64_t seed) {
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.learning_rate = learning_rate;
        cfg.momentum = momentum;
        cfg.batch_size = batch_size;
        cfg.hidden = hidden;
        cfg.augmentation = std::move(augmentation);
        cfg.seed = seed;
        const LabeledDataset data = dataset_from(images, labels, num_classes);
        py::gil_scoped_release release;
        return train_augmented(data, cfg);
      },
      py::arg("images"), py::arg("labels"), py::arg("num_classes"), py::arg("epochs") = 2,
      py::arg("learning_rate") = 1e-3, py::arg("momentum") = 0.95, py::arg("batch_size") = 32,
      py::arg("hidden") = 128, py::arg("augmentation") = py::none(), py::arg("seed") = 0);

  m.def(
      "smoothed_predict",
      [](const Array& x, const Classifier& model, const SmoothingSpec& spec, int class_id, std::size_t n_max,
         double alpha_star, std::uint64_t seed) {
        const ImageTensor img = to_image(x);
        py::gil_scoped_release release;
        return smoothed_predict(img, model, spec, class_id, n_max, alpha_star, seed);
      },
      py::arg("image"), py::arg("model"), py::arg("spec"), py::arg("class_id"), py::arg("n_max") = 1000,
      py::arg("alpha_star") = 1e-3, py::arg("seed") = 0);

  m.def(
      "desk_dataset",
      [](std::size_t count, std::uint64_t seed, std::size_t side) {
        const LabeledDataset d = make_desk_dataset(count, seed, side);
        std::vector<Array> images;
        for (const auto& img : d.images) images.push_back(from_image(img));
        return py::make_tuple(images, d.labels);
      },
      py::arg("count"), py::arg("seed") = 0, py::arg("side") = 28);

  // configuration-driven commands
  py::class_<RunConfig>(m, "RunConfig")
      .def_static(
          "from_text",
          [](const std::string& text, const std::vector<std::string>& overrides) {
            KeyValueConfig kv = KeyValueConfig::parse(text);
            for (const auto& o : overrides) kv.set_assignment(o);
            return RunConfig::from(kv);
          },
          py::arg("text"), py::arg("overrides") = std::vector<std::string>{})
      .def_static(
          "load",
          [](const std::filesystem::path& path, const std::vector<std::string>& overrides) {
            KeyValueConfig kv = KeyValueConfig::load(path);
            for (const auto& o : overrides) kv.set_assignment(o);
            return RunConfig::from(kv);
          },
          py::arg("path"), py::arg("overrides") = std::vector<std::string>{})
      .def("digest", &RunConfig::digest)
      .def("smoothing_spec", &RunConfig::smoothing_spec)
      .def_readonly("output_dir", &RunConfig::output_dir);

  py::class_<CraSummary>(m, "CraSummary")
      .def_readonly("images", &CraSummary::images)
      .def_readonly("correct", &CraSummary::correct)
      .def_readonly("certified", &CraSummary::certified)
      .def_readonly("cra", &CraSummary::cra)
      .def_readonly("clean_accuracy", &CraSummary::clean_accuracy);

  m.def("cmd_synth_data", &cmd_synth_data);
  m.def("cmd_train", [](const RunConfig& cfg) { return cmd_train(cfg); });
  m.def("cmd_bounds", [](const RunConfig& cfg) { return cmd_bounds(cfg); });
  m.def("cmd_certify", &cmd_certify, py::arg("config"), py::arg("image"), py::arg("beta") = py::none());
  m.def("cmd_cra", [](const RunConfig& cfg) { return cmd_cra(cfg); });
  m.def("cmd_heatmap", &cmd_heatmap);
  m.def("cmd_xi_export", &cmd_xi_export);
}
