#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <vector>

#include "specmatch/dct_mask.hpp"
#include "specmatch/diffusion.hpp"
#include "specmatch/errors.hpp"
#include "specmatch/repa.hpp"
#include "specmatch/spectral.hpp"
#include "specmatch/synth.hpp"
#include "specmatch/toy_ae.hpp"

namespace py = pybind11;
using namespace specmatch;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (H, W) or (C, H, W).
Field2D to_field(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw SizeError("expected an array of shape (H, W) or (C, H, W)");
  const std::size_t c = a.ndim() == 3 ? a.shape(0) : 1;
  const std::size_t h = a.shape(a.ndim() - 2), w = a.shape(a.ndim() - 1);
  return Field2D(c, h, w, std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_field(const Field2D& f) {
  Array out({f.channels(), f.height(), f.width()});
  std::memcpy(out.mutable_data(), f.data().data(), f.size() * sizeof(double));
  return out;
}

// (T, D) or (h, w, D).
TokenMatrix to_tokens(const Array& a) {
  std::vector<double> v(a.data(), a.data() + a.size());
  if (a.ndim() == 2) return TokenMatrix(a.shape(0), a.shape(1), std::move(v));
  if (a.ndim() == 3) {
    return TokenMatrix(a.shape(0) * a.shape(1), a.shape(2), std::move(v), GridShape{std::size_t(a.shape(0)), std::size_t(a.shape(1))});
  }
  throw SizeError("expected an array of shape (T, D) or (h, w, D)");
}

Array from_tokens(const TokenMatrix& t) {
  std::vector<py::ssize_t> shape;
  if (t.grid()) {
    shape = {py::ssize_t(t.grid()->height), py::ssize_t(t.grid()->width), py::ssize_t(t.dims())};
  } else {
    shape = {py::ssize_t(t.tokens()), py::ssize_t(t.dims())};
  }
  Array out(shape);
  std::memcpy(out.mutable_data(), t.values().data(), t.values().size() * sizeof(double));
  return out;
}

RadialPSD make_psd(std::vector<double> radius, std::vector<double> power, std::vector<std::size_t> count) {
  if (count.empty()) count.assign(radius.size(), 1);
  RadialPSD p{std::move(radius), std::move(power), std::move(count)};
  p.validate();
  return p;
}

}  // namespace

PYBIND11_MODULE(_specmatch, m) {
  m.doc() = "Radial spectra, spectrum-matching losses and their checks";

  py::register_exception<SizeError>(m, "SizeError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  py::class_<RadialPSD>(m, "RadialPSD")
      .def(py::init(&make_psd), py::arg("radius"), py::arg("power"), py::arg("count") = std::vector<std::size_t>{})
      .def_readonly("radius", &RadialPSD::radius)
      .def_readonly("power", &RadialPSD::power)
      .def_readonly("count", &RadialPSD::count)
      .def("__len__", &RadialPSD::bins);

  py::class_<PowerLawFit>(m, "PowerLawFit")
      .def_readonly("alpha", &PowerLawFit::alpha)
      .def_readonly("log_k", &PowerLawFit::log_k)
      .def_readonly("r2", &PowerLawFit::r2)
      .def_readonly("bins_used", &PowerLawFit::bins_used);

  m.def("gen_power_law", [](double alpha, std::size_t height, std::size_t width, std::size_t channels,
                            std::uint64_t seed) {
    Rng rng(seed);
    return from_field(gen_power_law({alpha, height, width, channels}, rng));
  }, py::arg("alpha"), py::arg("height"), py::arg("width"), py::arg("channels") = 1, py::arg("seed"));

  m.def("gen_white", [](std::size_t height, std::size_t width, std::size_t channels, std::uint64_t seed) {
    Rng rng(seed);
    return from_field(gen_white(height, width, channels, rng));
  }, py::arg("height"), py::arg("width"), py::arg("channels") = 1, py::arg("seed"));

  m.def("radial_psd", [](const Array& field, std::size_t bins) {
    const Field2D f = to_field(field);
    return radial_psd(f, bins ? bins : default_bin_count(f.height(), f.width()));
  }, py::arg("field"), py::arg("bins") = 0, "Radial PSD; bins = 0 picks min(H, W) / 4 clamped to [8, 128].");

  m.def("fit_power_law", &fit_power_law, py::arg("psd"), py::arg("rmin") = 0.0, py::arg("rmax") = kMaxRadius);
  m.def("flatten_psd", &flatten_psd, py::arg("psd"), py::arg("delta"));

  m.def("normalize_spectrum", [](const RadialPSD& psd, double floor) { return normalize_spectrum(psd, floor).p; },
        py::arg("psd"), py::arg("floor") = kDefaultProbabilityFloor);

  m.def("esm_loss", [](std::vector<double> target, std::vector<double> latent) {
    return esm_loss(SpectrumDistribution{std::move(target)}, SpectrumDistribution{std::move(latent)});
  }, py::arg("target"), py::arg("latent"));

  m.def("esm_evaluate", [](const Array& z, std::vector<double> target, std::size_t bins, double floor) {
    const Field2D f = to_field(z);
    auto e = esm_evaluate(f, SpectrumDistribution{std::move(target)},
                          bins ? bins : default_bin_count(f.height(), f.width()), floor);
    return py::make_tuple(e.loss, from_field(e.grad));
  }, py::arg("z"), py::arg("target"), py::arg("bins") = 0, py::arg("floor") = kDefaultProbabilityFloor,
     "(loss, gradient) of the latent-spectrum KL.");

  m.def("esm_target", [](const RadialPSD& image, const RadialPSD& grid, double delta, double floor) {
    return esm_target(image, grid, delta, floor).p;
  }, py::arg("image_psd"), py::arg("latent_grid"), py::arg("delta"), py::arg("floor") = kDefaultProbabilityFloor);

  m.def("spectral_filter", [](const Array& field, int removed) {
    return from_field(spectral_filter(to_field(field), TriangularMask(removed)));
  }, py::arg("field"), py::arg("removed"));

  m.def("dsm_loss", [](const Array& x, const Array& x_hat, int removed) {
    return dsm_loss(to_field(x), to_field(x_hat), TriangularMask(removed));
  }, py::arg("x"), py::arg("x_hat_masked"), py::arg("removed"));

  m.def("quadrant_downsample", [](const Array& f) { return from_field(quadrant_downsample(to_field(f))); });

  m.def("alpha_bar", [](const std::string& kind, std::size_t steps) {
    return make_schedule(parse_schedule_kind(kind), steps).alpha_bar;
  }, py::arg("kind"), py::arg("steps"));

  m.def("learnable_power", &learnable_power, py::arg("signal_power"), py::arg("alpha_bar"));

  m.def("lmmse_oracle", [](double s, double ab, std::size_t samples, std::uint64_t seed) {
    Rng rng(seed);
    const auto e = lmmse_oracle(s, ab, samples, rng);
    return py::dict(py::arg("measured") = e.measured, py::arg("closed_form") = e.closed_form,
                    py::arg("std_error") = e.std_error, py::arg("samples") = e.samples);
  }, py::arg("signal_power"), py::arg("alpha_bar"), py::arg("samples") = 1000000, py::arg("seed"));

  m.def("rmsc", [](const Array& t) { return rmsc(to_tokens(t)); });
  m.def("directional_energy", [](const Array& t) { return directional_energy(to_tokens(t)); });
  m.def("mean_direction", [](const Array& t) { return mean_direction(to_tokens(t)); });

  m.def("dog_filter", [](const Array& t, double sigma1, double sigma2, double epsilon) {
    return from_tokens(dog_filter(to_tokens(t), DoGParams{sigma1, sigma2, epsilon}));
  }, py::arg("tokens"), py::arg("sigma1") = 1.0, py::arg("sigma2") = 2.0, py::arg("epsilon") = 1e-6);

  m.def("spatial_normalize", [](const Array& t, double alpha, double epsilon) {
    return from_tokens(spatial_normalize(to_tokens(t), alpha, epsilon));
  }, py::arg("tokens"), py::arg("alpha") = 1.0, py::arg("epsilon") = 1e-6);

  m.def("jensen_check", [](const std::vector<std::vector<double>>& spectra, double tolerance) {
    const auto r = jensen_check(spectra, tolerance);
    return py::dict(py::arg("vectors") = r.vectors, py::arg("violations") = r.violations,
                    py::arg("max_violation") = r.max_violation, py::arg("gaps") = r.gaps);
  }, py::arg("spectra"), py::arg("tolerance") = 1e-12);

  m.def("train", [](const std::string& objective, double beta, double delta, std::vector<int> mask_family,
                    double learning_rate, std::size_t steps, std::size_t batch_size, std::uint64_t seed,
                    std::size_t image_size, std::size_t factor, std::size_t depth, double data_alpha,
                    const std::string& target, std::size_t log_every) {
    TrainConfig c;
    c.objective = parse_objective(objective);
    c.beta = beta;
    c.delta = delta;
    c.family = MaskFamily(std::move(mask_family));
    c.learning_rate = learning_rate;
    c.steps = steps;
    c.batch_size = batch_size;
    c.seed = seed;
    c.image_size = image_size;
    c.factor = factor;
    c.depth = depth;
    c.data_alpha = data_alpha;
    c.target = parse_target_mode(target);
    c.log_every = log_every;
    TrainResult r;
    {
      py::gil_scoped_release release;
      r = train(c);
    }
    py::dict trace;
    std::vector<std::size_t> step;
    std::vector<double> recon, spec, alpha;
    for (const auto& row : r.trace) {
      step.push_back(row.step);
      recon.push_back(row.recon_l1);
      spec.push_back(row.spec_loss);
      alpha.push_back(row.latent_alpha_fit);
    }
    trace["step"] = step;
    trace["recon_l1"] = recon;
    trace["spec_loss"] = spec;
    trace["latent_alpha_fit"] = alpha;
    trace["diverged"] = r.diverged;
    return trace;
  }, py::arg("objective") = "esm", py::arg("beta") = 0.01, py::arg("delta") = 1.0,
     py::arg("mask_family") = std::vector<int>{0, 8, 10, 12}, py::arg("learning_rate") = 1e-2,
     py::arg("steps") = 2000, py::arg("batch_size") = 8, py::arg("seed") = 0, py::arg("image_size") = 64,
     py::arg("factor") = 8, py::arg("depth") = 4, py::arg("data_alpha") = 2.0, py::arg("target") = "per-image",
     py::arg("log_every") = 10);
}
