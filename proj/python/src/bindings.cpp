#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "flarepp/flare_class.hpp"
#include "flarepp/loss.hpp"
#include "flarepp/metrics.hpp"
#include "flarepp/pipeline.hpp"
#include "flarepp/trainer.hpp"
#include "flarepp/version.hpp"

namespace py = pybind11;
using namespace flarepp;

namespace {

// Python side passes subclasses only; targets follow from the threshold.
LossBatch make_batch(std::vector<double> logits, const std::vector<FlareClass>& subclasses,
                     const ThresholdSpec& t) {
  std::vector<BinaryLabel> targets;
  targets.reserve(subclasses.size());
  for (FlareClass c : subclasses) targets.push_back(binarize(c, t));
  return LossBatch(std::move(logits), std::move(targets), subclasses, t);
}

LossConfig make_config(double alpha, const ThresholdSpec& t) {
  LossConfig cfg;
  cfg.alpha = alpha;
  cfg.weights = proximity_weights(t);
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_flarepp, m) {
  m.doc() = "Ordinal proximity-penalized BCE loss and skill scores";
  m.attr("__version__") = kVersion;

  py::register_exception<UndefinedScoreError>(m, "UndefinedScoreError", PyExc_ValueError);

  py::enum_<FlareClass>(m, "FlareClass")
      .value("FQ", FlareClass::FQ)
      .value("A", FlareClass::A)
      .value("B", FlareClass::B)
      .value("C", FlareClass::C)
      .value("M", FlareClass::M)
      .value("X", FlareClass::X);

  py::enum_<BinaryLabel>(m, "BinaryLabel").value("NF", BinaryLabel::NF).value("FL", BinaryLabel::FL);

  py::class_<ThresholdSpec>(m, "Threshold")
      .def(py::init<>())
      .def(py::init(&ThresholdSpec::parse), py::arg("text"))
      .def_property_readonly("min_positive", &ThresholdSpec::min_positive_class)
      .def("__str__", &ThresholdSpec::to_string)
      .def("__repr__", [](const ThresholdSpec& t) { return "Threshold('" + t.to_string() + "')"; });

  m.def("parse_class", [](const std::string& s) { return parse_class(s); });
  m.def("class_from_flux", &class_from_flux, py::arg("flux"));
  m.def("binarize", &binarize, py::arg("subclass"), py::arg("threshold") = ThresholdSpec{});
  m.def(
      "log_beta_table",
      [](const ThresholdSpec& t) { return proximity_weights(t).log_beta_table(); },
      py::arg("threshold") = ThresholdSpec{});

  m.def("sigmoid", &sigmoid);
  m.def("softplus", &softplus);
  m.def(
      "bce",
      [](std::vector<double> z, const std::vector<FlareClass>& k, const ThresholdSpec& t) {
        return bce(make_batch(std::move(z), k, t));
      },
      py::arg("logits"), py::arg("subclasses"), py::arg("threshold") = ThresholdSpec{});
  m.def(
      "bce_pp",
      [](std::vector<double> z, const std::vector<FlareClass>& k, double alpha, const ThresholdSpec& t) {
        return bce_pp(make_batch(std::move(z), k, t), make_config(alpha, t));
      },
      py::arg("logits"), py::arg("subclasses"), py::arg("alpha") = 0.75, py::arg("threshold") = ThresholdSpec{});
  m.def(
      "bce_grad",
      [](std::vector<double> z, const std::vector<FlareClass>& k, const ThresholdSpec& t) {
        return bce_grad(make_batch(std::move(z), k, t));
      },
      py::arg("logits"), py::arg("subclasses"), py::arg("threshold") = ThresholdSpec{});
  m.def(
      "bce_pp_grad",
      [](std::vector<double> z, const std::vector<FlareClass>& k, double alpha, const ThresholdSpec& t) {
        return bce_pp_grad(make_batch(std::move(z), k, t), make_config(alpha, t));
      },
      py::arg("logits"), py::arg("subclasses"), py::arg("alpha") = 0.75, py::arg("threshold") = ThresholdSpec{});

  py::class_<ConfusionMatrix>(m, "ConfusionMatrix")
      .def(py::init([](std::uint64_t tp, std::uint64_t fp, std::uint64_t tn, std::uint64_t fn) {
             return ConfusionMatrix{tp, fp, tn, fn};
           }),
           py::arg("tp"), py::arg("fp"), py::arg("tn"), py::arg("fn"))
      .def_readwrite("tp", &ConfusionMatrix::tp)
      .def_readwrite("fp", &ConfusionMatrix::fp)
      .def_readwrite("tn", &ConfusionMatrix::tn)
      .def_readwrite("fn", &ConfusionMatrix::fn)
      .def("__add__", [](const ConfusionMatrix& a, const ConfusionMatrix& b) { return a + b; })
      .def("__eq__", [](const ConfusionMatrix& a, const ConfusionMatrix& b) { return a == b; });

  py::class_<SkillScores>(m, "SkillScores")
      .def_readonly("tss", &SkillScores::tss)
      .def_readonly("hss", &SkillScores::hss)
      .def_readonly("css", &SkillScores::css);

  m.def("tss", &tss);
  m.def("hss", &hss);
  m.def("css", &css);
  m.def("skill_scores", &skill_scores);
  m.def(
      "confusion_from_predictions",
      [](const std::vector<BinaryLabel>& y, const std::vector<double>& p, double cutoff) {
        return confusion_from_predictions(y, p, cutoff);
      },
      py::arg("targets"), py::arg("scores"), py::arg("cutoff") = 0.5);

  m.def(
      "balanced_counts",
      [](const std::array<std::size_t, kNumClasses>& counts, const ThresholdSpec& t) {
        return balanced_counts(counts, default_undersample_rates(), t);
      },
      py::arg("counts"), py::arg("threshold") = ThresholdSpec{});
  m.def("partition_for_month", &partition_for_month);
  m.def(
      "lr_schedule",
      [](double initial_lr, const std::vector<double>& val_losses) {
        auto s = SchedulerState::start(initial_lr);
        std::vector<double> out;
        for (double l : val_losses) {
          s = scheduler_step(s, l);
          out.push_back(s.current_lr);
        }
        return out;
      },
      py::arg("initial_lr"), py::arg("val_losses"));
}
