/*
 * Copyright (c) 2026 The inucleus Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "inucleus/analysis.hpp"
#include "inucleus/audio.hpp"
#include "inucleus/checkpoint.hpp"
#include "inucleus/cli.hpp"
#include "inucleus/errors.hpp"
#include "inucleus/model.hpp"
#include "inucleus/runtime.hpp"
#include "inucleus/train.hpp"

namespace py = pybind11;
using namespace inucleus;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

std::vector<float> to_vector(const FloatArray& a) {
  if (a.ndim() != 1) throw ShapeError("expected a 1-D waveform, got " + std::to_string(a.ndim()) + " dims");
  return {a.data(), a.data() + a.size()};
}

Tensor<float> to_waveform(const FloatArray& a) {
  std::vector<float> v = to_vector(a);
  const std::size_t n = v.size();
  return Tensor<float>({1, n}, std::move(v));
}

py::array_t<float> to_numpy(const Tensor<float>& t) {
  py::array_t<float> out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

py::array_t<float> to_numpy(const std::vector<float>& v) {
  py::array_t<float> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<Sample> to_samples(const std::vector<FloatArray>& waves, const std::vector<std::size_t>& labels) {
  if (waves.size() != labels.size()) {
    throw ShapeError(std::to_string(waves.size()) + " waveforms but " + std::to_string(labels.size()) + " labels");
  }
  std::vector<Sample> out;
  out.reserve(waves.size());
  for (std::size_t i = 0; i < waves.size(); ++i) {
    out.push_back(Sample{to_waveform(waves[i]), labels[i], std::to_string(i), std::nullopt});
  }
  return out;
}

py::dict report_dict(const EpochReport& r) {
  py::dict d;
  d["epoch"] = r.epoch;
  d["train_loss"] = r.train_loss;
  d["train_accuracy"] = r.train_accuracy;
  d["test_accuracy"] = r.test_accuracy ? py::cast(*r.test_accuracy) : py::none();
  d["seconds"] = r.wall_seconds;
  return d;
}

// Float model plus the optimizer state of its last train() call.
struct PyModel {
  Model<float> model;
  std::optional<AdamState<float>> optimizer;
  CheckpointMeta meta;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Raw-waveform inception-nucleus sound classifier";
  configure_allocator();

  auto base = py::register_exception<Error>(m, "InucleusError", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<CheckpointError>(m, "CheckpointError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.attr("TARGET_RATE") = kTargetRate;
  m.attr("TARGET_LENGTH") = kTargetLength;

  m.def("arch_names", [] { return arch_names(); });
  m.def("test_arch_names", [] { return test_arch_names(); });
  m.def("count_params", &count_params_for, py::arg("arch"), py::arg("include_non_trainable") = false,
        py::arg("num_classes") = 10);

  m.def("read_wav", [](const std::filesystem::path& p) {
    Audio a = read_wav(p);
    return py::make_tuple(to_numpy(a.samples), a.sample_rate);
  }, py::arg("path"), "Returns (mono float32 samples, sample rate).");
  m.def("write_wav", [](const std::filesystem::path& p, const FloatArray& x, std::uint32_t rate, unsigned bits) {
    write_wav(p, to_vector(x), rate, bits);
  }, py::arg("path"), py::arg("samples"), py::arg("sample_rate"), py::arg("bits_per_sample") = 16);
  m.def("resample", [](const FloatArray& x, std::uint32_t from, std::uint32_t to) {
    return to_numpy(resample(to_vector(x), from, to));
  }, py::arg("samples"), py::arg("from_rate"), py::arg("to_rate") = kTargetRate);
  m.def("prepare", [](const FloatArray& x, std::size_t len) {
    const Tensor<float> t = prepare(to_vector(x), len);
    return to_numpy(std::vector<float>(t.values().begin(), t.values().end()));
  }, py::arg("samples"), py::arg("target_len") = kTargetLength, "Pad or truncate, then standardize.");
  m.def("load_clip", [](const std::filesystem::path& p, std::size_t len) {
    const Audio a = read_wav(p);
    const Tensor<float> t = prepare(resample(a.samples, a.sample_rate, kTargetRate), len);
    return to_numpy(std::vector<float>(t.values().begin(), t.values().end()));
  }, py::arg("path"), py::arg("target_len") = kTargetLength, "read_wav, resample to 8 kHz and prepare.");
  m.def("synth_dataset", [](std::size_t classes, std::size_t per_class, std::uint64_t seed, std::size_t length) {
    const std::vector<Sample> s = synth_dataset(classes, per_class, seed, length);
    py::list waves;
    std::vector<std::size_t> labels;
    for (const Sample& x : s) {
      waves.append(to_numpy(std::vector<float>(x.waveform.values().begin(), x.waveform.values().end())));
      labels.push_back(x.label);
    }
    return py::make_tuple(waves, labels);
  }, py::arg("num_classes"), py::arg("per_class"), py::arg("seed"), py::arg("length") = kTargetLength,
     "Returns (list of prepared waveforms, labels).");
  m.def("synth_class_names", [] { return synth_class_names(); });

  m.def("run_cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "inucleus");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs a command line in-process; returns (exit code, stdout, stderr).");

  py::class_<PyModel>(m, "Model")
      .def(py::init([](const std::string& arch, std::size_t num_classes, std::uint64_t seed) {
             return PyModel{Model<float>(make_config(arch, num_classes), seed), std::nullopt, {}};
           }),
           py::arg("arch") = "inception", py::arg("num_classes") = 10, py::arg("seed") = 0)
      .def_static("load", [](const std::filesystem::path& p) {
        Checkpoint c = load_checkpoint(p);
        return PyModel{c.model(), std::move(c.optimizer), std::move(c.meta)};
      }, py::arg("path"))
      .def("save", [](const PyModel& self, const std::filesystem::path& p) {
        save_checkpoint(p, self.model, self.optimizer ? &*self.optimizer : nullptr, self.meta);
      }, py::arg("path"))
      .def_property_readonly("arch", [](const PyModel& self) { return self.model.config().name; })
      .def_property_readonly("num_classes", [](const PyModel& self) { return self.model.config().num_classes; })
      .def_property_readonly("min_input_length", [](const PyModel& self) { return self.model.min_input_length(); })
      .def_property_readonly("class_names", [](const PyModel& self) { return self.meta.class_names; })
      .def("count_params", [](const PyModel& self, bool all) { return self.model.count_params(all); },
           py::arg("include_non_trainable") = false)
      .def("predict", [](const PyModel& self, const FloatArray& x) {
        const Tensor<float> w = to_waveform(x);
        py::gil_scoped_release release;
        Tensor<float> p = self.model.predict(w);
        py::gil_scoped_acquire acquire;
        return to_numpy(p);
      }, py::arg("waveform"), "Class probabilities for one prepared waveform of any length >= min_input_length.")
      .def("features", [](const PyModel& self, const FloatArray& x) {
        return to_numpy(self.model.features({to_waveform(x)}).front());
      }, py::arg("waveform"), "(C, H, W) activations feeding global average pooling.")
      .def("filters", [](const PyModel& self, const std::string& layer) {
        return to_numpy(filter_weights(self.model, layer).value);
      }, py::arg("layer") = "")
      .def("filter_layers", [](const PyModel& self) { return filter_layer_names(self.model); })
      .def("fit", [](PyModel& self, const std::vector<FloatArray>& waves, const std::vector<std::size_t>& labels,
                     std::size_t epochs, std::size_t batch_size, double lr, double l2, std::uint64_t seed,
                     std::size_t patience) {
        const std::vector<Sample> data = to_samples(waves, labels);
        TrainConfig c;
        c.max_epochs = epochs;
        c.batch_size = batch_size;
        c.lr = lr;
        c.lambda = l2;
        c.seed = seed;
        c.patience = patience;
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(self.model, data, c);
        }
        self.optimizer = std::move(r.optimizer);
        self.meta.epoch = r.reports.size();
        self.meta.seed = seed;
        self.meta.loss_digest = loss_digest(r.reports);
        py::list out;
        for (const EpochReport& e : r.reports) out.append(report_dict(e));
        return out;
      }, py::arg("waveforms"), py::arg("labels"), py::arg("epochs") = 10, py::arg("batch_size") = 32,
         py::arg("lr") = 1e-3, py::arg("l2") = 1e-4, py::arg("seed") = 0, py::arg("patience") = 20,
         "Adam training; returns one dict per epoch.")
      .def("evaluate", [](const PyModel& self, const std::vector<FloatArray>& waves,
                          const std::vector<std::size_t>& labels) {
        const EvalResult r = evaluate(self.model, to_samples(waves, labels));
        py::dict d;
        d["accuracy"] = r.accuracy;
        d["mean_loss"] = r.mean_loss;
        d["confusion"] = r.confusion;
        return d;
      }, py::arg("waveforms"), py::arg("labels"));
}
