#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "plumesr/data/normalization.hpp"
#include "plumesr/data/transforms.hpp"
#include "plumesr/error.hpp"
#include "plumesr/eval/metrics.hpp"
#include "plumesr/experiment/corpus.hpp"
#include "plumesr/experiment/pipeline.hpp"
#include "plumesr/plume/conditions.hpp"

namespace py = pybind11;
using namespace plumesr;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Shape3 shape3(const FloatArray& a, const char* what) {
    if (a.ndim() != 3) throw InvalidArgument(std::string(what) + " must be a (z, y, x) array");
    return {a.shape(0), a.shape(1), a.shape(2)};
}

std::span<const float> span_of(const FloatArray& a) { return {a.data(), static_cast<std::size_t>(a.size())}; }

FloatArray to_numpy(const std::vector<float>& v, std::vector<py::ssize_t> shape) {
    FloatArray out(shape);
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

FloatArray to_numpy(const ConcentrationSequence& s) {
    return to_numpy(s.values(), {s.steps(), s.grid().z, s.grid().y, s.grid().x});
}

ConcentrationSequence from_numpy(const FloatArray& a, double dt, Vec3 cell = {1.0, 1.0, 1.0}) {
    if (a.ndim() != 4) throw InvalidArgument("sequence must be a (time, z, y, x) array");
    ConcentrationSequence s(a.shape(0), {a.shape(1), a.shape(2), a.shape(3)}, dt, cell);
    std::copy(a.data(), a.data() + a.size(), s.values().begin());
    return s;
}

/// Accepts None (defaults), a path to a JSON file, or a dict.
experiment::ExperimentConfig config_from(const py::object& cfg) {
    if (cfg.is_none()) return experiment::default_config();
    if (py::isinstance<py::str>(cfg)) return experiment::load_config(cfg.cast<std::string>());
    const auto text = py::module_::import("json").attr("dumps")(cfg).cast<std::string>();
    auto c = experiment::ExperimentConfig::from_json(nlohmann::json::parse(text));
    experiment::apply_environment(c);
    return c;
}

data::NormalizationSpec norm_spec(double min_val, double max_val, double floor) {
    data::NormalizationSpec s{floor, min_val, max_val};
    s.validate();
    return s;
}

py::dict json_to_dict(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump()).cast<py::dict>();
}

/// Trained TM + SRM (and HRTM when present) loaded from an experiment's checkpoints.
class Surrogate {
public:
    Surrogate(const py::object& cfg, bool hrtm) {
        config_ = config_from(cfg);
        models_ = experiment::load_models(config_, true, hrtm);
    }

    py::dict normalization() const {
        return json_to_dict(data::to_json(models_.normalization));
    }

    /// lr: normalized (T, 8, 32, 32) ground truth; frames 0..4 seed the rollout.
    py::dict rollout(const FloatArray& lr, std::int64_t steps, const std::vector<std::int64_t>& schedule) {
        const auto lr_seq = from_numpy(lr, config_.data.sim.dt_output);
        const auto& hs = config_.data.hr_shape;
        ConcentrationSequence hr_like(lr_seq.steps(), hs, lr_seq.dt_output(), {1.0, 1.0, 1.0});
        nn::RolloutPlan plan{steps < 0 ? lr_seq.steps() - nn::kWindow : steps, {schedule.begin(), schedule.end()}};
        experiment::DualStageRollout out;
        {
            py::gil_scoped_release release;
            out = experiment::rollout_dual_stage(models_, lr_seq, hr_like, plan);
        }
        py::dict d;
        d["lr"] = to_numpy(out.lr.frames);
        d["hr"] = to_numpy(out.hr);
        d["frame_is_gt"] = out.lr.frame_is_gt;
        return d;
    }

    FloatArray super_resolve(const FloatArray& frame) {
        const auto s = shape3(frame, "frame");
        auto t = torch::from_blob(const_cast<float*>(frame.data()), {s.z, s.y, s.x}).clone();
        auto y = nn::super_resolve(models_.srm, t).contiguous();
        return to_numpy(std::vector<float>(y.data_ptr<float>(), y.data_ptr<float>() + y.numel()),
                        {y.size(-3), y.size(-2), y.size(-1)});
    }

private:
    experiment::ExperimentConfig config_;
    experiment::ModelSet models_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Dual-stage plume surrogate: simulation, transforms, metrics, models and experiment commands";

    py::register_exception<Error>(m, "PlumeError", PyExc_RuntimeError);

    m.def("default_config", [] { return json_to_dict(experiment::ExperimentConfig{}.to_json()); },
          "Default experiment configuration as a dict.");

    m.def("sample_conditions", [](int n, std::uint64_t seed) {
        std::vector<std::pair<double, double>> out;
        for (const auto& c : plume::sample_conditions(n, seed)) out.emplace_back(c.speed_ms, c.direction_deg);
        return out;
    }, py::arg("n"), py::arg("seed"), "Latin hypercube (speed m/s, direction deg) pairs.");

    m.def("simulate", [](double speed, double direction, const py::object& cfg, std::uint64_t seed) {
        const auto c = config_from(cfg);
        data::DualResolutionSample s;
        {
            py::gil_scoped_release release;
            const auto terrain = experiment::corpus_terrain(c.data);
            s = experiment::generate_sample(c.data, terrain, {speed, direction}, "py", seed);
        }
        py::dict d;
        d["lr"] = to_numpy(s.lr);
        d["hr"] = to_numpy(s.hr);
        d["dt_output"] = s.lr.dt_output();
        return d;
    }, py::arg("speed_ms"), py::arg("direction_deg"), py::arg("config") = py::none(), py::arg("seed") = 0,
       "Simulates one release and returns the raw LR and HR concentration sequences.");

    m.def("log_normalize", [](const FloatArray& a, double min_val, double max_val, double floor) {
        std::vector<float> v(a.data(), a.data() + a.size());
        data::log_normalize_inplace(v, norm_spec(min_val, max_val, floor));
        return to_numpy(v, std::vector<py::ssize_t>(a.shape(), a.shape() + a.ndim()));
    }, py::arg("values"), py::arg("min_val"), py::arg("max_val"), py::arg("log_floor") = 1e-10);

    m.def("log_denormalize", [](const FloatArray& a, double min_val, double max_val, double floor) {
        std::vector<float> v(a.data(), a.data() + a.size());
        data::log_denormalize_inplace(v, norm_spec(min_val, max_val, floor));
        return to_numpy(v, std::vector<py::ssize_t>(a.shape(), a.shape() + a.ndim()));
    }, py::arg("values"), py::arg("min_val"), py::arg("max_val"), py::arg("log_floor") = 1e-10);

    m.def("average_pool", [](const FloatArray& a, int factor) {
        const auto s = shape3(a, "volume");
        return to_numpy(data::average_pool(span_of(a), s, factor), {s.z / factor, s.y / factor, s.x / factor});
    }, py::arg("volume"), py::arg("factor") = 4);

    m.def("trilinear_upsample", [](const FloatArray& a, int factor) {
        const auto s = shape3(a, "volume");
        const Shape3 to{s.z * factor, s.y * factor, s.x * factor};
        return to_numpy(data::trilinear_volume(span_of(a), s, to), {to.z, to.y, to.x});
    }, py::arg("volume"), py::arg("factor") = 4);

    m.def("mse", [](const FloatArray& p, const FloatArray& t) {
        if (p.size() != t.size()) throw InvalidArgument("arrays differ in size");
        return eval::mse(span_of(p), span_of(t));
    });
    m.def("iou", [](const FloatArray& p, const FloatArray& t, double threshold) {
        if (p.size() != t.size()) throw InvalidArgument("arrays differ in size");
        return eval::iou(span_of(p), span_of(t), threshold);
    }, py::arg("pred"), py::arg("truth"), py::arg("threshold"));
    m.def("ssim3d", [](const FloatArray& p, const FloatArray& t, int window, double data_range) {
        const auto s = shape3(p, "pred");
        if (!(shape3(t, "truth") == s)) throw InvalidArgument("arrays differ in shape");
        eval::MetricConfig c;
        c.ssim_window = window;
        c.ssim_data_range = data_range;
        c.validate();
        return eval::ssim3d({span_of(p), s}, {span_of(t), s}, c);
    }, py::arg("pred"), py::arg("truth"), py::arg("window") = 7, py::arg("data_range") = 1.0);
    m.def("conservation_mass", [](const FloatArray& p, const FloatArray& t) {
        if (p.size() != t.size()) throw InvalidArgument("arrays differ in size");
        return eval::conservation_mass(span_of(p), span_of(t), eval::MetricConfig{});
    }, py::arg("pred"), py::arg("truth"), "Relative mass difference of linear concentrations.");

    py::class_<Surrogate>(m, "Surrogate")
        .def(py::init<const py::object&, bool>(), py::arg("config") = py::none(), py::arg("hrtm") = false)
        .def_property_readonly("normalization", &Surrogate::normalization)
        .def("rollout", &Surrogate::rollout, py::arg("lr"), py::arg("steps") = -1,
             py::arg("schedule") = std::vector<std::int64_t>{})
        .def("super_resolve", &Surrogate::super_resolve, py::arg("frame"));

    m.def("generate", [](const py::object& cfg, bool force) {
        const auto c = config_from(cfg);
        py::gil_scoped_release release;
        const auto man = experiment::cmd_generate(c, {force, {}});
        return man.runs.size();
    }, py::arg("config") = py::none(), py::arg("force") = false, "Writes the corpus; returns the run count.");

    m.def("train", [](const py::object& cfg, const std::string& model, int epochs, bool resume) {
        const auto c = config_from(cfg);
        const auto kind = experiment::model_kind_from_string(model);
        experiment::TrainOutcome out;
        {
            py::gil_scoped_release release;
            out = experiment::cmd_train(c, kind, {resume, epochs, {}});
        }
        py::dict d;
        d["checkpoint"] = out.checkpoint.string();
        d["parameters"] = out.parameters;
        d["best_val_loss"] = out.best_val_loss;
        d["best_epoch"] = out.best_epoch;
        d["epochs"] = out.epochs;
        if (!out.baseline.is_null()) d["baseline"] = json_to_dict(out.baseline);
        return d;
    }, py::arg("config"), py::arg("model"), py::arg("epochs") = -1, py::arg("resume") = false);

    m.def("rollout_eval", [](const py::object& cfg, bool bypass) {
        const auto c = config_from(cfg);
        {
            py::gil_scoped_release release;
            experiment::cmd_rollout_evaluate(c, {bypass, {}});
        }
        return (c.eval_dir() / "metrics_summary.json").string();
    }, py::arg("config"), py::arg("bypass") = false, "Scores the test runs; returns the summary path.");

    m.def("sensors", [](const py::object& cfg) {
        const auto c = config_from(cfg);
        py::gil_scoped_release release;
        const auto out = experiment::cmd_sensors(c);
        return std::make_pair(out.improved_runs, static_cast<int>(out.runs.size()));
    }, py::arg("config"), "Runs the update experiment; returns (improved runs, test runs).");

    m.def("benchmark", [](const py::object& cfg) {
        const auto c = config_from(cfg);
        experiment::BenchmarkOutcome out;
        {
            py::gil_scoped_release release;
            out = experiment::cmd_benchmark(c);
        }
        py::dict d;
        d["dual_stage"] = json_to_dict(out.dual_stage.to_json());
        d["hrtm"] = json_to_dict(out.hrtm.to_json());
        d["ratio"] = out.ratio;
        return d;
    }, py::arg("config"));

    m.def("report", [](const py::object& cfg) { return experiment::cmd_report(config_from(cfg)).string(); },
          py::arg("config"));
}
