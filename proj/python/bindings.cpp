#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "salicache/error.hpp"
#include "salicache/harness.hpp"
#include "salicache/quant.hpp"

namespace py = pybind11;
using namespace salicache;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

std::vector<float> to_vector(const FloatArray& a) {
    if (a.ndim() != 1) throw ConfigError("expected a 1-D float array");
    return {a.data(), a.data() + a.size()};
}

Frame to_frame(const ByteArray& a, int index = 0) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw ConfigError("expected an (height, width, 3) uint8 array");
    return make_frame(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)),
                      std::vector<std::uint8_t>(a.data(), a.data() + a.size()), index);
}

ByteArray from_frame(const Frame& f) {
    ByteArray out({f.height, f.width, 3});
    std::copy(f.pixels.begin(), f.pixels.end(), out.mutable_data());
    return out;
}

py::array_t<float> from_plane(const Plane& p) {
    py::array_t<float> out({p.height, p.width});
    std::copy(p.data.begin(), p.data.end(), out.mutable_data());
    return out;
}

py::array_t<float> from_vector(const std::vector<float>& v) {
    py::array_t<float> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

SaliencyConfig saliency_config(const py::kwargs& kw) {
    SaliencyConfig c;
    for (const auto& [k, v] : kw) {
        const auto key = k.cast<std::string>();
        if (key == "sigma") c.gaussian_sigma = v.cast<double>();
        else if (key == "canny_low") c.canny_low = v.cast<double>();
        else if (key == "canny_high") c.canny_high = v.cast<double>();
        else if (key == "var_window") c.variance_window = v.cast<int>();
        else if (key == "edge_weight") {
            c.edge_weight = v.cast<double>();
            c.variance_weight = 1.0 - c.edge_weight;
        } else if (key == "tau_high") c.tau_high = v.cast<double>();
        else if (key == "tau_med") c.tau_med = v.cast<double>();
        else if (key == "tau_low") c.tau_low = v.cast<double>();
        else throw ConfigError("unknown saliency option: " + key);
    }
    c.validate();
    return c;
}

RunConfig run_config(const py::kwargs& kw) {
    RunConfig c;
    py::dict sal;
    for (const auto& [k, v] : kw) {
        const auto key = k.cast<std::string>();
        if (key == "frames") c.input.manifest = v.cast<std::string>();
        else if (key == "synthetic") c.input.scenario = parse_scenario(v.cast<std::string>());
        else if (key == "frames_count") c.input.frame_count = v.cast<int>();
        else if (key == "width") c.input.dims.width = v.cast<int>();
        else if (key == "height") c.input.dims.height = v.cast<int>();
        else if (key == "methods") c.methods = parse_methods(v.cast<std::string>());
        else if (key == "patch_size") c.patch_size = v.cast<int>();
        else if (key == "tau_t") c.temporal.tau_t = v.cast<double>();
        else if (key == "theta_r") c.temporal.theta_r = v.cast<double>();
        else if (key == "budget") c.budget.budget = v.cast<std::size_t>();
        else if (key == "layers") c.attention.n_layers = v.cast<int>();
        else if (key == "q_heads") c.attention.n_q_heads = v.cast<int>();
        else if (key == "kv_heads") c.attention.n_kv_heads = v.cast<int>();
        else if (key == "head_dim") c.attention.head_dim = v.cast<int>();
        else if (key == "seed") c.attention.seed = v.cast<std::uint64_t>();
        else if (key == "probes") c.probe_count = v.cast<int>();
        else if (key == "fidelity") c.fidelity = v.cast<bool>();
        else sal[k] = v;
    }
    c.saliency = saliency_config(sal.cast<py::kwargs>());
    if (!kw.contains("fidelity")) c.fidelity = c.has(Method::Baseline);
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Saliency- and redundancy-aware KV cache for video token streams";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

    // quantization
    py::class_<QuantBlockInt8>(m, "QuantBlockInt8")
        .def_readonly("abs_max", &QuantBlockInt8::abs_max)
        .def_property_readonly("scale", &QuantBlockInt8::scale)
        .def_property_readonly("codes", [](const QuantBlockInt8& b) {
            py::array_t<std::int8_t> out(static_cast<py::ssize_t>(b.values.size()));
            std::copy(b.values.begin(), b.values.end(), out.mutable_data());
            return out;
        })
        .def("dequantize", [](const QuantBlockInt8& b) { return from_vector(dequantize_int8(b)); });
    py::class_<QuantBlockInt4>(m, "QuantBlockInt4")
        .def_readonly("offset", &QuantBlockInt4::offset)
        .def_readonly("top", &QuantBlockInt4::top)
        .def_property_readonly("scale", &QuantBlockInt4::scale)
        .def_property_readonly("codes", [](const QuantBlockInt4& b) {
            py::array_t<std::uint8_t> out(static_cast<py::ssize_t>(b.element_count));
            for (std::size_t i = 0; i < b.element_count; ++i) out.mutable_data()[i] = b.code(i);
            return out;
        })
        .def_property_readonly("packed", [](const QuantBlockInt4& b) {
            return py::bytes(reinterpret_cast<const char*>(b.packed.data()), b.packed.size());
        })
        .def("dequantize", [](const QuantBlockInt4& b) { return from_vector(dequantize_int4(b)); });
    m.def("quantize_int8", [](const FloatArray& x) { return quantize_int8(to_vector(x)); }, py::arg("block"));
    m.def("quantize_int4", [](const FloatArray& x) { return quantize_int4(to_vector(x)); }, py::arg("block"));
    m.def("to_half_bits", [](float v) { return float_to_half_bits(v); }, py::arg("value"));
    m.def("from_half_bits", [](std::uint16_t b) { return half_bits_to_float(b); }, py::arg("bits"));

    // frames and signals
    m.def(
        "synth_sequence",
        [](const std::string& scenario, int count, int width, int height, int patch_size, std::uint64_t seed) {
            py::list out;
            for (const auto& f : synth_sequence(parse_scenario(scenario), count, {width, height}, patch_size, seed))
                out.append(from_frame(f));
            return out;
        },
        py::arg("scenario"), py::arg("frames_count"), py::arg("width") = 64, py::arg("height") = 64,
        py::arg("patch_size") = 16, py::arg("seed") = 0);
    m.def(
        "patch_deltas",
        [](const ByteArray& prev, const ByteArray& curr, int patch_size) {
            const Frame a = to_frame(prev), b = to_frame(curr);
            return patch_deltas(a, b, make_grid(b, patch_size));
        },
        py::arg("prev"), py::arg("curr"), py::arg("patch_size") = 16);
    m.def(
        "frame_redundancy",
        [](std::vector<double> deltas, double tau_t, double theta_r) {
            const auto r = frame_redundancy(std::move(deltas), TemporalConfig{tau_t, theta_r});
            return py::make_tuple(r.r_frame, r.verdict == Verdict::Redundant);
        },
        py::arg("deltas"), py::arg("tau_t") = 0.02, py::arg("theta_r") = 0.90);
    m.def("srgb_to_lab", &srgb_to_lab, py::arg("r"), py::arg("g"), py::arg("b"));
    m.def(
        "canny_edges", [](const ByteArray& f, const py::kwargs& kw) { return from_plane(canny_edges(to_frame(f), saliency_config(kw))); },
        py::arg("frame"));
    m.def(
        "compute_saliency",
        [](const ByteArray& f, const py::kwargs& kw) { return from_plane(compute_saliency(to_frame(f), saliency_config(kw))); },
        py::arg("frame"));
    m.def(
        "patch_tiers",
        [](const ByteArray& f, int patch_size, const py::kwargs& kw) {
            const Frame frame = to_frame(f);
            const auto cfg = saliency_config(kw);
            std::vector<std::string> tiers;
            for (double s : patch_saliency(compute_saliency(frame, cfg), make_grid(frame, patch_size)))
                tiers.emplace_back(tier_name(assign_tier(s, cfg)));
            return tiers;
        },
        py::arg("frame"), py::arg("patch_size") = 16);

    // attention and eviction
    m.def(
        "attend",
        [](const std::vector<std::vector<float>>& queries, const std::vector<std::vector<float>>& keys,
           const std::vector<std::vector<float>>& values, int q_heads, int kv_heads, int head_dim) {
            const AttentionConfig cfg{1, q_heads, kv_heads, head_dim, 0};
            cfg.validate();
            KvView view;
            for (const auto& k : keys) view.keys.emplace_back(k);
            for (const auto& v : values) view.values.emplace_back(v);
            auto r = attend(queries, view, cfg);
            return py::make_tuple(r.outputs, r.weights);
        },
        py::arg("queries"), py::arg("keys"), py::arg("values"), py::arg("q_heads") = 1, py::arg("kv_heads") = 1,
        py::arg("head_dim"));
    m.def(
        "sliding_window_step",
        [](std::vector<TokenId> live, const std::vector<TokenId>& arriving, std::size_t budget) {
            auto s = sliding_window_step(std::move(live), arriving, budget);
            return py::make_tuple(s.live, s.evicted);
        },
        py::arg("live"), py::arg("arriving"), py::arg("budget"));
    m.def(
        "h2o_step",
        [](const std::map<TokenId, double>& scores, std::vector<TokenId> live, std::size_t budget) {
            // Rebuild a ledger holding exactly these scores.
            ImportanceLedger ledger;
            for (const auto& [id, s] : scores) {
                if (s < 0) throw ConfigError("importance scores must be non-negative");
                ledger.track(id);
            }
            constexpr TokenId scratch = ~TokenId{0};
            for (const auto& [id, s] : scores) {
                const TokenId pair[] = {id, scratch};
                for (double left = s; left > 0; left -= 1.0) {
                    const double take = std::min(left, 1.0);
                    ledger.accumulate(pair, std::vector<std::vector<double>>{{take, 1.0 - take}});
                }
            }
            ledger.forget(scratch);
            auto s = h2o_step(ledger, std::move(live), budget);
            return py::make_tuple(s.live, s.evicted);
        },
        py::arg("scores"), py::arg("live"), py::arg("budget"));

    // harness
    m.def(
        "run_report",
        [](const std::string& format, const py::kwargs& kw) {
            RunConfig cfg = run_config(kw);
            cfg.validate();
            const auto frames = load_frames(cfg);
            const auto report = run_comparison(frames, cfg);
            return parse_format(format) == ReportFormat::Json ? report_to_json(report).dump() : report_to_csv(report);
        },
        py::arg("format") = "json");
}
