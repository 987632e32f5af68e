#include "layerpeel/attention.hpp"
#include "layerpeel/dataset.hpp"
#include "layerpeel/error.hpp"
#include "layerpeel/gateway.hpp"
#include "layerpeel/layer_graph.hpp"
#include "layerpeel/metrics.hpp"
#include "layerpeel/occlusion.hpp"
#include "layerpeel/peel.hpp"
#include "layerpeel/raster.hpp"
#include "layerpeel/svg.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

namespace py = pybind11;
using namespace layerpeel;

namespace {

py::array_t<std::uint8_t> to_array(const RasterImage& img) {
    py::array_t<std::uint8_t> out({img.height(), img.width(), 4});
    std::memcpy(out.mutable_data(), img.data().data(), img.data().size());
    return out;
}

RasterImage from_array(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 3 || a.shape(2) != 4)
        throw std::invalid_argument("expected an (H, W, 4) uint8 array");
    RasterImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::memcpy(img.data().data(), a.data(), img.data().size());
    return img;
}

py::array_t<bool> to_array(const BitMask& m) {
    py::array_t<bool> out({m.height(), m.width()});
    auto v = out.mutable_unchecked<2>();
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            v(y, x) = m.get(x, y);
    return out;
}

PointCloud cloud(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2 || a.shape(1) != 2)
        throw std::invalid_argument("expected an (N, 2) array");
    PointCloud c;
    auto v = a.unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i)
        c.points.push_back({v(i, 0), v(i, 1)});
    return c;
}

} // namespace

PYBIND11_MODULE(_layerpeel, m) {
    m.doc() = "Native core of the layerpeel package.";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<MalformedXml>(m, "MalformedXml", base.ptr());
    py::register_exception<UnsupportedFeature>(m, "UnsupportedFeature", base.ptr());
    py::register_exception<EmptyDocument>(m, "EmptyDocument", base.ptr());
    py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base.ptr());
    py::register_exception<InvalidJson>(m, "InvalidJson", base.ptr());
    py::register_exception<SchemaViolation>(m, "SchemaViolation", base.ptr());
    py::register_exception<DanglingEdge>(m, "DanglingEdge", base.ptr());
    py::register_exception<LayoutMismatch>(m, "LayoutMismatch", base.ptr());
    py::register_exception<EmptyBox>(m, "EmptyBox", base.ptr());
    py::register_exception<EmptyCloud>(m, "EmptyCloud", base.ptr());
    py::register_exception<MissingTag>(m, "MissingTag", base.ptr());
    py::register_exception<BoxOutOfRange>(m, "BoxOutOfRange", base.ptr());

    py::class_<SvgDoc>(m, "SvgDoc")
        .def_property_readonly("path_ids",
                               [](const SvgDoc& d) {
                                   std::vector<std::string> ids;
                                   for (const auto& p : d.paths)
                                       ids.push_back(p.id);
                                   return ids;
                               })
        .def_property_readonly("viewbox",
                               [](const SvgDoc& d) {
                                   return py::make_tuple(d.viewbox.min_x, d.viewbox.min_y, d.viewbox.width,
                                                         d.viewbox.height);
                               })
        .def("__len__", [](const SvgDoc& d) { return d.paths.size(); })
        .def("without", &SvgDoc::without, py::arg("ids"))
        .def("only", &SvgDoc::only, py::arg("ids"))
        .def("to_svg", &emit_svg_text);

    m.def("parse_svg", [](const std::string& text) { return parse_svg(text); }, py::arg("text"));
    m.def("normalize_viewbox", &normalize_viewbox, py::arg("doc"), py::arg("target") = 512);
    m.def("filter_by_path_count", &filter_by_path_count, py::arg("doc"), py::arg("max_paths") = 30);
    m.def(
        "rasterize", [](const SvgDoc& d, int size) { return to_array(rasterize(d, size)); }, py::arg("doc"),
        py::arg("size") = 512, "Hard-edged RGBA render on white, shape (size, size, 4).");
    m.def(
        "topmost_set", [](const SvgDoc& d, int res) { return topmost_set(d, res).path_ids; }, py::arg("doc"),
        py::arg("resolution") = 512);
    m.def(
        "diff_mask",
        [](const py::array_t<std::uint8_t>& a, const py::array_t<std::uint8_t>& b, int rho) {
            return to_array(diff_mask(from_array(a), from_array(b), DiffThreshold{rho}));
        },
        py::arg("a"), py::arg("b"), py::arg("rho") = 20);

    m.def(
        "peel_oracle_json",
        [](const SvgDoc& doc, int resolution, int rho, int max_iterations, double epsilon, std::uint64_t seed) {
            PeelConfig pc;
            pc.resolution = resolution;
            pc.rho = rho;
            pc.max_iterations = max_iterations;
            pc.vectorize.epsilon = epsilon;
            pc.sampler.seed = seed;
            auto oracle = make_oracle_backends(doc, resolution);
            PeelTrace trace;
            {
                py::gil_scoped_release release;
                trace = run(rasterize(doc, resolution), *oracle.annotator, *oracle.remover, pc);
            }
            py::list steps;
            for (const auto& s : trace.steps)
                steps.append(step_to_json(s));
            return py::make_tuple(trace_manifest_json(trace, pc), steps,
                                  emit_layered_svg_text(trace.layers(), resolution));
        },
        py::arg("doc"), py::arg("resolution") = 512, py::arg("rho") = 20, py::arg("max_iterations") = 50,
        py::arg("epsilon") = 1.0, py::arg("seed") = 0);

    m.def(
        "build_triplets",
        [](const SvgDoc& doc, const std::string& svg_id, int resolution) {
            TripletOptions o;
            o.resolution = resolution;
            o.with_panels = false;
            py::list out;
            for (const auto& t : build_triplets(doc, svg_id, o)) {
                py::dict d;
                d["record"] = record_to_json_line(t.record);
                d["src"] = to_array(t.src);
                d["tar"] = to_array(t.tar);
                out.append(d);
            }
            return out;
        },
        py::arg("doc"), py::arg("svg_id"), py::arg("resolution") = 512);

    m.def(
        "chamfer_distance",
        [](const py::array_t<double>& a, const py::array_t<double>& b) {
            return chamfer_distance(cloud(a), cloud(b));
        },
        py::arg("a"), py::arg("b"));
    m.def(
        "path_irregularity",
        [](const SvgDoc& g, const SvgDoc& t, int samples) {
            IrregularityOptions o;
            o.samples_per_path = samples;
            return path_irregularity(g, t, o);
        },
        py::arg("generated"), py::arg("truth"), py::arg("samples") = kDefaultOutlineSamples);
    m.def(
        "mse",
        [](const py::array_t<std::uint8_t>& a, const py::array_t<std::uint8_t>& b) {
            return mse(from_array(a), from_array(b));
        },
        py::arg("a"), py::arg("b"));
    m.def("drop_paths", &drop_paths, py::arg("doc"), py::arg("fraction") = 0.3, py::arg("seed") = 0);

    m.def(
        "canonical_graph", [](const std::string& text) { return serialize_graph(parse_graph(text)); },
        py::arg("text"));
    m.def(
        "non_occluded_nodes", [](const std::string& text) { return non_occluded_nodes(parse_graph(text)); },
        py::arg("text"));

    m.def(
        "joint_mask",
        [](const std::string& prompt, const std::vector<std::string>& labels, int rows, int cols,
           const std::vector<std::array<double, 4>>& boxes, bool instance_attends_global) {
            const TokenLayout layout = layout_for_prompts(prompt, labels, rows, cols);
            std::vector<BBoxNorm> bb;
            for (const auto& b : boxes)
                bb.push_back({b[0], b[1], b[2], b[3]});
            PlanOptions o;
            o.instance_attends_global = instance_attends_global;
            const AttentionPlan plan = build_joint_mask(layout, bb, o);
            py::array_t<bool> out({plan.n_tokens, plan.n_tokens});
            auto v = out.mutable_unchecked<2>();
            for (int q = 0; q < plan.n_tokens; ++q)
                for (int k = 0; k < plan.n_tokens; ++k)
                    v(q, k) = plan.at(q, k);
            return out;
        },
        py::arg("global_prompt"), py::arg("labels"), py::arg("grid_rows"), py::arg("grid_cols"), py::arg("boxes"),
        py::arg("instance_attends_global") = false);

    m.def("parse_tagged_response", &parse_tagged_response, py::arg("text"),
          py::arg("required") = std::vector<std::string>{});
    m.def(
        "parse_box_response",
        [](const std::string& text) {
            py::list out;
            for (const auto& b : parse_box_response(text))
                out.append(py::make_tuple(py::make_tuple(b.box.x0, b.box.y0, b.box.x1, b.box.y1), b.label));
            return out;
        },
        py::arg("text"));
}
