#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cropper/dataset.hpp"
#include "cropper/embedding.hpp"
#include "cropper/evaluation.hpp"
#include "cropper/geometry.hpp"
#include "cropper/image_io.hpp"
#include "cropper/prompting.hpp"
#include "cropper/refinement.hpp"

namespace py = pybind11;
using namespace cropper;

namespace {

ImageBytes to_bytes(const py::bytes& b) {
  std::string s = b;
  return ImageBytes(s.begin(), s.end());
}

}  // namespace

PYBIND11_MODULE(_cropper, m) {
  m.doc() = "core operations of the cropping pipeline";

  py::register_exception<Error>(m, "CropperError", PyExc_ValueError);

  py::class_<CoordSpace>(m, "CoordSpace")
      .def_static("pixel", &CoordSpace::pixel, py::arg("width"), py::arg("height"))
      .def_static("norm1000", &CoordSpace::norm1000)
      .def_static("unit", &CoordSpace::unit)
      .def_readonly("width", &CoordSpace::width)
      .def_readonly("height", &CoordSpace::height)
      .def("__eq__", [](const CoordSpace& a, const CoordSpace& b) { return a == b; })
      .def("__repr__", [](const CoordSpace& s) {
        switch (s.kind) {
          case CoordSpace::Kind::Norm1000: return std::string("CoordSpace.norm1000()");
          case CoordSpace::Kind::Unit: return std::string("CoordSpace.unit()");
          default:
            return "CoordSpace.pixel(" + std::to_string(s.width) + ", " +
                   std::to_string(s.height) + ")";
        }
      });

  py::class_<CropBox>(m, "CropBox")
      .def_readonly("x1", &CropBox::x1)
      .def_readonly("y1", &CropBox::y1)
      .def_readonly("x2", &CropBox::x2)
      .def_readonly("y2", &CropBox::y2)
      .def_readonly("space", &CropBox::space)
      .def("width", &CropBox::width)
      .def("height", &CropBox::height)
      .def("area", &CropBox::area)
      .def("tuple",
           [](const CropBox& b) { return py::make_tuple(b.x1, b.y1, b.x2, b.y2); })
      .def("__repr__", [](const CropBox& b) {
        return "CropBox(" + std::to_string(b.x1) + ", " + std::to_string(b.y1) +
               ", " + std::to_string(b.x2) + ", " + std::to_string(b.y2) + ")";
      });

  m.def("make_box", &make_box, py::arg("x1"), py::arg("y1"), py::arg("x2"),
        py::arg("y2"), py::arg("space"));
  m.def("clamp_and_validate", &clamp_and_validate, py::arg("x1"), py::arg("y1"),
        py::arg("x2"), py::arg("y2"), py::arg("space"));
  m.def("convert", &convert, py::arg("box"), py::arg("to"));
  m.def("iou", &iou, py::arg("a"), py::arg("b"));
  m.def("displacement", &displacement, py::arg("pred"), py::arg("gt"), py::arg("img"));
  m.def("area_fraction", &area_fraction, py::arg("crop"), py::arg("img"));
  m.def("ratio_of", &ratio_of, py::arg("box"), py::arg("img"));

  py::class_<AspectRatio>(m, "AspectRatio")
      .def(py::init<int, int>(), py::arg("w"), py::arg("h"))
      .def_static("parse", &AspectRatio::parse)
      .def_readonly("w", &AspectRatio::w)
      .def_readonly("h", &AspectRatio::h)
      .def("value", &AspectRatio::value)
      .def("__str__", &AspectRatio::str)
      .def("__repr__", [](const AspectRatio& r) { return "AspectRatio(" + r.str() + ")"; });

  m.def(
      "parse_response",
      [](const std::string& task, const std::string& text, const CoordSpace& space,
         bool zero_shot) {
        ParseResult r = parse_response(parse_task(task), text, space, zero_shot);
        py::list out;
        for (const auto& c : r.candidates) {
          py::dict d;
          d["box"] = c.box;
          d["mos"] = c.predicted_mos ? py::object(py::float_(*c.predicted_mos))
                                     : py::object(py::none());
          out.append(d);
        }
        return out;
      },
      py::arg("task"), py::arg("text"), py::arg("space"), py::arg("zero_shot") = false);

  m.def(
      "acc_kn",
      [](const std::vector<CropBox>& preds,
         const std::vector<std::pair<CropBox, double>>& gt, int k, int n, double tau,
         bool fractional) {
        std::vector<ScoredGtCrop> gts;
        for (const auto& [box, mos] : gt) gts.push_back({box, mos});
        return acc_kn(preds, gts, k, n, tau, fractional);
      },
      py::arg("preds"), py::arg("gt"), py::arg("k"), py::arg("n"),
      py::arg("tau") = 0.90, py::arg("fractional") = true);
  m.def("srcc", &srcc, py::arg("pred_scores"), py::arg("gt_mos"));
  m.def("pcc", &pcc, py::arg("pred_scores"), py::arg("gt_mos"));

  py::class_<ScoredId>(m, "ScoredId")
      .def_readonly("id", &ScoredId::id)
      .def_readonly("similarity", &ScoredId::similarity);

  py::class_<EmbeddingStore>(m, "EmbeddingStore")
      .def(py::init<>())
      .def("insert",
           [](EmbeddingStore& s, const std::string& id, std::vector<float> v) {
             s.insert(Embedding{std::move(v), id});
           })
      .def("__len__", &EmbeddingStore::size)
      .def(
          "top_s",
          [](const EmbeddingStore& s, std::vector<float> v, int k,
             const std::vector<std::string>& exclude) {
            return s.top_s(Embedding{std::move(v), "query"}, k, exclude);
          },
          py::arg("query"), py::arg("s"), py::arg("exclude") = std::vector<std::string>{});

  m.def("cosine", [](std::vector<float> a, std::vector<float> b) {
    return cosine(Embedding{std::move(a), "a"}, Embedding{std::move(b), "b"});
  });

  py::class_<HashEmbeddingProvider>(m, "HashEmbeddingProvider")
      .def(py::init<int>(), py::arg("dim") = 16)
      .def("embed", [](HashEmbeddingProvider& p, const py::bytes& image) {
        return p.embed(to_bytes(image)).vector;
      });

  m.def(
      "make_test_image",
      [](int w, int h, unsigned seed) {
        ImageBytes b = make_test_image(w, h, seed);
        return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
      },
      py::arg("width"), py::arg("height"), py::arg("seed") = 0);
  m.def("pixel_digest",
        [](const py::bytes& image) { return pixel_digest(to_bytes(image)); });
  m.def(
      "extract_crop",
      [](const py::bytes& image, const CropBox& box) {
        ImageBytes out = extract_crop(to_bytes(image), box);
        return py::bytes(reinterpret_cast<const char*>(out.data()), out.size());
      },
      py::arg("image"), py::arg("box"));

  m.def("default_config", [](const std::string& task) {
    return default_config(parse_task(task)).to_json().dump();
  });
}
