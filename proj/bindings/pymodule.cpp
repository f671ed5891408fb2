// Python bindings for the main operations. The module mirrors the C++
// surface closely; cell sets cross the boundary as (dim, level, [(x, y)]).

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "affdim/bench.hpp"
#include "affdim/dimension.hpp"
#include "affdim/semigroup.hpp"
#include "affdim/tangent.hpp"

namespace py = pybind11;
using namespace affdim;

namespace {

Ifs ifs_from_lists(const std::vector<std::vector<std::vector<double>>>& mats,
                   const std::vector<std::vector<double>>& ts,
                   std::optional<std::vector<double>> weights) {
  if (mats.size() != ts.size()) throw py::value_error("maps/translations size mismatch");
  std::vector<AffineMap2> maps;
  for (std::size_t i = 0; i < mats.size(); ++i) {
    const auto& a = mats[i];
    if (a.size() != 2 || a[0].size() != 2 || a[1].size() != 2 || ts[i].size() != 2)
      throw py::value_error("expected 2x2 matrices and 2-vectors");
    maps.push_back({Mat2{a[0][0], a[0][1], a[1][0], a[1][1]}, Vec2{ts[i][0], ts[i][1]}});
  }
  return Ifs(std::move(maps), std::move(weights));
}

py::dict estimate_dict(const DimensionEstimate& est) {
  py::dict d;
  d["value"] = est.value;
  d["method"] = est.method;
  d["stderr"] = est.slope_stderr;
  d["scale_coarse"] = est.scale_coarse;
  d["scale_fine"] = est.scale_fine;
  py::list table;
  for (const ScalePoint& p : est.table) table.append(py::make_tuple(p.k, p.n, p.log2_count));
  d["table"] = table;
  return d;
}

}  // namespace

PYBIND11_MODULE(_affdim, m) {
  m.doc() = "dyadic box-counting and matrix-semigroup toolkit for planar self-affine sets";

  py::register_exception<Error>(m, "AffdimError");

  py::class_<Cell>(m, "Cell")
      .def(py::init([](std::int64_t x, std::int64_t y) { return Cell{x, y}; }), py::arg("x"),
           py::arg("y") = 0)
      .def_readonly("x", &Cell::x)
      .def_readonly("y", &Cell::y)
      .def("__repr__", [](const Cell& c) {
        return "Cell(" + std::to_string(c.x) + ", " + std::to_string(c.y) + ")";
      });

  py::class_<DyadicCube>(m, "DyadicCube")
      .def(py::init([](int dim, int level, std::int64_t x, std::int64_t y) {
             return DyadicCube(dim, level, Cell{x, y});
           }),
           py::arg("dim"), py::arg("level"), py::arg("x"), py::arg("y") = 0)
      .def_property_readonly("dim", &DyadicCube::dim)
      .def_property_readonly("level", &DyadicCube::level)
      .def_property_readonly("coords",
                             [](const DyadicCube& q) {
                               return py::make_tuple(q.coords().x, q.coords().y);
                             });

  py::class_<CellSet>(m, "CellSet")
      .def(py::init([](int dim, int level, const std::vector<std::pair<std::int64_t, std::int64_t>>& cells) {
             std::vector<Cell> cc;
             cc.reserve(cells.size());
             for (auto [x, y] : cells) cc.push_back(Cell{x, y});
             return CellSet::from_cells(dim, level, cc);
           }),
           py::arg("dim"), py::arg("level"), py::arg("cells"))
      .def_property_readonly("dim", &CellSet::dim)
      .def_property_readonly("level", &CellSet::level)
      .def("__len__", &CellSet::size)
      .def("cells",
           [](const CellSet& s) {
             py::list out;
             for (std::size_t i = 0; i < s.size(); ++i)
               out.append(py::make_tuple(s.cell(i).x, s.cell(i).y));
             return out;
           })
      .def("__eq__", [](const CellSet& a, const CellSet& b) { return a == b; })
      .def("save", [](const CellSet& s, const std::string& path) { save_cells(path, s); })
      .def_static("load", [](const std::string& path) { return load_cells(path); });

  m.def("covering_number", &covering_number, py::arg("cells"), py::arg("n"));
  m.def("truncate", [](const CellSet& cells, int n) { return affdim::truncate(cells, n); },
        py::arg("cells"), py::arg("n"));
  m.def("point_cells",
        [](double x, double y, int level) { return point_cells({x, y}, level); });
  m.def("restrict_to", &restrict_to);
  m.def("renormalize", &renormalize);
  m.def("hausdorff_distance", &hausdorff_distance);
  m.def("one_sided_distance", &one_sided_distance);

  py::class_<Ifs>(m, "Ifs")
      .def(py::init(&ifs_from_lists), py::arg("matrices"), py::arg("translations"),
           py::arg("weights") = std::nullopt)
      .def_static("from_json", [](const std::string& text) {
        const AnyIfs any = parse_ifs_json(text);
        if (const auto* p = std::get_if<Ifs>(&any)) return *p;
        throw py::value_error("JSON describes a 1-D system; use SimilarityIfs1D.from_json");
      })
      .def_static("load", [](const std::string& path) {
        const AnyIfs any = load_ifs(path);
        if (const auto* p = std::get_if<Ifs>(&any)) return *p;
        throw py::value_error("file describes a 1-D system");
      })
      .def_property_readonly("size", &Ifs::size)
      .def_property_readonly("bounding_radius", &Ifs::bounding_radius);

  py::class_<SimilarityIfs1D>(m, "SimilarityIfs1D")
      .def(py::init([](const std::vector<std::pair<double, double>>& maps,
                       std::optional<std::vector<double>> weights) {
             std::vector<SimilarityIfs1D::Map> mm;
             for (auto [r, u] : maps) mm.push_back({r, u});
             return SimilarityIfs1D(std::move(mm), std::move(weights));
           }),
           py::arg("maps"), py::arg("weights") = std::nullopt)
      .def_property_readonly("size", &SimilarityIfs1D::size);

  m.def("compose", [](const Ifs& ifs, const Word& w) {
    const AffineMap2 t = compose(ifs, w);
    return py::make_tuple(
        py::make_tuple(py::make_tuple(t.A.a, t.A.b), py::make_tuple(t.A.c, t.A.d)),
        py::make_tuple(t.t.x, t.t.y));
  });
  m.def("rasterize",
        [](const Ifs& ifs, int level) { return rasterize(ifs, level); }, py::arg("ifs"),
        py::arg("level"));
  m.def("rasterize_1d",
        [](const SimilarityIfs1D& ifs, int level) { return rasterize(ifs, level); },
        py::arg("ifs"), py::arg("level"));
  m.def("project_ifs", [](const Ifs& ifs) {
    const SimilarityIfs1D p = project_ifs(ifs);
    py::list maps;
    for (const auto& mp : p.maps()) maps.append(py::make_tuple(mp.ratio, mp.offset));
    return maps;
  });
  m.def("check_rosc", &check_rosc);
  m.def("wbnc_count",
        [](const Ifs& ifs, double x, double y, double r) { return wbnc_count(ifs, {x, y}, r); });
  m.def("frostman_dim",
        [](const std::vector<std::pair<double, double>>& maps, const std::vector<double>& weights,
           int depth) {
          std::vector<SimilarityIfs1D::Map> mm;
          for (auto [r, u] : maps) mm.push_back({r, u});
          return estimate_dict(frostman_dim(MeasureModel(SimilarityIfs1D(mm, weights)), depth));
        },
        py::arg("maps"), py::arg("weights"), py::arg("depth") = 16);

  py::class_<Direction>(m, "Direction")
      .def_static("from_angle", &Direction::from_angle)
      .def_static("horizontal", &Direction::horizontal)
      .def_static("vertical", &Direction::vertical)
      .def_property_readonly("angle", &Direction::angle);

  m.def("singular_data", [](const std::vector<std::vector<double>>& a) {
    const SingularData sd = singular_data(Mat2{a[0][0], a[0][1], a[1][0], a[1][1]});
    py::dict d;
    d["alpha1"] = sd.alpha1;
    d["alpha2"] = sd.alpha2;
    d["eta1_angle"] = sd.eta1.angle();
    d["eta2_angle"] = sd.eta2.angle();
    d["degenerate"] = sd.degenerate;
    return d;
  });
  m.def("theta", [](const Ifs& ifs, const Word& w, int which) {
    return theta(ifs, w, which == 1 ? ThetaKind::forward : ThetaKind::backward).angle();
  });
  m.def("furstenberg_directions", [](const Ifs& ifs, int depth, const std::string& kind) {
    const DirectionSet ds = furstenberg_directions(
        ifs, depth, kind == "forward" ? FurstenbergKind::forward : FurstenbergKind::backward);
    py::list angles;
    for (const Direction& d : ds.directions) angles.append(d.angle());
    py::dict out;
    out["angles"] = angles;
    out["max_movement"] = ds.max_movement;
    return out;
  });
  m.def("domination_check", [](const Ifs& ifs, int maxlen) {
    const DominationReport rep = domination_check(ifs, maxlen);
    std::ostringstream ss;
    write_domination_report(ss, rep);
    py::dict d;
    d["classification"] = domination_class_name(rep.classification);
    d["tau"] = rep.fit_tau;
    d["C"] = rep.almost_mult_c;
    d["delta"] = rep.min_xf_yf_angle;
    d["cone_certified"] = rep.cone_certified;
    d["report"] = ss.str();
    return d;
  });
  m.def("rank_one_limit", [](const Ifs& ifs, double angle, double tol) {
    const RankOneLimit lim = rank_one_limit(ifs, Direction::from_angle(angle), tol);
    py::dict d;
    d["kappa"] = lim.kappa;
    d["image_angle"] = lim.image.angle();
    d["witness_length"] = lim.witness.size();
    d["det_ratio"] = lim.det_ratio;
    return d;
  });

  m.def("box_dimensions", [](const CellSet& cells) {
    const BoxDimensions bd = box_dimensions(CellSetPyramid(cells));
    return py::make_tuple(estimate_dict(bd.lower), estimate_dict(bd.upper));
  });
  m.def("assouad_estimate",
        [](const Ifs& ifs, const std::vector<int>& k_range, int m) {
          AssouadOptions opts;
          opts.k_range = k_range;
          opts.m = m;
          return estimate_dict(assouad_estimate(ifs, opts));
        },
        py::arg("ifs"), py::arg("k_range") = std::vector<int>{2, 4, 6}, py::arg("m") = 8);
  m.def("assouad_projection",
        [](const Ifs& ifs, double angle, const std::vector<int>& k_range, int m) {
          AssouadOptions opts;
          opts.k_range = k_range;
          opts.m = m;
          return estimate_dict(assouad_projection(ifs, Direction::from_angle(angle), opts));
        },
        py::arg("ifs"), py::arg("angle") = 0.0, py::arg("k_range") = std::vector<int>{2, 4, 6},
        py::arg("m") = 8);
  m.def("project_cells", [](const CellSet& cells, double angle, int out_level) {
    return project_cells(cells, Direction::from_angle(angle), out_level);
  });
  m.def("tube_count", [](const CellSet& cells, double angle, double z, double r, int count_level) {
    return tube_count(cells, {Direction::from_angle(angle), z, r}, count_level);
  });
  m.def("delta_estimate",
        [](const Ifs& ifs, double angle, const std::vector<int>& levels) {
          DeltaOptions opts;
          opts.levels = levels;
          return estimate_dict(delta_estimate(ifs, Direction::from_angle(angle), opts));
        },
        py::arg("ifs"), py::arg("angle") = 0.0,
        py::arg("levels") = std::vector<int>{6, 8, 10, 12});

  m.def("furstenberg_pigeonhole",
        [](const CellSet& cells, double s, double t, int ell, int k, const std::string& mode) {
          const PigeonholeResult res = furstenberg_pigeonhole(
              cells, s, t, ell, k,
              mode == "branching" ? PigeonholeMode::branching : PigeonholeMode::counting);
          py::dict d;
          d["p"] = res.p;
          d["cube"] = py::make_tuple(res.q.coords().x, res.q.coords().y);
          d["table"] = res.table;
          d["mass"] = res.mass;
          if (!res.ratio_table.empty()) d["ratio_table"] = res.ratio_table;
          return d;
        },
        py::arg("cells"), py::arg("s"), py::arg("t"), py::arg("ell"), py::arg("k"),
        py::arg("mode") = "counting");
  m.def("tangent_slice_search", [](const Ifs& ifs, int n) {
    const SliceSearchResult res = tangent_slice_search(ifs, Direction::horizontal(), n);
    py::dict d;
    d["window_level"] = res.window.level();
    d["tube_x"] = res.tube_x;
    d["table"] = res.cert.table;
    d["certified_slope"] = res.certified_slope;
    d["s_est"] = res.s_est;
    d["eta_est"] = res.eta_est;
    return d;
  });
  m.def("diag_product_tangent", [](const Ifs& ifs, int mq) {
    const ProductTangentReport rep = diag_product_tangent(ifs, mq);
    py::dict d;
    d["verified"] = verify_product_bounds(rep);
    d["transposed"] = rep.transposed;
    d["proj_counts"] = rep.proj_table.counts;
    d["slice_counts"] = rep.slice_table.counts;
    d["product_size"] = rep.product.size();
    d["eta_used"] = rep.eta_used;
    d["beta_used"] = rep.beta_used;
    return d;
  });

  m.def("make_family_bm", [](int n, int mm, const std::vector<std::pair<int, int>>& digits) {
    return make_family(FamilySpec::bm(n, mm, digits));
  });
  m.def("make_family_fj",
        [](double beta, double alpha, const std::vector<double>& b, const std::vector<double>& a) {
          return make_family(FamilySpec::fj(beta, alpha, b, a));
        });
  m.def("verify_formula",
        [](const std::string& family, int budget) {
          FamilySpec spec;
          if (family == "bm")
            spec = FamilySpec::bm(4, 2, {{0, 0}, {0, 1}, {2, 0}});
          else
            spec = FamilySpec::fj(0.5, 1.0 / 3, {0, 0, 0.5}, {0, 1.0 / 3, 2.0 / 3});
          py::list rows;
          for (const VerificationRow& r : verify_formula(spec, budget)) {
            py::dict d;
            d["quantity"] = quantity_name(r.quantity);
            d["reference"] = r.reference;
            d["estimate"] = r.estimate;
            d["tolerance"] = r.tolerance;
            d["pass"] = r.pass;
            d["note"] = r.note;
            rows.append(d);
          }
          return rows;
        },
        py::arg("family"), py::arg("budget") = 13);
}
