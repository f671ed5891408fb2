// affdim: planar self-affine set toolkit. Subcommands mirror the library:
// rasterize, dims, project, tube, pigeonhole, tangent, product-tangent,
// semigroup, verify. Exit codes: 0 ok, 1 verification failure, 2 invalid
// input, 3 resource limit.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "affdim/bench.hpp"
#include "affdim/dimension.hpp"
#include "affdim/semigroup.hpp"
#include "affdim/tangent.hpp"
#include "json.hpp"

using namespace affdim;

namespace {

struct GlobalFlags {
  std::string out_format = "csv";
  int threads = 1;          // reserved; estimators are deterministic and serial
  unsigned long seed = 0;   // seeds randomized property tests only (none in the CLI)
  std::string plot_path;
};

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  if (out.empty()) throw CLI::ValidationError("empty integer list");
  return out;
}

std::pair<int, int> parse_level_range(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) throw CLI::ValidationError("expected L1..L2");
  return {std::stoi(text.substr(0, dots)), std::stoi(text.substr(dots + 2))};
}

Ifs require_planar(const AnyIfs& any, const char* what) {
  if (const auto* p = std::get_if<Ifs>(&any)) return *p;
  fail(Errc::invalid_argument, std::string(what) + " needs a planar (2-D) IFS");
}

void emit_estimate(std::ostream& os, const DimensionEstimate& est, const std::string& fmt) {
  if (fmt == "json") {
    nlohmann::json rows = nlohmann::json::array();
    for (const ScalePoint& p : est.table)
      rows.push_back({{"k", p.k}, {"n", p.n}, {"log2count", p.log2_count}});
    nlohmann::json j{{"method", est.method},
                     {"value", est.value},
                     {"stderr", est.slope_stderr},
                     {"k", est.scale_coarse},
                     {"m", est.scale_fine - est.scale_coarse},
                     {"table", rows}};
    os << j.dump(2) << '\n';
  } else {
    write_estimate_csv(os, est);
  }
}

// static log2-count-vs-level scatter with the fitted line
void write_svg_plot(const std::string& path, const DimensionEstimate& est) {
  std::ofstream f(path);
  if (!f) fail(Errc::io_error, "cannot open " + path + " for writing");
  const int w = 640, h = 420, margin = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 0, ymax = 1;
  for (const ScalePoint& p : est.table) {
    xmin = std::min(xmin, static_cast<double>(p.n));
    xmax = std::max(xmax, static_cast<double>(p.n));
    ymax = std::max(ymax, p.log2_count);
  }
  if (xmax <= xmin) xmax = xmin + 1;
  auto sx = [&](double x) { return margin + (x - xmin) / (xmax - xmin) * (w - 2 * margin); };
  auto sy = [&](double y) { return h - margin - (y - ymin) / (ymax - ymin) * (h - 2 * margin); };
  f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  f << "<rect width='100%' height='100%' fill='white'/>\n";
  f << "<line x1='" << margin << "' y1='" << h - margin << "' x2='" << w - margin << "' y2='"
    << h - margin << "' stroke='black'/>\n";
  f << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin << "' y2='"
    << h - margin << "' stroke='black'/>\n";
  for (const ScalePoint& p : est.table)
    f << "<circle cx='" << sx(p.n) << "' cy='" << sy(p.log2_count) << "' r='3' fill='steelblue'/>\n";
  // fitted line through the first/last abscissae using the reported slope
  double y0 = 0, y1 = 0;
  if (!est.table.empty()) {
    const double b = est.table.front().log2_count - est.value * est.table.front().n;
    y0 = est.value * xmin + b;
    y1 = est.value * xmax + b;
  }
  f << "<line x1='" << sx(xmin) << "' y1='" << sy(y0) << "' x2='" << sx(xmax) << "' y2='" << sy(y1)
    << "' stroke='crimson'/>\n";
  f << "<text x='" << margin << "' y='" << margin - 20 << "'>" << est.method
    << " slope=" << est.value << "</text>\n";
  f << "<text x='" << w / 2 << "' y='" << h - 12 << "'>level n</text>\n";
  f << "</svg>\n";
}

int run(int argc, char** argv) {
  CLI::App app{"planar self-affine set toolkit"};
  app.require_subcommand(1);
  GlobalFlags flags;
  app.add_option("--out-format", flags.out_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", flags.threads, "worker cap (reserved; runs are deterministic)")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", flags.seed, "seed for randomized property tests (unused by estimators)");
  app.add_option("--plot", flags.plot_path, "write a log2-count scatter with the fitted line");

  // rasterize
  auto* c_raster = app.add_subcommand("rasterize", "rasterize an attractor to a cell set");
  std::string r_ifs, r_out;
  int r_level = 8;
  c_raster->add_option("--ifs", r_ifs, "IFS JSON file")->required();
  c_raster->add_option("--level", r_level, "dyadic level")->required();
  c_raster->add_option("--out", r_out, "output cell file (default stdout)");

  // dims
  auto* c_dims = app.add_subcommand("dims", "box or assouad dimension estimates");
  std::string d_ifs, d_method = "assouad", d_k = "2,4,6";
  int d_m = 8;
  c_dims->add_option("--ifs", d_ifs)->required();
  c_dims->add_option("--method", d_method)->check(CLI::IsMember({"box", "assouad"}));
  c_dims->add_option("--k", d_k, "coarse levels, comma separated");
  c_dims->add_option("--m", d_m, "window depth");

  // project
  auto* c_proj = app.add_subcommand("project", "projected cell set / projected assouad");
  std::string p_ifs, p_out;
  double p_angle = 0;
  int p_level = 10;
  bool p_dims = false;
  c_proj->add_option("--ifs", p_ifs)->required();
  c_proj->add_option("--angle", p_angle, "projection direction, radians in [0,pi)");
  c_proj->add_option("--level", p_level);
  c_proj->add_option("--out", p_out, "output cell file (default stdout)");
  c_proj->add_flag("--dims", p_dims, "emit the projected assouad estimate instead of cells");

  // tube
  auto* c_tube = app.add_subcommand("tube", "tube dimension estimate");
  std::string t_ifs, t_levels = "6..12";
  double t_angle = 0;
  c_tube->add_option("--ifs", t_ifs)->required();
  c_tube->add_option("--angle", t_angle, "projection direction, radians");
  c_tube->add_option("--levels", t_levels, "L1..L2");

  // pigeonhole
  auto* c_pig = app.add_subcommand("pigeonhole", "furstenberg pigeonhole descent");
  std::string g_cells, g_mode = "counting";
  double g_s = 0, g_t = 0;
  int g_ell = 0, g_k = 0;
  c_pig->add_option("--cells", g_cells, "cell file")->required();
  c_pig->add_option("--s", g_s)->required();
  c_pig->add_option("--t", g_t)->required();
  c_pig->add_option("--ell", g_ell)->required();
  c_pig->add_option("--k", g_k)->required();
  c_pig->add_option("--mode", g_mode)->check(CLI::IsMember({"counting", "branching"}));

  // tangent
  auto* c_tan = app.add_subcommand("tangent", "weak tangent windows / slice search");
  std::string n_ifs;
  int n_m = 6;
  bool n_slice = false;
  c_tan->add_option("--ifs", n_ifs)->required();
  c_tan->add_option("--m", n_m, "quality / slice parameter");
  c_tan->add_flag("--slice", n_slice, "run the tube-pigeonhole slice search");

  // product-tangent
  auto* c_prod = app.add_subcommand("product-tangent", "appendix product construction");
  std::string q_ifs, q_out = "product_tangent";
  int q_m = 6;
  c_prod->add_option("--ifs", q_ifs)->required();
  c_prod->add_option("--m", q_m);
  c_prod->add_option("--out", q_out, "report base path");

  // semigroup
  auto* c_semi = app.add_subcommand("semigroup", "domination report and furstenberg directions");
  std::string s_ifs;
  int s_depth = 8;
  c_semi->add_option("--ifs", s_ifs)->required();
  c_semi->add_option("--depth", s_depth);

  // verify
  auto* c_ver = app.add_subcommand("verify", "benchmark verification harness");
  std::string v_family, v_digits, v_b, v_a, v_path;
  int v_n = 4, v_m = 2, v_budget = 14;
  double v_beta = 0.5, v_alpha = 1.0 / 3;
  c_ver->add_option("--family", v_family)->required()->check(CLI::IsMember({"bm", "fj"}));
  c_ver->add_option("--grid-n", v_n);
  c_ver->add_option("--grid-m", v_m);
  c_ver->add_option("--digits", v_digits, "BM digits as i,j;i,j;...");
  c_ver->add_option("--beta", v_beta);
  c_ver->add_option("--alpha", v_alpha);
  c_ver->add_option("--b", v_b, "FJ horizontal offsets, comma separated");
  c_ver->add_option("--a", v_a, "FJ vertical offsets, comma separated");
  c_ver->add_option("--budget", v_budget, "max rasterization level");

  CLI11_PARSE(app, argc, argv);

  auto out_stream = [&](const std::string& path) -> std::ostream& {
    static std::ofstream file;
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) fail(Errc::io_error, "cannot open " + path + " for writing");
    return file;
  };

  if (c_raster->parsed()) {
    const AnyIfs any = load_ifs(r_ifs);
    const CellSet cells = std::holds_alternative<Ifs>(any)
                              ? rasterize(std::get<Ifs>(any), r_level)
                              : rasterize(std::get<SimilarityIfs1D>(any), r_level);
    write_cells(out_stream(r_out), cells);
    return 0;
  }

  if (c_dims->parsed()) {
    const AnyIfs any = load_ifs(d_ifs);
    const std::vector<int> ks = parse_int_list(d_k);
    DimensionEstimate est;
    if (d_method == "assouad") {
      if (std::holds_alternative<Ifs>(any)) {
        AssouadOptions opts;
        opts.k_range = ks;
        opts.m = d_m;
        est = assouad_estimate(std::get<Ifs>(any), opts);
      } else {
        const int level = *std::max_element(ks.begin(), ks.end()) + d_m;
        est = assouad_scan(rasterize(std::get<SimilarityIfs1D>(any), level), ks, d_m);
      }
    } else {
      const int level = *std::max_element(ks.begin(), ks.end()) + d_m;
      const CellSet cells = std::holds_alternative<Ifs>(any)
                                ? rasterize(std::get<Ifs>(any), level)
                                : rasterize(std::get<SimilarityIfs1D>(any), level);
      const BoxDimensions box = box_dimensions(CellSetPyramid(cells));
      std::cout << "lower:\n";
      emit_estimate(std::cout, box.lower, flags.out_format);
      std::cout << "upper:\n";
      emit_estimate(std::cout, box.upper, flags.out_format);
      if (!flags.plot_path.empty()) write_svg_plot(flags.plot_path, box.lower);
      return 0;
    }
    emit_estimate(std::cout, est, flags.out_format);
    if (!flags.plot_path.empty()) write_svg_plot(flags.plot_path, est);
    return 0;
  }

  if (c_proj->parsed()) {
    const Ifs ifs = require_planar(load_ifs(p_ifs), "project");
    const Direction v = Direction::from_angle(p_angle);
    if (p_dims) {
      AssouadOptions opts;
      opts.m = std::max(6, p_level - 6);
      const DimensionEstimate est = assouad_projection(ifs, v, opts);
      emit_estimate(std::cout, est, flags.out_format);
      if (!flags.plot_path.empty()) write_svg_plot(flags.plot_path, est);
    } else {
      const CellSet cells = project_cells(rasterize(ifs, p_level), v, p_level);
      write_cells(out_stream(p_out), cells);
    }
    return 0;
  }

  if (c_tube->parsed()) {
    const Ifs ifs = require_planar(load_ifs(t_ifs), "tube");
    const auto [l1, l2] = parse_level_range(t_levels);
    DeltaOptions opts;
    opts.levels.clear();
    for (int n = l1; n <= l2; ++n) opts.levels.push_back(n);
    const DimensionEstimate est = delta_estimate(ifs, Direction::from_angle(t_angle), opts);
    emit_estimate(std::cout, est, flags.out_format);
    if (!flags.plot_path.empty()) write_svg_plot(flags.plot_path, est);
    return 0;
  }

  if (c_pig->parsed()) {
    const CellSet cells = load_cells(g_cells);
    const PigeonholeResult res = furstenberg_pigeonhole(
        cells, g_s, g_t, g_ell, g_k,
        g_mode == "counting" ? PigeonholeMode::counting : PigeonholeMode::branching);
    if (flags.out_format == "json") {
      nlohmann::json j{{"p", res.p},
                       {"cube", {res.q.coords().x, res.q.coords().y}},
                       {"table", res.table},
                       {"mass", res.mass}};
      if (!res.ratio_table.empty()) j["ratio_table"] = res.ratio_table;
      std::cout << j.dump(2) << '\n';
    } else {
      std::cout << "p," << res.p << "\ncube," << res.q.coords().x << ',' << res.q.coords().y
                << "\nmass," << res.mass << "\n";
      for (std::size_t n = 0; n < res.table.size(); ++n)
        std::cout << "count," << n << ',' << res.table[n] << '\n';
    }
    return 0;
  }

  if (c_tan->parsed()) {
    const Ifs ifs = require_planar(load_ifs(n_ifs), "tangent");
    TangentOptions opts;
    if (n_slice) {
      const SliceSearchResult res = tangent_slice_search(ifs, Direction::horizontal(), n_m, opts);
      nlohmann::json j{{"window_level", res.window.level()},
                       {"window", {res.window.coords().x, res.window.coords().y}},
                       {"tube_x", res.tube_x},
                       {"p", res.cert.p},
                       {"table", res.cert.table},
                       {"s_est", res.s_est},
                       {"eta_est", res.eta_est},
                       {"certified_slope", res.certified_slope}};
      std::cout << j.dump(2) << '\n';
    } else {
      AssouadOptions aopts;
      aopts.m = std::max(6, opts.max_level - 6);
      const double eta = assouad_estimate(ifs, aopts).value;
      const ZoomSequence seq = weak_tangent_sequence(ifs, eta, {n_m}, opts);
      nlohmann::json arr = nlohmann::json::array();
      for (const ZoomEntry& e : seq.entries)
        arr.push_back({{"quality", e.quality},
                       {"window_level", e.window.level()},
                       {"window", {e.window.coords().x, e.window.coords().y}},
                       {"table", e.table},
                       {"s_used", e.s_used},
                       {"truncated", e.truncated}});
      nlohmann::json j{{"eta_estimate", eta}, {"entries", arr}, {"truncated", seq.truncated}};
      if (!seq.note.empty()) j["note"] = seq.note;
      std::cout << j.dump(2) << '\n';
    }
    return 0;
  }

  if (c_prod->parsed()) {
    const Ifs ifs = require_planar(load_ifs(q_ifs), "product-tangent");
    const ProductTangentReport rep = diag_product_tangent(ifs, q_m);
    save_product_report(q_out, rep);
    std::cout << "report written to " << q_out << ".json (verify: "
              << (verify_product_bounds(rep) ? "ok" : "FAILED") << ")\n";
    return verify_product_bounds(rep) ? 0 : 1;
  }

  if (c_semi->parsed()) {
    const Ifs ifs = require_planar(load_ifs(s_ifs), "semigroup");
    const DominationReport rep = domination_check(ifs, std::max(4, std::min(s_depth, 10)));
    write_domination_report(std::cout, rep);
    if (rep.classification != DominationClass::strongly_conformal) {
      const DirectionSet back = furstenberg_directions(ifs, s_depth, FurstenbergKind::backward);
      const DirectionSet fwd = furstenberg_directions(ifs, s_depth, FurstenbergKind::forward);
      std::cout << "backward_directions:";
      for (const Direction& d : back.directions) std::cout << ' ' << d.angle();
      std::cout << "\nforward_directions:";
      for (const Direction& d : fwd.directions) std::cout << ' ' << d.angle();
      std::cout << "\nbackward_movement: " << back.max_movement << '\n';
    }
    return 0;
  }

  if (c_ver->parsed()) {
    FamilySpec spec;
    if (v_family == "bm") {
      std::vector<std::pair<int, int>> digits;
      std::stringstream ss(v_digits);
      std::string item;
      while (std::getline(ss, item, ';')) {
        const auto comma = item.find(',');
        if (comma == std::string::npos) fail(Errc::invalid_argument, "bad digit entry " + item);
        digits.push_back({std::stoi(item.substr(0, comma)), std::stoi(item.substr(comma + 1))});
      }
      spec = FamilySpec::bm(v_n, v_m, digits);
    } else {
      std::vector<double> bs, as;
      std::stringstream sb(v_b), sa(v_a);
      std::string item;
      while (std::getline(sb, item, ',')) bs.push_back(std::stod(item));
      while (std::getline(sa, item, ',')) as.push_back(std::stod(item));
      spec = FamilySpec::fj(v_beta, v_alpha, bs, as);
    }
    const std::vector<VerificationRow> rows = verify_formula(spec, v_budget);
    if (flags.out_format == "json")
      write_rows_json(std::cout, rows);
    else
      write_rows_csv(std::cout, rows);
    for (const VerificationRow& r : rows)
      if (!r.pass) return 1;
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error (" << errc_name(e.code()) << "): " << e.what() << '\n';
    return e.code() == Errc::resource_limit ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
