#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "geob/ac_solver.hpp"
#include "geob/acoustic.hpp"
#include "geob/harness.hpp"
#include "geob/limit.hpp"
#include "geob/operators.hpp"
#include "geob/snapshot.hpp"

namespace py = pybind11;
using namespace geob;

namespace {

using CArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;

GridPtr grid_of(const std::shared_ptr<Grid>& g) { return std::const_pointer_cast<const Grid>(g); }

Space parse_space(const std::string& s) {
  if (s == "spectral") return Space::spectral;
  if (s == "physical") return Space::physical;
  throw std::invalid_argument("space must be 'spectral' or 'physical'");
}

const char* space_name(Space s) { return s == Space::spectral ? "spectral" : "physical"; }

CArray to_array(std::span<const cplx> v, std::vector<py::ssize_t> shape) {
  CArray a(shape);
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

ScalarField scalar_from(const std::shared_ptr<Grid>& g, const std::string& parity, CArray data,
                        const std::string& space) {
  ScalarField f(grid_of(g), parse_parity(parity), parse_space(space));
  if (static_cast<std::size_t>(data.size()) != g->size())
    throw std::invalid_argument("array must have N_v * N_h * N_h entries");
  std::copy(data.data(), data.data() + data.size(), f.values().begin());
  return f;
}

HField hfield_from(const std::shared_ptr<Grid>& g, CArray data, const std::string& space) {
  HField f(grid_of(g), parse_space(space));
  if (static_cast<std::size_t>(data.size()) != g->plane_size())
    throw std::invalid_argument("array must have N_h * N_h entries");
  std::copy(data.data(), data.data() + data.size(), f.values().begin());
  return f;
}

py::dict result_dict(const StudyResult& r) {
  py::dict d;
  d["study"] = r.study;
  d["columns"] = r.columns;
  py::list rows;
  for (const auto& row : r.rows) {
    py::dict o;
    o["eps"] = row.eps;
    for (std::size_t k = 0; k < r.columns.size(); ++k) o[py::str(r.columns[k])] = row.values[k];
    o["status"] = row.status;
    o["message"] = row.message;
    rows.append(o);
  }
  d["rows"] = rows;
  py::list fits;
  for (const auto& f : r.fits) {
    py::dict o;
    o["metric"] = f.metric;
    o["exponent"] = f.exponent;
    o["intercept"] = f.intercept;
    o["residual"] = f.residual;
    o["points"] = f.points;
    fits.append(o);
  }
  d["fits"] = fits;
  d["verdicts"] = r.verdicts;
  d["notes"] = r.notes;
  d["provenance"] = r.provenance;
  d["csv"] = to_csv(r);
  return d;
}

StudyConfig config_from(const py::dict& d) {
  std::vector<std::pair<std::string, std::string>> kv;
  for (const auto& item : d) {
    std::string value;
    if (py::isinstance<py::list>(item.second) || py::isinstance<py::tuple>(item.second)) {
      for (const auto& x : item.second) value += (value.empty() ? "" : ",") + py::str(x).cast<std::string>();
    } else if (py::isinstance<py::bool_>(item.second)) {
      value = item.second.cast<bool>() ? "1" : "0";
    } else {
      value = py::str(item.second).cast<std::string>();
    }
    kv.emplace_back(py::str(item.first).cast<std::string>(), value);
  }
  return make_config(kv);
}

}  // namespace

PYBIND11_MODULE(_geob, m) {
  m.doc() = "Pseudo-spectral solver for the rotating artificial-compressibility system";

  py::register_exception<RepresentationError>(m, "RepresentationError", PyExc_TypeError);
  py::register_exception<NumericalAbort>(m, "NumericalAbort", PyExc_RuntimeError);
  py::register_exception<RecurrenceViolation>(m, "RecurrenceViolation", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<Grid, std::shared_ptr<Grid>>(m, "Grid")
      .def_property_readonly("L_h", &Grid::L_h)
      .def_property_readonly("N_h", &Grid::N_h)
      .def_property_readonly("N_v", &Grid::N_v)
      .def_property_readonly("dealias_fraction", &Grid::dealias_fraction)
      .def_property_readonly("dx", &Grid::dx)
      .def_property_readonly("volume", &Grid::volume)
      .def("wavenumber", &Grid::wavenumber)
      .def("vertical_wavenumber", &Grid::vertical_wavenumber)
      .def("x", &Grid::x)
      .def("x3", &Grid::x3);
  m.def(
      "make_grid",
      [](double L_h, int N_h, int N_v, double f) {
        return std::const_pointer_cast<Grid>(make_grid(L_h, N_h, N_v, f));
      },
      py::arg("L_h"), py::arg("N_h"), py::arg("N_v"), py::arg("dealias_fraction") = 2.0 / 3.0);

  py::class_<ScalarField>(m, "ScalarField")
      .def(py::init([](const std::shared_ptr<Grid>& g, const std::string& parity, const std::string& space) {
             return ScalarField(grid_of(g), parse_parity(parity), parse_space(space));
           }),
           py::arg("grid"), py::arg("parity") = "even", py::arg("space") = "spectral")
      .def_static("from_array", &scalar_from, py::arg("grid"), py::arg("parity"), py::arg("data"),
                  py::arg("space") = "physical")
      .def_property_readonly("parity", [](const ScalarField& f) { return std::string(to_string(f.parity())); })
      .def_property_readonly("space", [](const ScalarField& f) { return std::string(space_name(f.space())); })
      .def("array",
           [](const ScalarField& f) {
             const Grid& g = f.grid();
             return to_array(f.values(), {g.N_v(), g.N_h(), g.N_h()});
           })
      .def("to_spectral", [](const ScalarField& f) { return to_spectral(f); })
      .def("to_physical", [](const ScalarField& f) { return to_physical(f); })
      .def("norm", [](const ScalarField& f) { return norm(f); })
      .def(py::self + py::self)
      .def(py::self - py::self)
      .def(double() * py::self);

  py::class_<HField>(m, "HField")
      .def(py::init([](const std::shared_ptr<Grid>& g, const std::string& space) {
             return HField(grid_of(g), parse_space(space));
           }),
           py::arg("grid"), py::arg("space") = "spectral")
      .def_static("from_array", &hfield_from, py::arg("grid"), py::arg("data"), py::arg("space") = "physical")
      .def_property_readonly("space", [](const HField& f) { return std::string(space_name(f.space())); })
      .def("array",
           [](const HField& f) {
             const int n = f.grid().N_h();
             return to_array(f.values(), {n, n});
           })
      .def("to_spectral", [](const HField& f) { return to_spectral(f); })
      .def("to_physical", [](const HField& f) { return to_physical(f); })
      .def("norm", [](const HField& f) { return norm(f); })
      .def(py::self + py::self)
      .def(py::self - py::self)
      .def(double() * py::self);

  py::class_<VectorField>(m, "VectorField")
      .def(py::init([](const ScalarField& a, const ScalarField& b, const ScalarField& c) {
        return VectorField{{a, b, c}};
      }))
      .def("__getitem__",
           [](const VectorField& u, int i) {
             if (i < 0 || i > 2) throw py::index_error();
             return u[i];
           })
      .def("__len__", [](const VectorField&) { return 3; })
      .def("norm", [](const VectorField& u) { return norm(u); });
  m.def("make_velocity", [](const std::shared_ptr<Grid>& g) { return make_velocity(grid_of(g)); });

  py::enum_<Axis>(m, "Axis").value("x1", Axis::x1).value("x2", Axis::x2).value("x3", Axis::x3);
  m.def("diff", py::overload_cast<const ScalarField&, Axis>(&diff));
  m.def("grad", &grad);
  m.def("div", &geob::div);
  m.def("laplacian", py::overload_cast<const ScalarField&>(&laplacian));
  m.def("leray_P", &leray_P);
  m.def("leray_Q", &leray_Q);
  m.def("leray_decompose", [](const VectorField& u) {
    auto parts = leray_decompose(u);
    return py::make_tuple(parts.solenoidal, parts.potential);
  });
  m.def("vertical_average", &vertical_average);
  m.def("lift", &lift);
  m.def("oscillation", &oscillation);
  m.def("vertical_antiderivative", &vertical_antiderivative, py::arg("f"), py::arg("tol") = 1e-12);
  m.def("vorticity_component", &vorticity_component);
  m.def("dealias", py::overload_cast<const ScalarField&>(&dealias));
  m.def("norm", py::overload_cast<const ScalarField&>(&norm));
  m.def("norm", py::overload_cast<const VectorField&>(&norm));
  m.def("norm", py::overload_cast<const HField&>(&norm));

  py::class_<ACParams>(m, "ACParams")
      .def(py::init([](double eps, double beta, double mu, bool nonlinear, double cfl, bool strict_cfl) {
             ACParams p{eps, beta, mu, nonlinear, cfl, strict_cfl};
             p.validate();
             return p;
           }),
           py::arg("eps") = 0.1, py::arg("beta") = 1.0, py::arg("mu") = 1.0, py::arg("nonlinear") = true,
           py::arg("cfl") = 0.5, py::arg("strict_cfl") = false)
      .def_readwrite("eps", &ACParams::eps)
      .def_readwrite("beta", &ACParams::beta)
      .def_readwrite("mu", &ACParams::mu)
      .def_readwrite("nonlinear", &ACParams::nonlinear)
      .def_readwrite("cfl", &ACParams::cfl)
      .def_readwrite("strict_cfl", &ACParams::strict_cfl)
      .def("warnings", &ACParams::warnings);

  py::class_<ACState>(m, "ACState")
      .def(py::init([](const VectorField& u, const ScalarField& p, double t) { return ACState{u, p, t}; }),
           py::arg("u"), py::arg("p"), py::arg("t") = 0.0)
      .def_readwrite("u", &ACState::u)
      .def_readwrite("p", &ACState::p)
      .def_readwrite("t", &ACState::t);
  m.def("make_state", [](const std::shared_ptr<Grid>& g) { return make_state(grid_of(g)); });

  m.def("mode_matrix", &mode_matrix);
  m.def("energy", &energy);
  m.def("nonlinear_rhs", py::overload_cast<const VectorField&>(&nonlinear_rhs));
  m.def("step", &step);
  m.def(
      "run",
      [](const ACParams& p, const ACState& ic, double T, double dt, long snap_every, bool keep) {
        RunOptions o;
        o.snap_every = snap_every;
        o.keep_snapshots = keep;
        const Trajectory tr = run(p, ic, T, dt, o);
        const EnergyReport er = check_energy(tr);
        py::dict d;
        d["times"] = tr.times;
        d["energies"] = tr.energies;
        d["dissipation"] = tr.dissipation;
        d["snapshots"] = tr.snapshots;
        d["steps"] = tr.steps;
        d["dt"] = tr.dt;
        d["cfl_violations"] = tr.cfl_violations;
        d["warnings"] = tr.warnings;
        d["energy_ok"] = er.pass;
        d["energy_excess"] = er.max_excess;
        return d;
      },
      py::arg("params"), py::arg("ic"), py::arg("T"), py::arg("dt"), py::arg("snap_every") = 1,
      py::arg("keep_snapshots") = true);

  m.def("eigenvalues", &eigenvalues);
  m.def("acoustic_block", &acoustic_block);
  m.def("apply_W", &apply_W);
  m.def("kernel_project", &kernel_project);
  m.def("complement_project", &complement_project);
  m.def("propagate", &propagate);
  m.def("truncate", py::overload_cast<const ACState&, double>(&truncate));
  m.def("half_wave", py::overload_cast<const HField&, double>(&half_wave));
  m.def("box_indicator", [](const std::shared_ptr<Grid>& g, double side) { return box_indicator(grid_of(g), side); });
  m.def("bump", [](const std::shared_ptr<Grid>& g, double r) { return bump(grid_of(g), r); });
  m.def("recurrence_time", [](const std::shared_ptr<Grid>& g, double side, double eps, double m) {
    return recurrence_time(*g, side, eps, m);
  });
  m.def("local_decay_functional",
        py::overload_cast<const HField&, double, double, double, double, int>(&local_decay_functional),
        py::arg("v"), py::arg("m"), py::arg("eps"), py::arg("T"), py::arg("K_side"), py::arg("samples") = 0);
  m.def("rage_functional",
        py::overload_cast<const ACState&, const HField&, double, double, double, int>(&rage_functional),
        py::arg("X"), py::arg("chi"), py::arg("eps"), py::arg("T"), py::arg("M"), py::arg("samples") = 200);
  m.def("mode_table", [](const std::shared_ptr<Grid>& g, double M) {
    std::ostringstream os;
    write_mode_table(os, *g, M);
    return os.str();
  });

  m.def("streamfunction", &streamfunction);
  m.def("vorticity_2d", &vorticity_2d);
  m.def("nse2d_step", [](const HField& omega, double t, double dt, double nu) {
    const NSE2DState s = nse2d_step(NSE2DState{omega, t}, dt, nu);
    return py::make_tuple(s.omega, s.t);
  }, py::arg("omega"), py::arg("t"), py::arg("dt"), py::arg("nu") = 1.0);
  m.def("qg_step", [](const HField& pi, double t, double dt, double nu, int sign) {
    QGParams p;
    p.nu = nu;
    p.jacobian_sign = sign;
    const QGState s = qg_step(QGState{pi, t}, dt, p);
    return py::make_tuple(s.pi, s.t);
  }, py::arg("pi"), py::arg("t"), py::arg("dt"), py::arg("nu") = 1.0, py::arg("jacobian_sign") = -1);
  m.def("geostrophic_velocity", &geostrophic_velocity);

  m.def("snapshot_text", [](const ScalarField& f, double t) {
    std::ostringstream os;
    write_snapshot(os, f, t);
    return os.str();
  });
  m.def("read_scalar_snapshot", [](const std::string& text, const std::shared_ptr<Grid>& g) {
    std::istringstream is(text);
    auto s = read_scalar_snapshot(is, grid_of(g));
    return py::make_tuple(s.field, s.t);
  });

  m.def(
      "gen_initial_data",
      [](const py::dict& config) {
        const StudyConfig c = config_from(config);
        return gen_initial_data(c, make_study_grid(c));
      },
      py::arg("config"));
  m.def(
      "run_study",
      [](const py::dict& config, bool serial) {
        const StudyConfig c = config_from(config);
        RunControl rc;
        rc.serial = serial;
        StudyResult r;
        {
          py::gil_scoped_release release;
          r = run_study(c, rc);
        }
        return result_dict(r);
      },
      py::arg("config"), py::arg("serial") = true);
  m.def("cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "geob");
    return cli(args);
  });
}
