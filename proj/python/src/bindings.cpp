#include "stokescell/rescale.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace stokescell;

namespace {

ShapeSpec spec_of(const std::string& json_text) { return shape_from_json(nlohmann::json::parse(json_text)); }

// (m, 3) or (m, 2) array -> points
std::vector<Vec3> points(const Eigen::Ref<const Eigen::MatrixXd>& p) {
  if (p.cols() < 2 || p.cols() > 3) throw InputError("points must have 2 or 3 columns");
  std::vector<Vec3> x(p.rows(), Vec3::Zero());
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j) x[i][j] = p(i, j);
  return x;
}

Eigen::MatrixXd rows(const std::vector<Vec3>& v, int dim) {
  Eigen::MatrixXd m(v.size(), dim);
  for (std::size_t i = 0; i < v.size(); ++i) m.row(i) = v[i].head(dim).transpose();
  return m;
}

FieldMode mode_of(bool exact) { return exact ? FieldMode::exact : FieldMode::fast; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stokes layer potentials, capacity matrices and cell correctors";
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);

  py::class_<BoundaryMesh>(m, "Mesh")
      .def(py::init([](const std::string& shape, const std::string& n) {
             return build_mesh(spec_of(shape), parse_mesh_size(n));
           }),
           py::arg("shape"), py::arg("n"))
      .def_readonly("dim", &BoundaryMesh::dim)
      .def_readonly("n", &BoundaryMesh::n)
      .def_property_readonly("nodes", [](const BoundaryMesh& b) { return rows(b.x, b.dim); })
      .def_property_readonly("normals", [](const BoundaryMesh& b) { return rows(b.normal, b.dim); })
      .def_property_readonly("weights", [](const BoundaryMesh& b) { return b.w; })
      .def("perimeter", &BoundaryMesh::perimeter)
      .def("volume", &BoundaryMesh::volume);

  py::class_<CapacityResult>(m, "Capacity")
      .def_readonly("dim", &CapacityResult::dim)
      .def_readonly("A", &CapacityResult::A)
      .def_readonly("M", &CapacityResult::M)
      .def_readonly("kernel_residual", &CapacityResult::kernel_residual)
      .def("to_json", [](const CapacityResult& c) { return capacity_to_json(c).dump(); });
  m.def("capacity", [](const BoundaryMesh& mesh) { return solve_kernel_basis(mesh); }, py::arg("mesh"));
  m.def(
      "energy_identity_dev",
      [](const BoundaryMesh& mesh) {
        LayerOperators ops = assemble_layer_operators(mesh);
        return energy_identity_check(mesh, ops, solve_kernel_basis(mesh, ops)).rel_dev;
      },
      py::arg("mesh"));
  m.def(
      "rescaling_law",
      [](const std::string& shape, const std::vector<double>& scales, int n) {
        RescalingReport r = rescaling_law_check(spec_of(shape), scales, n);
        return py::make_tuple(r.A, r.max_dev, r.max_dev_plus);
      },
      py::arg("shape"), py::arg("scales"), py::arg("n") = 256,
      "(A per scale, deviation from A_T - log(s)/(4 pi) I, deviation of the '+' variant)");

  m.def(
      "green_selftest",
      [](int dim) {
        GreenSelfTest t = green_selftest(dim);
        return py::make_tuple(t.max_alpha_variation, t.max_fourier_dev);
      },
      py::arg("dim"));

  py::class_<RegimeParams>(m, "RegimeParams")
      .def_readonly("dim", &RegimeParams::dim)
      .def_readonly("eps", &RegimeParams::eps)
      .def_readonly("eta", &RegimeParams::eta)
      .def_readonly("sigma", &RegimeParams::sigma)
      .def_readonly("kappa", &RegimeParams::kappa)
      .def_property_readonly("regime", [](const RegimeParams& p) { return regime_name(p.regime); });
  m.def("classify", [](int dim, double eps, double eta) { return classify(dim, eps, eta); }, py::arg("dim"),
        py::arg("eps"), py::arg("eta"));
  m.def(
      "effective_model",
      [](const CapacityResult& cap, const RegimeParams& p) {
        return effective_to_json(effective_coefficients(cap, p)).dump();
      },
      py::arg("capacity"), py::arg("params"));

  py::class_<Hole, std::shared_ptr<Hole>>(m, "Hole")
      .def(py::init([](const std::string& shape, const std::string& n) {
             return std::const_pointer_cast<Hole>(make_hole(spec_of(shape), parse_mesh_size(n)));
           }),
           py::arg("shape"), py::arg("n"))
      .def_property_readonly("capacity", [](const Hole& h) { return h.capacity; })
      .def_readonly("volume", &Hole::volume);

  py::class_<CellAverages>(m, "CellAverages")
      .def_property_readonly("chi", [](const CellAverages& a) { return Eigen::Vector3d(a.chi); })
      .def_readonly("omega", &CellAverages::omega)
      .def_readonly("energy", &CellAverages::energy)
      .def_readonly("grad_norm", &CellAverages::grad_norm)
      .def_property_readonly("chi_minus_Aek", [](const CellAverages& a) { return Eigen::Vector3d(a.chi_minus_Aek); });

  py::class_<CellCorrector>(m, "CellCorrector")
      .def(py::init([](std::shared_ptr<Hole> hole, double eta, int k) {
             return solve_cell(make_cell_setup(hole, eta), k);
           }),
           py::arg("hole"), py::arg("eta"), py::arg("k"))
      .def_readonly("dim", &CellCorrector::dim)
      .def_readonly("k", &CellCorrector::k)
      .def_readonly("eta", &CellCorrector::eta)
      .def_readonly("solve_dev", &CellCorrector::solve_dev)
      .def(
          "chi", [](const CellCorrector& c, const Eigen::MatrixXd& p, bool exact) { return c.chi(points(p), mode_of(exact)); },
          py::arg("points"), py::arg("exact") = false)
      .def(
          "omega",
          [](const CellCorrector& c, const Eigen::MatrixXd& p, bool exact) { return c.omega(points(p), mode_of(exact)); },
          py::arg("points"), py::arg("exact") = false)
      .def("averages", [](const CellCorrector& c) { return corrector_average(c); })
      .def("boundary_residual", [](const CellCorrector& c) { return boundary_residual(c); });
}
