#include "twistedp/error.hpp"
#include "twistedp/pipeline.hpp"
#include "twistedp/symmetry_analysis.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace twistedp;

namespace {

Eigen::MatrixXd positions(const PeriodicMesh& m)
{
    Eigen::MatrixXd p(m.vertex_count(), 3);
    for (int v = 0; v < m.vertex_count(); ++v) {
        p.row(v) = m.positions[v].transpose();
    }
    return p;
}

Eigen::MatrixXi faces(const PeriodicMesh& m)
{
    Eigen::MatrixXi f(m.face_count(), 3);
    for (int i = 0; i < m.face_count(); ++i) {
        f.row(i) << m.faces[i][0], m.faces[i][1], m.faces[i][2];
    }
    return f;
}

py::dict topology_dict(const PeriodicMesh& m)
{
    const Topology t = topology(m);
    py::dict d;
    d["vertices"] = t.vertices;
    d["edges"] = t.edges;
    d["faces"] = t.faces;
    d["euler"] = t.euler;
    d["genus"] = t.genus;
    d["orientable"] = t.orientable;
    d["boundary_loops"] = t.boundary_loops;
    return d;
}

std::vector<std::string> element_strings(const CrystalGroup& g)
{
    std::vector<std::string> out;
    for (const auto& e : g.elements()) {
        out.push_back(e.to_string());
    }
    return out;
}

CrystalGroup group_by_name(const std::string& name)
{
    if (name == "I222") {
        return i222();
    }
    if (name == "Immm") {
        return immm();
    }
    if (name == "Im-3m") {
        return schwarz_p_symmetry(kHalfSide);
    }
    throw Error(ErrorKind::invalid_argument, "unknown group '" + name + "'");
}

py::dict spectrum_dict(SpectrumReport r, double refinement_error)
{
    py::dict d;
    if (refinement_error >= 0) {
        index_nullity(r, refinement_error);
        d["index"] = r.index;
        d["nullity"] = r.nullity;
        d["delta"] = r.delta;
        d["ambiguous"] = r.ambiguous;
    }
    d["eigenvalues"] = r.eigenvalues;
    d["ground_sign_definite"] = r.ground_sign_definite;
    d["rayleigh_defect"] = r.rayleigh_defect;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Schwarz P, its twisted quotient and the smoothing body";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

    m.def("group_elements", [](const std::string& name) { return element_strings(group_by_name(name)); },
          py::arg("name"), "Elements of I222, Immm or Im-3m in (+-x+s, +-y+s, +-z+s) notation.");
    m.def(
        "classify",
        [](const std::string& text, int den) { return to_string(classify(AffineIsometry::parse(text, Side{1, den}))); },
        py::arg("motion"), py::arg("side_denominator") = 1);
    m.def(
        "compose",
        [](const std::string& g, const std::string& h) {
            return compose(AffineIsometry::parse(g, kUnitSide), AffineIsometry::parse(h, kUnitSide)).to_string();
        },
        py::arg("g"), py::arg("h"));
    m.def("singular_net", [] {
        const SingularSet s = singular_set(i222());
        return py::make_tuple(s.lines.size(), s.quotient.edges, s.quotient.vertices);
    });

    py::class_<PeriodicMesh>(m, "Mesh")
        .def_readonly("id", &PeriodicMesh::id)
        .def_property_readonly("side", [](const PeriodicMesh& p) { return p.side.value(); })
        .def_property_readonly("ambient", [](const PeriodicMesh& p) { return to_string(p.ambient); })
        .def_property_readonly("positions", &positions)
        .def_property_readonly("faces", &faces)
        .def_property_readonly("area", &total_area)
        .def("topology", &topology_dict)
        .def("export", [](const PeriodicMesh& p, const std::string& path,
                          const std::string& format) {
            export_mesh(p, path, format == "ply" ? MeshFormat::ply : MeshFormat::obj_sidecar);
        }, py::arg("path"), py::arg("format") = "obj");

    m.def("import_mesh", [](const std::string& path) { return import_mesh(path); }, py::arg("path"));
    m.def(
        "schwarz_p",
        [](int n, double tol, int max_iter) {
            RelaxOptions o;
            o.tol = tol;
            o.max_iter = max_iter;
            return build_sigma(n, o).mesh;
        },
        py::arg("n") = 32, py::arg("tol") = 1e-3, py::arg("max_iter") = 2000,
        "Seed and relax the P surface in T^3(1/2).");
    m.def("seed_p_surface", [](int n) { return seed_p_surface(kHalfSide, n); }, py::arg("n"));
    m.def("pullback", &pullback_mesh);
    m.def("twisted_quotient", [](const PeriodicMesh& pullback) { return quotient_mesh(pullback, i222()).mesh; });
    m.def("detect_lines", [](const PeriodicMesh& p) {
        std::vector<py::tuple> out;
        for (const auto& l : detect_lines(p)) {
            out.push_back(py::make_tuple(l.normal_axis, l.height, l.length));
        }
        return out;
    });
    m.def("symmetry_deviation", [](const PeriodicMesh& p, const std::string& group) {
        return verify_mesh_symmetry(p, group_by_name(group));
    });
    m.def(
        "spectrum",
        [](const PeriodicMesh& p, int k, double refinement_error) {
            return spectrum_dict(spectrum(p, k), refinement_error);
        },
        py::arg("mesh"), py::arg("k") = 8, py::arg("refinement_error") = -1.0,
        "Lowest k eigenvalues of the Jacobi operator; index and nullity when a refinement error is given.");
    m.def(
        "catenoid_spectrum",
        [](const PeriodicMesh& p, int k) {
            const CatenoidResult c = extract_catenoid(p);
            py::dict d = spectrum_dict(dirichlet_spectrum(c.annulus, k), -1);
            d["square_sides"] = c.square_sides;
            d["loop_offset"] = c.loop_offset;
            return d;
        },
        py::arg("mesh"), py::arg("k") = 6);

    m.def(
        "smoothing",
        [](double eps, int samples, std::uint64_t seed) {
            const SmoothingReport r = smoothing_report(eps, samples, seed);
            const Claim c = claim_smoothing(r);
            py::dict d;
            for (const auto& [k, v] : c.measured) {
                d[py::str(k)] = v;
            }
            d["pass"] = c.pass;
            return d;
        },
        py::arg("epsilon") = 0.05, py::arg("samples") = 4000, py::arg("seed") = 1);

    m.def(
        "certify",
        [](const std::string& config_json) {
            const Certificate cert = run(parse_config(config_json));
            return py::make_tuple(cert.all_pass(), cert.body_json());
        },
        py::arg("config_json") = "{}",
        "Run the pipeline for a JSON configuration; returns (all_pass, certificate body JSON).");
    m.def("fnv1a", &fnv1a_hex);
}
