#include "twistedp/mesh_io.hpp"

#include "twistedp/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace twistedp {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorKind::io, "cannot write " + path.string());
    }
    return out;
}

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::filesystem::path sidecar(const std::filesystem::path& p)
{
    return p.string() + ".json";
}

void write_obj(const PeriodicMesh& mesh, const std::filesystem::path& path)
{
    std::ofstream out = open_out(path);
    out << "# " << mesh.id << "\n";
    for (const Vec3& p : mesh.positions) {
        out << "v " << num(p.x()) << ' ' << num(p.y()) << ' ' << num(p.z()) << '\n';
    }
    for (const Face& f : mesh.faces) {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }

    json j;
    j["id"] = mesh.id;
    j["side"] = {mesh.side.num, mesh.side.den};
    j["ambient"] = to_string(mesh.ambient);
    json deck = json::array();
    for (const auto& g : mesh.deck) {
        deck.push_back(g.to_string());
    }
    j["deck"] = deck;
    json lifts = json::array();
    json shifts = json::array();
    for (int f = 0; f < mesh.face_count(); ++f) {
        json face = json::array();
        for (const auto& l : mesh.lifts[f]) {
            face.push_back({l.element, l.lattice[0], l.lattice[1], l.lattice[2]});
        }
        lifts.push_back(face);
        if (mesh.ambient == Ambient::torus) {
            json fs = json::array();
            for (int c = 0; c < 3; ++c) {
                const IVec3 s = mesh.half_edge_shift(f, c);
                fs.push_back({s[0], s[1], s[2]});
            }
            shifts.push_back(fs);
        }
    }
    j["lifts"] = lifts;
    if (mesh.ambient == Ambient::torus) {
        j["half_edge_shifts"] = shifts;
    }
    open_out(sidecar(path)) << j.dump() << '\n';
}

void write_ply(const PeriodicMesh& mesh, const std::filesystem::path& path)
{
    std::ofstream out = open_out(path);
    out << "ply\nformat ascii 1.0\ncomment " << mesh.id << "\ncomment coordinates wrapped into [0, "
        << num(mesh.side.value()) << ")^3\nelement vertex " << mesh.vertex_count()
        << "\nproperty double x\nproperty double y\nproperty double z\nelement face " << mesh.face_count()
        << "\nproperty list uchar int vertex_indices\nend_header\n";
    for (const Vec3& p : mesh.positions) {
        const Vec3 w = wrap(p, mesh.side).coords;
        out << num(w.x()) << ' ' << num(w.y()) << ' ' << num(w.z()) << '\n';
    }
    for (const Face& f : mesh.faces) {
        out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
    }
}

} // namespace

void export_mesh(const PeriodicMesh& mesh, const std::filesystem::path& path, MeshFormat format)
{
    if (mesh.empty() || mesh.positions.empty()) {
        throw Error(ErrorKind::invalid_argument, "cannot export an empty mesh");
    }
    if (format == MeshFormat::obj_sidecar) {
        write_obj(mesh, path);
    } else {
        write_ply(mesh, path);
    }
}

PeriodicMesh import_mesh(const std::filesystem::path& obj_path)
{
    std::ifstream in(obj_path);
    std::ifstream side_in(sidecar(obj_path));
    if (!in || !side_in) {
        throw Error(ErrorKind::io, "cannot read " + obj_path.string() + " and its sidecar");
    }
    PeriodicMesh m;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            Vec3 p;
            ls >> p.x() >> p.y() >> p.z();
            m.positions.push_back(p);
        } else if (tag == "f") {
            Face f;
            ls >> f[0] >> f[1] >> f[2];
            for (int& v : f) {
                --v;
            }
            m.faces.push_back(f);
        }
        if (!ls && tag != "#" && !tag.empty()) {
            throw Error(ErrorKind::io, "malformed OBJ line: " + line);
        }
    }
    json j;
    try {
        side_in >> j;
        m.id = j.at("id").get<std::string>();
        m.side = Side{j.at("side").at(0).get<int>(), j.at("side").at(1).get<int>()};
        m.ambient = j.at("ambient").get<std::string>() == "torus" ? Ambient::torus : Ambient::orbifold;
        for (const auto& g : j.at("deck")) {
            m.deck.push_back(AffineIsometry::parse(g.get<std::string>(), m.side));
        }
        for (const auto& face : j.at("lifts")) {
            std::array<CornerLift, 3> l;
            for (int c = 0; c < 3; ++c) {
                const auto& e = face.at(c);
                l[c].element = e.at(0).get<int>();
                l[c].lattice = {e.at(1).get<int>(), e.at(2).get<int>(), e.at(3).get<int>()};
            }
            m.lifts.push_back(l);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::io, std::string("malformed sidecar: ") + e.what());
    }
    const int V = m.vertex_count();
    if (m.lifts.size() != m.faces.size() || m.deck.empty()) {
        throw Error(ErrorKind::io, "sidecar does not match the OBJ");
    }
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        for (int c = 0; c < 3; ++c) {
            if (m.faces[f][c] < 0 || m.faces[f][c] >= V || m.lifts[f][c].element < 0 ||
                m.lifts[f][c].element >= static_cast<int>(m.deck.size())) {
                throw Error(ErrorKind::io, "face or lift index out of range");
            }
        }
    }
    return m;
}

} // namespace twistedp
