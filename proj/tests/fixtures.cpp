#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace twistedp::testing {

PeriodicMesh icosphere(int subdivisions, double radius, const Vec3& center)
{
    const double t = (1 + std::sqrt(5.0)) / 2;
    std::vector<Vec3> p = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                           {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                           {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                           {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (auto& v : p) {
        v.normalize();
    }
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) {
                return it->second;
            }
            p.push_back((p[a] + p[b]).normalized());
            return mid[key] = static_cast<int>(p.size()) - 1;
        };
        std::vector<Face> next;
        for (const Face& tri : f) {
            const int ab = midpoint(tri[0], tri[1]), bc = midpoint(tri[1], tri[2]), ca = midpoint(tri[2], tri[0]);
            next.push_back({tri[0], ab, ca});
            next.push_back({tri[1], bc, ab});
            next.push_back({tri[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        f = std::move(next);
    }
    for (auto& v : p) {
        v = center + radius * v;
    }
    return make_torus_mesh("icosphere", kUnitSide, std::move(p), std::move(f));
}

PeriodicMesh flat_torus(int m, Side side, double height)
{
    const double h = side.value() / m;
    std::vector<Vec3> p;
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            p.emplace_back(i * h, j * h, height);
        }
    }
    std::vector<Face> faces;
    std::vector<std::array<CornerLift, 3>> lifts;
    auto corner = [&](int i, int j) {
        CornerLift l;
        l.lattice = {i / m, j / m, 0};
        return std::pair{(j % m) * m + i % m, l};
    };
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            for (const auto& tri : {std::array<std::array<int, 2>, 3>{{{i, j}, {i + 1, j}, {i + 1, j + 1}}},
                                    std::array<std::array<int, 2>, 3>{{{i, j}, {i + 1, j + 1}, {i, j + 1}}}}) {
                Face face;
                std::array<CornerLift, 3> lift;
                for (int c = 0; c < 3; ++c) {
                    std::tie(face[c], lift[c]) = corner(tri[c][0], tri[c][1]);
                }
                faces.push_back(face);
                lifts.push_back(lift);
            }
        }
    }
    return make_torus_mesh("flat_torus", side, std::move(p), std::move(faces), std::move(lifts));
}

const SigmaStage& sigma(int n)
{
    static std::map<int, SigmaStage> cache;
    auto it = cache.find(n);
    if (it == cache.end()) {
        it = cache.emplace(n, build_sigma(n, RelaxOptions{})).first;
    }
    return it->second;
}

const TwistedStage& twisted(int n)
{
    static std::map<int, TwistedStage> cache;
    auto it = cache.find(n);
    if (it == cache.end()) {
        it = cache.emplace(n, build_twisted(sigma(n).mesh)).first;
    }
    return it->second;
}

} // namespace twistedp::testing
