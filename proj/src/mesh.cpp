#include "nsgf/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>

#include "mc_tables.hpp"

namespace nsgf {
namespace {

constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

}  // namespace

double TriMesh::area() const {
  double a = 0.0;
  for (const auto& f : faces) {
    a += 0.5 * (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]).norm();
  }
  return a;
}

void TriMesh::validate() const {
  const int n = static_cast<int>(vertices.size());
  for (const auto& f : faces) {
    for (int v : f) {
      if (v < 0 || v >= n) throw InputError("mesh face index out of range");
    }
  }
  if (vertex_normals.size() != vertices.size()) throw InputError("mesh needs one normal per vertex");
  for (const auto& nrm : vertex_normals) {
    if (std::abs(nrm.norm() - 1.0) > 1e-6) throw InputError("mesh vertex normals must be unit length");
  }
}

TriMesh extract_mesh(const OccupancyField& field, double iso) {
  if (!(iso > 0.0 && iso < 1.0)) throw InputError("iso level must lie in (0,1)");
  TriMesh mesh;
  const auto& d = field.dims();
  std::unordered_map<std::uint64_t, int> edge_vertex;

  // Vertex on the grid edge leaving node (i,j,k) along `axis`.
  auto vertex_on_edge = [&](int i, int j, int k, int axis) -> int {
    const std::uint64_t key = static_cast<std::uint64_t>(field.index(i, j, k)) * 3 + axis;
    auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    int i1 = i, j1 = j, k1 = k;
    (axis == 0 ? i1 : axis == 1 ? j1 : k1) += 1;
    const double v0 = field.node(i, j, k), v1 = field.node(i1, j1, k1);
    const double t = (v1 == v0) ? 0.5 : std::clamp((iso - v0) / (v1 - v0), 0.0, 1.0);
    const Vec3 p0 = field.node_position(i, j, k), p1 = field.node_position(i1, j1, k1);
    const int id = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(p0 + t * (p1 - p0));
    edge_vertex.emplace(key, id);
    return id;
  };

  for (int k = 0; k + 1 < d[2]; ++k) {
    for (int j = 0; j + 1 < d[1]; ++j) {
      for (int i = 0; i + 1 < d[0]; ++i) {
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          if (field.node(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]) < iso) cube |= 1 << c;
        }
        if (cube == 0 || cube == 255) continue;
        const auto& tris = detail::kMcTriTable[cube];
        for (int t = 0; t < 16 && tris[t] != -1; t += 3) {
          std::array<int, 3> face{};
          for (int v = 0; v < 3; ++v) {
            const int e = tris[t + v];
            const int* c0 = kCorner[kEdge[e][0]];
            const int* c1 = kCorner[kEdge[e][1]];
            int axis = 0;
            while (c0[axis] == c1[axis]) ++axis;
            face[v] = vertex_on_edge(i + std::min(c0[0], c1[0]), j + std::min(c0[1], c1[1]),
                                     k + std::min(c0[2], c1[2]), axis);
          }
          if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) continue;
          mesh.faces.push_back(face);
        }
      }
    }
  }

  mesh.vertex_normals.resize(mesh.vertices.size(), Vec3::Zero());
  std::vector<Vec3> face_accum(mesh.vertices.size(), Vec3::Zero());
  for (const auto& f : mesh.faces) {
    const Vec3 fn = (mesh.vertices[f[1]] - mesh.vertices[f[0]]).cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]);
    for (int v : f) face_accum[v] += fn;
  }
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    Vec3 n;
    if (!outward_normal(field, mesh.vertices[v], n)) {
      n = face_accum[v].norm() > 0 ? Vec3(face_accum[v].normalized()) : Vec3::UnitZ();
    }
    mesh.vertex_normals[v] = n;
  }
  // Wind every face so its geometric normal agrees with the field normals.
  std::vector<std::array<int, 3>> kept;
  kept.reserve(mesh.faces.size());
  for (auto f : mesh.faces) {
    const Vec3 fn = (mesh.vertices[f[1]] - mesh.vertices[f[0]]).cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]);
    if (!(fn.norm() > 1e-14)) continue;
    const Vec3 avg = mesh.vertex_normals[f[0]] + mesh.vertex_normals[f[1]] + mesh.vertex_normals[f[2]];
    if (fn.dot(avg) < 0) std::swap(f[1], f[2]);
    kept.push_back(f);
  }
  mesh.faces = std::move(kept);
  return mesh;
}

std::vector<SurfaceSample> sample_surface(const TriMesh& mesh, const OccupancyField& field,
                                          std::size_t count, std::uint64_t seed) {
  if (mesh.empty()) throw InputError("cannot sample an empty mesh");
  if (count == 0) throw InputError("sample count must be >= 1");
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& fc = mesh.faces[f];
    total += 0.5 * (mesh.vertices[fc[1]] - mesh.vertices[fc[0]]).cross(mesh.vertices[fc[2]] - mesh.vertices[fc[0]]).norm();
    cumulative[f] = total;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SurfaceSample> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    const double pick = unit(rng) * total;
    std::size_t f = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
    f = std::min(f, mesh.faces.size() - 1);
    const double r1 = std::sqrt(unit(rng)), r2 = unit(rng);
    const double w0 = 1.0 - r1, w1 = r1 * (1.0 - r2), w2 = r1 * r2;
    const auto& fc = mesh.faces[f];
    const Vec3 p = w0 * mesh.vertices[fc[0]] + w1 * mesh.vertices[fc[1]] + w2 * mesh.vertices[fc[2]];
    Vec3 n = w0 * mesh.vertex_normals[fc[0]] + w1 * mesh.vertex_normals[fc[1]] + w2 * mesh.vertex_normals[fc[2]];
    if (n.norm() < 1e-12) {
      n = (mesh.vertices[fc[1]] - mesh.vertices[fc[0]]).cross(mesh.vertices[fc[2]] - mesh.vertices[fc[0]]);
    }
    n.normalize();
    out.push_back({p, n, shape_confidence(field, p)});
  }
  return out;
}

void write_obj(const TriMesh& mesh, std::ostream& os) {
  os << std::setprecision(9);
  for (const auto& v : mesh.vertices) os << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& n : mesh.vertex_normals) os << "vn " << n.x() << ' ' << n.y() << ' ' << n.z() << '\n';
  const bool normals = mesh.vertex_normals.size() == mesh.vertices.size();
  for (const auto& f : mesh.faces) {
    os << 'f';
    for (int v : f) {
      os << ' ' << v + 1;
      if (normals) os << "//" << v + 1;
    }
    os << '\n';
  }
}

TriMesh read_obj(std::istream& is) {
  TriMesh mesh;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Vec3 v;
      ls >> v.x() >> v.y() >> v.z();
      mesh.vertices.push_back(v);
    } else if (tag == "vn") {
      Vec3 n;
      ls >> n.x() >> n.y() >> n.z();
      mesh.vertex_normals.push_back(n.normalized());
    } else if (tag == "f") {
      std::array<int, 3> f{};
      for (int i = 0; i < 3; ++i) {
        std::string tok;
        if (!(ls >> tok)) throw InputError("OBJ face with fewer than 3 vertices");
        f[i] = std::stoi(tok.substr(0, tok.find('/'))) - 1;
      }
      mesh.faces.push_back(f);
    }
  }
  if (mesh.vertex_normals.size() != mesh.vertices.size()) {
    mesh.vertex_normals.assign(mesh.vertices.size(), Vec3::Zero());
    for (const auto& f : mesh.faces) {
      const Vec3 fn = (mesh.vertices[f[1]] - mesh.vertices[f[0]]).cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]);
      for (int v : f) mesh.vertex_normals[v] += fn;
    }
    for (auto& n : mesh.vertex_normals) n = n.norm() > 0 ? Vec3(n.normalized()) : Vec3::UnitZ();
  }
  mesh.validate();
  return mesh;
}

}  // namespace nsgf
