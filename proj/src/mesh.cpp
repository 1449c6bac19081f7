#include "ensflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ensflow/format.hpp"

namespace ensflow {

namespace {

double circumdiameter(const Point& a, const Point& b, const Point& c) {
  const double la = std::hypot(b.x - c.x, b.y - c.y);
  const double lb = std::hypot(a.x - c.x, a.y - c.y);
  const double lc = std::hypot(a.x - b.x, a.y - b.y);
  const double twice_area =
      std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
  return la * lb * lc / twice_area;
}

bool near(double a, double b, double scale) {
  return std::abs(a - b) <= 1e-10 * std::max(1.0, scale);
}

// Index of the grid line matching `value`, or -1 when it falls between lines.
int grid_line(double value, double origin, double spacing, double scale) {
  const double s = (value - origin) / spacing;
  const double r = std::round(s);
  return near(s, r, scale / spacing) ? static_cast<int>(r) : -1;
}

}  // namespace

double domain_area(const Domain& domain) {
  return std::visit([](const auto& d) { return d.area(); }, domain);
}

TriMesh::TriMesh(std::vector<Point> nodes,
                 std::vector<std::array<int, 3>> cells, double h)
    : nodes_(std::move(nodes)), cells_(std::move(cells)), h_(h) {
  cell_parent_.resize(cells_.size());
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    cell_parent_[c] = static_cast<int>(c);
  }
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    for (int v : cells_[c]) {
      if (v < 0 || static_cast<std::size_t>(v) >= nodes_.size()) {
        throw std::invalid_argument("cell references a missing node");
      }
    }
    if (signed_area(static_cast<int>(c)) <= 0.0) {
      throw std::invalid_argument("cell " + std::to_string(c) +
                                  " is not counter-clockwise");
    }
  }
  build_edges();
}

void TriMesh::build_edges() {
  std::map<std::pair<int, int>, int> lookup;
  edges_.clear();
  edge_cells_.clear();
  cell_edges_.assign(cells_.size(), {-1, -1, -1});
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    for (int k = 0; k < 3; ++k) {
      int a = cells_[c][(k + 1) % 3];
      int b = cells_[c][(k + 2) % 3];
      if (a > b) std::swap(a, b);
      auto [it, inserted] =
          lookup.try_emplace({a, b}, static_cast<int>(edges_.size()));
      if (inserted) {
        edges_.push_back({a, b});
        edge_cells_.push_back({static_cast<int>(c), -1});
      } else {
        auto& adj = edge_cells_[it->second];
        if (adj[1] >= 0) {
          throw std::invalid_argument("edge shared by more than two cells");
        }
        adj[1] = static_cast<int>(c);
      }
      cell_edges_[c][k] = it->second;
    }
  }
  tags_.assign(edges_.size(), std::string());
}

std::vector<int> TriMesh::boundary_edges() const {
  std::vector<int> out;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edge_cells_[e][1] < 0) out.push_back(static_cast<int>(e));
  }
  return out;
}

double TriMesh::signed_area(int cell) const {
  const auto& c = cells_[cell];
  const Point& a = nodes_[c[0]];
  const Point& b = nodes_[c[1]];
  const Point& p = nodes_[c[2]];
  return 0.5 * ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y));
}

double TriMesh::total_area() const {
  double sum = 0.0;
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    sum += signed_area(static_cast<int>(c));
  }
  return sum;
}

double TriMesh::max_circumdiameter() const {
  double h = 0.0;
  for (const auto& c : cells_) {
    h = std::max(h, circumdiameter(nodes_[c[0]], nodes_[c[1]], nodes_[c[2]]));
  }
  return h;
}

void TriMesh::validate() const {
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    if (!(signed_area(static_cast<int>(c)) > 0.0)) {
      throw std::logic_error("non-positive cell area");
    }
  }
  std::vector<int> count(edges_.size(), 0);
  for (const auto& ce : cell_edges_) {
    for (int e : ce) ++count[e];
  }
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const int expected = edge_cells_[e][1] < 0 ? 1 : 2;
    if (count[e] != expected) throw std::logic_error("edge adjacency broken");
  }
  // Euler characteristic: 1 - holes; boundary loops = 1 + holes.
  const auto bnd = boundary_edges();
  std::vector<std::vector<int>> next(nodes_.size());
  for (int e : bnd) {
    next[edges_[e][0]].push_back(edges_[e][1]);
    next[edges_[e][1]].push_back(edges_[e][0]);
  }
  std::vector<char> seen(nodes_.size(), 0);
  int loops = 0;
  for (int e : bnd) {
    int start = edges_[e][0];
    if (seen[start]) continue;
    ++loops;
    std::vector<int> stack{start};
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      if (seen[v]) continue;
      seen[v] = 1;
      for (int w : next[v]) stack.push_back(w);
    }
  }
  const long euler = static_cast<long>(nodes_.size()) -
                     static_cast<long>(edges_.size()) +
                     static_cast<long>(cells_.size());
  if (euler != 2 - loops) throw std::logic_error("Euler formula violated");
}

TriMesh build_structured_mesh(const Domain& domain, int nx, int ny) {
  if (nx < 1 || ny < 1) {
    throw std::invalid_argument("cell counts must be positive");
  }
  const Rectangle outer = std::visit(
      [](const auto& d) -> Rectangle {
        if constexpr (std::is_same_v<std::decay_t<decltype(d)>, Rectangle>) {
          return d;
        } else {
          return d.outer;
        }
      },
      domain);
  if (!(outer.x1 > outer.x0) || !(outer.y1 > outer.y0)) {
    throw std::invalid_argument("degenerate rectangle");
  }
  const double dx = (outer.x1 - outer.x0) / nx;
  const double dy = (outer.y1 - outer.y0) / ny;
  const double scale = std::max(std::abs(outer.x1), std::abs(outer.y1));

  // Obstacle as a half-open range of grid squares [i0,i1) x [j0,j1).
  int i0 = 0, i1 = 0, j0 = 0, j1 = 0;
  if (const auto* step = std::get_if<SteppedRectangle>(&domain)) {
    const Rectangle& ob = step->obstacle;
    i0 = grid_line(ob.x0, outer.x0, dx, scale);
    i1 = grid_line(ob.x1, outer.x0, dx, scale);
    j0 = grid_line(ob.y0, outer.y0, dy, scale);
    j1 = grid_line(ob.y1, outer.y0, dy, scale);
    if (i0 < 0 || i1 < 0 || j0 < 0 || j1 < 0) {
      std::ostringstream msg;
      msg << "obstacle [" << ob.x0 << "," << ob.x1 << "]x[" << ob.y0 << ","
          << ob.y1 << "] does not lie on the " << nx << "x" << ny
          << " grid lines";
      throw std::invalid_argument(msg.str());
    }
    if (i1 <= i0 || j1 <= j0 || i0 < 0 || i1 > nx || j0 < 0 || j1 > ny) {
      throw std::invalid_argument("obstacle outside the outer rectangle");
    }
    const bool touches = i0 == 0 || i1 == nx || j0 == 0 || j1 == ny;
    if (!touches || (i0 == 0 && i1 == nx) || (j0 == 0 && j1 == ny)) {
      throw std::invalid_argument(
          "obstacle must be a step attached to one wall");
    }
  }
  auto removed = [&](int i, int j) {
    return i >= i0 && i < i1 && j >= j0 && j < j1;
  };

  std::vector<int> id((nx + 1) * (ny + 1), -1);
  std::vector<Point> nodes;
  auto node = [&](int i, int j) {
    int& slot = id[j * (nx + 1) + i];
    if (slot < 0) {
      slot = static_cast<int>(nodes.size());
      const double x = i == nx ? outer.x1 : outer.x0 + i * dx;
      const double y = j == ny ? outer.y1 : outer.y0 + j * dy;
      nodes.push_back({x, y});
    }
    return slot;
  };
  // Nodes are numbered row by row so that the enumeration is reproducible.
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const bool used = (i > 0 && j > 0 && !removed(i - 1, j - 1)) ||
                        (i < nx && j > 0 && !removed(i, j - 1)) ||
                        (i > 0 && j < ny && !removed(i - 1, j)) ||
                        (i < nx && j < ny && !removed(i, j));
      if (used) node(i, j);
    }
  }
  std::vector<std::array<int, 3>> cells;
  cells.reserve(2 * nx * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (removed(i, j)) continue;
      const int a = node(i, j), b = node(i + 1, j);
      const int c = node(i + 1, j + 1), d = node(i, j + 1);
      cells.push_back({a, b, c});
      cells.push_back({a, c, d});
    }
  }
  return TriMesh(std::move(nodes), std::move(cells), std::hypot(dx, dy));
}

TriMesh barycentric_refine(const TriMesh& mesh) {
  std::vector<Point> nodes = mesh.nodes();
  std::vector<std::array<int, 3>> cells;
  std::vector<int> parent;
  cells.reserve(3 * mesh.n_cells());
  parent.reserve(3 * mesh.n_cells());
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const auto& v = mesh.cells()[c];
    const Point& a = mesh.nodes()[v[0]];
    const Point& b = mesh.nodes()[v[1]];
    const Point& p = mesh.nodes()[v[2]];
    const int g = static_cast<int>(nodes.size());
    nodes.push_back({(a.x + b.x + p.x) / 3.0, (a.y + b.y + p.y) / 3.0});
    cells.push_back({v[0], v[1], g});
    cells.push_back({v[1], v[2], g});
    cells.push_back({v[2], v[0], g});
    for (int k = 0; k < 3; ++k) parent.push_back(mesh.cell_parent()[c]);
  }
  TriMesh out(std::move(nodes), std::move(cells), mesh.h());
  out.cell_parent_ = std::move(parent);
  // Boundary edges are unchanged; carry their tags over.
  std::map<std::pair<int, int>, const std::string*> tag_of;
  for (int e : mesh.boundary_edges()) {
    tag_of[{mesh.edges()[e][0], mesh.edges()[e][1]}] = &mesh.boundary_tag(e);
  }
  for (int e : out.boundary_edges()) {
    auto it = tag_of.find({out.edges_[e][0], out.edges_[e][1]});
    if (it == tag_of.end()) {
      throw std::logic_error("refinement changed the boundary");
    }
    out.tags_[e] = *it->second;
  }
  return out;
}

struct BoundaryClassifier {
  static TriMesh apply(const TriMesh& mesh,
                       const std::vector<BoundaryRule>& rules) {
    TriMesh out = mesh;
    for (int e : mesh.boundary_edges()) {
      const Point& a = mesh.nodes()[mesh.edges()[e][0]];
      const Point& b = mesh.nodes()[mesh.edges()[e][1]];
      const std::string* match = nullptr;
      for (const auto& rule : rules) {
        if (!rule.applies(a, b)) continue;
        if (match) {
          throw std::invalid_argument(
              "boundary edge (" + format_double(a.x) + "," +
              format_double(a.y) + ")-(" + format_double(b.x) + "," +
              format_double(b.y) + ") matches both '" + *match + "' and '" +
              rule.tag + "'");
        }
        match = &rule.tag;
      }
      if (!match) {
        throw std::invalid_argument(
            "boundary edge (" + format_double(a.x) + "," + format_double(a.y) +
            ")-(" + format_double(b.x) + "," + format_double(b.y) +
            ") is not covered by any rule");
      }
      out.tags_[e] = *match;
    }
    return out;
  }
};

TriMesh classify_boundary(const TriMesh& mesh,
                          const std::vector<BoundaryRule>& rules) {
  return BoundaryClassifier::apply(mesh, rules);
}

void write_mesh(std::ostream& out, const TriMesh& mesh) {
  out << "nodes " << mesh.n_nodes() << " cells " << mesh.n_cells() << '\n';
  for (const Point& p : mesh.nodes()) {
    out << format_double(p.x) << ' ' << format_double(p.y) << '\n';
  }
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const auto& v = mesh.cells()[c];
    out << v[0] << ' ' << v[1] << ' ' << v[2] << ' ' << mesh.cell_parent()[c]
        << '\n';
  }
}

}  // namespace ensflow
