#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace ensflow {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned rectangle [x0,x1] x [y0,y1].
struct Rectangle {
  double x0 = 0.0, x1 = 1.0;
  double y0 = 0.0, y1 = 1.0;

  double area() const { return (x1 - x0) * (y1 - y0); }
};

/// Rectangle with an axis-aligned rectangular obstacle removed. The obstacle
/// must touch the outer boundary (a step on a wall).
struct SteppedRectangle {
  Rectangle outer;
  Rectangle obstacle;

  double area() const { return outer.area() - obstacle.area(); }
};

using Domain = std::variant<Rectangle, SteppedRectangle>;

double domain_area(const Domain& domain);

/// Conforming triangulation with edge connectivity and boundary labels.
///
/// Local edge k of a cell joins local vertices (k+1)%3 and (k+2)%3, i.e. it
/// is opposite vertex k. Immutable after construction.
class TriMesh {
 public:
  TriMesh() = default;

  /// Builds edge connectivity and validates orientation. `h` is the width
  /// label of the generating grid (max circumdiameter before refinement).
  TriMesh(std::vector<Point> nodes, std::vector<std::array<int, 3>> cells,
          double h);

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<std::array<int, 3>>& cells() const { return cells_; }
  const std::vector<std::array<int, 2>>& edges() const { return edges_; }
  /// Cells adjacent to each edge; second entry is -1 for boundary edges.
  const std::vector<std::array<int, 2>>& edge_cells() const {
    return edge_cells_;
  }
  const std::vector<std::array<int, 3>>& cell_edges() const {
    return cell_edges_;
  }
  /// Parent cell of the generating mesh (identity for unrefined meshes).
  const std::vector<int>& cell_parent() const { return cell_parent_; }

  std::size_t n_nodes() const { return nodes_.size(); }
  std::size_t n_cells() const { return cells_.size(); }
  std::size_t n_edges() const { return edges_.size(); }

  bool is_boundary_edge(int e) const { return edge_cells_[e][1] < 0; }
  std::vector<int> boundary_edges() const;

  /// Tag of a boundary edge ("" when unclassified or interior).
  const std::string& boundary_tag(int e) const { return tags_[e]; }
  const std::vector<std::string>& boundary_tags() const { return tags_; }

  double signed_area(int cell) const;
  double total_area() const;
  /// Grid width label carried through refinement.
  double h() const { return h_; }
  /// Max circumdiameter over the current cells.
  double max_circumdiameter() const;

  /// Throws std::logic_error if any TriMesh invariant is violated.
  void validate() const;

 private:
  friend TriMesh barycentric_refine(const TriMesh& mesh);
  friend struct BoundaryClassifier;

  void build_edges();

  std::vector<Point> nodes_;
  std::vector<std::array<int, 3>> cells_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 2>> edge_cells_;
  std::vector<std::array<int, 3>> cell_edges_;
  std::vector<int> cell_parent_;
  std::vector<std::string> tags_;
  double h_ = 0.0;
};

/// Structured diagonal-split mesh (each grid square cut from its lower-left
/// to upper-right corner). For stepped domains the obstacle must lie on grid
/// lines.
TriMesh build_structured_mesh(const Domain& domain, int nx, int ny);

/// Splits every cell into three around its barycenter.
TriMesh barycentric_refine(const TriMesh& mesh);

/// A labelling rule: the edge receives `tag` when `applies(a, b)` holds for
/// its endpoints.
struct BoundaryRule {
  std::string tag;
  std::function<bool(const Point&, const Point&)> applies;
};

/// Returns a copy with every boundary edge labelled by exactly one rule.
/// Throws std::invalid_argument on uncovered or doubly covered edges.
TriMesh classify_boundary(const TriMesh& mesh,
                          const std::vector<BoundaryRule>& rules);

/// Plain-text export: "nodes E cells F", then "x y" rows, then "i j k tag".
void write_mesh(std::ostream& out, const TriMesh& mesh);

}  // namespace ensflow
