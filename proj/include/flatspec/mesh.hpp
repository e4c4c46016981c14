#pragma once

#include <array>
#include <optional>
#include <vector>

#include "flatspec/surface.hpp"
#include "flatspec/vec.hpp"

namespace flatspec {

// Triangulated view of a half-translation surface. Ear clipping adds no new
// vertices, so every triangle corner sits at a cone point, which makes
// straight-line searches and developments uniform: any developed vertex is a
// singularity.
class TriMesh {
 public:
  struct Tri {
    std::array<Vec2, 3> p;           // coordinates in the source polygon frame
    std::array<int, 3> vclass;       // cone class per corner
    std::array<int, 3> nbr_tri;      // across edge k (corner k -> k+1)
    std::array<int, 3> nbr_edge;
    std::array<IsoMap, 3> from_nbr;  // neighbor frame -> this frame
    std::array<int, 3> source_edge;  // gluing index, or -1 for a diagonal
    int source_poly = 0;
    std::array<int, 3> source_vertex;
  };

  // One corner wedge in the cyclic development around a cone class.
  struct Wedge {
    int tri = 0;
    int corner = 0;
    double start_angle = 0;  // accumulated coordinate of the outgoing edge ray
    double angle = 0;        // interior wedge angle, in (0, pi)
    Vec2 out_dir_dev;        // developed direction of the outgoing edge, unit
    double dev_sign = 1;     // derivative of the wedge chart in the development
  };

  struct VertexFan {
    std::vector<Wedge> wedges;  // cyclic rotational order
    double cone_angle = 0;
  };

  explicit TriMesh(const HalfTranslationSurface& surface);

  const HalfTranslationSurface& surface() const { return *surface_; }
  const std::vector<Tri>& tris() const { return tris_; }
  const std::vector<VertexFan>& fans() const { return fans_; }

  int corner_id(int tri, int corner) const { return 3 * tri + corner; }
  // (cone class, wedge index within the fan) of a triangle corner
  std::pair<int, int> wedge_of_corner(int tri, int corner) const {
    return {corner_fan_[3 * tri + corner], corner_wedge_[3 * tri + corner]};
  }

  // Angle coordinate around the cone class of a ray leaving the given corner
  // in direction `dir` (expressed in the triangle's own frame).
  double ray_coordinate(int tri, int corner, Vec2 dir) const;

  // Inverse: wedge and triangle-frame direction of the ray at `coord`.
  struct RaySeed {
    int tri = 0;
    int corner = 0;
    Vec2 dir;             // unit, triangle frame
    bool along_edge = false;
    int edge = -1;        // when along_edge: the triangle edge the ray follows
  };
  RaySeed seed_ray(int cone_class, double coord) const;

  double point_tol() const { return surface_->point_tol(); }

 private:
  void triangulate(const HalfTranslationSurface& s);
  void build_fans();

  const HalfTranslationSurface* surface_ = nullptr;
  std::vector<Tri> tris_;
  std::vector<VertexFan> fans_;
  std::vector<int> corner_fan_;
  std::vector<int> corner_wedge_;
};

// A point on a triangle edge, as (triangle, edge, parameter along the edge
// from corner e to corner e+1).
struct EdgePoint {
  int tri = -1;
  int edge = -1;
  double t = 0;
};

struct Crossing {
  int tri = -1;   // triangle being entered
  int edge = -1;  // entry edge of that triangle
  double t = 0;   // parameter along the entry edge
};

// Straight-line trace through the mesh. Starting from a point inside (or on
// the boundary of) a triangle, walks in the given direction until it hits a
// cone point, exceeds the length budget, or the step callback stops it.
struct TraceResult {
  bool hit_cone = false;
  int cone_class = -1;
  double length = 0;
  Vec2 displacement;            // in the starting triangle's frame
  std::vector<Crossing> crossings;
  int end_tri = -1;
  Vec2 end_pos;                 // in end_tri's frame
  Vec2 end_dir;                 // in end_tri's frame
  bool budget_exceeded = false;
};

TraceResult trace_ray(const TriMesh& mesh, int tri, Vec2 pos, Vec2 dir,
                      double budget);

}  // namespace flatspec
