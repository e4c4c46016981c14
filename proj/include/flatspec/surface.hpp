#pragma once

#include <array>
#include <string>
#include <vector>

#include "flatspec/vec.hpp"

namespace flatspec {

struct PlanarPolygon {
  std::string id;
  std::vector<Vec2> vertices;  // counterclockwise, simple

  int size() const { return static_cast<int>(vertices.size()); }
  Vec2 edge_vector(int e) const {
    return vertices[(e + 1) % size()] - vertices[e];
  }
};

struct EdgeSlot {
  int poly = -1;
  int edge = -1;
  bool operator==(const EdgeSlot&) const = default;
};

struct CornerRef {
  int poly = -1;
  int vertex = -1;
  bool operator==(const CornerRef&) const = default;
};

// sign +1: translation z -> z + c identifies the edges (vectors negate).
// sign -1: flip z -> -z + c (vectors equal).
struct EdgeGluing {
  EdgeSlot a, b;
  int sign = 1;
};

struct ConePoint {
  double angle = 0;  // snapped to an exact multiple of pi
  bool marked = false;
  std::vector<CornerRef> corners;  // cyclic rotational order around the point

  int multiple() const { return static_cast<int>(std::lround(angle / kPi)); }
  int order() const { return multiple() - 2; }
};

// Raw parsed content of a surface file, before validation.
struct SurfaceSpec {
  std::vector<PlanarPolygon> polygons;
  std::vector<EdgeGluing> gluings;
  std::vector<CornerRef> marked;
};

class HalfTranslationSurface {
 public:
  // Validates gluings, derives cone points by corner chasing, and computes
  // genus and area. Throws Error on any violated invariant.
  static HalfTranslationSurface build(const SurfaceSpec& spec);

  const std::vector<PlanarPolygon>& polygons() const { return polygons_; }
  const std::vector<EdgeGluing>& gluings() const { return gluings_; }
  const std::vector<ConePoint>& cone_points() const { return cone_points_; }
  const std::vector<CornerRef>& marked() const { return marked_; }

  double area() const { return area_; }
  int genus() const { return genus_; }
  int num_marked() const { return num_marked_; }
  double diameter() const { return diameter_; }
  double point_tol() const { return 1e-9 * diameter_; }

  int cone_class_of(CornerRef c) const;         // index into cone_points()
  const EdgeGluing& gluing_of(EdgeSlot s) const;  // the unique gluing using s
  EdgeSlot partner(EdgeSlot s) const;
  // Map from the frame of partner(s)'s polygon into the frame of s's
  // polygon, across the gluing.
  IsoMap transition_from_partner(EdgeSlot s) const;

  HalfTranslationSurface applied(const Mat2& m) const;  // SL(2,R) deformation
  HalfTranslationSurface rotated(double theta) const;
  HalfTranslationSurface area_normalized() const;

  SurfaceSpec spec() const;

 private:
  HalfTranslationSurface() = default;

  std::vector<PlanarPolygon> polygons_;
  std::vector<EdgeGluing> gluings_;
  std::vector<ConePoint> cone_points_;
  std::vector<CornerRef> marked_;
  std::vector<std::vector<int>> corner_class_;  // [poly][vertex] -> cone idx
  std::vector<std::vector<int>> edge_gluing_;   // [poly][edge] -> gluing idx
  double area_ = 0;
  int genus_ = 0;
  int num_marked_ = 0;
  double diameter_ = 0;
};

double polygon_area(const std::vector<Vec2>& vertices);  // shoelace, CCW > 0
double interior_angle(const PlanarPolygon& p, int vertex);

}  // namespace flatspec
