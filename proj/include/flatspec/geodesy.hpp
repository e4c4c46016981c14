#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "flatspec/mesh.hpp"
#include "flatspec/surface.hpp"
#include "flatspec/vec.hpp"

namespace flatspec {

// Singularity-to-singularity straight segment. Holonomy is canonical: its
// direction angle lies in [0, pi). Crossings describe the canonical
// traversal; re-developing them reproduces the holonomy.
struct SaddleConnection {
  int start_class = -1;
  int end_class = -1;
  Vec2 holonomy;
  double length = 0;
  // Angle coordinates of the outgoing ray at the start cone and of the
  // backward ray at the end cone, both for the canonical traversal.
  double start_coord = 0;
  double end_coord = 0;
  int start_tri = -1;  // triangle and corner the canonical traversal leaves
  int start_corner = -1;
  int end_tri = -1;    // triangle and corner it arrives at
  int end_corner = -1;
  std::vector<Crossing> crossings;
};

struct EnumerationOptions {
  long node_budget = 10000000;
  int threads = 0;  // 0 = hardware concurrency
};

// All saddle connections of length <= max_length, one per geometric
// connection in canonical direction, ordered by (length, angle, start class,
// start coordinate).
std::vector<SaddleConnection> enumerate_saddle_connections(
    const TriMesh& mesh, double max_length, const EnumerationOptions& opts = {});

enum class AngleSide { Left, Right };

// Angle swept on the given side at the shared cone point between an incoming
// and an outgoing ray, from their angle coordinates. Left and right sum to
// the cone angle.
double angle_between_coords(double in_coord, double out_coord, double cone_angle,
                            AngleSide side);

// Spec-level wrapper: s_in traversed into its end point, s_out out of its
// start point.
double angle_between(const TriMesh& mesh, const SaddleConnection& s_in,
                     const SaddleConnection& s_out, AngleSide side);

struct CylinderBoundaryLeg {
  SaddleConnection connection;
  bool forward = true;  // traversal sense along the chain
};

struct MaximalCylinder {
  double direction = 0;  // theta in [0, pi)
  double circumference = 0;
  double height = 0;
  std::vector<CylinderBoundaryLeg> boundary[2];
};

struct CylinderDecomposition {
  std::vector<MaximalCylinder> cylinders;
  bool certified_periodic = false;  // every separatrix closed up
};

// Traces all separatrices in direction theta. When every separatrix closes
// up on a cone point the direction is completely periodic and the full
// decomposition is returned; otherwise only cylinders that could be
// certified from closed separatrices are listed.
CylinderDecomposition cylinders_in_direction(const TriMesh& mesh, double theta,
                                             double budget);

// Per-triangle straight pieces of a connection's canonical traversal,
// used for transverse-intersection tests and boundary probes.
struct SegmentPiece {
  int tri = -1;
  Vec2 a, b;
};
std::vector<SegmentPiece> connection_pieces(const TriMesh& mesh,
                                            const SaddleConnection& sc);

SaddleConnection reversed_connection(const TriMesh& mesh,
                                     const SaddleConnection& sc);

// The maximal flat cylinder containing the closed regular geodesic leaf
// through (tri, pos) in direction dir; empty if the leaf does not close up
// within the budget implied by circumference_hint.
std::optional<MaximalCylinder> cylinder_around_leaf(const TriMesh& mesh,
                                                    int tri, Vec2 pos, Vec2 dir,
                                                    double circumference_hint);

}  // namespace flatspec
