#pragma once

#include <optional>
#include <vector>

#include "flatspec/geodesy.hpp"
#include "flatspec/mesh.hpp"
#include "flatspec/zonogon.hpp"

namespace flatspec {

// Free homotopy class of a closed curve, encoded by its ordered crossings of
// glued edges. Each crossing is (gluing index, parameter along the a-side
// edge, sense): sense +1 crosses from the a-side polygon into the b-side,
// -1 the other way. Consecutive crossing points must see each other along a
// straight chord inside the polygon between them.
struct CurvePath {
  struct Hop {
    int gluing = 0;
    double t = 0.5;
    int sense = 1;
  };
  std::vector<Hop> hops;
};

struct ChainEdge {
  SaddleConnection connection;
  bool forward = true;
};

enum class CurveClass { Cylinder, ConstantDirectionChain, Crooked };

struct GeodesicRepresentative {
  bool is_cylinder = false;
  std::optional<MaximalCylinder> cylinder;
  int chosen_boundary = 0;
  std::vector<ChainEdge> chain;  // cyclic, when not a cylinder
  double length = 0;             // flat length l
  double length_h = 0;           // sum m_e |x(v_e)|
  double length_v = 0;           // sum m_e |y(v_e)|
  bool puncture_parallel = false;

  // Distinct saddle connections with multiplicities m_e (traversals in
  // either direction); for cylinders, of the chosen boundary chain.
  std::vector<std::pair<SaddleConnection, int>> multiplicities() const;
};

struct TightenOptions {
  double tol = 1e-12;
  long sweep_budget = 100000;
};

GeodesicRepresentative tighten(const TriMesh& mesh, const CurvePath& path,
                               const TightenOptions& opts = {});

struct JunctionReport {
  int junction = 0;
  double left = 0;
  double right = 0;
  bool ok = false;
};

// True iff every junction of the chain has angle >= pi - 1e-9 on both sides.
bool validate_geodesic(const TriMesh& mesh, const std::vector<ChainEdge>& chain,
                       std::vector<JunctionReport>* report = nullptr);

CurveClass classify(const GeodesicRepresentative& rep);

Zonogon auxiliary_polygon(const GeodesicRepresentative& rep);

bool is_simple(const TriMesh& mesh, const GeodesicRepresentative& rep);

struct CurveEnumerationOptions {
  long chain_budget = 20000000;  // DFS node budget
  int max_chain_edges = 64;
};

struct CurveEnumeration {
  std::vector<GeodesicRepresentative> curves;
  bool budget_exceeded = false;
};

// Simple closed geodesics of length <= max_length: all valid simple saddle
// chains plus one cylinder representative per cylinder class; constant
// direction chains that merely retrace a cylinder boundary are dropped in
// favor of the cylinder.
CurveEnumeration enumerate_simple_closed_geodesics(
    const TriMesh& mesh, double max_length,
    const std::vector<SaddleConnection>& connections,
    const CurveEnumerationOptions& opts = {});

}  // namespace flatspec
