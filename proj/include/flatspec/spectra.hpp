#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flatspec/curves.hpp"
#include "flatspec/geodesy.hpp"
#include "flatspec/sl2opt.hpp"

namespace flatspec {

enum class SpectrumKind { VT, VT0, PolyArea, IlLength };

const char* spectrum_kind_name(SpectrumKind k);

// Sorted multiset of nonnegative reals. Values are deduplicated at 1e-12
// absolute with multiplicities retained; provenance keeps one generating
// object per value (a pair of saddle connection indices, or a curve index).
struct Spectrum {
  SpectrumKind kind = SpectrumKind::VT;
  double cutoff = 0;
  std::vector<double> values;
  std::vector<long> multiplicities;
  std::vector<std::pair<int, int>> provenance;  // (a, b) or (curve, -1)

  std::optional<double> min_positive() const;
};

Spectrum vt_spectrum(const std::vector<SaddleConnection>& connections, double cutoff);
Spectrum vt0_spectrum(const std::vector<SaddleConnection>& connections, double cutoff);

Spectrum poly_area_spectrum(const std::vector<GeodesicRepresentative>& curves,
                            double cutoff);

struct IlSpectrumEntry {
  int curve = -1;
  std::string error;  // optimizer failure, recorded not fatal
};

Spectrum illength_spectrum(const std::vector<GeodesicRepresentative>& curves,
                           double cutoff, double tol = 1e-12,
                           std::vector<IlSpectrumEntry>* failures = nullptr);

struct GapReport {
  std::optional<double> min_positive;
  std::vector<long> histogram;
  double cap = 0;
  double bin_width = 0;
  double density_score = 0;  // fraction of nonempty bins in [0, max observed]
};

GapReport gap_report(const Spectrum& spec, int bins, double cap);

struct VeechProbeRow {
  double cutoff = 0;
  std::optional<double> vt_min_positive;
  std::optional<double> vt0_min_positive;
  long vt_pairs = 0;
};

struct VeechProbeReport {
  std::vector<VeechProbeRow> rows;
  std::string caveat;
};

VeechProbeReport veech_probe(const TriMesh& mesh, const std::vector<double>& cutoffs,
                             const EnumerationOptions& opts = {});

struct PaIlReport {
  double a = 0;
  double cutoff = 0;
  bool pa_holds = true;
  bool il_holds = true;
  bool no_crooked_witnesses = true;
  std::optional<int> pa_violator;
  std::optional<int> il_violator;
  std::optional<double> min_area;
  std::optional<double> min_illength;
};

PaIlReport pa_il_query(const TriMesh& mesh, double a, double cutoff,
                       const std::vector<SaddleConnection>& connections,
                       const std::vector<GeodesicRepresentative>& curves);

}  // namespace flatspec
