#include "flatspec/spectra.hpp"

#include <algorithm>
#include <cmath>

#include "flatspec/errors.hpp"

namespace flatspec {

namespace {

constexpr double kDedup = 1e-12;

Spectrum assemble(SpectrumKind kind, double cutoff,
                  std::vector<std::pair<double, std::pair<int, int>>> raw) {
  std::sort(raw.begin(), raw.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  Spectrum s;
  s.kind = kind;
  s.cutoff = cutoff;
  for (const auto& [v, prov] : raw) {
    if (!s.values.empty() && v - s.values.back() <= kDedup) {
      s.multiplicities.back()++;
    } else {
      s.values.push_back(v);
      s.multiplicities.push_back(1);
      s.provenance.push_back(prov);
    }
  }
  return s;
}

}  // namespace

const char* spectrum_kind_name(SpectrumKind k) {
  switch (k) {
    case SpectrumKind::VT: return "vt";
    case SpectrumKind::VT0: return "vt0";
    case SpectrumKind::PolyArea: return "polyarea";
    case SpectrumKind::IlLength: return "illength";
  }
  return "unknown";
}

std::optional<double> Spectrum::min_positive() const {
  for (double v : values)
    if (v > kDedup) return v;
  return std::nullopt;
}

Spectrum vt_spectrum(const std::vector<SaddleConnection>& connections, double cutoff) {
  std::vector<std::pair<double, std::pair<int, int>>> raw;
  int n = static_cast<int>(connections.size());
  raw.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      raw.push_back({std::abs(cross(connections[i].holonomy, connections[j].holonomy)),
                     {i, j}});
  return assemble(SpectrumKind::VT, cutoff, std::move(raw));
}

Spectrum vt0_spectrum(const std::vector<SaddleConnection>& connections, double cutoff) {
  std::vector<std::pair<double, std::pair<int, int>>> raw;
  int n = static_cast<int>(connections.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const SaddleConnection& a = connections[i];
      const SaddleConnection& b = connections[j];
      bool based = a.start_class == b.start_class || a.start_class == b.end_class ||
                   a.end_class == b.start_class || a.end_class == b.end_class;
      if (!based) continue;
      raw.push_back({std::abs(cross(a.holonomy, b.holonomy)), {i, j}});
    }
  }
  return assemble(SpectrumKind::VT0, cutoff, std::move(raw));
}

Spectrum poly_area_spectrum(const std::vector<GeodesicRepresentative>& curves,
                            double cutoff) {
  std::vector<std::pair<double, std::pair<int, int>>> raw;
  for (size_t i = 0; i < curves.size(); ++i)
    raw.push_back({area(auxiliary_polygon(curves[i])), {static_cast<int>(i), -1}});
  return assemble(SpectrumKind::PolyArea, cutoff, std::move(raw));
}

Spectrum illength_spectrum(const std::vector<GeodesicRepresentative>& curves,
                           double cutoff, double tol,
                           std::vector<IlSpectrumEntry>* failures) {
  std::vector<std::pair<double, std::pair<int, int>>> raw;
  for (size_t i = 0; i < curves.size(); ++i) {
    try {
      Zonogon z = auxiliary_polygon(curves[i]);
      raw.push_back({infimal_length(z, tol).value, {static_cast<int>(i), -1}});
    } catch (const Error& e) {
      if (failures) failures->push_back({static_cast<int>(i), e.what()});
    }
  }
  return assemble(SpectrumKind::IlLength, cutoff, std::move(raw));
}

GapReport gap_report(const Spectrum& spec, int bins, double cap) {
  if (spec.values.empty()) throw Error(ErrorCode::EmptySpectrum, "spectrum has no values");
  if (bins <= 0 || !(cap > 0)) throw Error(ErrorCode::BadSpec, "bins and cap must be positive");
  GapReport rep;
  rep.min_positive = spec.min_positive();
  rep.cap = cap;
  rep.bin_width = cap / bins;
  rep.histogram.assign(bins, 0);
  double largest = 0;
  for (size_t i = 0; i < spec.values.size(); ++i) {
    double v = spec.values[i];
    if (v > cap) continue;
    int b = std::min(bins - 1, static_cast<int>(v / rep.bin_width));
    rep.histogram[b] += spec.multiplicities[i];
    if (v > kDedup) largest = std::max(largest, v);
  }
  int upto = largest > 0 ? std::min(bins - 1, static_cast<int>(largest / rep.bin_width))
                         : -1;
  if (upto >= 0) {
    int nonempty = 0;
    for (int b = 0; b <= upto; ++b)
      if (rep.histogram[b] > 0) nonempty++;
    rep.density_score = static_cast<double>(nonempty) / (upto + 1);
  }
  return rep;
}

VeechProbeReport veech_probe(const TriMesh& mesh, const std::vector<double>& cutoffs,
                             const EnumerationOptions& opts) {
  for (size_t i = 0; i + 1 < cutoffs.size(); ++i)
    if (!(cutoffs[i] < cutoffs[i + 1]))
      throw Error(ErrorCode::BadSpec, "cutoffs must be ascending");
  VeechProbeReport rep;
  rep.caveat =
      "finite cutoffs can exhibit collapse of the smallest positive value but can "
      "never certify a gap";
  for (double L : cutoffs) {
    auto conns = enumerate_saddle_connections(mesh, L, opts);
    Spectrum vt = vt_spectrum(conns, L);
    Spectrum vt0 = vt0_spectrum(conns, L);
    VeechProbeRow row;
    row.cutoff = L;
    row.vt_min_positive = vt.min_positive();
    row.vt0_min_positive = vt0.min_positive();
    long pairs = 0;
    for (long m : vt.multiplicities) pairs += m;
    row.vt_pairs = pairs;
    rep.rows.push_back(row);
  }
  return rep;
}

PaIlReport pa_il_query(const TriMesh& mesh, double a, double cutoff,
                       const std::vector<SaddleConnection>& connections,
                       const std::vector<GeodesicRepresentative>& curves) {
  (void)mesh;
  (void)connections;
  if (!(a > 0)) throw Error(ErrorCode::BadSpec, "threshold a must be positive");
  PaIlReport rep;
  rep.a = a;
  rep.cutoff = cutoff;
  for (size_t i = 0; i < curves.size(); ++i) {
    if (classify(curves[i]) != CurveClass::Crooked) continue;
    rep.no_crooked_witnesses = false;
    Zonogon z = auxiliary_polygon(curves[i]);
    double ar = area(z);
    if (!rep.min_area || ar < *rep.min_area) rep.min_area = ar;
    if (ar < a && rep.pa_holds) {
      rep.pa_holds = false;
      rep.pa_violator = static_cast<int>(i);
    }
    double il = infimal_length(z).value;
    if (!rep.min_illength || il < *rep.min_illength) rep.min_illength = il;
    if (il < a && rep.il_holds) {
      rep.il_holds = false;
      rep.il_violator = static_cast<int>(i);
    }
  }
  return rep;
}

}  // namespace flatspec
