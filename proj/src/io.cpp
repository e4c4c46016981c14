#include "flatspec/io.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "flatspec/errors.hpp"

namespace flatspec {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << content;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

int poly_index(const std::vector<PlanarPolygon>& polys, const json& id) {
  std::string sid = id.is_string() ? id.get<std::string>() : id.dump();
  for (size_t i = 0; i < polys.size(); ++i)
    if (polys[i].id == sid) return static_cast<int>(i);
  throw Error(ErrorCode::BadSpec, "unknown polygon id " + sid);
}

}  // namespace

SurfaceSpec parse_surface_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::IoError, std::string("surface file is not valid JSON: ") + e.what());
  }
  SurfaceSpec spec;
  if (!j.contains("polygons") || !j["polygons"].is_array())
    throw Error(ErrorCode::BadSpec, "surface file needs a polygons array");
  for (const auto& pj : j["polygons"]) {
    PlanarPolygon p;
    const json& id = pj.at("id");
    p.id = id.is_string() ? id.get<std::string>() : id.dump();
    for (const auto& vj : pj.at("vertices"))
      p.vertices.push_back({vj.at(0).get<double>(), vj.at(1).get<double>()});
    spec.polygons.push_back(std::move(p));
  }
  if (j.contains("gluings")) {
    for (const auto& gj : j["gluings"]) {
      EdgeGluing g;
      g.a.poly = poly_index(spec.polygons, gj.at("a").at(0));
      g.a.edge = gj.at("a").at(1).get<int>();
      g.b.poly = poly_index(spec.polygons, gj.at("b").at(0));
      g.b.edge = gj.at("b").at(1).get<int>();
      g.sign = gj.value("sign", 1);
      spec.gluings.push_back(g);
    }
  }
  if (j.contains("marked")) {
    for (const auto& mj : j["marked"]) {
      CornerRef c;
      c.poly = poly_index(spec.polygons, mj.at(0));
      c.vertex = mj.at(1).get<int>();
      spec.marked.push_back(c);
    }
  }
  return spec;
}

SurfaceSpec load_surface_file(const std::string& path) {
  return parse_surface_json(read_file(path));
}

std::string canonical_surface_json(const SurfaceSpec& spec) {
  // Hand-rolled emission: fixed key order, fixed float format.
  std::ostringstream out;
  out << "{\"gluings\":[";
  for (size_t i = 0; i < spec.gluings.size(); ++i) {
    const EdgeGluing& g = spec.gluings[i];
    if (i) out << ",";
    out << "{\"a\":[" << g.a.poly << "," << g.a.edge << "],\"b\":[" << g.b.poly << ","
        << g.b.edge << "],\"sign\":" << g.sign << "}";
  }
  out << "],\"marked\":[";
  for (size_t i = 0; i < spec.marked.size(); ++i) {
    if (i) out << ",";
    out << "[" << spec.marked[i].poly << "," << spec.marked[i].vertex << "]";
  }
  out << "],\"polygons\":[";
  for (size_t i = 0; i < spec.polygons.size(); ++i) {
    const PlanarPolygon& p = spec.polygons[i];
    if (i) out << ",";
    out << "{\"id\":\"" << p.id << "\",\"vertices\":[";
    for (size_t v = 0; v < p.vertices.size(); ++v) {
      if (v) out << ",";
      out << "[" << format_double(p.vertices[v].x) << ","
          << format_double(p.vertices[v].y) << "]";
    }
    out << "]}";
  }
  out << "]}";
  return out.str();
}

// ---------------------------------------------------------------------------
// sha256 (FIPS 180-4), self-contained

namespace {

struct Sha256 {
  uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                   0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
  uint64_t length = 0;
  std::array<uint8_t, 64> block{};
  size_t fill = 0;

  static uint32_t rotr(uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

  void process(const uint8_t* p) {
    static const uint32_t K[64] = {
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
        0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
        0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
        0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
        0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
        0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
        0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
        0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
        0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
        0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
        0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
    uint32_t w[64];
    for (int i = 0; i < 16; ++i)
      w[i] = (uint32_t(p[4 * i]) << 24) | (uint32_t(p[4 * i + 1]) << 16) |
             (uint32_t(p[4 * i + 2]) << 8) | uint32_t(p[4 * i + 3]);
    for (int i = 16; i < 64; ++i) {
      uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5], g = h[6],
             hh = h[7];
    for (int i = 0; i < 64; ++i) {
      uint32_t S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
      uint32_t ch = (e & f) ^ (~e & g);
      uint32_t t1 = hh + S1 + ch + K[i] + w[i];
      uint32_t S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
      uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
      uint32_t t2 = S0 + maj;
      hh = g;
      g = f;
      f = e;
      e = d + t1;
      d = c;
      c = b;
      b = a;
      a = t1 + t2;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
    h[5] += f;
    h[6] += g;
    h[7] += hh;
  }

  void update(const uint8_t* data, size_t len) {
    length += len;
    while (len > 0) {
      size_t take = std::min(len, block.size() - fill);
      std::memcpy(block.data() + fill, data, take);
      fill += take;
      data += take;
      len -= take;
      if (fill == block.size()) {
        process(block.data());
        fill = 0;
      }
    }
  }

  std::string hex() {
    uint64_t bits = length * 8;
    uint8_t pad = 0x80;
    update(&pad, 1);
    uint8_t zero = 0;
    while (fill != 56) update(&zero, 1);
    uint8_t lenbuf[8];
    for (int i = 0; i < 8; ++i) lenbuf[i] = uint8_t(bits >> (56 - 8 * i));
    update(lenbuf, 8);
    static const char* hexd = "0123456789abcdef";
    std::string out;
    for (uint32_t v : h)
      for (int i = 28; i >= 0; i -= 4) out.push_back(hexd[(v >> i) & 0xf]);
    return out;
  }
};

}  // namespace

std::string sha256_hex(const std::string& data) {
  Sha256 s;
  s.update(reinterpret_cast<const uint8_t*>(data.data()), data.size());
  return s.hex();
}

// ---------------------------------------------------------------------------
// connection CSV / cache

std::string connections_csv(const std::vector<SaddleConnection>& conns,
                            const std::string& surface_hash, double max_length,
                            bool with_header) {
  std::ostringstream out;
  if (with_header)
    out << "# surface=" << surface_hash << " L=" << format_double(max_length) << "\n";
  out << "idx,start,end,hx,hy,len\n";
  for (size_t i = 0; i < conns.size(); ++i) {
    const SaddleConnection& c = conns[i];
    out << i << "," << c.start_class << "," << c.end_class << ","
        << format_double(c.holonomy.x) << "," << format_double(c.holonomy.y) << ","
        << format_double(c.length) << "\n";
  }
  return out.str();
}

std::optional<std::vector<SaddleConnection>> read_connections_cache(
    const std::string& path, const std::string& surface_hash, double max_length) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string header;
  if (!std::getline(in, header)) return std::nullopt;
  std::string expect =
      "# surface=" + surface_hash + " L=" + format_double(max_length);
  if (header != expect) return std::nullopt;
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;  // column header
  std::vector<SaddleConnection> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    SaddleConnection c;
    std::istringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');  // idx
    std::getline(ss, tok, ',');
    c.start_class = std::stoi(tok);
    std::getline(ss, tok, ',');
    c.end_class = std::stoi(tok);
    std::getline(ss, tok, ',');
    c.holonomy.x = std::stod(tok);
    std::getline(ss, tok, ',');
    c.holonomy.y = std::stod(tok);
    std::getline(ss, tok, ',');
    c.length = std::stod(tok);
    out.push_back(std::move(c));
  }
  return out;
}

void write_connections_cache(const std::string& path,
                             const std::vector<SaddleConnection>& conns,
                             const std::string& surface_hash, double max_length) {
  write_file(path, connections_csv(conns, surface_hash, max_length, true));
}

// ---------------------------------------------------------------------------
// curve files

CurveFile parse_curve_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::IoError, std::string("curve file is not valid JSON: ") + e.what());
  }
  CurveFile cf;
  std::string type = j.value("type", "path");
  if (type == "path") {
    cf.is_path = true;
    for (const auto& cj : j.at("crossings")) {
      CurvePath::Hop h;
      h.gluing = cj.at(0).get<int>();
      h.t = cj.at(1).get<double>();
      if (cj.size() > 2) h.sense = cj.at(2).get<int>();
      cf.path.hops.push_back(h);
    }
  } else if (type == "chain") {
    cf.is_path = false;
    for (const auto& ej : j.at("edges"))
      cf.chain_edges.push_back({ej.at(0).get<int>(), ej.at(1).get<int>()});
    if (j.contains("max_length")) cf.max_length = j["max_length"].get<double>();
  } else {
    throw Error(ErrorCode::BadSpec, "curve type must be 'path' or 'chain'");
  }
  return cf;
}

CurveFile load_curve_file(const std::string& path) {
  return parse_curve_json(read_file(path));
}

}  // namespace flatspec
