#include <mcst2/io.hpp>

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mcst2::io {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& reason) {
  throw std::runtime_error(path + ": " + reason);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(path, "cannot open for writing");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(path, "cannot open for reading");
  return is;
}

void finish(std::ofstream& os, const std::string& path) {
  os.flush();
  if (!os) fail(path, "write failed");
}

void write_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

std::uint32_t read_u32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) fail(path, "truncated integer field");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& is, const std::string& path) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) fail(path, "truncated integer field");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& os, const double* p, Index count) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(p), count * 8);
  } else {
    for (Index i = 0; i < count; ++i) write_u64(os, std::bit_cast<std::uint64_t>(p[i]));
  }
}

void read_f64(std::istream& is, double* p, Index count, const std::string& path) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!is.read(reinterpret_cast<char*>(p), count * 8)) fail(path, "truncated float payload");
  } else {
    for (Index i = 0; i < count; ++i) p[i] = std::bit_cast<double>(read_u64(is, path));
  }
}

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// key -> value lines terminated by one blank line; the payload follows.
using Header = std::map<std::string, std::string>;

Header read_header(std::istream& is, const std::string& path, const std::string& magic) {
  std::string line;
  if (!std::getline(is, line)) fail(path, "empty file");
  if (line != magic + " 1") fail(path, "expected \"" + magic + " 1\" header");
  Header h;
  while (std::getline(is, line)) {
    if (line.empty()) return h;
    const auto space = line.find(' ');
    if (space == std::string::npos || space == 0) fail(path, "malformed header line: " + line);
    const std::string key = line.substr(0, space);
    if (!h.emplace(key, line.substr(space + 1)).second) fail(path, "duplicate header key: " + key);
  }
  fail(path, "header not terminated by a blank line");
}

const std::string& header_get(const Header& h, const std::string& key, const std::string& path) {
  const auto it = h.find(key);
  if (it == h.end()) fail(path, "missing header key: " + key);
  return it->second;
}

Index header_index(const Header& h, const std::string& key, const std::string& path) {
  try {
    return static_cast<Index>(std::stoll(header_get(h, key, path)));
  } catch (const std::logic_error&) {
    fail(path, "header key " + key + " is not an integer");
  }
}

double header_double(const Header& h, const std::string& key, const std::string& path) {
  try {
    return std::stod(header_get(h, key, path));
  } catch (const std::logic_error&) {
    fail(path, "header key " + key + " is not a number");
  }
}

void reject_unknown(const Header& h, std::initializer_list<const char*> known,
                    const std::string& path) {
  for (const auto& [key, value] : h) {
    bool found = false;
    for (const char* k : known) found = found || key == k;
    if (!found) fail(path, "unknown header key: " + key);
  }
}

constexpr char kModelMagic[5] = {'M', 'C', 'S', 'T', '2'};
constexpr char kCodingMagic[7] = {'M', 'C', 'S', 'T', '2', 'C', 'D'};

void write_transform(std::ostream& os, const Matrix& w) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = w;
  write_f64(os, rm.data(), rm.size());
}

Matrix read_transform(std::istream& is, Index p, const std::string& path) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(p, p);
  read_f64(is, rm.data(), rm.size(), path);
  return rm;
}

// Whitespace- and comment-aware PGM header tokens.
std::string pgm_token(std::istream& is, const std::string& path) {
  int c = is.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = is.get();
    } else if (std::isspace(c)) {
      c = is.get();
    } else {
      break;
    }
  }
  if (c == EOF) fail(path, "truncated header");
  std::string token;
  while (c != EOF && !std::isspace(c)) {
    token.push_back(static_cast<char>(c));
    c = is.get();
  }
  return token;
}

long pgm_number(std::istream& is, const std::string& path) {
  const std::string token = pgm_token(is, path);
  try {
    return std::stol(token);
  } catch (const std::logic_error&) {
    fail(path, "expected a number, got \"" + token + "\"");
  }
}

}  // namespace

void write_raster(const std::string& path, const Matrix& data, const std::string& units) {
  if (data.rows() <= 0 || data.cols() <= 0)
    throw std::invalid_argument("write_raster: empty image");
  std::ofstream os = open_out(path);
  os << "RASTER64 1\n"
     << "rows " << data.rows() << "\n"
     << "cols " << data.cols() << "\n"
     << "units " << units << "\n\n";
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = data;
  write_f64(os, rm.data(), rm.size());
  finish(os, path);
}

RasterFile read_raster(const std::string& path) {
  std::ifstream is = open_in(path);
  const Header h = read_header(is, path, "RASTER64");
  reject_unknown(h, {"rows", "cols", "units"}, path);
  const Index rows = header_index(h, "rows", path);
  const Index cols = header_index(h, "cols", path);
  if (rows <= 0 || cols <= 0) fail(path, "nonpositive dimensions");
  RasterFile out;
  out.units = header_get(h, "units", path);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
  read_f64(is, rm.data(), rm.size(), path);
  out.data = rm;
  return out;
}

void write_sinogram(const std::string& path, const Vector& data, const CtGeometry& geometry,
                    const std::string& kind) {
  geometry.validate();
  if (kind != "sinogram" && kind != "weights")
    throw std::invalid_argument("write_sinogram: kind must be sinogram or weights");
  if (data.size() != geometry.num_rays())
    throw std::invalid_argument("write_sinogram: data length disagrees with geometry");
  std::ofstream os = open_out(path);
  os << "SINO64 1\n"
     << "kind " << kind << "\n"
     << "mode " << (geometry.mode == CtMode::parallel ? "parallel" : "fan") << "\n"
     << "detectors " << geometry.num_detectors << "\n"
     << "views " << geometry.num_views << "\n"
     << "detector_spacing " << fmt_g17(geometry.detector_spacing) << "\n"
     << "source_to_detector " << fmt_g17(geometry.source_to_detector) << "\n"
     << "source_to_center " << fmt_g17(geometry.source_to_center) << "\n"
     << "image_pixel_size " << fmt_g17(geometry.image_pixel_size) << "\n"
     << "image_rows " << geometry.image_rows << "\n"
     << "image_cols " << geometry.image_cols << "\n"
     << "unit_scale " << fmt_g17(geometry.unit_scale) << "\n\n";
  write_f64(os, data.data(), data.size());
  finish(os, path);
}

SinogramFile read_sinogram(const std::string& path) {
  std::ifstream is = open_in(path);
  const Header h = read_header(is, path, "SINO64");
  reject_unknown(h,
                 {"kind", "mode", "detectors", "views", "detector_spacing", "source_to_detector",
                  "source_to_center", "image_pixel_size", "image_rows", "image_cols", "unit_scale"},
                 path);
  SinogramFile out;
  out.kind = header_get(h, "kind", path);
  if (out.kind != "sinogram" && out.kind != "weights") fail(path, "unknown kind: " + out.kind);
  const std::string mode = header_get(h, "mode", path);
  if (mode == "parallel")
    out.geometry.mode = CtMode::parallel;
  else if (mode == "fan")
    out.geometry.mode = CtMode::fan;
  else
    fail(path, "unknown mode: " + mode);
  out.geometry.num_detectors = header_index(h, "detectors", path);
  out.geometry.num_views = header_index(h, "views", path);
  out.geometry.detector_spacing = header_double(h, "detector_spacing", path);
  out.geometry.source_to_detector = header_double(h, "source_to_detector", path);
  out.geometry.source_to_center = header_double(h, "source_to_center", path);
  out.geometry.image_pixel_size = header_double(h, "image_pixel_size", path);
  out.geometry.image_rows = header_index(h, "image_rows", path);
  out.geometry.image_cols = header_index(h, "image_cols", path);
  out.geometry.unit_scale = header_double(h, "unit_scale", path);
  try {
    out.geometry.validate();
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  out.data.resize(out.geometry.num_rays());
  read_f64(is, out.data.data(), out.data.size(), path);
  return out;
}

void write_model(const std::string& path, const Mcst2Model& model, const TrainConfig& config,
                 Index patch_side, Index stride) {
  model.validate();
  config.validate();
  if (patch_side * patch_side != model.patch_dim)
    throw std::invalid_argument("write_model: patch_side disagrees with the transform size");
  if (stride <= 0) throw std::invalid_argument("write_model: stride must be positive");
  if (model.num_clusters1() != config.num_clusters1 ||
      model.num_clusters2() != config.num_clusters2)
    throw std::invalid_argument("write_model: config cluster counts disagree with the banks");

  std::ofstream os = open_out(path);
  os.write(kModelMagic, sizeof kModelMagic);
  write_u32(os, 1);
  write_u32(os, static_cast<std::uint32_t>(model.patch_dim));
  write_u32(os, static_cast<std::uint32_t>(model.num_clusters1()));
  write_u32(os, static_cast<std::uint32_t>(model.num_clusters2()));
  for (const Matrix& w : model.layer1) write_transform(os, w);
  for (const Matrix& w : model.layer2) write_transform(os, w);
  finish(os, path);

  json side;
  side["eta1"] = config.eta1;
  side["eta2"] = config.eta2;
  side["num_clusters1"] = config.num_clusters1;
  side["num_clusters2"] = config.num_clusters2;
  side["iterations"] = config.iterations;
  side["seed"] = config.seed;
  side["patch_side"] = patch_side;
  side["stride"] = stride;
  std::ofstream js = open_out(path + ".json");
  js << side.dump(2) << "\n";
  finish(js, path + ".json");
}

ModelFile read_model(const std::string& path) {
  std::ifstream is = open_in(path);
  char magic[sizeof kModelMagic];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kModelMagic, sizeof magic) != 0)
    fail(path, "not a model file");
  const std::uint32_t version = read_u32(is, path);
  if (version != 1) fail(path, "unsupported version " + std::to_string(version));
  const Index p = static_cast<Index>(read_u32(is, path));
  const Index k = static_cast<Index>(read_u32(is, path));
  const Index l = static_cast<Index>(read_u32(is, path));
  if (p <= 0 || k <= 0 || l <= 0) fail(path, "nonpositive dimensions");

  ModelFile out;
  out.model.patch_dim = p;
  for (Index i = 0; i < k; ++i) out.model.layer1.push_back(read_transform(is, p, path));
  for (Index i = 0; i < l; ++i) out.model.layer2.push_back(read_transform(is, p, path));
  try {
    out.model.validate();
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }

  const std::string side_path = path + ".json";
  std::ifstream js = open_in(side_path);
  json side;
  try {
    side = json::parse(js);
  } catch (const json::exception& e) {
    fail(side_path, e.what());
  }
  for (const char* key : {"eta1", "eta2", "num_clusters1", "num_clusters2", "iterations", "seed",
                          "patch_side", "stride"})
    if (!side.contains(key)) fail(side_path, std::string("missing key: ") + key);
  try {
    out.config.eta1 = side.at("eta1").get<double>();
    out.config.eta2 = side.at("eta2").get<double>();
    out.config.num_clusters1 = side.at("num_clusters1").get<Index>();
    out.config.num_clusters2 = side.at("num_clusters2").get<Index>();
    out.config.iterations = side.at("iterations").get<Index>();
    out.config.seed = side.at("seed").get<std::uint64_t>();
    out.patch_side = side.at("patch_side").get<Index>();
    out.stride = side.at("stride").get<Index>();
  } catch (const json::exception& e) {
    fail(side_path, e.what());
  }
  if (out.config.num_clusters1 != k || out.config.num_clusters2 != l)
    fail(side_path, "cluster counts disagree with the binary container");
  if (out.patch_side * out.patch_side != p)
    fail(side_path, "patch_side disagrees with the transform size");
  return out;
}

void write_coding(const std::string& path, const CodingState& state, Index num_clusters1,
                  Index num_clusters2) {
  const Index p = state.z1.rows();
  const Index n = state.z1.cols();
  if (p <= 0 || n <= 0) throw std::invalid_argument("write_coding: empty state");
  if (state.z2.rows() != p || state.z2.cols() != n ||
      static_cast<Index>(state.labels1.size()) != n ||
      static_cast<Index>(state.labels2.size()) != n)
    throw std::invalid_argument("write_coding: inconsistent state shapes");
  for (Index i = 0; i < n; ++i)
    if (state.labels1[i] < 0 || state.labels1[i] >= num_clusters1 || state.labels2[i] < 0 ||
        state.labels2[i] >= num_clusters2)
      throw std::invalid_argument("write_coding: label out of range");

  std::ofstream os = open_out(path);
  os.write(kCodingMagic, sizeof kCodingMagic);
  write_u32(os, 1);
  write_u32(os, static_cast<std::uint32_t>(p));
  write_u64(os, static_cast<std::uint64_t>(n));
  write_u32(os, static_cast<std::uint32_t>(num_clusters1));
  write_u32(os, static_cast<std::uint32_t>(num_clusters2));
  for (Index i = 0; i < n; ++i) write_u32(os, static_cast<std::uint32_t>(state.labels1[i]));
  for (Index i = 0; i < n; ++i) write_u32(os, static_cast<std::uint32_t>(state.labels2[i]));
  write_f64(os, state.z1.data(), state.z1.size());
  write_f64(os, state.z2.data(), state.z2.size());
  finish(os, path);
}

CodingState read_coding(const std::string& path) {
  std::ifstream is = open_in(path);
  char magic[sizeof kCodingMagic];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kCodingMagic, sizeof magic) != 0)
    fail(path, "not a coding file");
  const std::uint32_t version = read_u32(is, path);
  if (version != 1) fail(path, "unsupported version " + std::to_string(version));
  const Index p = static_cast<Index>(read_u32(is, path));
  const Index n = static_cast<Index>(read_u64(is, path));
  const Index k = static_cast<Index>(read_u32(is, path));
  const Index l = static_cast<Index>(read_u32(is, path));
  if (p <= 0 || n <= 0 || k <= 0 || l <= 0) fail(path, "nonpositive dimensions");

  CodingState state;
  state.labels1.resize(n);
  state.labels2.resize(n);
  for (Index i = 0; i < n; ++i) {
    state.labels1[i] = static_cast<Index>(read_u32(is, path));
    if (state.labels1[i] >= k) fail(path, "first-layer label out of range");
  }
  for (Index i = 0; i < n; ++i) {
    state.labels2[i] = static_cast<Index>(read_u32(is, path));
    if (state.labels2[i] >= l) fail(path, "second-layer label out of range");
  }
  state.z1.resize(p, n);
  state.z2.resize(p, n);
  read_f64(is, state.z1.data(), state.z1.size(), path);
  read_f64(is, state.z2.data(), state.z2.size(), path);
  state.r2 = Matrix::Zero(p, n);
  return state;
}

void write_pgm16(const std::string& path, const Matrix& data, double lo, double hi) {
  if (data.rows() <= 0 || data.cols() <= 0) throw std::invalid_argument("write_pgm16: empty image");
  if (!(lo < hi)) throw std::invalid_argument("write_pgm16: window needs lo < hi");
  std::ofstream os = open_out(path);
  os << "P5\n" << data.cols() << " " << data.rows() << "\n65535\n";
  std::string payload;
  payload.reserve(static_cast<std::size_t>(data.size()) * 2);
  for (Index r = 0; r < data.rows(); ++r)
    for (Index c = 0; c < data.cols(); ++c) {
      const double t = (data(r, c) - lo) / (hi - lo);
      const double clamped = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
      const auto v = static_cast<std::uint16_t>(std::lround(clamped * 65535.0));
      payload.push_back(static_cast<char>(v >> 8));
      payload.push_back(static_cast<char>(v & 0xff));
    }
  os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  finish(os, path);
}

Matrix read_pgm(const std::string& path) {
  std::ifstream is = open_in(path);
  if (pgm_token(is, path) != "P5") fail(path, "only binary PGM (P5) is supported");
  const long cols = pgm_number(is, path);
  const long rows = pgm_number(is, path);
  const long maxval = pgm_number(is, path);
  if (cols <= 0 || rows <= 0) fail(path, "nonpositive dimensions");
  if (maxval <= 0 || maxval > 65535) fail(path, "maxval out of range");
  // The token reader consumed the single whitespace byte after maxval, so
  // the payload starts here.
  const int bytes = maxval > 255 ? 2 : 1;
  std::string payload(static_cast<std::size_t>(rows) * cols * bytes, '\0');
  if (!is.read(payload.data(), static_cast<std::streamsize>(payload.size())))
    fail(path, "truncated pixel payload");
  Matrix out(rows, cols);
  std::size_t at = 0;
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) {
      unsigned v = static_cast<unsigned char>(payload[at++]);
      if (bytes == 2) v = (v << 8) | static_cast<unsigned char>(payload[at++]);
      out(r, c) = static_cast<double>(v);
    }
  return out;
}

std::string csv_number(double v) { return fmt_g17(v); }

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  if (header.empty()) throw std::invalid_argument("write_csv: empty header");
  std::ofstream os = open_out(path);
  for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
  os << "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::invalid_argument("write_csv: row width disagrees with header");
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
    os << "\n";
  }
  finish(os, path);
}

void write_trace_csv(const std::string& path, const std::string& index_name,
                     const std::string& value_name, const std::vector<double>& values) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    rows.push_back({std::to_string(i), csv_number(values[i])});
  write_csv(path, {index_name, value_name}, rows);
}

}  // namespace mcst2::io
