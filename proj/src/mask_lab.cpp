#include "ghostplan/mask_lab.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "ghostplan/rng.hpp"

namespace ghostplan {

namespace fs = std::filesystem;

void validate_transmission(const Grid2D& g, const std::string& what) {
  if ((g.values() < 0.0).any() || (g.values() > 1.0).any()) {
    fail(ErrorKind::Range, what + ": transmission values must lie in [0, 1]");
  }
}

namespace {

std::vector<double> gaussian_kernel(double sigma, int radius) {
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    const double v = std::exp(-0.5 * t * t / (sigma * sigma));
    k[static_cast<std::size_t>(t + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

}  // namespace

MasterMask synthesize_speckle(const SpeckleParams& p, double pitch_um, std::string label) {
  require(p.correlation_px >= 0.5, ErrorKind::Argument, "correlation_px must be at least 0.5");
  require(p.rows > 0 && p.cols > 0 && static_cast<double>(p.rows) >= 8.0 * p.correlation_px &&
              static_cast<double>(p.cols) >= 8.0 * p.correlation_px,
          ErrorKind::Argument, "speckle dimensions must be at least 8 correlation lengths");
  require(p.t_min >= 0.0 && p.t_min < p.t_max && p.t_max <= 1.0, ErrorKind::Argument,
          "need 0 <= t_min < t_max <= 1");
  require(pitch_um > 0.0, ErrorKind::Argument, "pitch must be positive");

  const int radius = static_cast<int>(std::ceil(4.0 * p.correlation_px));
  const Index prow = p.rows + 2 * radius;
  const Index pcol = p.cols + 2 * radius;

  auto engine = make_stream(p.seed, StreamId::SpeckleNoise);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMajorArray<double> noise(prow, pcol);
  for (Index i = 0; i < prow; ++i)
    for (Index j = 0; j < pcol; ++j) noise(i, j) = normal(engine);

  const auto kernel = gaussian_kernel(p.correlation_px, radius);
  RowMajorArray<double> horiz = RowMajorArray<double>::Zero(prow, p.cols);
  for (int t = 0; t <= 2 * radius; ++t) {
    horiz += kernel[static_cast<std::size_t>(t)] * noise.middleCols(t, p.cols);
  }
  RowMajorArray<double> field = RowMajorArray<double>::Zero(p.rows, p.cols);
  for (int t = 0; t <= 2 * radius; ++t) {
    field += kernel[static_cast<std::size_t>(t)] * horiz.middleRows(t, p.rows);
  }

  const double lo = field.minCoeff();
  const double hi = field.maxCoeff();
  require(hi > lo, ErrorKind::Argument, "degenerate speckle field");
  // Convex combination hits both endpoints exactly (u = 0 and u = 1).
  const RowMajorArray<double> u = (field - lo) / (hi - lo);
  RowMajorArray<double> t = (p.t_min * (1.0 - u) + p.t_max * u).max(p.t_min).min(p.t_max);

  return MasterMask{Grid2D(std::move(t), pitch_um), pitch_um, std::move(label), SyntheticOrigin{p}};
}

fs::path sidecar_path(const fs::path& pixel_file) {
  fs::path s = pixel_file;
  s.replace_extension(".json");
  return s;
}

namespace {

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, path.string() + ": " + e.what());
  }
}

// Reads the next header token of a PGM file, skipping whitespace and comments.
std::string pgm_token(const std::vector<unsigned char>& buf, std::size_t& pos) {
  for (;;) {
    while (pos < buf.size() && std::isspace(buf[pos])) ++pos;
    if (pos < buf.size() && buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::string tok;
  while (pos < buf.size() && !std::isspace(buf[pos])) tok.push_back(static_cast<char>(buf[pos++]));
  require(!tok.empty(), ErrorKind::Format, "truncated PGM header");
  return tok;
}

long parse_positive(const std::string& tok, const char* what) {
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  require(end && *end == '\0' && v > 0, ErrorKind::Format, std::string("bad PGM ") + what);
  return v;
}

struct Sidecar {
  std::optional<Index> rows;
  std::optional<Index> cols;
  std::optional<double> pitch_um;
  std::optional<std::string> label;
};

Sidecar read_sidecar(const fs::path& path) {
  const auto j = read_json_file(path);
  require(j.is_object(), ErrorKind::Format, path.string() + ": sidecar must be an object");
  Sidecar s;
  try {
    if (j.contains("rows")) s.rows = j.at("rows").get<Index>();
    if (j.contains("cols")) s.cols = j.at("cols").get<Index>();
    if (j.contains("pitch_um")) s.pitch_um = j.at("pitch_um").get<double>();
    if (j.contains("label")) s.label = j.at("label").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, path.string() + ": " + e.what());
  }
  return s;
}

MasterMask ingest_pgm(const fs::path& path) {
  const auto buf = read_bytes(path);
  std::size_t pos = 0;
  require(pgm_token(buf, pos) == "P5", ErrorKind::Format, path.string() + ": not a binary PGM (P5)");
  const long cols = parse_positive(pgm_token(buf, pos), "width");
  const long rows = parse_positive(pgm_token(buf, pos), "height");
  const long maxval = parse_positive(pgm_token(buf, pos), "maxval");
  require(maxval <= 65535, ErrorKind::Format, "PGM maxval exceeds 65535");
  require(pos < buf.size() && std::isspace(buf[pos]), ErrorKind::Format, "malformed PGM header");
  ++pos;  // exactly one whitespace byte precedes the raster

  const std::size_t bytes_per = maxval < 256 ? 1 : 2;
  const std::size_t need = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * bytes_per;
  require(buf.size() - pos >= need, ErrorKind::Format, path.string() + ": truncated PGM raster");

  RowMajorArray<double> t(rows, cols);
  const double scale = 1.0 / static_cast<double>(maxval);
  for (Index k = 0; k < t.size(); ++k) {
    unsigned sample = 0;
    if (bytes_per == 1) {
      sample = buf[pos + static_cast<std::size_t>(k)];
    } else {
      const std::size_t o = pos + 2 * static_cast<std::size_t>(k);
      sample = (static_cast<unsigned>(buf[o]) << 8) | buf[o + 1];
    }
    require(sample <= static_cast<unsigned>(maxval), ErrorKind::Format, "PGM sample exceeds maxval");
    t.data()[k] = sample * scale;
  }

  double pitch = 1.0;
  std::string label = path.stem().string();
  if (const auto side = sidecar_path(path); fs::exists(side)) {
    const auto s = read_sidecar(side);
    if (s.pitch_um) pitch = *s.pitch_um;
    if (s.label) label = *s.label;
  }
  require(pitch > 0.0, ErrorKind::Format, "sidecar pitch_um must be positive");
  Grid2D g(std::move(t), pitch);
  validate_transmission(g, path.string());
  return MasterMask{std::move(g), pitch, std::move(label), IngestedOrigin{path.string()}};
}

MasterMask ingest_raw(const fs::path& path) {
  const auto side = sidecar_path(path);
  require(fs::exists(side), ErrorKind::Io, "missing sidecar " + side.string());
  const auto s = read_sidecar(side);
  require(s.rows && s.cols && *s.rows > 0 && *s.cols > 0, ErrorKind::Format,
          side.string() + ": rows and cols are required positive integers");
  const double pitch = s.pitch_um.value_or(1.0);
  require(pitch > 0.0, ErrorKind::Format, "sidecar pitch_um must be positive");

  const auto buf = read_bytes(path);
  const std::size_t count = static_cast<std::size_t>(*s.rows) * static_cast<std::size_t>(*s.cols);
  require(buf.size() == count * sizeof(float), ErrorKind::Format,
          path.string() + ": size does not match sidecar shape");

  RowMajorArray<double> t(*s.rows, *s.cols);
  for (std::size_t k = 0; k < count; ++k) {
    std::uint32_t bits = 0;
    for (int b = 3; b >= 0; --b) bits = (bits << 8) | buf[4 * k + static_cast<std::size_t>(b)];
    t.data()[k] = static_cast<double>(std::bit_cast<float>(bits));
  }
  require(t.allFinite(), ErrorKind::Format, path.string() + ": non-finite sample");
  Grid2D g(std::move(t), pitch);
  validate_transmission(g, path.string());
  return MasterMask{std::move(g), pitch, s.label.value_or(path.stem().string()),
                    IngestedOrigin{path.string()}};
}

void write_sidecar(const fs::path& path, const MasterMask& m) {
  nlohmann::json j;
  j["rows"] = m.grid.rows();
  j["cols"] = m.grid.cols();
  j["pitch_um"] = m.pitch_um;
  j["label"] = m.label;
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

MasterMask ingest_mask(const fs::path& path) {
  require(fs::exists(path), ErrorKind::Io, "no such file: " + path.string());
  std::ifstream probe(path, std::ios::binary);
  char magic[2] = {0, 0};
  probe.read(magic, 2);
  if (magic[0] == 'P' && magic[1] == '5') return ingest_pgm(path);
  return ingest_raw(path);
}

void write_mask_pgm(const MasterMask& m, const fs::path& path, bool sidecar) {
  validate_transmission(m.grid, m.label);
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  out << "P5\n" << m.grid.cols() << ' ' << m.grid.rows() << "\n65535\n";
  std::vector<unsigned char> raster(static_cast<std::size_t>(m.grid.size()) * 2);
  for (Index k = 0; k < m.grid.size(); ++k) {
    const auto s = static_cast<unsigned>(std::lround(m.grid.values().data()[k] * 65535.0));
    raster[2 * static_cast<std::size_t>(k)] = static_cast<unsigned char>(s >> 8);
    raster[2 * static_cast<std::size_t>(k) + 1] = static_cast<unsigned char>(s & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (sidecar) write_sidecar(sidecar_path(path), m);
}

void write_mask_raw(const MasterMask& m, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  std::vector<unsigned char> raster(static_cast<std::size_t>(m.grid.size()) * 4);
  for (Index k = 0; k < m.grid.size(); ++k) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(m.grid.values().data()[k]));
    for (int b = 0; b < 4; ++b)
      raster[4 * static_cast<std::size_t>(k) + static_cast<std::size_t>(b)] =
          static_cast<unsigned char>((bits >> (8 * b)) & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  write_sidecar(sidecar_path(path), m);
}

MasterMask energy_correct(const MasterMask& m, double exponent) {
  require(exponent > 0.0 && std::isfinite(exponent), ErrorKind::Argument,
          "energy-correction exponent must be positive");
  MasterMask out = m;
  out.grid = Grid2D(m.grid.values().pow(exponent), m.grid.pitch_um());
  return out;
}

double source_profile_alpha(Index rows, Index cols, double corner_transmission) {
  require(corner_transmission > 0.0 && corner_transmission <= 1.0, ErrorKind::Argument,
          "corner transmission must lie in (0, 1]");
  require(rows >= 2 && cols >= 2, ErrorKind::Argument, "source profile needs at least 2x2");
  const double dy = 0.5 * static_cast<double>(rows - 1);
  const double dx = 0.5 * static_cast<double>(cols - 1);
  return -std::log(corner_transmission) / (dy * dy + dx * dx);
}

Grid2D source_profile(Index rows, Index cols, double corner_transmission) {
  const double alpha = source_profile_alpha(rows, cols, corner_transmission);
  const double yc = 0.5 * static_cast<double>(rows - 1);
  const double xc = 0.5 * static_cast<double>(cols - 1);
  RowMajorArray<double> s(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      const double di = static_cast<double>(i) - yc;
      const double dj = static_cast<double>(j) - xc;
      s(i, j) = std::exp(-alpha * (di * di + dj * dj));
    }
  return Grid2D(std::move(s));
}

Grid2D apply_source_profile(const Grid2D& g, double corner_transmission) {
  const auto s = source_profile(g.rows(), g.cols(), corner_transmission);
  return Grid2D(g.values() * s.values(), g.pitch_um());
}

Grid2D compose_consecutive(const Grid2D& a, const Grid2D& b) {
  require(a.same_shape(b), ErrorKind::Argument, "consecutive masks must have equal shapes");
  validate_transmission(a, "first mask");
  validate_transmission(b, "second mask");
  return Grid2D(a.values() * b.values(), a.pitch_um() ? a.pitch_um() : b.pitch_um());
}

double delroughness(const Grid2D& g) {
  require(g.rows() >= 3 && g.cols() >= 3, ErrorKind::Argument, "delroughness needs at least 3x3");
  const auto& v = g.values();
  const Index r = g.rows() - 2;
  const Index c = g.cols() - 2;
  const RowMajorArray<double> d = 0.5 * (v.block(2, 1, r, c) - v.block(0, 1, r, c)) +
                                  0.5 * (v.block(1, 2, r, c) - v.block(1, 0, r, c));
  return std::sqrt((d - d.mean()).square().mean());
}

MaskStats mask_stats(const Grid2D& g, int n_bins) {
  MaskStats s;
  s.mean = grid_mean(g);
  s.variance = grid_variance(g);
  s.delroughness = delroughness(g);
  s.spectrum = radial_power_spectrum(g, n_bins);
  s.mode_freq = spectrum_mode(s.spectrum);
  try {
    const auto [mean, sd] = spectrum_moments(s.spectrum);
    s.mean_freq = mean;
    s.std_freq = sd;
  } catch (const Error& e) {
    s.error = e.what();
  }
  if (!s.mode_freq && s.error.empty()) s.error = "spectral mode undefined: no power outside the DC bin";
  return s;
}

}  // namespace ghostplan
