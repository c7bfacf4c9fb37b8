#include "ghostplan/fov_sampler.hpp"

#include <random>
#include <sstream>

#include "ghostplan/rng.hpp"

namespace ghostplan {

std::string protocol_name(const SamplingProtocol& p) {
  struct Visitor {
    std::string operator()(const Systematic&) const { return "systematic"; }
    std::string operator()(const RandomDraw&) const { return "random"; }
    std::string operator()(const UniqueTiling&) const { return "unique_tiling"; }
    std::string operator()(const ConsecutiveSystematic&) const { return "consecutive_systematic"; }
    std::string operator()(const ConsecutiveUnique&) const { return "consecutive_unique"; }
    std::string operator()(const ConsecutiveRandom&) const { return "consecutive_random"; }
  };
  return std::visit(Visitor{}, p);
}

Grid2D FovStack::fov(Index k) const {
  require(k >= 0 && k < count(), ErrorKind::Argument, "FOV index out of range");
  return Grid2D::from_flat(pixels.col(k), shape.rows, shape.cols);
}

Index axis_capacity(Index len, Index fov, Index stride, Index margin) {
  require(stride > 0, ErrorKind::Argument, "stride must be positive");
  const Index span = len - fov - 2 * margin;
  return span < 0 ? 0 : span / stride + 1;
}

Index required_margin(double sigma_px) {
  return static_cast<Index>(std::ceil(3.0 * sigma_px)) + 2;
}

namespace {

void check_fov(const MasterMask& m, FovShape fov, Index margin) {
  require(fov.rows > 0 && fov.cols > 0, ErrorKind::Argument, "FOV dimensions must be positive");
  require(margin >= 0, ErrorKind::Argument, "margin must be non-negative");
  require(m.grid.rows() >= fov.rows + 2 * margin && m.grid.cols() >= fov.cols + 2 * margin,
          ErrorKind::Capacity, "master '" + m.label + "' is smaller than the FOV plus margins");
}

std::vector<Offset> systematic_offsets(const MasterMask& m, FovShape fov, Stride stride, Index count,
                                       Index margin) {
  require(stride.x > 0 && stride.y > 0, ErrorKind::Argument, "stride must be positive");
  const Index ny = axis_capacity(m.grid.rows(), fov.rows, stride.y, margin);
  const Index nx = axis_capacity(m.grid.cols(), fov.cols, stride.x, margin);
  const Index capacity = nx * ny;
  if (count > capacity) {
    std::ostringstream msg;
    msg << "master '" << m.label << "' admits at most " << capacity << " FOVs at stride " << stride.x
        << "-by-" << stride.y << " (requested " << count << ")";
    throw CapacityError(msg.str(), static_cast<std::size_t>(capacity));
  }
  std::vector<Offset> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index iy = 0; iy < ny && static_cast<Index>(out.size()) < count; ++iy)
    for (Index ix = 0; ix < nx && static_cast<Index>(out.size()) < count; ++ix)
      out.push_back({margin + iy * stride.y, margin + ix * stride.x});
  return out;
}

std::vector<Offset> random_offsets(const MasterMask& m, FovShape fov, Index count, std::uint64_t seed,
                                   StreamId stream, Index margin) {
  const Index ny = axis_capacity(m.grid.rows(), fov.rows, 1, margin);
  const Index nx = axis_capacity(m.grid.cols(), fov.cols, 1, margin);
  require(nx * ny > 0, ErrorKind::Capacity, "master '" + m.label + "' has no valid offsets");
  auto engine = make_stream(seed, stream);
  std::uniform_int_distribution<Index> pick_y(0, ny - 1);
  std::uniform_int_distribution<Index> pick_x(0, nx - 1);
  std::vector<Offset> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k) {
    const Index y = pick_y(engine);
    const Index x = pick_x(engine);
    out.push_back({margin + y, margin + x});
  }
  return out;
}

std::vector<Offset> tiling_offsets(const MasterMask& m, FovShape fov, Index margin) {
  const Index h = m.grid.rows() - 2 * margin;
  const Index w = m.grid.cols() - 2 * margin;
  if (h % fov.rows != 0 || w % fov.cols != 0) {
    fail(ErrorKind::Divisibility, "master '" + m.label + "' (minus margins) is not an integer multiple "
                                  "of the FOV size");
  }
  std::vector<Offset> out;
  for (Index ty = 0; ty < h / fov.rows; ++ty)
    for (Index tx = 0; tx < w / fov.cols; ++tx) out.push_back({margin + ty * fov.rows, margin + tx * fov.cols});
  return out;
}

Eigen::VectorXd window(const Grid2D& g, Offset o, FovShape fov) {
  RowMajorArray<double> block = g.values().block(o.dy, o.dx, fov.rows, fov.cols);
  return Eigen::Map<const Eigen::VectorXd>(block.data(), block.size());
}

FovStack single_stack(const MasterMask& m, FovShape fov, const std::vector<Offset>& offs,
                      SamplingProtocol protocol, Index margin) {
  FovStack s;
  s.shape = fov;
  s.protocol = std::move(protocol);
  s.margin_px = margin;
  s.pixels.resize(fov.rows * fov.cols, static_cast<Index>(offs.size()));
  s.offsets.reserve(offs.size());
  for (std::size_t k = 0; k < offs.size(); ++k) {
    s.pixels.col(static_cast<Index>(k)) = window(m.grid, offs[k], fov);
    s.offsets.push_back({offs[k], std::nullopt});
  }
  return s;
}

}  // namespace

FovStack sample_systematic(const MasterMask& m, FovShape fov, Stride stride, Index count, Index margin_px) {
  check_fov(m, fov, margin_px);
  require(count > 0, ErrorKind::Argument, "FOV count must be positive");
  return single_stack(m, fov, systematic_offsets(m, fov, stride, count, margin_px), Systematic{stride},
                      margin_px);
}

FovStack sample_random(const MasterMask& m, FovShape fov, Index count, std::uint64_t seed, Index margin_px) {
  check_fov(m, fov, margin_px);
  require(count > 0, ErrorKind::Argument, "FOV count must be positive");
  return single_stack(m, fov, random_offsets(m, fov, count, seed, StreamId::OffsetsA, margin_px),
                      RandomDraw{seed}, margin_px);
}

FovStack sample_unique_tiling(const MasterMask& m, FovShape fov, Index margin_px) {
  check_fov(m, fov, margin_px);
  return single_stack(m, fov, tiling_offsets(m, fov, margin_px), UniqueTiling{}, margin_px);
}

FovStack sample_consecutive(const MasterMask& a, const MasterMask& b, FovShape fov,
                            const SamplingProtocol& protocol, Index count, Index margin_px) {
  check_fov(a, fov, margin_px);
  check_fov(b, fov, margin_px);
  require(count > 0, ErrorKind::Argument, "FOV count must be positive");
  require(std::abs(a.pitch_um - b.pitch_um) <= 1e-9 * std::max(a.pitch_um, b.pitch_um),
          ErrorKind::Argument, "consecutive masters must share the same pixel pitch");

  std::vector<Offset> oa;
  std::vector<Offset> ob;
  if (const auto* sys = std::get_if<ConsecutiveSystematic>(&protocol)) {
    oa = systematic_offsets(a, fov, sys->stride_a, count, margin_px);
    ob = systematic_offsets(b, fov, sys->stride_b, count, margin_px);
  } else if (const auto* uni = std::get_if<ConsecutiveUnique>(&protocol)) {
    oa = systematic_offsets(a, fov, uni->stride_a, count, margin_px);
    const auto tiles = tiling_offsets(b, fov, margin_px);
    ob.reserve(static_cast<std::size_t>(count));
    for (Index k = 0; k < count; ++k) ob.push_back(tiles[static_cast<std::size_t>(k) % tiles.size()]);
  } else if (const auto* rnd = std::get_if<ConsecutiveRandom>(&protocol)) {
    // Stream A matches sample_random, so an all-ones second mask reproduces it.
    oa = random_offsets(a, fov, count, rnd->seed, StreamId::OffsetsA, margin_px);
    ob = random_offsets(b, fov, count, rnd->seed, StreamId::OffsetsB, margin_px);
  } else {
    fail(ErrorKind::Argument, "sample_consecutive needs a consecutive protocol, got " +
                                  protocol_name(protocol));
  }

  FovStack s;
  s.shape = fov;
  s.protocol = protocol;
  s.margin_px = margin_px;
  s.pixels.resize(fov.rows * fov.cols, count);
  s.offsets.reserve(static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k) {
    const auto ka = static_cast<std::size_t>(k);
    s.pixels.col(k) = window(a.grid, oa[ka], fov).cwiseProduct(window(b.grid, ob[ka], fov));
    s.offsets.push_back({oa[ka], ob[ka]});
  }
  return s;
}

Grid2D extract_fov(std::span<const MasterMask> masters, const FovStack& stack, Index k) {
  require(k >= 0 && k < stack.count(), ErrorKind::Argument, "FOV index out of range");
  const auto& rec = stack.offsets[static_cast<std::size_t>(k)];
  require(!masters.empty() && (!rec.b || masters.size() >= 2), ErrorKind::Argument,
          "not enough masters to re-extract the stack");
  auto cut = [&](const MasterMask& m, Offset o) {
    require(o.dy >= 0 && o.dx >= 0 && o.dy + stack.shape.rows <= m.grid.rows() &&
                o.dx + stack.shape.cols <= m.grid.cols(),
            ErrorKind::Argument, "stored offset outside master '" + m.label + "'");
    return RowMajorArray<double>(m.grid.values().block(o.dy, o.dx, stack.shape.rows, stack.shape.cols));
  };
  RowMajorArray<double> v = cut(masters[0], rec.a);
  if (rec.b) v *= cut(masters[1], *rec.b);
  if (stack.illumination) v *= stack.illumination->values();
  return Grid2D(std::move(v));
}

FovStack with_source_profile(FovStack stack, double corner_transmission) {
  const auto s = source_profile(stack.shape.rows, stack.shape.cols, corner_transmission);
  const Eigen::VectorXd flat = s.flattened();
  stack.pixels = flat.asDiagonal() * stack.pixels;
  if (stack.illumination) {
    stack.illumination = Grid2D(stack.illumination->values() * s.values());
  } else {
    stack.illumination = s;
  }
  return stack;
}

}  // namespace ghostplan
