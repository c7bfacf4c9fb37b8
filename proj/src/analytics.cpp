#include "ghostplan/analytics.hpp"

#include <charconv>
#include <cmath>
#include <limits>

namespace ghostplan {

double snr(const TargetImage& target, const Grid2D& projection, Index border_crop_px) {
  require(target.grid.same_shape(projection), ErrorKind::Argument, "projection and target shapes differ");
  require(border_crop_px >= 0, ErrorKind::Argument, "border crop must be non-negative");
  const Index rows = projection.rows() - 2 * border_crop_px;
  const Index cols = projection.cols() - 2 * border_crop_px;
  require(rows > 0 && cols > 0, ErrorKind::Argument, "border crop leaves no pixels");
  const auto P = projection.values().block(border_crop_px, border_crop_px, rows, cols);
  const auto I = target.grid.values().block(border_crop_px, border_crop_px, rows, cols);

  // Removing mean(P - I) instead of mean(P) alone keeps a cropped target's
  // non-zero mean from posing as noise; on the full grid the two coincide.
  const RowMajorArray<double> d = P - I;
  const RowMajorArray<double> nu = d - d.mean();
  const double noise_ms = nu.square().mean();
  const double signal_ms = I.square().mean();
  const double scale = std::max(P.abs().maxCoeff(), I.abs().maxCoeff());
  if (std::sqrt(noise_ms) <= 16.0 * std::numeric_limits<double>::epsilon() * scale)
    return std::numeric_limits<double>::infinity();
  return std::sqrt(signal_ms / noise_ms);
}

std::string noise_source_name(NoiseSource s) {
  switch (s) {
    case NoiseSource::Poisson: return "poisson";
    case NoiseSource::Exposure: return "exposure";
    case NoiseSource::Translational: return "translational";
  }
  return "unknown";
}

namespace {

NoisePrediction make_prediction(NoiseSource source, double norm_sq, double noise_std) {
  NoisePrediction p;
  p.source = source;
  p.noise_std = noise_std;
  p.predicted_snr = noise_std > 0.0 ? std::sqrt(norm_sq) / noise_std : std::numeric_limits<double>::infinity();
  return p;
}

}  // namespace

NoisePrediction predict_poisson(double norm_sq, double pedestal, double lambda) {
  require(lambda > 0.0, ErrorKind::Argument, "photon count lambda must be positive");
  require(pedestal > 0.0, ErrorKind::Argument, "Poisson prediction needs a positive pedestal");
  return make_prediction(NoiseSource::Poisson, norm_sq, std::sqrt(pedestal / lambda));
}

NoisePrediction predict_poisson(const TargetImage& target, const Plan& plan, const NoiseConfig& cfg) {
  return predict_poisson(target.norm_sq, plan.pedestal, cfg.lambda_photons);
}

NoisePrediction predict_exposure(double norm_sq, double sigma_w, Index n_prime, double variance) {
  require(sigma_w >= 0.0, ErrorKind::Argument, "sigma_w must be non-negative");
  require(n_prime > 0, ErrorKind::Argument, "exposure prediction needs a non-empty support");
  return make_prediction(NoiseSource::Exposure, norm_sq,
                         std::sqrt(sigma_w * sigma_w * static_cast<double>(n_prime) * variance));
}

double support_pooled_variance(const FovStack& stack, const Plan& plan) {
  require(!plan.support.empty(), ErrorKind::Argument, "support is empty");
  double acc = 0.0;
  for (Index k : plan.support) {
    const auto col = stack.pixels.col(k).array();
    acc += (col - col.mean()).square().mean();
  }
  return acc / static_cast<double>(plan.support.size());
}

NoisePrediction predict_exposure(const TargetImage& target, const FovStack& stack, const Plan& plan,
                                 const NoiseConfig& cfg) {
  return predict_exposure(target.norm_sq, cfg.sigma_w, plan.n_prime(), support_pooled_variance(stack, plan));
}

namespace {

// d_i g + d_j g by central differences on the interior of g.
RowMajorArray<double> gradient_sum(const RowMajorArray<double>& g) {
  const Index r = g.rows() - 2;
  const Index c = g.cols() - 2;
  return 0.5 * (g.block(2, 1, r, c) - g.block(0, 1, r, c)) + 0.5 * (g.block(1, 2, r, c) - g.block(1, 0, r, c));
}

double variance(const RowMajorArray<double>& a) { return (a - a.mean()).square().mean(); }

}  // namespace

NoisePrediction predict_translational(const TargetImage& target, std::span<const MasterMask> masters,
                                      const FovStack& stack, const Plan& plan, const NoiseConfig& cfg) {
  require(cfg.sigma_ij >= 0.0, ErrorKind::Argument, "sigma_ij must be non-negative");
  require(stack.shape.rows >= 3 && stack.shape.cols >= 3, ErrorKind::Argument,
          "FOV too small for gradients");
  const Index m = stack.shape.rows;
  const Index n = stack.shape.cols;
  double acc = 0.0;
  for (Index k : plan.support) {
    double d2 = 0.0;
    const auto& rec = stack.offsets[static_cast<std::size_t>(k)];
    if (!rec.b) {
      d2 = std::pow(delroughness(stack.fov(k)), 2);
    } else {
      require(masters.size() >= 2, ErrorKind::Argument, "two-mask stack needs both masters");
      // R = s A B; moving A alone perturbs R by s B grad(A), and likewise for B.
      const RowMajorArray<double> a = masters[0].grid.values().block(rec.a.dy, rec.a.dx, m, n);
      const RowMajorArray<double> b = masters[1].grid.values().block(rec.b->dy, rec.b->dx, m, n);
      const auto inner = [&](const RowMajorArray<double>& x) {
        return RowMajorArray<double>(x.block(1, 1, m - 2, n - 2));
      };
      RowMajorArray<double> s_in = RowMajorArray<double>::Ones(m - 2, n - 2);
      if (stack.illumination) s_in = inner(stack.illumination->values());
      const RowMajorArray<double> ga = gradient_sum(a);
      const RowMajorArray<double> gb = gradient_sum(b);
      const RowMajorArray<double> av = inner(a);
      const RowMajorArray<double> bv = inner(b);
      d2 = variance(s_in * bv * ga) + variance(s_in * av * gb);
    }
    acc += plan.weights(k) * plan.weights(k) * d2;
  }
  return make_prediction(NoiseSource::Translational, target.norm_sq, cfg.sigma_ij * std::sqrt(acc));
}

namespace {

std::string stride_label(const SamplingProtocol& p) {
  if (const auto* s = std::get_if<Systematic>(&p)) return std::to_string(s->stride.x) + "-by-" + std::to_string(s->stride.y);
  if (const auto* s = std::get_if<ConsecutiveSystematic>(&p))
    return std::to_string(s->stride_a.x) + "-by-" + std::to_string(s->stride_a.y) + "/" +
           std::to_string(s->stride_b.x) + "-by-" + std::to_string(s->stride_b.y);
  if (const auto* s = std::get_if<ConsecutiveUnique>(&p))
    return std::to_string(s->stride_a.x) + "-by-" + std::to_string(s->stride_a.y) + "/unique";
  return protocol_name(p);
}

}  // namespace

PlanReport report_plan(const TargetImage& target, std::span<const MasterMask> masters, const FovStack& stack,
                       const Plan& plan, const NoiseConfig& cfg,
                       const std::map<std::string, SimResult>& sim_results) {
  PlanReport r;
  for (std::size_t i = 0; i < masters.size() && i < (stack.consecutive() ? 2u : 1u); ++i)
    r.mask_label += (i ? "+" : "") + masters[i].label;
  r.n_fovs = stack.count();
  r.stride = stride_label(stack.protocol);
  r.nnls_snr = plan.noise_free_snr;
  r.pedestal = plan.pedestal;
  r.n_prime = plan.n_prime();
  for (const auto& [name, sim] : sim_results) r.simulated[name] = {sim.snr_mean, sim.snr_std};
  if (plan.n_prime() > 0) {
    if (plan.pedestal > 0.0 && cfg.lambda_photons > 0.0)
      r.predicted["poisson"] = predict_poisson(target, plan, cfg);
    r.predicted["exposure"] = predict_exposure(target, stack, plan, cfg);
    r.predicted["translational"] = predict_translational(target, masters, stack, plan, cfg);
  }
  return r;
}

std::string format_number(std::optional<double> v) {
  if (!v) return "";
  if (std::isinf(*v) && *v > 0) return "exact";
  if (std::isnan(*v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, *v);
  return std::string(buf, res.ptr);
}

std::string report_csv_header() {
  return "mask_label,N,stride,NNLS_SNR,pedestal,N_prime,SNR_poisson_mean,SNR_poisson_std,SNR_exposure_mean,"
         "SNR_exposure_std,SNR_translational_mean,SNR_translational_std,SNR_all_mean,SNR_all_std,t_s,t_e";
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string report_csv_row(const PlanReport& r) {
  std::string row = csv_field(r.mask_label) + "," + std::to_string(r.n_fovs) + "," + csv_field(r.stride) + "," +
                    format_number(r.nnls_snr) + "," + format_number(r.pedestal) + "," + std::to_string(r.n_prime);
  for (const char* src : {"poisson", "exposure", "translational", "all"}) {
    const auto it = r.simulated.find(src);
    if (it == r.simulated.end()) {
      row += ",,";
    } else {
      row += "," + format_number(it->second.mean) + "," + format_number(it->second.std);
    }
  }
  row += "," + format_number(r.t_s) + "," + format_number(r.t_e);
  return row;
}

}  // namespace ghostplan
