#include "posefuse/render.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace posefuse {

namespace {

struct ProjectedSplat {
  std::size_t index = 0;
  double u = 0.0, v = 0.0;   // screen center, pixel-center coordinates
  double z = 0.0;            // camera-space depth
  double sigma_px = 0.0;     // screen-space sigma
  double r2 = 0.0;           // squared footprint radius in pixels
  double opacity = 0.0;
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;  // clipped inclusive bounds
};

// Reused across renders; renders are single-threaded internally, callers
// parallelize across views/candidates.
struct Scratch {
  std::vector<ProjectedSplat> projected;
  std::vector<double> ex, ey, dx2, dy2;
  std::vector<int> row_start;
  std::vector<int> row_fill;
  struct Entry {
    int slot;
    double g;
  };
  std::vector<Entry> entries;
};

thread_local Scratch tls_scratch;

// Projects splats in front of the camera and clips footprints to the
// viewport. Returns splats in index order.
void project_splats(const SplatCloud& cloud, const CameraPose& cam,
                    const RenderOptions& opts,
                    std::vector<ProjectedSplat>& out) {
  out.clear();
  const CameraIntrinsics& K = cam.intrinsics;
  const Eigen::Matrix3d r_wc = cam.rotation_matrix().transpose();
  const int w = K.width;
  const int h = K.height;
  for (std::size_t i = 0; i < cloud.splats.size(); ++i) {
    const Splat& s = cloud.splats[i];
    const Eigen::Vector3d pc = r_wc * (s.position - cam.center);
    if (!(pc.z() > opts.z_near)) continue;
    ProjectedSplat p;
    p.index = i;
    p.z = pc.z();
    p.u = K.fx * pc.x() / pc.z() + K.cx;
    p.v = K.fy * pc.y() / pc.z() + K.cy;
    p.sigma_px = K.fx * s.sigma / pc.z();
    const double r = opts.cutoff_sigmas * p.sigma_px;
    p.r2 = r * r;
    p.opacity = s.opacity;
    p.x0 = std::max(0, static_cast<int>(std::ceil(p.u - r)));
    p.x1 = std::min(w - 1, static_cast<int>(std::floor(p.u + r)));
    p.y0 = std::max(0, static_cast<int>(std::ceil(p.v - r)));
    p.y1 = std::min(h - 1, static_cast<int>(std::floor(p.v + r)));
    if (p.x0 > p.x1 || p.y0 > p.y1) continue;
    out.push_back(p);
  }
}

// Separable Gaussian row/column factors for one footprint.
void fill_axis_weights(const ProjectedSplat& p, Scratch& scr) {
  const int nx = p.x1 - p.x0 + 1;
  const int ny = p.y1 - p.y0 + 1;
  scr.ex.resize(nx);
  scr.dx2.resize(nx);
  scr.ey.resize(ny);
  scr.dy2.resize(ny);
  const double inv2s2 = 1.0 / (2.0 * p.sigma_px * p.sigma_px);
  for (int ix = 0; ix < nx; ++ix) {
    const double dx = (p.x0 + ix) - p.u;
    scr.dx2[ix] = dx * dx;
    scr.ex[ix] = std::exp(-dx * dx * inv2s2);
  }
  for (int iy = 0; iy < ny; ++iy) {
    const double dy = (p.y0 + iy) - p.v;
    scr.dy2[iy] = dy * dy;
    scr.ey[iy] = std::exp(-dy * dy * inv2s2);
  }
}

}  // namespace

SplatCloud sim3_apply_cloud(const Sim3& t, const SplatCloud& cloud) {
  SplatCloud out = cloud;
  for (auto& s : out.splats) {
    s.position = t.apply(s.position);
    s.sigma *= t.scale;
  }
  return out;
}

void SplatGradients::add_scaled(const SplatGradients& other, double w) {
  for (std::size_t i = 0; i < position.size(); ++i) {
    position[i] += w * other.position[i];
    log_sigma[i] += w * other.log_sigma[i];
    color[i] += w * other.color[i];
    logit_opacity[i] += w * other.logit_opacity[i];
  }
}

SoftOccupancy render_occupancy(const SplatCloud& cloud, const CameraPose& cam,
                               const RenderOptions& opts) {
  const CameraIntrinsics& K = cam.intrinsics;
  K.validate();
  SoftOccupancy occ(K.width, K.height);
  Scratch& scr = tls_scratch;
  project_splats(cloud, cam, opts, scr.projected);
  if (scr.projected.empty()) {
    occ.empty_render = true;
    return occ;
  }

  // Transmittance product accumulated in splat-index order (project_splats
  // preserves it), so results are independent of any outer parallelism.
  std::vector<double>& t = occ.values;
  std::fill(t.begin(), t.end(), 1.0);
  for (const ProjectedSplat& p : scr.projected) {
    fill_axis_weights(p, scr);
    for (int y = p.y0; y <= p.y1; ++y) {
      const double wy = scr.ey[y - p.y0];
      const double dy2 = scr.dy2[y - p.y0];
      double* row = &t[static_cast<std::size_t>(y) * K.width];
      for (int x = p.x0; x <= p.x1; ++x) {
        if (scr.dx2[x - p.x0] + dy2 > p.r2) continue;
        const double w = p.opacity * scr.ex[x - p.x0] * wy;
        row[x] *= 1.0 - w;
      }
    }
  }
  for (auto& v : t) v = std::clamp(1.0 - v, 0.0, 1.0);
  return occ;
}

RgbImage render_rgb(const SplatCloud& cloud, const CameraPose& cam,
                    const RenderOptions& opts) {
  const CameraIntrinsics& K = cam.intrinsics;
  K.validate();
  RgbImage img(K.width, K.height);
  Scratch& scr = tls_scratch;
  project_splats(cloud, cam, opts, scr.projected);
  if (scr.projected.empty()) {
    img.empty_render = true;
    return img;
  }

  // Painter's algorithm: farthest first, depth ties by splat index.
  std::vector<ProjectedSplat>& ps = scr.projected;
  std::sort(ps.begin(), ps.end(), [](const ProjectedSplat& a, const ProjectedSplat& b) {
    if (a.z != b.z) return a.z > b.z;
    return a.index > b.index;
  });
  for (const ProjectedSplat& p : ps) {
    fill_axis_weights(p, scr);
    const Eigen::Vector3d& c = cloud.splats[p.index].color;
    for (int y = p.y0; y <= p.y1; ++y) {
      const double wy = scr.ey[y - p.y0];
      const double dy2 = scr.dy2[y - p.y0];
      for (int x = p.x0; x <= p.x1; ++x) {
        if (scr.dx2[x - p.x0] + dy2 > p.r2) continue;
        const double a =
            std::min(opts.alpha_cap, p.opacity * scr.ex[x - p.x0] * wy);
        double* px = img.at(x, y);
        for (int ch = 0; ch < 3; ++ch)
          px[ch] = c[ch] * a + px[ch] * (1.0 - a);
      }
    }
  }
  for (auto& v : img.pixels) v = std::clamp(v, 0.0, 1.0);
  return img;
}

namespace {

// Builds per-pixel front-to-back contribution lists (CSR over pixels).
// `accept` filters pixels (foreground mask or all).
template <typename Accept>
void build_pixel_bins(Scratch& scr, int width, int height, Accept accept) {
  std::vector<ProjectedSplat>& ps = scr.projected;
  std::sort(ps.begin(), ps.end(), [](const ProjectedSplat& a, const ProjectedSplat& b) {
    if (a.z != b.z) return a.z < b.z;
    return a.index < b.index;
  });

  const std::size_t n_px = static_cast<std::size_t>(width) * height;
  scr.row_start.assign(n_px + 1, 0);
  for (const ProjectedSplat& p : ps) {
    fill_axis_weights(p, scr);
    for (int y = p.y0; y <= p.y1; ++y) {
      const double dy2 = scr.dy2[y - p.y0];
      for (int x = p.x0; x <= p.x1; ++x) {
        if (scr.dx2[x - p.x0] + dy2 > p.r2) continue;
        const std::size_t px = static_cast<std::size_t>(y) * width + x;
        if (!accept(px)) continue;
        ++scr.row_start[px + 1];
      }
    }
  }
  for (std::size_t i = 0; i < n_px; ++i) scr.row_start[i + 1] += scr.row_start[i];
  scr.entries.resize(static_cast<std::size_t>(scr.row_start[n_px]));
  scr.row_fill.assign(scr.row_start.begin(), scr.row_start.end() - 1);
  for (std::size_t slot = 0; slot < ps.size(); ++slot) {
    const ProjectedSplat& p = ps[slot];
    fill_axis_weights(p, scr);
    for (int y = p.y0; y <= p.y1; ++y) {
      const double wy = scr.ey[y - p.y0];
      const double dy2 = scr.dy2[y - p.y0];
      for (int x = p.x0; x <= p.x1; ++x) {
        if (scr.dx2[x - p.x0] + dy2 > p.r2) continue;
        const std::size_t px = static_cast<std::size_t>(y) * width + x;
        if (!accept(px)) continue;
        scr.entries[scr.row_fill[px]++] = {static_cast<int>(slot),
                                           scr.ex[x - p.x0] * wy};
      }
    }
  }
}

}  // namespace

double photometric_loss_backward(const SplatCloud& cloud, const CameraPose& cam,
                                 const RgbImage& ref,
                                 const SilhouetteMask& ref_mask,
                                 const RenderOptions& opts,
                                 SplatGradients& grads, RgbImage* rendered) {
  const CameraIntrinsics& K = cam.intrinsics;
  K.validate();
  if (ref.width != K.width || ref.height != K.height ||
      ref_mask.width != K.width || ref_mask.height != K.height)
    throw DimensionMismatch("photometric_loss_backward: reference size");

  const std::size_t n_fg = ref_mask.count();
  if (rendered) *rendered = RgbImage(K.width, K.height);
  if (n_fg == 0) return 0.0;

  Scratch& scr = tls_scratch;
  project_splats(cloud, cam, opts, scr.projected);
  build_pixel_bins(scr, K.width, K.height,
                   [&](std::size_t px) { return ref_mask.bits[px] != 0; });

  const Eigen::Matrix3d r_cw = cam.rotation_matrix();
  const double norm = 1.0 / (3.0 * static_cast<double>(n_fg));
  double loss = 0.0;

  std::vector<double> t_at;   // transmittance in front of each contribution
  std::vector<double> alpha;  // capped alpha of each contribution
  for (std::size_t px = 0; px < ref_mask.bits.size(); ++px) {
    if (!ref_mask.bits[px]) continue;
    const int begin = scr.row_start[px];
    const int end = scr.row_start[px + 1];

    // Forward, front to back.
    Eigen::Vector3d color_out = Eigen::Vector3d::Zero();
    t_at.resize(end - begin);
    alpha.resize(end - begin);
    double t = 1.0;
    for (int e = begin; e < end; ++e) {
      const auto& entry = scr.entries[e];
      const ProjectedSplat& p = scr.projected[entry.slot];
      const double a = std::min(opts.alpha_cap, p.opacity * entry.g);
      t_at[e - begin] = t;
      alpha[e - begin] = a;
      color_out += (a * t) * cloud.splats[p.index].color;
      t *= 1.0 - a;
    }
    for (int ch = 0; ch < 3; ++ch)
      color_out[ch] = std::clamp(color_out[ch], 0.0, 1.0);
    if (rendered) {
      double* out_px = rendered->at(static_cast<int>(px % K.width),
                                    static_cast<int>(px / K.width));
      for (int ch = 0; ch < 3; ++ch) out_px[ch] = color_out[ch];
    }

    Eigen::Vector3d g_color;  // dL/dC at this pixel
    const double* ref_px = &ref.pixels[3 * px];
    for (int ch = 0; ch < 3; ++ch) {
      const double d = color_out[ch] - ref_px[ch];
      loss += std::abs(d) * norm;
      g_color[ch] = d > 0.0 ? norm : (d < 0.0 ? -norm : 0.0);
    }
    if (g_color.isZero(0.0)) continue;

    // Backward, back to front; suffix holds sum of alpha*T*color behind i.
    Eigen::Vector3d suffix = Eigen::Vector3d::Zero();
    for (int e = end - 1; e >= begin; --e) {
      const auto& entry = scr.entries[e];
      const ProjectedSplat& p = scr.projected[entry.slot];
      const Splat& s = cloud.splats[p.index];
      const double a = alpha[e - begin];
      const double t_i = t_at[e - begin];

      // dL/dcolor
      grads.color[p.index] += (a * t_i) * g_color;

      // dL/dalpha
      const double dl_da =
          g_color.dot(t_i * s.color - suffix / (1.0 - a));
      suffix += (a * t_i) * s.color;

      if (a >= opts.alpha_cap) continue;  // capped: flat in splat params
      const double g = entry.g;
      const double dl_dg = dl_da * p.opacity;
      const double dl_do = dl_da * g;

      // logit opacity
      grads.logit_opacity[p.index] += dl_do * s.opacity * (1.0 - s.opacity);

      // screen-space chain
      const double x = static_cast<double>(px % K.width);
      const double y = static_cast<double>(px / K.width);
      const double inv_s2 = 1.0 / (p.sigma_px * p.sigma_px);
      const double dx = x - p.u;
      const double dy = y - p.v;
      const double dg_du = g * dx * inv_s2;
      const double dg_dv = g * dy * inv_s2;
      const double dg_dsig = g * (dx * dx + dy * dy) * inv_s2 / p.sigma_px;

      const double dl_du = dl_dg * dg_du;
      const double dl_dv = dl_dg * dg_dv;
      const double dl_dsig_px = dl_dg * dg_dsig;

      // projection chain; camera coords X = fx inverse of (u,v,z)
      const double z = p.z;
      const double cx = (p.u - K.cx) * z / K.fx;  // camera-space X
      const double cy = (p.v - K.cy) * z / K.fy;  // camera-space Y
      const double dl_dX = dl_du * K.fx / z;
      const double dl_dY = dl_dv * K.fy / z;
      const double dl_dZ = -dl_du * K.fx * cx / (z * z) -
                           dl_dv * K.fy * cy / (z * z) -
                           dl_dsig_px * K.fx * s.sigma / (z * z);
      grads.position[p.index] += r_cw * Eigen::Vector3d(dl_dX, dl_dY, dl_dZ);

      // log sigma
      grads.log_sigma[p.index] += dl_dsig_px * (K.fx / z) * s.sigma;
    }
  }
  return loss;
}

std::vector<double> splat_visibility(const SplatCloud& cloud,
                                     const CameraPose& cam,
                                     const RenderOptions& opts) {
  const CameraIntrinsics& K = cam.intrinsics;
  K.validate();
  std::vector<double> vis(cloud.splats.size(), 0.0);
  Scratch& scr = tls_scratch;
  project_splats(cloud, cam, opts, scr.projected);
  if (scr.projected.empty()) return vis;
  build_pixel_bins(scr, K.width, K.height,
                   [](std::size_t) { return true; });
  const std::size_t n_px = static_cast<std::size_t>(K.width) * K.height;
  for (std::size_t px = 0; px < n_px; ++px) {
    double t = 1.0;
    for (int e = scr.row_start[px]; e < scr.row_start[px + 1]; ++e) {
      const auto& entry = scr.entries[e];
      const ProjectedSplat& p = scr.projected[entry.slot];
      const double a = std::min(opts.alpha_cap, p.opacity * entry.g);
      vis[p.index] = std::max(vis[p.index], a * t);
      t *= 1.0 - a;
    }
  }
  return vis;
}

}  // namespace posefuse
