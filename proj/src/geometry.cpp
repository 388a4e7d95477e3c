#include "advsticker/geometry.hpp"

#include <cmath>
#include <string>

namespace advsticker {

void BendPitchParams::validate() const {
  if (!(a >= 0.0)) throw ShapeError("BendPitchParams: parabola rate must be >= 0");
  if (!(std::cos(phi) > 0.0) || !(std::fabs(phi) < 1.5707963267948966)) {
    throw ShapeError("BendPitchParams: |phi| must be < pi/2");
  }
  if (!(place_scale > 0.0)) throw ShapeError("BendPitchParams: place_scale must be > 0");
  if (!(tmpl_scale > 0.0)) throw ShapeError("BendPitchParams: tmpl_scale must be > 0");
}

double arclen(double a, double t) {
  if (a == 0.0) return t;
  const double u = std::fabs(t);
  const double w = 2.0 * a * u;
  const double s = 0.5 * u * std::sqrt(1.0 + w * w) + std::asinh(w) / (4.0 * a);
  return t < 0.0 ? -s : s;
}

double arclen_inverse(double a, double s) {
  if (a == 0.0 || s == 0.0) return s;
  const double target = std::fabs(s);
  // arclen(a, x) >= x for x >= 0, so the root lies in [0, target].
  double lo = 0.0, hi = target;
  double x = target / std::sqrt(1.0 + a * target);  // cheap starting guess
  for (int it = 0; it < 100; ++it) {
    const double f = arclen(a, x) - target;
    if (std::fabs(f) <= 1e-13 * (1.0 + target)) break;
    if (f > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    const double deriv = std::sqrt(1.0 + 4.0 * a * a * x * x);  // > 0
    double next = x - f / deriv;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);  // bisect fallback
    if (next == x) break;
    x = next;
  }
  return s < 0.0 ? -x : x;
}

SamplingGrid build_placement_grid(const StickerSpec& spec, const BendPitchParams& p,
                                  int face_h, int face_w) {
  p.validate();
  SamplingGrid grid(face_h, face_w);

  const double aspect = spec.aspect();
  const double cos_t = std::cos(p.place_theta);
  const double sin_t = std::sin(p.place_theta);
  const double inv_scale = 1.0 / p.place_scale;
  const double cos_phi = std::cos(p.phi);
  const double sin_phi = std::sin(p.phi);
  const double inv_cos_phi = 1.0 / cos_phi;

  // Plane half-extent of the bent sticker: |u| beyond this cannot come from
  // any texel, so the expensive inverse-bend evaluation is skipped there.
  const double u_max = arclen_inverse(p.a, spec.half_width);
  // The pitched profile's vertical reach; a loose bound for a cheap v reject.
  const double v_max = aspect * inv_cos_phi +
                       p.a * u_max * u_max * std::fabs(sin_phi) * inv_cos_phi + 1e-12;

  const double tex_w = static_cast<double>(spec.tex_width);
  const double tex_h = static_cast<double>(spec.tex_height);

  std::size_t idx = 0;
  for (int py = 0; py < face_h; ++py) {
    for (int px = 0; px < face_w; ++px, ++idx) {
      // Undo the placement affine.
      const double dx = static_cast<double>(px) - p.place_tx;
      const double dy = static_cast<double>(py) - p.place_ty;
      const double u = (cos_t * dx + sin_t * dy) * inv_scale;
      const double v = (-sin_t * dx + cos_t * dy) * inv_scale;
      if (std::fabs(u) > u_max || std::fabs(v) > v_max) {
        grid.mask[idx] = 0;
        grid.src_x[idx] = 0.0;
        grid.src_y[idx] = 0.0;
        continue;
      }
      // Undo pitch and bend: the texel arc-length coordinate is the arc
      // length at u, and the pre-pitch vertical coordinate follows from the
      // parabola height at u.
      const double x = arclen(p.a, u);
      const double z = p.a * u * u;
      const double y = (v + z * sin_phi) * inv_cos_phi;
      if (std::fabs(x) > spec.half_width || std::fabs(y) > aspect) {
        grid.mask[idx] = 0;
        grid.src_x[idx] = 0.0;
        grid.src_y[idx] = 0.0;
        continue;
      }
      grid.src_x[idx] = (x + spec.half_width) / (2.0 * spec.half_width) * tex_w - 0.5;
      grid.src_y[idx] = (y + aspect) / (2.0 * aspect) * tex_h - 0.5;
    }
  }
  return grid;
}

SamplingGrid build_template_grid(const BendPitchParams& p, int face_h, int face_w,
                                 int tmpl_h, int tmpl_w) {
  p.validate();
  SamplingGrid grid(tmpl_h, tmpl_w);
  const double fcx = 0.5 * (face_w - 1);
  const double fcy = 0.5 * (face_h - 1);
  const double tcx = 0.5 * (tmpl_w - 1);
  const double tcy = 0.5 * (tmpl_h - 1);
  const double cos_t = std::cos(p.tmpl_theta);
  const double sin_t = std::sin(p.tmpl_theta);
  const double inv_scale = 1.0 / p.tmpl_scale;

  std::size_t idx = 0;
  for (int ty = 0; ty < tmpl_h; ++ty) {
    for (int tx = 0; tx < tmpl_w; ++tx, ++idx) {
      const double dx = static_cast<double>(tx) - tcx - p.tmpl_tx;
      const double dy = static_cast<double>(ty) - tcy - p.tmpl_ty;
      grid.src_x[idx] = (cos_t * dx + sin_t * dy) * inv_scale + fcx;
      grid.src_y[idx] = (-sin_t * dx + cos_t * dy) * inv_scale + fcy;
    }
  }
  return grid;
}

RenderContext make_render_context(const StickerSpec& spec, const BendPitchParams& p,
                                  int face_h, int face_w, int tmpl_h, int tmpl_w) {
  RenderContext ctx;
  ctx.placement = build_placement_grid(spec, p, face_h, face_w);
  ctx.template_grid = build_template_grid(p, face_h, face_w, tmpl_h, tmpl_w);
  ctx.face_h = face_h;
  ctx.face_w = face_w;
  ctx.tmpl_h = tmpl_h;
  ctx.tmpl_w = tmpl_w;
  return ctx;
}

RenderResult render_with_context(const ImageBuffer& sticker, const ImageBuffer& face,
                                 const RenderContext& ctx) {
  if (face.height != ctx.face_h || face.width != ctx.face_w) {
    throw ShapeError("render: face does not match context dimensions");
  }
  RenderResult out;
  const ImageBuffer warped = bilinear_sample(sticker, ctx.placement);
  out.composited = composite(face, warped, ctx.placement.mask);
  out.templ = bilinear_sample(out.composited, ctx.template_grid);
  return out;
}

ImageBuffer render(const ImageBuffer& sticker, const ImageBuffer& face,
                   const StickerSpec& spec, const BendPitchParams& p,
                   int tmpl_h, int tmpl_w) {
  if (sticker.height != spec.tex_height || sticker.width != spec.tex_width) {
    throw ShapeError("render: sticker does not match StickerSpec dimensions");
  }
  const RenderContext ctx =
      make_render_context(spec, p, face.height, face.width, tmpl_h, tmpl_w);
  return render_with_context(sticker, face, ctx).templ;
}

ImageBuffer render_vjp_sticker(const RenderContext& ctx, const StickerSpec& spec,
                               const ImageBuffer& cotangent) {
  if (cotangent.height != ctx.tmpl_h || cotangent.width != ctx.tmpl_w) {
    throw ShapeError("render_vjp_sticker: cotangent shape mismatch");
  }
  // Back through the template sampling into the composited face plane.
  ImageBuffer d_comp(ctx.face_h, ctx.face_w, cotangent.channels);
  bilinear_scatter_into(d_comp, ctx.template_grid, cotangent);

  // The composite routes the in-mask part to the warped sticker; masking is
  // implicit in the placement scatter below, which only reads valid pixels.
  ImageBuffer d_sticker(spec.tex_height, spec.tex_width, cotangent.channels);
  bilinear_scatter_into(d_sticker, ctx.placement, d_comp);
  return d_sticker;
}

}  // namespace advsticker
