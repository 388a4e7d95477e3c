#pragma once

// Off-plane sticker geometry: the length-preserving parabolic bend, pitch
// rotation, in-plane placement, and the face-to-template alignment, all
// expressed as inverse sampling grids with closed-form math.
//
// Conventions (all warps are inverse maps: output pixel -> source coords):
//   - Sticker frame: the flat sticker spans x in [-1, 1] (half-width 1) and
//     y in [-aspect, aspect], y downward; aspect = tex_height / tex_width.
//     Texel (row, col) centers sit at x = (col+0.5) * 2/W - 1 and
//     y = (row+0.5) * 2*aspect/H - aspect (edge-to-edge mapping).
//   - Bend: the sticker is laid onto the parabolic cylinder z = a*u^2 so
//     that surface arc length is preserved: the texel at sticker coordinate
//     x lands at plane coordinate u with arclen(a, u) = x.
//   - Pitch: rotation by phi about the sticker's horizontal midline (the
//     x axis), followed by orthographic projection along z:
//     (u, y, z) -> (u, y*cos(phi) - z*sin(phi)).
//   - Placement: face = place_scale * R(place_theta) * (u, v) + (tx, ty).
//   - Template: tmpl = tmpl_scale * R(tmpl_theta) * (face - face_center)
//     + tmpl_center + (tmpl_tx, tmpl_ty).

#include "advsticker/image.hpp"
#include "advsticker/sampling.hpp"

namespace advsticker {

struct BendPitchParams {
  double a = 0.0;            // parabola rate, >= 0, sticker units
  double phi = 0.0;          // pitch angle, radians, |phi| < pi/2
  double place_scale = 1.0;  // face pixels per sticker unit, > 0
  double place_theta = 0.0;  // in-plane rotation, radians
  double place_tx = 0.0;     // sticker center, face pixels
  double place_ty = 0.0;
  double tmpl_scale = 1.0;   // template pixels per face pixel, > 0
  double tmpl_theta = 0.0;
  double tmpl_tx = 0.0;      // template-pixel offsets
  double tmpl_ty = 0.0;

  // Throws ShapeError when an invariant (a >= 0, cos(phi) > 0, positive
  // scales) is violated.
  void validate() const;
};

struct StickerSpec {
  int tex_height = 400;
  int tex_width = 900;
  double half_width = 1.0;
  double aspect() const {
    return half_width * static_cast<double>(tex_height) / tex_width;
  }
};

// Signed arc length of the parabola z = a*x^2 from 0 to t:
//   sign(t) * ( |t|/2 * sqrt(1 + 4 a^2 t^2) + asinh(2 a |t|) / (4 a) ),
// with the exact flat limit arclen(0, t) = t.
double arclen(double a, double t);

// Inverse of arclen in t: returns x with arclen(a, x) = s to |residual| <=
// 1e-12 (bracketed Newton; arclen is odd and strictly increasing).
double arclen_inverse(double a, double s);

// Grid mapping each face pixel to sticker texel coordinates through the
// inverse of placement o pitch o bend. Mask marks pixels whose preimage lies
// inside the sticker rectangle.
SamplingGrid build_placement_grid(const StickerSpec& spec, const BendPitchParams& p,
                                  int face_h, int face_w);

// Grid mapping each template pixel back into face-image coordinates through
// the inverse of the center-based similarity transform. All-true mask.
SamplingGrid build_template_grid(const BendPitchParams& p, int face_h, int face_w,
                                 int tmpl_h, int tmpl_w);

// Precomputed warp state for one parameter draw; grids depend only on the
// parameters, never on the sticker, so one context serves the forward render
// and its VJP.
struct RenderContext {
  SamplingGrid placement;
  SamplingGrid template_grid;
  int face_h = 0, face_w = 0;
  int tmpl_h = 0, tmpl_w = 0;
};

RenderContext make_render_context(const StickerSpec& spec, const BendPitchParams& p,
                                  int face_h, int face_w, int tmpl_h, int tmpl_w);

struct RenderResult {
  ImageBuffer composited;  // face with the warped sticker, face resolution
  ImageBuffer templ;       // template-resolution crop fed to the embedder
};

// Two-stage render: warp the sticker onto the full-resolution face first,
// composite, then sample down to the template. Compositing at template
// resolution instead would blend sticker and face values at the boundary and
// change the gradients, so the high-resolution stage is not optional.
RenderResult render_with_context(const ImageBuffer& sticker, const ImageBuffer& face,
                                 const RenderContext& ctx);

ImageBuffer render(const ImageBuffer& sticker, const ImageBuffer& face,
                   const StickerSpec& spec, const BendPitchParams& p,
                   int tmpl_h, int tmpl_w);

// VJP of render onto the sticker: template-shaped cotangent back through the
// template sampling, the composite mask, and the placement sampling.
ImageBuffer render_vjp_sticker(const RenderContext& ctx, const StickerSpec& spec,
                               const ImageBuffer& cotangent);

}  // namespace advsticker
