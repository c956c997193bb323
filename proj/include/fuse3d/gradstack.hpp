#pragma once

#include <span>

#include "fuse3d/tensor.hpp"

namespace fuse3d {

enum class GradientKind { F1x, F1y, F2x, F2y };

/// Pixelwise mean of the method outputs.
ImagePlane average_image(std::span<const ImagePlane> methods);
ImagePlane average_image(const Volume& methods);

/// First-order [1,-1] or second-order [1,-2,1]/2 stencil along x or y, same size as the
/// input with replicated edges. Anchoring:
///   F1x(y,x) = img(y,x) - img(y,x+1)
///   F2x(y,x) = (img(y,x-1) - 2 img(y,x) + img(y,x+1)) / 2
/// and the y kinds are the transposed stencils.
ImagePlane gradient_filter(const ImagePlane& img, GradientKind kind);

/// [F2x*avg, F1x*avg, avg, F1y*avg, F2y*avg], the second network input.
Volume build_gradient_stack(std::span<const ImagePlane> methods);
Volume build_gradient_stack(const Volume& methods);

} // namespace fuse3d
