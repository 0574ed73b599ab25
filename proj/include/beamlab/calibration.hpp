#pragma once

#include <string>

#include "beamlab/errors.hpp"

namespace beamlab::cal {

// Isotropic pixel-to-millimeter scale derived from one reference object of
// known physical size (typically the probe) measured in its segmentation
// mask. No lens model; a single linear ratio.
struct CalibrationScale {
    double mm_per_pixel = 0.0;
    std::string reference_object;
    double reference_mm = 0.0;
    double reference_px = 0.0;
};

// mm_per_pixel = reference_mm / reference_px. Both inputs must be positive
// and finite.
CalibrationScale derive_scale(double reference_mm, double reference_px,
                              std::string reference_object = "probe");

// Linear conversion. Rejects negative distances and non-positive scales.
double to_mm(double distance_px, const CalibrationScale& scale);

}  // namespace beamlab::cal
