#include "beamlab/calibration.hpp"

#include <cmath>
#include <utility>

#include "beamlab/numeric_text.hpp"

namespace beamlab::cal {

CalibrationScale derive_scale(double reference_mm, double reference_px,
                              std::string reference_object) {
    if (!std::isfinite(reference_mm) || reference_mm <= 0.0)
        throw ValidationError("derive_scale: reference_mm must be positive, got " +
                              format_double(reference_mm));
    if (!std::isfinite(reference_px) || reference_px <= 0.0)
        throw ValidationError("derive_scale: reference_px must be positive, got " +
                              format_double(reference_px));
    CalibrationScale scale;
    scale.mm_per_pixel = reference_mm / reference_px;
    scale.reference_object = std::move(reference_object);
    scale.reference_mm = reference_mm;
    scale.reference_px = reference_px;
    return scale;
}

double to_mm(double distance_px, const CalibrationScale& scale) {
    if (!std::isfinite(scale.mm_per_pixel) || scale.mm_per_pixel <= 0.0)
        throw ValidationError("to_mm: scale must have a positive mm_per_pixel");
    if (!std::isfinite(distance_px) || distance_px < 0.0)
        throw ValidationError("to_mm: distance must be nonnegative, got " +
                              format_double(distance_px));
    return distance_px * scale.mm_per_pixel;
}

}  // namespace beamlab::cal
