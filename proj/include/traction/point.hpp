#pragma once

namespace traction {

/// Planar position in meters.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

} // namespace traction
