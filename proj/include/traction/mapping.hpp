// Ground-condition map: world-to-grid transform, running-mean aggregation of
// repeated cell hits and the three-band Manhattan-distance interpolation.
#pragma once

#include "traction/point.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace traction {

inline constexpr int kMapLayers = 5;
/// Layer order: a, p, alpha1, alpha2, rho_s.
inline constexpr std::array<std::string_view, kMapLayers> kLayerNames = {"a", "p", "alpha1", "alpha2",
                                                                        "rho_s"};

std::optional<int> layer_index(std::string_view name);

struct CellIndex {
    int i = 0;
    int j = 0;

    friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

using LayerValues = std::array<double, kMapLayers>;

struct MapCell {
    LayerValues values{};
    int hits = 0; ///< 0 means empty

    bool empty() const { return hits == 0; }

    friend bool operator==(const MapCell&, const MapCell&) = default;
};

/// w x l grid of optional parameter vectors; i runs along x, j along y.
class GroundMap {
public:
    GroundMap() = default;
    GroundMap(Point2 origin, double resolution, int width, int length);

    Point2 origin() const { return origin_; }
    double resolution() const { return resolution_; }
    int width() const { return width_; }
    int length() const { return length_; }
    static constexpr int layers() { return kMapLayers; }

    bool contains(CellIndex c) const { return c.i >= 0 && c.j >= 0 && c.i < width_ && c.j < length_; }
    const MapCell& cell(CellIndex c) const;
    MapCell& cell(CellIndex c);

    std::size_t filled_cells() const;
    /// Filled fraction of all cells.
    double coverage() const;

    /// Grows the grid so that `c` (possibly negative) becomes addressable.
    /// Dimensions at least double along each direction that grows. The origin
    /// only moves by whole cells, so existing cell boundaries stay where they were.
    void grow_to_include(CellIndex c);

    friend bool operator==(const GroundMap&, const GroundMap&) = default;

private:
    std::size_t flat(CellIndex c) const { return static_cast<std::size_t>(c.j) * width_ + c.i; }

    Point2 origin_;
    double resolution_ = 1.0;
    int width_ = 0;
    int length_ = 0;
    std::vector<MapCell> cells_; // row-major in j
};

struct InterpolationConfig {
    double eps_low = 10.0;
    double eps_mid = 5.0;
    double eps_high = 1.5;
    double w_low = 0.1;
    double w_mid = 0.5;
    double w_high = 4.0;

    /// Throws Error(InvalidArgument) unless eps_low > eps_mid > eps_high > 0
    /// and 0 < w_low < w_mid < w_high.
    void validate() const;
};

/// Unchecked cell index of a world position: floor((pos - origin) / resolution).
CellIndex world_to_cell(Point2 pos, const GroundMap& map);

/// Checked variant; throws Error(OutOfBounds) naming the offending index.
CellIndex world_to_grid(Point2 pos, const GroundMap& map);

/// Running per-layer mean of all values inserted into the cell containing pos.
void insert(GroundMap& map, Point2 pos, const LayerValues& values);

/// Like insert, but first grows the map when pos falls outside it.
void insert_growing(GroundMap& map, Point2 pos, const LayerValues& values);

int manhattan(CellIndex a, CellIndex b);

/// For every cell, averages the non-empty snapshot cells inside each distance
/// band (high: d <= eps_high, mid: eps_high < d <= eps_mid, low: eps_mid < d <=
/// eps_low, thresholds in cells) and returns the band means weighted by the
/// band weights, normalized by the weights of the bands that had data. Cells
/// with no data within eps_low stay empty. The result's hit count is the
/// number of source cells that contributed.
GroundMap interpolate(const GroundMap& map, const InterpolationConfig& cfg);

/// `i,j,<layer>` header followed by one row per filled cell, row-major.
void write_layer_csv(std::ostream& out, const GroundMap& map, int layer);

struct LayerEntry {
    CellIndex cell;
    double value = 0.0;
};

struct LayerCsv {
    std::string layer;
    std::vector<LayerEntry> entries;
};

/// Parses the format written by write_layer_csv.
LayerCsv read_layer_csv(std::istream& in);

/// Full map state (geometry, cells, hit counts) as JSON text.
std::string map_to_json(const GroundMap& map);
GroundMap map_from_json(std::string_view text);

} // namespace traction
