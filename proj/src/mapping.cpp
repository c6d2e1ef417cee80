#include "traction/mapping.hpp"

#include "traction/error.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

namespace traction {

std::optional<int> layer_index(std::string_view name) {
    for (int k = 0; k < kMapLayers; ++k) {
        if (kLayerNames[k] == name) return k;
    }
    return std::nullopt;
}

GroundMap::GroundMap(Point2 origin, double resolution, int width, int length)
    : origin_(origin), resolution_(resolution), width_(width), length_(length) {
    if (!(resolution > 0.0)) throw Error(ErrorKind::InvalidArgument, "map resolution must be positive");
    if (width < 0 || length < 0) throw Error(ErrorKind::InvalidArgument, "map dimensions must be nonnegative");
    cells_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(length));
}

const MapCell& GroundMap::cell(CellIndex c) const {
    if (!contains(c)) {
        throw Error(ErrorKind::OutOfBounds, fmt::format("cell ({}, {}) outside {}x{} map", c.i, c.j, width_, length_));
    }
    return cells_[flat(c)];
}

MapCell& GroundMap::cell(CellIndex c) {
    return const_cast<MapCell&>(static_cast<const GroundMap&>(*this).cell(c));
}

std::size_t GroundMap::filled_cells() const {
    return static_cast<std::size_t>(
        std::count_if(cells_.begin(), cells_.end(), [](const MapCell& c) { return !c.empty(); }));
}

double GroundMap::coverage() const {
    if (cells_.empty()) return 0.0;
    return static_cast<double>(filled_cells()) / static_cast<double>(cells_.size());
}

namespace {

struct AxisGrowth {
    int size = 0;
    int shift = 0; // cells prepended on the negative side
};

AxisGrowth grow_axis(int size, int index) {
    if (index >= 0 && index < size) return {size, 0};
    const int needed = index < 0 ? size - index : index + 1;
    const int grown = std::max({needed, 2 * size, 1});
    return {grown, index < 0 ? grown - size : 0};
}

} // namespace

void GroundMap::grow_to_include(CellIndex c) {
    if (contains(c)) return;
    const AxisGrowth gi = grow_axis(width_, c.i);
    const AxisGrowth gj = grow_axis(length_, c.j);

    GroundMap grown({origin_.x - gi.shift * resolution_, origin_.y - gj.shift * resolution_}, resolution_,
                    gi.size, gj.size);
    for (int j = 0; j < length_; ++j) {
        for (int i = 0; i < width_; ++i) {
            grown.cell({i + gi.shift, j + gj.shift}) = cell({i, j});
        }
    }
    *this = std::move(grown);
}

void InterpolationConfig::validate() const {
    if (!(eps_low > eps_mid && eps_mid > eps_high && eps_high > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "thresholds must satisfy eps_low > eps_mid > eps_high > 0");
    }
    if (!(w_low > 0.0 && w_low < w_mid && w_mid < w_high)) {
        throw Error(ErrorKind::InvalidArgument, "weights must satisfy 0 < w_low < w_mid < w_high");
    }
}

CellIndex world_to_cell(Point2 pos, const GroundMap& map) {
    return {static_cast<int>(std::floor((pos.x - map.origin().x) / map.resolution())),
            static_cast<int>(std::floor((pos.y - map.origin().y) / map.resolution()))};
}

CellIndex world_to_grid(Point2 pos, const GroundMap& map) {
    const CellIndex c = world_to_cell(pos, map);
    if (!map.contains(c)) {
        throw Error(ErrorKind::OutOfBounds,
                    fmt::format("position ({}, {}) maps to cell ({}, {}) outside {}x{} map", pos.x, pos.y, c.i,
                                c.j, map.width(), map.length()));
    }
    return c;
}

void insert(GroundMap& map, Point2 pos, const LayerValues& values) {
    for (double v : values) {
        if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "map values must be finite");
    }
    MapCell& cell = map.cell(world_to_grid(pos, map));
    const double n = cell.hits;
    for (int k = 0; k < kMapLayers; ++k) cell.values[k] = (cell.values[k] * n + values[k]) / (n + 1.0);
    ++cell.hits;
}

void insert_growing(GroundMap& map, Point2 pos, const LayerValues& values) {
    map.grow_to_include(world_to_cell(pos, map));
    insert(map, pos, values);
}

int manhattan(CellIndex a, CellIndex b) { return std::abs(b.i - a.i) + std::abs(b.j - a.j); }

GroundMap interpolate(const GroundMap& map, const InterpolationConfig& cfg) {
    cfg.validate();
    const double res = map.resolution();
    const double high = cfg.eps_high / res;
    const double mid = cfg.eps_mid / res;
    const double low = cfg.eps_low / res;
    const int reach = static_cast<int>(std::floor(low));

    // Offsets inside the eps_low diamond, tagged with their band.
    struct Offset {
        int di, dj, band;
    };
    std::vector<Offset> offsets;
    for (int di = -reach; di <= reach; ++di) {
        for (int dj = -reach; dj <= reach; ++dj) {
            const int d = std::abs(di) + std::abs(dj);
            if (d <= high) offsets.push_back({di, dj, 0});
            else if (d <= mid) offsets.push_back({di, dj, 1});
            else if (d <= low) offsets.push_back({di, dj, 2});
        }
    }
    const std::array<double, 3> weights = {cfg.w_high, cfg.w_mid, cfg.w_low};

    GroundMap out(map.origin(), res, map.width(), map.length());
    for (int j = 0; j < map.length(); ++j) {
        for (int i = 0; i < map.width(); ++i) {
            std::array<LayerValues, 3> sums{};
            std::array<int, 3> counts{};
            for (const Offset& o : offsets) {
                const CellIndex src{i + o.di, j + o.dj};
                if (!map.contains(src)) continue;
                const MapCell& c = map.cell(src);
                if (c.empty()) continue;
                for (int k = 0; k < kMapLayers; ++k) sums[o.band][k] += c.values[k];
                ++counts[o.band];
            }
            double weight_sum = 0.0;
            LayerValues blended{};
            for (int b = 0; b < 3; ++b) {
                if (counts[b] == 0) continue;
                weight_sum += weights[b];
                for (int k = 0; k < kMapLayers; ++k) blended[k] += weights[b] * sums[b][k] / counts[b];
            }
            if (weight_sum == 0.0) continue;
            MapCell& target = out.cell({i, j});
            for (int k = 0; k < kMapLayers; ++k) target.values[k] = blended[k] / weight_sum;
            target.hits = counts[0] + counts[1] + counts[2];
        }
    }
    return out;
}

void write_layer_csv(std::ostream& out, const GroundMap& map, int layer) {
    if (layer < 0 || layer >= kMapLayers) throw Error(ErrorKind::InvalidArgument, "unknown map layer");
    out << "i,j," << kLayerNames[layer] << '\n';
    for (int i = 0; i < map.width(); ++i) {
        for (int j = 0; j < map.length(); ++j) {
            const MapCell& c = map.cell({i, j});
            if (c.empty()) continue;
            out << fmt::format("{},{},{:.17g}\n", i, j, c.values[layer]);
        }
    }
}

LayerCsv read_layer_csv(std::istream& in) {
    LayerCsv csv;
    std::string line;
    if (!std::getline(in, line) || line.rfind("i,j,", 0) != 0) {
        throw Error(ErrorKind::Io, "layer CSV must start with an 'i,j,<layer>' header");
    }
    csv.layer = line.substr(4);
    if (!csv.layer.empty() && csv.layer.back() == '\r') csv.layer.pop_back();
    if (!layer_index(csv.layer)) throw Error(ErrorKind::Io, "unknown layer '" + csv.layer + "'");
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::istringstream row(line);
        LayerEntry e;
        char c1 = 0, c2 = 0;
        if (!(row >> e.cell.i >> c1 >> e.cell.j >> c2 >> e.value) || c1 != ',' || c2 != ',') {
            throw Error(ErrorKind::Io, "malformed layer CSV row: " + line);
        }
        csv.entries.push_back(e);
    }
    return csv;
}

std::string map_to_json(const GroundMap& map) {
    nlohmann::json j;
    j["origin"] = {map.origin().x, map.origin().y};
    j["resolution"] = map.resolution();
    j["width"] = map.width();
    j["length"] = map.length();
    j["layers"] = kLayerNames;
    auto cells = nlohmann::json::array();
    for (int i = 0; i < map.width(); ++i) {
        for (int jj = 0; jj < map.length(); ++jj) {
            const MapCell& c = map.cell({i, jj});
            if (c.empty()) continue;
            cells.push_back({{"i", i}, {"j", jj}, {"hits", c.hits}, {"values", c.values}});
        }
    }
    j["cells"] = std::move(cells);
    return j.dump(1);
}

GroundMap map_from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        GroundMap map({j.at("origin").at(0).get<double>(), j.at("origin").at(1).get<double>()},
                      j.at("resolution").get<double>(), j.at("width").get<int>(), j.at("length").get<int>());
        for (const auto& c : j.at("cells")) {
            MapCell& cell = map.cell({c.at("i").get<int>(), c.at("j").get<int>()});
            cell.hits = c.at("hits").get<int>();
            cell.values = c.at("values").get<LayerValues>();
        }
        return map;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Io, std::string("invalid map state: ") + e.what());
    }
}

} // namespace traction
