#pragma once

#include "avrsafe/mdp.hpp"

#include <json.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace avrsafe {

// Grid coordinates within this distance of a box face count as on the face.
inline constexpr double kGridTolerance = 1e-9;

/// Axis-aligned box [lo, hi] in state space.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t dims() const { return lo.size(); }
    bool contains(std::span<const double> x, double tol = 0.0) const;
    bool contains(const Box& inner) const;
};

struct GridAxis {
    double lo;
    double hi;
    std::size_t points;

    double step() const { return (hi - lo) / static_cast<double>(points - 1); }
    double coord(std::size_t i) const;

    bool operator==(const GridAxis&) const = default;
};

/// Uniform tensor grid over a box. Flat indices are row-major: the last axis
/// varies fastest, so for a 2-D grid flat = i0 * n1 + i1.
class GridSpec {
public:
    GridSpec() = default;
    explicit GridSpec(std::vector<GridAxis> axes);
    static GridSpec over(const Box& box, std::span<const std::size_t> points);

    std::size_t dims() const { return axes_.size(); }
    std::size_t size() const { return size_; }
    const GridAxis& axis(std::size_t d) const { return axes_[d]; }
    const std::vector<GridAxis>& axes() const { return axes_; }
    Box box() const;

    std::vector<std::size_t> multi_index(StateId flat) const;
    StateId flat_index(std::span<const std::size_t> idx) const;
    std::vector<double> coord_of(StateId flat) const;
    void coord_of(StateId flat, std::span<double> out) const;

    /// Nearest grid point (Euclidean). Coordinates outside the box are
    /// clamped per axis first; exact half-way ties go to the lower index.
    StateId snap(std::span<const double> coord) const;

    /// Axis neighbours (±1 along each axis) that lie on the grid.
    std::vector<StateId> neighbors(StateId flat) const;

    bool operator==(const GridSpec&) const = default;

private:
    std::vector<GridAxis> axes_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
};

StateId snap_to_grid(std::span<const double> coord, const GridSpec& grid);

nlohmann::json to_json(const GridSpec& grid);
GridSpec grid_from_json(const nlohmann::json& j);

}  // namespace avrsafe
