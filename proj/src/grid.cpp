#include "avrsafe/grid.hpp"

#include "avrsafe/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace avrsafe {

bool Box::contains(std::span<const double> x, double tol) const {
    for (std::size_t d = 0; d < lo.size(); ++d) {
        if (x[d] < lo[d] - tol || x[d] > hi[d] + tol) return false;
    }
    return true;
}

bool Box::contains(const Box& inner) const {
    if (inner.dims() != dims()) return false;
    for (std::size_t d = 0; d < lo.size(); ++d) {
        if (inner.lo[d] < lo[d] || inner.hi[d] > hi[d]) return false;
    }
    return true;
}

double GridAxis::coord(std::size_t i) const {
    if (i + 1 == points) return hi;
    return lo + static_cast<double>(i) * step();
}

GridSpec::GridSpec(std::vector<GridAxis> axes) : axes_(std::move(axes)) {
    if (axes_.empty()) throw ParameterError("grid needs at least one axis");
    strides_.assign(axes_.size(), 1);
    size_ = 1;
    for (std::size_t d = axes_.size(); d-- > 0;) {
        const auto& ax = axes_[d];
        if (ax.points < 2) throw ParameterError("grid axis needs at least 2 points");
        if (!(ax.hi > ax.lo)) throw ParameterError("grid axis needs hi > lo");
        strides_[d] = size_;
        size_ *= ax.points;
    }
    if (size_ > std::numeric_limits<StateId>::max()) {
        throw ParameterError("grid too large for 32-bit state ids");
    }
}

GridSpec GridSpec::over(const Box& box, std::span<const std::size_t> points) {
    if (points.size() != box.dims()) throw ParameterError("grid point counts do not match box");
    std::vector<GridAxis> axes;
    for (std::size_t d = 0; d < points.size(); ++d) {
        axes.push_back({box.lo[d], box.hi[d], points[d]});
    }
    return GridSpec(std::move(axes));
}

Box GridSpec::box() const {
    Box b;
    for (const auto& ax : axes_) {
        b.lo.push_back(ax.lo);
        b.hi.push_back(ax.hi);
    }
    return b;
}

std::vector<std::size_t> GridSpec::multi_index(StateId flat) const {
    std::vector<std::size_t> idx(axes_.size());
    std::size_t rest = flat;
    for (std::size_t d = 0; d < axes_.size(); ++d) {
        idx[d] = rest / strides_[d];
        rest %= strides_[d];
    }
    return idx;
}

StateId GridSpec::flat_index(std::span<const std::size_t> idx) const {
    std::size_t flat = 0;
    for (std::size_t d = 0; d < axes_.size(); ++d) flat += idx[d] * strides_[d];
    return static_cast<StateId>(flat);
}

std::vector<double> GridSpec::coord_of(StateId flat) const {
    std::vector<double> out(axes_.size());
    coord_of(flat, out);
    return out;
}

void GridSpec::coord_of(StateId flat, std::span<double> out) const {
    std::size_t rest = flat;
    for (std::size_t d = 0; d < axes_.size(); ++d) {
        out[d] = axes_[d].coord(rest / strides_[d]);
        rest %= strides_[d];
    }
}

StateId GridSpec::snap(std::span<const double> coord) const {
    // On a tensor grid the Euclidean nearest point decomposes per axis.
    std::size_t flat = 0;
    for (std::size_t d = 0; d < axes_.size(); ++d) {
        const auto& ax = axes_[d];
        const double x = std::clamp(coord[d], ax.lo, ax.hi);
        const double u = (x - ax.lo) / ax.step();
        auto i = static_cast<std::size_t>(std::floor(u));
        if (i >= ax.points - 1) {
            i = ax.points - 1;
        } else {
            // compare true distances so ties resolve toward the lower index
            const double below = x - ax.coord(i);
            const double above = ax.coord(i + 1) - x;
            if (above < below) ++i;
        }
        flat += i * strides_[d];
    }
    return static_cast<StateId>(flat);
}

std::vector<StateId> GridSpec::neighbors(StateId flat) const {
    std::vector<StateId> out;
    const auto idx = multi_index(flat);
    for (std::size_t d = 0; d < axes_.size(); ++d) {
        if (idx[d] > 0) out.push_back(static_cast<StateId>(flat - strides_[d]));
        if (idx[d] + 1 < axes_[d].points) out.push_back(static_cast<StateId>(flat + strides_[d]));
    }
    return out;
}

StateId snap_to_grid(std::span<const double> coord, const GridSpec& grid) {
    return grid.snap(coord);
}

nlohmann::json to_json(const GridSpec& grid) {
    nlohmann::json axes = nlohmann::json::array();
    for (const auto& ax : grid.axes()) {
        axes.push_back({{"lo", ax.lo}, {"hi", ax.hi}, {"points", ax.points}});
    }
    return {{"axes", axes}, {"order", "row-major, last axis fastest"}};
}

GridSpec grid_from_json(const nlohmann::json& j) {
    std::vector<GridAxis> axes;
    for (const auto& a : j.at("axes")) {
        axes.push_back({a.at("lo").get<double>(), a.at("hi").get<double>(),
                        a.at("points").get<std::size_t>()});
    }
    return GridSpec(std::move(axes));
}

}  // namespace avrsafe
