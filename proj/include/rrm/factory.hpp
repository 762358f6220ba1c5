#pragma once

// Parameterized factory hall with a grid of obstacle blocks separated by
// two-lane alleys, and lane-following robot mobility with collision avoidance.

#include <cstdint>
#include <deque>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "rrm/geometry.hpp"
#include "rrm/rng.hpp"

namespace rrm {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class SpawnError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LayoutConfig {
    double width_m = 180.0;
    double height_m = 80.0;
    double alley_width_m = 5.0;
    int obstacle_rows = 2;
    int obstacle_cols = 3;
};

struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    double area() const { return (x1 - x0) * (y1 - y0); }
    bool contains(Point2 p, double tol = 1e-9) const
    {
        return p.x >= x0 - tol && p.x <= x1 + tol && p.y >= y0 - tol && p.y <= y1 + tol;
    }
};

/// Directed-by-traversal lane graph: nodes are alley crossings and alley ends,
/// edges are straight alley centerline segments between consecutive nodes.
struct LaneEdge {
    int from = 0;
    int to = 0;
    double length = 0.0;
};

struct FactoryLayout {
    double width_m = 0.0;
    double height_m = 0.0;
    double alley_width_m = 0.0;
    std::vector<Rect> alleys;
    std::vector<Rect> zones;
    std::vector<Point2> intersections;
    std::vector<Point2> nodes;
    std::vector<LaneEdge> edges;
    std::vector<std::vector<int>> incident;   // node -> edge ids

    double lane_offset() const { return alley_width_m / 4.0; }
    /// Union area of all alleys (crossings counted once).
    double alley_area() const;
    bool on_alley(Point2 p, double tol = 1e-6) const;
    bool inside(Point2 p, double tol = 1e-9) const;
};

FactoryLayout build_layout(const LayoutConfig& config);

struct RobotState {
    int subnetwork_id = 0;
    Point2 position;
    double heading = 0.0;
    double speed_mps = 0.0;
    int edge = 0;
    bool forward = true;   // travelling from edges[edge].from to .to
    double progress_m = 0.0;
    std::deque<int> route;   // upcoming node ids
    bool slowdown_flag = false;
    std::vector<Point2> device_offsets;

    std::vector<Point2> device_positions() const;
};

struct MobilityConfig {
    double nominal_speed_mps = 3.0;
    double min_separation_m = 1.0;
    double subnetwork_radius_m = 1.0;
    int max_spawn_attempts = 20000;
    int max_speed_halvings = 6;
};

struct Deployment {
    std::vector<RobotState> robots;
    double min_separation_m = 1.0;
    int devices_per_subnetwork = 1;
    double nominal_speed_mps = 3.0;
    Rng route_rng;

    std::vector<Point2> ap_positions() const;
    double min_pairwise_distance() const;
};

Deployment spawn(const FactoryLayout& layout, int n, int devices_per_subnetwork,
                 std::uint64_t seed, const MobilityConfig& config = {});

/// Advances every robot along its lane. Robots closest to their next crossing
/// move first; a robot whose move would bring it within the minimum separation
/// of another halves its speed until the move is clear, or stops.
void step_mobility(Deployment& deployment, const FactoryLayout& layout, double dt_s,
                   const MobilityConfig& config = {});

nlohmann::json to_json(const FactoryLayout& layout);
nlohmann::json to_json(const Deployment& deployment);

} // namespace rrm
