#include "rrm/factory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace rrm {

double FactoryLayout::alley_area() const
{
    double area = 0.0;
    for (const auto& a : alleys)
        area += a.area();
    // subtract pairwise overlaps at crossings
    for (std::size_t i = 0; i < alleys.size(); ++i) {
        for (std::size_t j = i + 1; j < alleys.size(); ++j) {
            const double w = std::min(alleys[i].x1, alleys[j].x1) - std::max(alleys[i].x0, alleys[j].x0);
            const double h = std::min(alleys[i].y1, alleys[j].y1) - std::max(alleys[i].y0, alleys[j].y0);
            if (w > 0.0 && h > 0.0)
                area -= w * h;
        }
    }
    return area;
}

bool FactoryLayout::on_alley(Point2 p, double tol) const
{
    return std::any_of(alleys.begin(), alleys.end(), [&](const Rect& r) { return r.contains(p, tol); });
}

bool FactoryLayout::inside(Point2 p, double tol) const
{
    return p.x >= -tol && p.x <= width_m + tol && p.y >= -tol && p.y <= height_m + tol;
}

namespace {

int find_or_add_node(FactoryLayout& layout, Point2 p)
{
    for (std::size_t i = 0; i < layout.nodes.size(); ++i) {
        if (distance(layout.nodes[i], p) < 1e-9)
            return static_cast<int>(i);
    }
    layout.nodes.push_back(p);
    return static_cast<int>(layout.nodes.size()) - 1;
}

void add_alley_edges(FactoryLayout& layout, std::vector<Point2> points)
{
    std::sort(points.begin(), points.end(),
              [](Point2 a, Point2 b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        LaneEdge e;
        e.from = find_or_add_node(layout, points[i]);
        e.to = find_or_add_node(layout, points[i + 1]);
        e.length = distance(points[i], points[i + 1]);
        layout.edges.push_back(e);
    }
}

} // namespace

FactoryLayout build_layout(const LayoutConfig& config)
{
    if (!(config.width_m > 0.0) || !(config.height_m > 0.0))
        throw ConfigError("layout: width and height must be > 0");
    if (!(config.alley_width_m > 0.0))
        throw ConfigError("layout: alley width must be > 0");
    if (config.alley_width_m > std::min(config.width_m, config.height_m))
        throw ConfigError("layout: alley width exceeds the hall size");
    if (config.obstacle_rows < 0 || config.obstacle_cols < 0)
        throw ConfigError("layout: obstacle rows/cols must be >= 0");

    FactoryLayout layout;
    layout.width_m = config.width_m;
    layout.height_m = config.height_m;
    layout.alley_width_m = config.alley_width_m;

    const int rows = config.obstacle_rows;
    const int cols = config.obstacle_cols;
    if (rows == 0 || cols == 0)
        return layout;

    const double a = config.alley_width_m;
    const double block_w = (config.width_m - (cols - 1) * a) / cols;
    const double block_h = (config.height_m - (rows - 1) * a) / rows;
    if (!(block_w > 0.0) || !(block_h > 0.0))
        throw ConfigError("layout: alleys leave no room for obstacle blocks");

    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double x0 = c * (block_w + a);
            const double y0 = r * (block_h + a);
            layout.zones.push_back({x0, y0, x0 + block_w, y0 + block_h});
        }
    }

    std::vector<double> xs, ys;   // alley centerlines
    for (int c = 0; c + 1 < cols; ++c) {
        const double x0 = (c + 1) * block_w + c * a;
        layout.alleys.push_back({x0, 0.0, x0 + a, config.height_m});
        xs.push_back(x0 + a / 2.0);
    }
    for (int r = 0; r + 1 < rows; ++r) {
        const double y0 = (r + 1) * block_h + r * a;
        layout.alleys.push_back({0.0, y0, config.width_m, y0 + a});
        ys.push_back(y0 + a / 2.0);
    }
    for (double x : xs) {
        for (double y : ys)
            layout.intersections.push_back({x, y});
    }

    // Alley ends sit half an alley width from the wall so U-turns stay inside the hall.
    for (double x : xs) {
        std::vector<Point2> pts{{x, a / 2.0}, {x, config.height_m - a / 2.0}};
        for (double y : ys)
            pts.push_back({x, y});
        add_alley_edges(layout, pts);
    }
    for (double y : ys) {
        std::vector<Point2> pts{{a / 2.0, y}, {config.width_m - a / 2.0, y}};
        for (double x : xs)
            pts.push_back({x, y});
        add_alley_edges(layout, pts);
    }

    layout.incident.assign(layout.nodes.size(), {});
    for (std::size_t e = 0; e < layout.edges.size(); ++e) {
        layout.incident[layout.edges[e].from].push_back(static_cast<int>(e));
        layout.incident[layout.edges[e].to].push_back(static_cast<int>(e));
    }
    return layout;
}

std::vector<Point2> RobotState::device_positions() const
{
    std::vector<Point2> out;
    out.reserve(device_offsets.size());
    for (const auto& o : device_offsets)
        out.push_back(position + o);
    return out;
}

std::vector<Point2> Deployment::ap_positions() const
{
    std::vector<Point2> out;
    out.reserve(robots.size());
    for (const auto& r : robots)
        out.push_back(r.position);
    return out;
}

double Deployment::min_pairwise_distance() const
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < robots.size(); ++i) {
        for (std::size_t j = i + 1; j < robots.size(); ++j)
            best = std::min(best, distance(robots[i].position, robots[j].position));
    }
    return best;
}

namespace {

int other_end(const LaneEdge& e, int node)
{
    return e.from == node ? e.to : e.from;
}

int target_node(const FactoryLayout& layout, const RobotState& r)
{
    const auto& e = layout.edges[r.edge];
    return r.forward ? e.to : e.from;
}

int source_node(const FactoryLayout& layout, const RobotState& r)
{
    const auto& e = layout.edges[r.edge];
    return r.forward ? e.from : e.to;
}

int pick_next_node(const FactoryLayout& layout, int previous, int current, Rng& rng)
{
    std::vector<int> options;
    for (int e : layout.incident[current]) {
        const int nb = other_end(layout.edges[e], current);
        if (nb != previous)
            options.push_back(nb);
    }
    if (options.empty())
        return previous;   // dead end: U-turn
    std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
    return options[pick(rng)];
}

void extend_route(const FactoryLayout& layout, RobotState& r, Rng& rng, std::size_t length = 4)
{
    int previous = source_node(layout, r);
    int current = target_node(layout, r);
    for (int node : r.route) {
        previous = current;
        current = node;
    }
    while (r.route.size() < length) {
        const int next = pick_next_node(layout, previous, current, rng);
        r.route.push_back(next);
        previous = current;
        current = next;
    }
}

int edge_between(const FactoryLayout& layout, int a, int b)
{
    for (int e : layout.incident[a]) {
        if (other_end(layout.edges[e], a) == b)
            return e;
    }
    throw std::logic_error("route references unconnected nodes");
}

void place(const FactoryLayout& layout, RobotState& r)
{
    const auto& e = layout.edges[r.edge];
    const Point2 from = layout.nodes[r.forward ? e.from : e.to];
    const Point2 to = layout.nodes[r.forward ? e.to : e.from];
    const Point2 dir = (1.0 / e.length) * (to - from);
    const Point2 right{dir.y, -dir.x};
    r.position = from + r.progress_m * dir + layout.lane_offset() * right;
    r.heading = std::atan2(dir.y, dir.x);
}

void advance(const FactoryLayout& layout, RobotState& r, double distance_m, Rng& rng)
{
    r.progress_m += distance_m;
    while (r.progress_m >= layout.edges[r.edge].length) {
        const double overflow = r.progress_m - layout.edges[r.edge].length;
        const int arrived = target_node(layout, r);
        if (r.route.empty())
            extend_route(layout, r, rng);
        const int next = r.route.front();
        r.route.pop_front();
        r.edge = edge_between(layout, arrived, next);
        r.forward = layout.edges[r.edge].from == arrived;
        r.progress_m = overflow;
        extend_route(layout, r, rng);
    }
    place(layout, r);
}

bool clear_of_others(const std::vector<Point2>& positions, std::size_t self, Point2 p, double d_min)
{
    for (std::size_t j = 0; j < positions.size(); ++j) {
        if (j != self && distance(positions[j], p) < d_min)
            return false;
    }
    return true;
}

} // namespace

Deployment spawn(const FactoryLayout& layout, int n, int devices_per_subnetwork, std::uint64_t seed,
                 const MobilityConfig& config)
{
    if (n < 1)
        throw std::invalid_argument("spawn: need at least one subnetwork");
    if (devices_per_subnetwork < 1)
        throw std::invalid_argument("spawn: need at least one device per subnetwork");
    if (layout.edges.empty())
        throw SpawnError("spawn: layout has no lanes");

    Deployment dep;
    dep.min_separation_m = config.min_separation_m;
    dep.devices_per_subnetwork = devices_per_subnetwork;
    dep.nominal_speed_mps = config.nominal_speed_mps;
    dep.route_rng = make_rng(seed, 1);
    Rng rng = make_rng(seed, 0);

    std::vector<double> lengths;
    for (const auto& e : layout.edges)
        lengths.push_back(e.length);
    std::discrete_distribution<int> pick_edge(lengths.begin(), lengths.end());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);

    std::vector<Point2> placed;
    int attempts = 0;
    while (static_cast<int>(dep.robots.size()) < n) {
        if (++attempts > config.max_spawn_attempts)
            throw SpawnError("spawn: could not place " + std::to_string(n)
                             + " subnetworks with the required separation");
        RobotState r;
        r.edge = pick_edge(rng);
        r.forward = coin(rng);
        r.progress_m = unit(rng) * layout.edges[r.edge].length;
        place(layout, r);
        if (!clear_of_others(placed, placed.size(), r.position, config.min_separation_m))
            continue;
        r.subnetwork_id = static_cast<int>(dep.robots.size());
        r.speed_mps = config.nominal_speed_mps;
        for (int m = 0; m < devices_per_subnetwork; ++m) {
            const double radius = config.subnetwork_radius_m * std::sqrt(unit(rng));
            const double angle = 2.0 * std::numbers::pi * unit(rng);
            r.device_offsets.push_back({radius * std::cos(angle), radius * std::sin(angle)});
        }
        extend_route(layout, r, dep.route_rng);
        placed.push_back(r.position);
        dep.robots.push_back(std::move(r));
    }
    return dep;
}

void step_mobility(Deployment& deployment, const FactoryLayout& layout, double dt_s,
                   const MobilityConfig& config)
{
    if (!(dt_s > 0.0))
        throw std::invalid_argument("step_mobility: dt must be > 0");
    auto& robots = deployment.robots;
    const double d_min = deployment.min_separation_m;

    std::vector<std::size_t> order(robots.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> to_crossing(robots.size());
    for (std::size_t i = 0; i < robots.size(); ++i)
        to_crossing[i] = layout.edges[robots[i].edge].length - robots[i].progress_m;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return to_crossing[a] < to_crossing[b]; });

    std::vector<Point2> positions = deployment.ap_positions();
    for (std::size_t i : order) {
        RobotState& robot = robots[i];
        double speed = deployment.nominal_speed_mps;
        bool moved = false;
        for (int halvings = 0; halvings <= config.max_speed_halvings; ++halvings) {
            RobotState candidate = robot;
            Rng rng_backup = deployment.route_rng;
            advance(layout, candidate, speed * dt_s, deployment.route_rng);
            if (clear_of_others(positions, i, candidate.position, d_min)) {
                robot = std::move(candidate);
                moved = true;
                break;
            }
            deployment.route_rng = rng_backup;
            speed /= 2.0;
        }
        if (!moved)
            speed = 0.0;
        robot.speed_mps = speed;
        robot.slowdown_flag = speed < deployment.nominal_speed_mps;
        positions[i] = robot.position;
    }
}

nlohmann::json to_json(const FactoryLayout& layout)
{
    auto rect = [](const Rect& r) { return nlohmann::json::array({r.x0, r.y0, r.x1, r.y1}); };
    nlohmann::json j;
    j["width_m"] = layout.width_m;
    j["height_m"] = layout.height_m;
    j["alley_width_m"] = layout.alley_width_m;
    j["alleys"] = nlohmann::json::array();
    for (const auto& a : layout.alleys)
        j["alleys"].push_back(rect(a));
    j["zones"] = nlohmann::json::array();
    for (const auto& z : layout.zones)
        j["zones"].push_back(rect(z));
    j["intersections"] = nlohmann::json::array();
    for (const auto& p : layout.intersections)
        j["intersections"].push_back({p.x, p.y});
    j["alley_area_m2"] = layout.alley_area();
    return j;
}

nlohmann::json to_json(const Deployment& deployment)
{
    nlohmann::json j;
    j["min_separation_m"] = deployment.min_separation_m;
    j["devices_per_subnetwork"] = deployment.devices_per_subnetwork;
    j["robots"] = nlohmann::json::array();
    for (const auto& r : deployment.robots) {
        nlohmann::json jr;
        jr["id"] = r.subnetwork_id;
        jr["position"] = {r.position.x, r.position.y};
        jr["heading"] = r.heading;
        jr["speed_mps"] = r.speed_mps;
        jr["slowdown"] = r.slowdown_flag;
        jr["edge"] = r.edge;
        jr["forward"] = r.forward;
        jr["progress_m"] = r.progress_m;
        jr["route"] = std::vector<int>(r.route.begin(), r.route.end());
        jr["device_offsets"] = nlohmann::json::array();
        for (const auto& o : r.device_offsets)
            jr["device_offsets"].push_back({o.x, o.y});
        j["robots"].push_back(jr);
    }
    return j;
}

} // namespace rrm
