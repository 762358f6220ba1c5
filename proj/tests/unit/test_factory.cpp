#include <cmath>

#include "doctest.h"
#include "rrm/factory.hpp"

using namespace rrm;

TEST_CASE("default layout")
{
    const auto layout = build_layout({});
    CHECK(layout.alley_area() >= 1400.0);
    CHECK(layout.alley_area() <= 1800.0);
    CHECK(!layout.intersections.empty());
    CHECK(to_json(layout) == to_json(build_layout({})));
    for (const auto& e : layout.edges)
        CHECK(e.length > 0.0);
}

TEST_CASE("degenerate and invalid layouts")
{
    LayoutConfig open;
    open.obstacle_rows = 0;
    open.obstacle_cols = 0;
    const auto hall = build_layout(open);
    CHECK(hall.intersections.empty());
    CHECK_THROWS_AS(spawn(hall, 3, 1, 1), SpawnError);

    LayoutConfig wide;
    wide.alley_width_m = 100.0;
    CHECK_THROWS_AS(build_layout(wide), ConfigError);
}

TEST_CASE("spawn respects separation and device discs")
{
    const auto layout = build_layout({});
    for (int n : {1, 10, 20, 30, 40, 50}) {
        const auto dep = spawn(layout, n, 2, 42 + n);
        REQUIRE(static_cast<int>(dep.robots.size()) == n);
        if (n > 1)
            CHECK(dep.min_pairwise_distance() >= 1.0);
        for (const auto& r : dep.robots) {
            CHECK(layout.on_alley(r.position));
            for (const auto& d : r.device_positions())
                CHECK(distance(d, r.position) <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("mobility")
{
    const auto layout = build_layout({});
    SUBCASE("one step of a lone robot covers v dt")
    {
        auto dep = spawn(layout, 1, 1, 9);
        int exact = 0;
        for (int t = 0; t < 2000; ++t) {
            const auto before = dep.robots[0].position;
            step_mobility(dep, layout, 0.005);
            CHECK(!dep.robots[0].slowdown_flag);
            CHECK(dep.robots[0].speed_mps == 3.0);
            // straight segments move exactly v dt; corners cut slightly shorter
            const double moved = distance(before, dep.robots[0].position);
            CHECK(moved <= 0.015 + 1e-9);
            exact += std::abs(moved - 0.015) < 1e-9 ? 1 : 0;
        }
        CHECK(exact > 1900);
    }
    SUBCASE("dense traffic never violates the minimum distance")
    {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            auto dep = spawn(layout, 50, 1, seed);
            double closest = 1e9;
            for (int t = 0; t < 10000; ++t) {
                step_mobility(dep, layout, 0.005);
                closest = std::min(closest, dep.min_pairwise_distance());
                if (t % 500 == 0) {
                    for (const auto& r : dep.robots)
                        REQUIRE(layout.on_alley(r.position));
                }
            }
            CHECK(closest >= 1.0 - 1e-9);
        }
    }
    SUBCASE("determinism")
    {
        auto a = spawn(layout, 20, 1, 77);
        auto b = spawn(layout, 20, 1, 77);
        for (int t = 0; t < 500; ++t) {
            step_mobility(a, layout, 0.005);
            step_mobility(b, layout, 0.005);
        }
        CHECK(to_json(a) == to_json(b));
    }
}
