#include <doctest.h>

#include <string>

#include "graspopt/errors.hpp"
#include "graspopt/hand_model.hpp"
#include "testing.hpp"

using namespace graspopt;

namespace {

std::string two_link(const std::string& joint_limits, const std::string& second_parent = "0") {
    return R"({"name": "t", "dof": 1,
      "workspace_box": {"lower": [-0.3, -0.3, -0.3], "upper": [0.3, 0.3, 0.3]},
      "links": [{"name": "a", "parent": -1, "rest": {"translation": [0, 0, 0]}},
                {"name": "b", "parent": )" + second_parent + R"(, "rest": {"translation": [0, 0, 0.05]}}],
      "joints": [{"name": "j", "link": 1, "axis": [1, 0, 0], )" + joint_limits + R"(}],
      "keypoints": [{"link": 0, "offset": [0, 0, 0]}, {"link": 1, "offset": [0, 0, 0]}],
      "capsules": [{"link": 1, "a": [0, 0, 0], "b": [0, 0, 0.04], "radius": 0.01}]})";
}

}  // namespace

TEST_CASE("shipped configs load with the documented sizes") {
    const HandModel& pinch = testing::shipped_hand("pinch2");
    CHECK(pinch.dof() == 2);
    CHECK(pinch.links().size() == 3);
    CHECK(pinch.parameter_count() == 9);

    const HandModel& shadow = testing::shipped_hand("shadow22");
    CHECK(shadow.dof() == 22);
    CHECK(shadow.parameter_count() == 29);
    for (const auto& j : shadow.joints()) {
        CHECK(j.lower < j.upper);
        CHECK(std::abs(j.axis.norm() - 1.0) < 1e-9);
    }
    for (const auto& c : shadow.capsules()) CHECK(c.radius > 0.0);
}

TEST_CASE("evaluation order puts parents first") {
    const HandModel& shadow = testing::shipped_hand("shadow22");
    std::vector<int> position(shadow.links().size());
    const auto& order = shadow.evaluation_order();
    for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = static_cast<int>(i);
    CHECK(order.front() == 0);
    for (std::size_t l = 1; l < shadow.links().size(); ++l)
        CHECK(position[shadow.links()[l].parent] < position[l]);
}

TEST_CASE("keypoint exclusions are symmetric and cover same-link pairs") {
    const HandModel& shadow = testing::shipped_hand("shadow22");
    const auto& kps = shadow.keypoints();
    for (std::size_t i = 0; i < kps.size(); ++i)
        for (std::size_t j = 0; j < kps.size(); ++j) {
            const int a = static_cast<int>(i), b = static_cast<int>(j);
            CHECK(shadow.pair_checked(a, b) == shadow.pair_checked(b, a));
            if (kps[i].link == kps[j].link) CHECK_FALSE(shadow.pair_checked(a, b));
        }
}

TEST_CASE("config validation") {
    CHECK_NOTHROW(load_hand_config(two_link(R"("lower": -1, "upper": 1)")));
    CHECK_THROWS_AS(load_hand_config(two_link(R"("lower": 0.5, "upper": 0.5)")), StructuralError);
    CHECK_THROWS_AS(load_hand_config(two_link(R"("lower": -1, "upper": 1)", "1")), StructuralError);
    CHECK_THROWS_AS(load_hand_config("{not json"), ParseError);

    const HandModel deg = load_hand_config(two_link(R"("lower": -90, "upper": 90, "unit": "degrees")"));
    CHECK(deg.joints()[0].upper == doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));

    try {
        load_hand_config(two_link(R"("lower": "x", "upper": 1)"));
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("joints[0].lower") != std::string::npos);
    }
}
