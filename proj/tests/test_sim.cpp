#include <gtest/gtest.h>

#include <cmath>

#include "adet/sim.hpp"

using namespace adet;

namespace {

Detection sign_detection(SignClass cls, double distance, const NavConfig& cfg) {
  Detection d;
  const double h = cfg.focal * cfg.sign_size / distance;
  d.box = BBox::from_center(240, 135, h, h);
  d.label = static_cast<int>(cls);
  d.confidence = 1.0;
  return d;
}

}  // namespace

TEST(Projection, PinholeHalvesWithDoubleDistance) {
  const Camera cam;
  Sign s;
  s.position = {200, 0};
  const auto near = project_sign(cam, Pose{}, s);
  s.position = {400, 0};
  const auto far = project_sign(cam, Pose{}, s);
  ASSERT_TRUE(near && far);
  EXPECT_DOUBLE_EQ(near->box.h, 300.0 * 40.0 / 200.0);
  EXPECT_DOUBLE_EQ(far->box.h, 0.5 * near->box.h);
  EXPECT_DOUBLE_EQ(near->box.cx(), cam.cx());
}

TEST(Projection, BehindCameraIsInvisible) {
  Sign s;
  s.position = {-100, 0};
  EXPECT_FALSE(project_sign(Camera{}, Pose{}, s).has_value());
}

TEST(Distance, InvertsProjection) {
  EXPECT_DOUBLE_EQ(distance_from_box(120, 40, 300), 100.0);
  EXPECT_DOUBLE_EQ(distance_from_box(60, 40, 300), 200.0);
  EXPECT_THROW(distance_from_box(0, 40, 300), Error);
}

TEST(Navigate, RightSignWithinProximityTurnsClockwise) {
  NavConfig cfg;
  NavState st;
  const NavInput in = nav_input(sign_detection(SignClass::Right, 90, cfg), cfg, false, 0.1);
  EXPECT_NEAR(in.distance, 90.0, 1e-9);
  const ControlCommand first = navigate(in, st, cfg);
  EXPECT_EQ(first.yaw_rate, 0.0);  // awaiting confirmation
  EXPECT_GT(first.forward_speed, 0.0);
  const ControlCommand second = navigate(in, st, cfg);
  EXPECT_LT(second.yaw_rate, 0.0);
  EXPECT_EQ(second.forward_speed, 0.0);
  EXPECT_EQ(st.phase, NavPhase::Turning);
}

TEST(Navigate, TurnCompletesAtQuarterCircle) {
  NavConfig cfg;
  cfg.confirm_frames = 1;
  NavState st;
  const double dt = 0.1;
  double heading = 0.0;
  ControlCommand cmd = navigate(nav_input(sign_detection(SignClass::Left, 80, cfg), cfg, false, dt), st, cfg);
  heading += cmd.yaw_rate * dt;
  const Detection none{BBox(), 0.0, -1, 0.0, true};
  int guard = 0;
  while (st.phase == NavPhase::Turning && guard++ < 1000) {
    cmd = navigate(nav_input(none, cfg, false, dt), st, cfg);
    heading += cmd.yaw_rate * dt;
  }
  EXPECT_EQ(st.phase, NavPhase::Cruise);
  EXPECT_TRUE(st.maneuver_done);
  EXPECT_NEAR(heading, kPi / 2, 1e-9);
}

TEST(Navigate, FarSignIsIgnored) {
  NavConfig cfg;
  cfg.confirm_frames = 1;
  NavState st;
  const ControlCommand c = navigate(nav_input(sign_detection(SignClass::Stop, 150, cfg), cfg, false, 0.1), st, cfg);
  EXPECT_EQ(st.phase, NavPhase::Cruise);
  EXPECT_FALSE(c.hold);
}

TEST(Navigate, WaitHoldsWhilePedestrianPresent) {
  NavConfig cfg;
  cfg.confirm_frames = 1;
  NavState st;
  const Detection wait = sign_detection(SignClass::Wait, 70, cfg);
  EXPECT_TRUE(navigate(nav_input(wait, cfg, true, 0.1), st, cfg).hold);
  EXPECT_EQ(st.phase, NavPhase::Holding);
  EXPECT_TRUE(navigate(nav_input(wait, cfg, true, 0.1), st, cfg).hold);
  const ControlCommand go = navigate(nav_input(wait, cfg, false, 0.1), st, cfg);
  EXPECT_FALSE(go.hold);
  EXPECT_GT(go.forward_speed, 0.0);
  // The same sign does not stop the drone again inside the cooldown.
  EXPECT_FALSE(navigate(nav_input(wait, cfg, true, 0.1), st, cfg).hold);
}

TEST(Navigate, WaitWithoutPedestrianPasses) {
  NavConfig cfg;
  cfg.confirm_frames = 1;
  NavState st;
  const ControlCommand c = navigate(nav_input(sign_detection(SignClass::Wait, 70, cfg), cfg, false, 0.1), st, cfg);
  EXPECT_FALSE(c.hold);
  EXPECT_GT(st.cooldown, 0.0);
}

TEST(Navigate, StopAndGoalAreTerminal) {
  NavConfig cfg;
  cfg.confirm_frames = 1;
  for (SignClass cls : {SignClass::Stop, SignClass::Goal}) {
    NavState st;
    EXPECT_TRUE(navigate(nav_input(sign_detection(cls, 60, cfg), cfg, false, 0.1), st, cfg).hold);
    EXPECT_EQ(st.phase, cls == SignClass::Stop ? NavPhase::Stopped : NavPhase::Goal);
  }
}

TEST(Navigate, SpeedCapKeepsStepUnderHalfProximity) {
  NavConfig cfg;
  for (double dt : {0.01, 0.05, 0.3, 1.0, 5.0}) {
    NavState st;
    const Detection none{BBox(), 0.0, -1, 0.0, true};
    const ControlCommand c = navigate(nav_input(none, cfg, false, dt), st, cfg);
    EXPECT_LE(c.forward_speed * dt, 0.5 * cfg.proximity + 1e-12);
    EXPECT_LE(c.forward_speed, cfg.max_speed);
  }
  NavConfig bad;
  bad.max_step = 60.0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Advance, MovesAlongHeadingAndKeepsTime) {
  World w;
  w.drone.heading = kPi / 2;
  double total = 0.0;
  for (double dt : {0.1, 0.25, 0.05}) {
    const auto r = advance(w, ControlCommand{20.0, 0.0, false}, dt);
    EXPECT_NEAR(r.travelled, 20.0 * dt, 1e-12);
    total += dt;
  }
  EXPECT_NEAR(w.drone.position.x, 0.0, 1e-9);
  EXPECT_NEAR(w.drone.position.y, 20.0 * 0.4, 1e-9);
  EXPECT_DOUBLE_EQ(w.clock, total);
}

TEST(Advance, HoldStaysPutAndZeroDtThrows) {
  World w;
  const auto r = advance(w, ControlCommand{30.0, 0.0, true}, 0.5);
  EXPECT_EQ(r.travelled, 0.0);
  EXPECT_EQ(w.drone.position, Vec2{});
  EXPECT_DOUBLE_EQ(w.clock, 0.5);
  EXPECT_THROW(advance(w, ControlCommand{}, 0.0), Error);
  EXPECT_THROW(advance(w, ControlCommand{-1.0, 0.0, false}, 0.1), Error);
}

TEST(Advance, WallContactIsACollision) {
  World w;
  w.walls.push_back({{20, -100}, {20, 100}});
  const auto r = advance(w, ControlCommand{10.0, 0.0, false}, 1.0);
  EXPECT_TRUE(r.collision);
}

TEST(Maze, SignAndPedestrianCounts) {
  for (Difficulty d : kAllDifficulties) {
    const MazeSpec spec = MazeSpec::of(d);
    const World w = build_maze(spec, 17);
    int turns = 0, waits = 0, goals = 0;
    for (const auto& s : w.signs) {
      turns += s.cls == SignClass::Left || s.cls == SignClass::Right;
      waits += s.cls == SignClass::Wait;
      goals += s.cls == SignClass::Goal;
    }
    EXPECT_EQ(turns, spec.turns);
    EXPECT_EQ(waits, spec.wait_signs);
    EXPECT_EQ(goals, 1);
    EXPECT_EQ(static_cast<int>(w.pedestrians.size()), spec.wait_signs);
    EXPECT_EQ(w.route.size(), static_cast<std::size_t>(spec.turns + 2));
    EXPECT_FALSE(collides(w, w.drone.position));
  }
}

TEST(Maze, SpecValidation) {
  EXPECT_THROW((MazeSpec{Difficulty::Hard, 2, 2}.validate()), Error);
  EXPECT_EQ(MazeSpec::of(Difficulty::Medium).turns, 2);
  EXPECT_EQ(parse_difficulty("hard"), Difficulty::Hard);
  EXPECT_THROW(parse_difficulty("extreme"), Error);
}

TEST(Maze, DeterministicPerSeed) {
  const World a = build_maze(MazeSpec::of(Difficulty::Hard), 99);
  const World b = build_maze(MazeSpec::of(Difficulty::Hard), 99);
  const World c = build_maze(MazeSpec::of(Difficulty::Hard), 100);
  EXPECT_EQ(a.route, b.route);
  EXPECT_EQ(ascii_map(a), ascii_map(b));
  EXPECT_NE(a.route, c.route);
}

TEST(Maze, SegmentsWithinLayoutBounds) {
  const MazeLayout lay;
  const World w = build_maze(MazeSpec::of(Difficulty::Hard), 5, lay);
  for (std::size_t i = 0; i + 1 < w.route.size(); ++i) {
    const double len = (w.route[i + 1] - w.route[i]).norm();
    EXPECT_GE(len, lay.min_segment - lay.start_margin - 1e-9);
    EXPECT_LE(len, lay.max_segment + 1e-9);
  }
}

TEST(Visibility, FirstSignVisibleOnlyOnceInSight) {
  const World w = build_maze(MazeSpec::of(Difficulty::Easy), 3);
  const Camera cam;
  // From the start the corner sign straight ahead is in view.
  const auto v = visible_signs(w, cam);
  ASSERT_FALSE(v.empty());
  EXPECT_TRUE(v.front().cls == SignClass::Left || v.front().cls == SignClass::Right);
  // Facing backwards nothing is visible.
  World back = w;
  back.drone.heading += kPi;
  EXPECT_TRUE(visible_signs(back, cam).empty());
}

TEST(Pedestrian, SquareWave) {
  const Pedestrian p{{0, 0}, 20.0, 0.5, 0.0};
  EXPECT_TRUE(p.present(0.0));
  EXPECT_TRUE(p.present(9.9));
  EXPECT_FALSE(p.present(10.0));
  EXPECT_FALSE(p.present(19.9));
  EXPECT_TRUE(p.present(20.0));
}
