#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "adet/controller.hpp"
#include "adet/core.hpp"
#include "adet/random.hpp"
#include "adet/scene.hpp"

namespace adet {

// ---------------------------------------------------------------------------
// World

struct WallSegment {
  Vec2 a;
  Vec2 b;
};

struct Pedestrian {
  Vec2 position;
  double period = 30.0;  // seconds
  double duty = 0.5;     // fraction of the period spent present
  double phase = 0.0;    // seconds

  bool present(double t) const {
    double u = std::fmod(t + phase, period);
    if (u < 0.0) u += period;
    return u < duty * period;
  }
};

struct Drone {
  Vec2 position;
  double heading = 0.0;  // radians
  double speed = 0.0;    // cm/s
};

enum class Difficulty { Easy, Medium, Hard };

inline const char* difficulty_name(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Medium: return "medium";
    case Difficulty::Hard: return "hard";
  }
  return "?";
}

inline Difficulty parse_difficulty(const std::string& s) {
  if (s == "easy") return Difficulty::Easy;
  if (s == "medium") return Difficulty::Medium;
  if (s == "hard") return Difficulty::Hard;
  throw Error("unknown difficulty: " + s);
}

inline constexpr Difficulty kAllDifficulties[] = {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard};

struct MazeSpec {
  Difficulty difficulty = Difficulty::Easy;
  int turns = 1;
  int wait_signs = 0;

  static MazeSpec of(Difficulty d) {
    switch (d) {
      case Difficulty::Easy: return {d, 1, 0};
      case Difficulty::Medium: return {d, 2, 1};
      case Difficulty::Hard: return {d, 4, 2};
    }
    throw Error("maze spec: bad difficulty");
  }

  void validate() const {
    const MazeSpec want = of(difficulty);
    if (turns != want.turns || wait_signs != want.wait_signs)
      throw Error(std::string("maze spec: ") + difficulty_name(difficulty) + " needs " + std::to_string(want.turns) +
                  " turns and " + std::to_string(want.wait_signs) + " WAIT signs");
  }
};

struct MazeLayout {
  double corridor_width = 200.0;  // cm
  double min_segment = 400.0;
  double max_segment = 600.0;
  double start_margin = 50.0;   // wall behind the start point
  double sign_size = 40.0;
  double wait_offset = 40.0;    // lateral offset of hanging WAIT signs
  double wait_hide_depth = 60.0;  // hanging signs leave the view above this close
  double pedestrian_min_period = 20.0;
  double pedestrian_max_period = 40.0;
  double clutter = kClutterLevels[1];
  double illumination = kIlluminationLevels[0];
};

struct World {
  std::vector<WallSegment> walls;
  std::vector<Sign> signs;
  std::vector<bool> hanging;  // per sign: suspended from the ceiling (WAIT)
  std::vector<Pedestrian> pedestrians;
  Drone drone;
  std::vector<Vec2> route;  // corridor centreline, start to goal
  double clutter_level = 0.5;
  double illumination_level = 1.0;
  double clock = 0.0;
  std::uint64_t seed = 0;
  double wait_hide_depth = 60.0;
};

namespace detail {

inline Vec2 rotate_left(Vec2 v) { return {-v.y, v.x}; }
inline Vec2 rotate_right(Vec2 v) { return {v.y, -v.x}; }

inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

inline double point_segment_distance(Vec2 p, const WallSegment& w) {
  const Vec2 d = w.b - w.a;
  const double len2 = d.dot(d);
  double t = len2 > 0.0 ? (p - w.a).dot(d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (w.a + d * t)).norm();
}

// Proper crossing of p->q with the wall, ignoring touches at q.
inline bool blocks(Vec2 p, Vec2 q, const WallSegment& w) {
  const Vec2 r = q - p, s = w.b - w.a;
  const double den = cross(r, s);
  if (std::abs(den) < 1e-12) return false;
  const double t = cross(w.a - p, s) / den;
  const double u = cross(w.a - p, r) / den;
  return t > 1e-9 && t < 1.0 - 1e-6 && u >= 0.0 && u <= 1.0;
}

struct Rect {
  double x0, y0, x1, y1;
  bool overlaps(const Rect& o) const { return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1; }
};

inline Rect corridor_rect(Vec2 a, Vec2 b, double half) {
  return {std::min(a.x, b.x) - half, std::min(a.y, b.y) - half, std::max(a.x, b.x) + half, std::max(a.y, b.y) + half};
}

}  // namespace detail

// Corridor maze along a random right-angle polyline. Turn signs sit on the
// wall straight ahead of each corner, the GOAL sign on the end wall, WAIT
// signs hang mid-corridor with a pedestrian crossing nearby.
inline World build_maze(const MazeSpec& spec, std::uint64_t seed, const MazeLayout& lay = {}) {
  spec.validate();
  const double half = 0.5 * lay.corridor_width;
  for (int attempt = 0;; ++attempt) {
    if (attempt > 1000) throw Error("build_maze: no self-avoiding layout");
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    std::vector<Vec2> pts{{0.0, 0.0}};
    std::vector<Vec2> dirs{{1.0, 0.0}};
    std::vector<bool> left_turn;
    for (int i = 0; i <= spec.turns; ++i) {
      const double len = std::round(rng.uniform(lay.min_segment, lay.max_segment));
      pts.push_back(pts.back() + dirs.back() * len);
      if (i < spec.turns) {
        const bool left = rng.bernoulli(0.5);
        left_turn.push_back(left);
        dirs.push_back(left ? detail::rotate_left(dirs.back()) : detail::rotate_right(dirs.back()));
      }
    }
    // Non-adjacent corridors (with their end caps) must stay apart.
    bool ok = true;
    std::vector<detail::Rect> rects;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      Vec2 a = pts[i], b = pts[i + 1];
      if (i == 0) a = a - dirs[i] * lay.start_margin;
      rects.push_back(detail::corridor_rect(a, b, half + 20.0));
    }
    for (std::size_t i = 0; i < rects.size() && ok; ++i)
      for (std::size_t j = i + 2; j < rects.size() && ok; ++j) ok = !rects[i].overlaps(rects[j]);
    if (!ok) continue;

    World w;
    w.seed = seed;
    w.route = pts;
    w.clutter_level = lay.clutter;
    w.illumination_level = lay.illumination;
    w.wait_hide_depth = lay.wait_hide_depth;
    w.drone.position = pts.front();
    w.drone.heading = 0.0;

    // Offset boundaries; at a right-angle corner the two offsets meet at
    // p + (n_in + n_out) * half.
    std::vector<Vec2> leftb, rightb;
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i) {
      Vec2 p = pts[i];
      Vec2 nl, nr;
      if (i == 0) {
        p = p - dirs[0] * lay.start_margin;
        nl = detail::rotate_left(dirs[0]) * half;
      } else if (i + 1 == n) {
        p = p + dirs.back() * half;
        nl = detail::rotate_left(dirs.back()) * half;
      } else {
        nl = (detail::rotate_left(dirs[i - 1]) + detail::rotate_left(dirs[i])) * half;
      }
      nr = nl * -1.0;
      leftb.push_back(p + nl);
      rightb.push_back(p + nr);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
      w.walls.push_back({leftb[i], leftb[i + 1]});
      w.walls.push_back({rightb[i], rightb[i + 1]});
    }
    w.walls.push_back({leftb.front(), rightb.front()});
    w.walls.push_back({leftb.back(), rightb.back()});

    auto add_sign = [&](SignClass cls, Vec2 pos, Vec2 facing, bool hanging) {
      Sign s;
      s.cls = cls;
      s.position = pos;
      s.facing = facing;
      s.size = lay.sign_size;
      w.signs.push_back(s);
      w.hanging.push_back(hanging);
    };
    for (int i = 0; i < spec.turns; ++i) {
      const auto k = static_cast<std::size_t>(i);
      add_sign(left_turn[k] ? SignClass::Left : SignClass::Right, pts[k + 1] + dirs[k] * half, dirs[k] * -1.0, false);
    }
    add_sign(SignClass::Goal, pts.back() + dirs.back() * half, dirs.back() * -1.0, false);

    // WAIT signs go mid-corridor on distinct segments.
    std::vector<std::size_t> segs(static_cast<std::size_t>(spec.turns) + 1);
    for (std::size_t i = 0; i < segs.size(); ++i) segs[i] = i;
    rng.shuffle(segs.begin(), segs.end());
    for (int k = 0; k < spec.wait_signs; ++k) {
      const std::size_t s = segs[static_cast<std::size_t>(k) % segs.size()];
      const Vec2 mid = (pts[s] + pts[s + 1]) * 0.5;
      const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
      add_sign(SignClass::Wait, mid + detail::rotate_left(dirs[s]) * (side * lay.wait_offset), dirs[s] * -1.0, true);
      Pedestrian ped;
      ped.position = mid + dirs[s] * 80.0;
      ped.period = rng.uniform(lay.pedestrian_min_period, lay.pedestrian_max_period);
      ped.duty = 0.5;
      ped.phase = rng.uniform(0.0, ped.period);
      w.pedestrians.push_back(ped);
    }
    return w;
  }
}

inline double path_length(const World& w) {
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < w.route.size(); ++i) len += (w.route[i + 1] - w.route[i]).norm();
  return len;
}

inline bool line_of_sight(const World& w, Vec2 from, Vec2 to) {
  for (const auto& wall : w.walls)
    if (detail::blocks(from, to, wall)) return false;
  return true;
}

// Signs the camera can see from the current pose, projected.
inline std::vector<ProjectedSign> visible_signs(const World& w, const Camera& cam) {
  std::vector<ProjectedSign> out;
  const Pose pose{w.drone.position, w.drone.heading};
  for (std::size_t i = 0; i < w.signs.size(); ++i) {
    const Sign& s = w.signs[i];
    if (s.facing.dot(w.drone.position - s.position) <= 0.0) continue;
    auto p = project_sign(cam, pose, s);
    if (!p || !box_in_view(cam, p->box)) continue;
    if (w.hanging[i] && p->depth < w.wait_hide_depth) continue;
    if (!line_of_sight(w, w.drone.position, s.position)) continue;
    out.push_back(*p);
  }
  return out;
}

// Camera frame at the current pose. The wall texture is a backdrop panned by
// heading; the frame index seeds the sensor noise.
inline Frame render(const World& w, const Backdrop& backdrop, const Camera& cam, std::int64_t index) {
  const SceneLook look{w.clutter_level, w.illumination_level};
  const double pan = -cam.focal * w.drone.heading;
  return render_scene(cam, backdrop, look, pan, visible_signs(w, cam), derive_seed(w.seed, static_cast<std::uint64_t>(index)),
                      index);
}

inline double distance_from_box(double box_height, double physical_size, double focal) {
  if (!(box_height > 0.0)) throw Error("distance_from_box: box height must be positive");
  return focal * physical_size / box_height;
}

// ---------------------------------------------------------------------------
// Navigation

struct ControlCommand {
  double forward_speed = 0.0;  // cm/s
  double yaw_rate = 0.0;       // rad/s
  bool hold = false;
};

enum class NavPhase { Cruise, Turning, Holding, Goal, Stopped };

inline const char* nav_phase_name(NavPhase p) {
  switch (p) {
    case NavPhase::Cruise: return "cruise";
    case NavPhase::Turning: return "turning";
    case NavPhase::Holding: return "holding";
    case NavPhase::Goal: return "goal";
    case NavPhase::Stopped: return "stopped";
  }
  return "?";
}

struct NavConfig {
  double proximity = 100.0;   // cm
  double max_speed = 40.0;    // cm/s
  double max_step = 2.5;      // cm travelled per processed frame
  double yaw_rate = kPi / 2;  // rad/s during a turn
  double wait_cooldown = 150.0;  // cm before another WAIT is obeyed
  int confirm_frames = 2;     // consecutive agreeing frames before acting
  double score_threshold = 0.0;
  double sign_size = 40.0;
  double focal = 300.0;

  void validate() const {
    if (!(proximity > 0.0 && max_speed > 0.0 && max_step > 0.0 && yaw_rate > 0.0))
      throw Error("nav config: distances and rates must be positive");
    if (max_step > 0.5 * proximity) throw Error("nav config: max_step above half the proximity threshold");
    if (confirm_frames < 1) throw Error("nav config: confirm_frames must be >= 1");
  }
};

struct NavState {
  NavPhase phase = NavPhase::Cruise;
  double turn_remaining = 0.0;  // signed radians
  double cooldown = 0.0;        // cm left before WAIT signs count again
  int pending_label = -1;
  int pending_count = 0;
  bool maneuver_done = false;   // set for one frame when a turn finishes
};

struct NavInput {
  std::optional<Detection> detection;  // only detections above the score threshold
  double distance = std::numeric_limits<double>::infinity();
  bool pedestrian_nearby = false;
  double dt = 0.0;  // processing time of this frame
};

inline NavInput nav_input(const Detection& d, const NavConfig& cfg, bool pedestrian, double dt) {
  NavInput in;
  in.pedestrian_nearby = pedestrian;
  in.dt = dt;
  if (!d.degenerate && d.label >= 0 && d.confidence >= cfg.score_threshold && d.box.h > 0.0) {
    in.detection = d;
    in.distance = distance_from_box(d.box.h, cfg.sign_size, cfg.focal);
  }
  return in;
}

inline double cruise_speed(const NavConfig& cfg, double dt) { return std::min(cfg.max_speed, cfg.max_step / dt); }

// One decision per processed frame. Signs act only once they are within the
// proximity threshold on confirm_frames consecutive frames.
inline ControlCommand navigate(const NavInput& in, NavState& st, const NavConfig& cfg) {
  if (!(in.dt > 0.0)) throw Error("navigate: dt must be positive");
  st.maneuver_done = false;
  ControlCommand cmd;
  switch (st.phase) {
    case NavPhase::Goal:
    case NavPhase::Stopped:
      cmd.hold = true;
      return cmd;
    case NavPhase::Turning: {
      const double step = std::min(std::abs(st.turn_remaining), cfg.yaw_rate * in.dt);
      cmd.yaw_rate = (st.turn_remaining > 0.0 ? step : -step) / in.dt;
      st.turn_remaining -= st.turn_remaining > 0.0 ? step : -step;
      if (std::abs(st.turn_remaining) < 1e-12) {
        st.turn_remaining = 0.0;
        st.phase = NavPhase::Cruise;
        st.maneuver_done = true;
      }
      return cmd;
    }
    case NavPhase::Holding:
      if (in.pedestrian_nearby) {
        cmd.hold = true;
        return cmd;
      }
      st.phase = NavPhase::Cruise;
      st.cooldown = cfg.wait_cooldown;
      break;
    case NavPhase::Cruise: break;
  }

  int label = -1;
  if (in.detection && in.distance <= cfg.proximity) label = in.detection->label;
  if (label == static_cast<int>(SignClass::Wait) && st.cooldown > 0.0) label = -1;
  if (label >= 0 && label == st.pending_label) {
    ++st.pending_count;
  } else {
    st.pending_label = label;
    st.pending_count = label >= 0 ? 1 : 0;
  }

  if (label >= 0 && st.pending_count >= cfg.confirm_frames) {
    st.pending_label = -1;
    st.pending_count = 0;
    switch (static_cast<SignClass>(label)) {
      case SignClass::Left:
      case SignClass::Right: {
        const double sgn = label == static_cast<int>(SignClass::Left) ? 1.0 : -1.0;
        st.phase = NavPhase::Turning;
        st.turn_remaining = sgn * kPi / 2;
        const double step = std::min(kPi / 2, cfg.yaw_rate * in.dt);
        cmd.yaw_rate = sgn * step / in.dt;
        st.turn_remaining -= sgn * step;
        if (std::abs(st.turn_remaining) < 1e-12) {
          st.turn_remaining = 0.0;
          st.phase = NavPhase::Cruise;
          st.maneuver_done = true;
        }
        return cmd;
      }
      case SignClass::Stop:
        st.phase = NavPhase::Stopped;
        cmd.hold = true;
        return cmd;
      case SignClass::Goal:
        st.phase = NavPhase::Goal;
        cmd.hold = true;
        return cmd;
      case SignClass::Wait:
        if (in.pedestrian_nearby) {
          st.phase = NavPhase::Holding;
          cmd.hold = true;
          return cmd;
        }
        st.cooldown = cfg.wait_cooldown;
        break;
    }
  }
  cmd.forward_speed = cruise_speed(cfg, in.dt);
  st.cooldown = std::max(0.0, st.cooldown - cmd.forward_speed * in.dt);
  return cmd;
}

// ---------------------------------------------------------------------------
// Kinematics

inline constexpr double kDroneRadius = 15.0;  // cm

inline bool collides(const World& w, Vec2 p, double radius = kDroneRadius) {
  for (const auto& wall : w.walls)
    if (detail::point_segment_distance(p, wall) < radius) return true;
  return false;
}

struct AdvanceResult {
  double travelled = 0.0;
  bool collision = false;
};

// Moves the drone for dt seconds under cmd and advances the clock.
inline AdvanceResult advance(World& w, const ControlCommand& cmd, double dt) {
  if (!(dt > 0.0)) throw Error("advance: dt must be positive");
  if (cmd.forward_speed < 0.0) throw Error("advance: negative speed");
  AdvanceResult r;
  const double speed = cmd.hold ? 0.0 : cmd.forward_speed;
  w.drone.speed = speed;
  w.drone.heading += cmd.yaw_rate * dt;
  const Vec2 step = heading_vector(w.drone.heading) * (speed * dt);
  w.drone.position = w.drone.position + step;
  r.travelled = step.norm();
  w.clock += dt;
  r.collision = collides(w, w.drone.position);
  return r;
}

inline bool pedestrian_near(const World& w, Vec2 p, double radius) {
  for (const auto& ped : w.pedestrians)
    if (ped.present(w.clock) && (ped.position - p).norm() <= radius) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Episodes

struct EpisodeConfig {
  MazeSpec maze;
  MazeLayout layout;
  NavConfig nav;
  double timeout = 1800.0;  // simulated seconds
  double pedestrian_radius = 250.0;
  Camera camera;
};

struct TraceRow {
  std::int64_t frame = 0;
  double clock = 0.0;
  Vec2 position;
  double heading = 0.0;
  ControlCommand cmd;
  OpKind op = OpKind::Detect;
  int variant = 0;
  int label = -1;
  double confidence = 0.0;
  double distance = 0.0;
  NavPhase phase = NavPhase::Cruise;
};

struct EpisodeMetrics {
  double avg_fps = 0.0;
  double time_to_completion = 0.0;
  double avg_velocity = 0.0;
  bool success = false;
  int collisions = 0;
  double path_length = 0.0;  // travelled
  std::int64_t frames = 0;
  int detections = 0;
  std::string end_reason;
};

struct EpisodeResult {
  EpisodeMetrics metrics;
  std::vector<TraceRow> trace;
  World world;
};

// render -> controller.step -> navigate -> advance until the goal, a STOP,
// a collision or the timeout.
inline EpisodeResult run_episode(const EpisodeConfig& cfg, Controller& controller, std::uint64_t seed,
                                 bool keep_trace = true) {
  cfg.nav.validate();
  EpisodeResult res;
  res.world = build_maze(cfg.maze, seed, cfg.layout);
  World& w = res.world;
  const Backdrop backdrop(cfg.camera, derive_seed(seed, "backdrop"));
  controller.reset();
  NavState nav;
  EpisodeMetrics& m = res.metrics;
  for (std::int64_t t = 0;; ++t) {
    const Frame frame = render(w, backdrop, cfg.camera, t);
    const FrameOutcome out = controller.step(frame);
    if (out.op == OpKind::Detect) ++m.detections;
    const bool ped = pedestrian_near(w, w.drone.position, cfg.pedestrian_radius);
    const NavInput in = nav_input(out.detection, cfg.nav, ped, out.cost);
    const ControlCommand cmd = navigate(in, nav, cfg.nav);
    const AdvanceResult adv = advance(w, cmd, out.cost);
    m.path_length += adv.travelled;
    ++m.frames;
    if (nav.maneuver_done) controller.reset();
    if (keep_trace) {
      TraceRow row;
      row.frame = t;
      row.clock = w.clock;
      row.position = w.drone.position;
      row.heading = w.drone.heading;
      row.cmd = cmd;
      row.op = out.op;
      row.variant = out.variant_used;
      row.label = in.detection ? in.detection->label : -1;
      row.confidence = out.detection.confidence;
      row.distance = in.detection ? in.distance : 0.0;
      row.phase = nav.phase;
      res.trace.push_back(row);
    }
    if (adv.collision) {
      m.collisions = 1;
      m.end_reason = "collision";
      break;
    }
    if (nav.phase == NavPhase::Goal) {
      m.success = true;
      m.end_reason = "goal";
      break;
    }
    if (nav.phase == NavPhase::Stopped) {
      m.end_reason = "stop";
      break;
    }
    if (w.clock >= cfg.timeout) {
      m.end_reason = "timeout";
      break;
    }
  }
  m.time_to_completion = w.clock;
  m.avg_fps = static_cast<double>(m.frames) / w.clock;
  m.avg_velocity = m.path_length / w.clock;
  return res;
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << "frame,clock,x,y,heading,forward_speed,yaw_rate,hold,op,variant,label,confidence,distance,phase\n";
  char buf[320];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%lld,%.6f,%.4f,%.4f,%.6f,%.4f,%.6f,%d,%s,%d,%s,%.6f,%.3f,%s\n",
                  static_cast<long long>(r.frame), r.clock, r.position.x, r.position.y, r.heading, r.cmd.forward_speed,
                  r.cmd.yaw_rate, r.cmd.hold ? 1 : 0, op_name(r.op), r.variant, r.label >= 0 ? label_name(r.label) : "",
                  r.confidence, r.distance, nav_phase_name(r.phase));
    os << buf;
  }
}

// Top-down map at cell_cm resolution: '#' walls, '@' start, sign initials,
// '*' pedestrian crossings, '.' the driven path if given.
inline std::string ascii_map(const World& w, double cell_cm = 50.0, const std::vector<TraceRow>* trace = nullptr) {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  for (const auto& wall : w.walls)
    for (Vec2 p : {wall.a, wall.b}) {
      x0 = std::min(x0, p.x), y0 = std::min(y0, p.y), x1 = std::max(x1, p.x), y1 = std::max(y1, p.y);
    }
  const int cols = static_cast<int>(std::ceil((x1 - x0) / cell_cm)) + 1;
  const int rows = static_cast<int>(std::ceil((y1 - y0) / cell_cm)) + 1;
  std::vector<std::string> grid(static_cast<std::size_t>(rows), std::string(static_cast<std::size_t>(cols), ' '));
  auto put = [&](Vec2 p, char c) {
    const int cx = static_cast<int>(std::lround((p.x - x0) / cell_cm));
    const int cy = static_cast<int>(std::lround((y1 - p.y) / cell_cm));  // north up
    if (cx >= 0 && cx < cols && cy >= 0 && cy < rows) grid[static_cast<std::size_t>(cy)][static_cast<std::size_t>(cx)] = c;
  };
  for (const auto& wall : w.walls) {
    const int steps = static_cast<int>(std::ceil((wall.b - wall.a).norm() / (0.5 * cell_cm))) + 1;
    for (int i = 0; i <= steps; ++i) put(wall.a + (wall.b - wall.a) * (static_cast<double>(i) / steps), '#');
  }
  if (trace)
    for (const auto& r : *trace) put(r.position, '.');
  for (const auto& p : w.pedestrians) put(p.position, '*');
  for (const auto& s : w.signs) {
    char c = '?';
    switch (s.cls) {
      case SignClass::Left: c = 'L'; break;
      case SignClass::Right: c = 'R'; break;
      case SignClass::Stop: c = 'S'; break;
      case SignClass::Wait: c = 'W'; break;
      case SignClass::Goal: c = 'G'; break;
    }
    put(s.position, c);
  }
  if (!w.route.empty()) put(w.route.front(), '@');
  std::string out;
  for (const auto& row : grid) {
    std::string r = row;
    r.erase(r.find_last_not_of(' ') + 1);
    out += r + "\n";
  }
  return out;
}

}  // namespace adet
