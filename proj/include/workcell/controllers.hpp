#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "workcell/geometry.hpp"
#include "workcell/rng.hpp"

namespace workcell {

enum class ControllerStatus { Running, Succeeded, Failed };

inline const char* to_string(ControllerStatus s) {
  switch (s) {
    case ControllerStatus::Running: return "running";
    case ControllerStatus::Succeeded: return "succeeded";
    case ControllerStatus::Failed: return "failed";
  }
  return "failed";
}

/// Termination record every controller primitive hands to the scheduler.
struct ControllerOutcome {
  ControllerStatus status = ControllerStatus::Running;
  int iterations = 0;
  double elapsed_s = 0.0;
  double final_translation_m = 0.0;
  double final_rotation_deg = 0.0;
  double success_probability = 0.0;
  int retries = 0;
  std::string note;
};

// ---------------------------------------------------------------------------
// Visual servoing
// ---------------------------------------------------------------------------

/// Observation source for the servo loop: an estimate of the body-frame
/// motion from the current pose to the target. Returns nullopt when the
/// target is lost.
class ServoOracle {
 public:
  virtual ~ServoOracle() = default;
  virtual std::optional<RelativeMotion> observe(const Pose& current) = 0;
};

enum class NoiseShape {
  Ball,   // uniform in a ball of the given radius (norm <= radius)
  Shell,  // fixed norm == radius, random direction
};

/// Seeded oracle around a fixed target with configurable additive error.
/// Zero-error configuration returns the exact relative transform.
class TargetServoOracle final : public ServoOracle {
 public:
  struct Params {
    Pose target;
    Vec3 translation_bias = Vec3::Zero();
    double translation_noise_m = 0.0;
    NoiseShape noise_shape = NoiseShape::Ball;
    double rotation_noise_deg = 0.0;
    std::uint64_t seed = 0;
    int fail_after = -1;  // >= 0: observations beyond this index report lost target
  };

  explicit TargetServoOracle(Params params) : p_(std::move(params)), rng_(p_.seed) {}

  std::optional<RelativeMotion> observe(const Pose& current) override {
    if (p_.fail_after >= 0 && calls_++ >= p_.fail_after) return std::nullopt;
    Pose delta = relative(current, p_.target).delta;
    delta.translation += p_.translation_bias + translation_noise();
    if (p_.rotation_noise_deg > 0.0) {
      const Vec3 axis = random_direction();
      const double angle = deg_to_rad(rng_.uniform(0.0, p_.rotation_noise_deg));
      delta.rotation = (delta.rotation * Quat(Eigen::AngleAxisd(angle, axis))).normalized();
    }
    return RelativeMotion{delta};
  }

 private:
  Vec3 random_direction() {
    // Gaussian components, normalized; fixed draw count per call.
    Vec3 v(rng_.normal(0.0, 1.0), rng_.normal(0.0, 1.0), rng_.normal(0.0, 1.0));
    const double n = v.norm();
    return n > 1e-12 ? Vec3(v / n) : Vec3::UnitX();
  }

  Vec3 translation_noise() {
    if (p_.translation_noise_m <= 0.0) return Vec3::Zero();
    const Vec3 dir = random_direction();
    double r = p_.translation_noise_m;
    if (p_.noise_shape == NoiseShape::Ball) r *= std::cbrt(rng_.uniform());
    return dir * r;
  }

  Params p_;
  Rng rng_;
  int calls_ = 0;
};

struct ServoResult {
  ControllerOutcome outcome;
  Pose final_pose;
};

/// Iterative closed-loop servoing: move by the observed correction until the
/// observed action norms fall below both tolerances. Success requires one
/// sub-threshold observation after the last motion.
inline ServoResult servo_run(const Pose& start, ServoOracle& oracle,
                             double pos_tol_m = 0.005, double rot_tol_deg = 0.5,
                             int max_iters = 40, double iter_duration_s = 0.0) {
  if (max_iters < 1) throw std::invalid_argument("servo_run: max_iters must be >= 1");
  Pose current = start;
  ControllerOutcome oc;
  for (int iter = 1; iter <= max_iters; ++iter) {
    const auto obs = oracle.observe(current);
    if (!obs) {
      oc.status = ControllerStatus::Failed;
      oc.iterations = iter;
      oc.elapsed_s = iter * iter_duration_s;
      oc.note = "target lost";
      return {oc, current};
    }
    const auto norms = motion_norms(*obs);
    oc.final_translation_m = norms.translation_m;
    oc.final_rotation_deg = norms.rotation_deg;
    if (norms.translation_m < pos_tol_m && norms.rotation_deg < rot_tol_deg) {
      oc.status = ControllerStatus::Succeeded;
      oc.iterations = iter;
      oc.elapsed_s = iter * iter_duration_s;
      return {oc, current};
    }
    current = compose(current, obs->delta);
  }
  oc.status = ControllerStatus::Failed;
  oc.iterations = max_iters;
  oc.elapsed_s = max_iters * iter_duration_s;
  oc.note = "did not converge";
  return {oc, current};
}

// ---------------------------------------------------------------------------
// Chunked-policy emulation
// ---------------------------------------------------------------------------

/// Emulated learned insertion policy: relative-translation action chunks
/// toward a target plus a success head. The success head is a logistic in the
/// distance to target, so the probability never decreases as distance shrinks.
struct PolicyEmulator {
  Vec3 target = Vec3::Zero();
  int chunk_size = 5;
  double step_scale_m = 0.002;
  double success_threshold = 0.95;
  double success_dist_offset_m = 0.004;  // distance of the 50% point
  double success_sharpness_m = 0.001;

  double success_probability(double distance_m) const {
    return 1.0 / (1.0 + std::exp((distance_m - success_dist_offset_m) /
                                 success_sharpness_m));
  }
};

struct PolicyStep {
  std::vector<Vec3> actions;  // relative translations, orientation fixed
  double success_probability = 0.0;
};

inline PolicyStep policy_step(const Vec3& state, const PolicyEmulator& emu) {
  PolicyStep out;
  out.success_probability = emu.success_probability((emu.target - state).norm());
  Vec3 cur = state;
  out.actions.reserve(emu.chunk_size);
  for (int i = 0; i < emu.chunk_size; ++i) {
    const Vec3 diff = emu.target - cur;
    const double d = diff.norm();
    if (d < 1e-12) {
      out.actions.push_back(Vec3::Zero());
      continue;
    }
    const Vec3 step = diff * (std::min(emu.step_scale_m, d) / d);
    out.actions.push_back(step);
    cur += step;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Load-cell retry wrapper
// ---------------------------------------------------------------------------

/// Force-feedback jam model: a descent attempt jams with this probability.
struct LoadCellModel {
  double stuck_probability = 0.0;
  double force_threshold_n = 15.0;
};

inline double sample_retraction(Rng& rng, std::pair<double, double> range_m) {
  return rng.uniform(range_m.first, range_m.second);
}

struct InsertResult {
  ControllerOutcome outcome;
  Vec3 final_position = Vec3::Zero();
  int steps = 0;
};

/// Runs policy chunks toward the target; on a jam, retracts upward by a
/// uniform sample from retract_range_m and retries. Success when the success
/// head clears its threshold; failure once the retry budget is spent.
inline InsertResult insert_with_retry(
    const Vec3& start, const PolicyEmulator& emu, const LoadCellModel& load,
    Rng& rng, std::pair<double, double> retract_range_m = {0.0025, 0.004},
    int max_retries = std::numeric_limits<int>::max()) {
  if (max_retries < 0)
    throw std::invalid_argument("insert_with_retry: max_retries must be >= 0");
  InsertResult res;
  Vec3 state = start;
  int retries = 0;

  while (true) {
    const bool stuck = load.stuck_probability > 0.0 && rng.bernoulli(load.stuck_probability);
    if (stuck) {
      // Jam partway down: advance half the remaining approach, then back off.
      const Vec3 diff = emu.target - state;
      const double d = diff.norm();
      if (d > 1e-12) {
        res.steps += static_cast<int>(std::ceil(0.5 * d / emu.step_scale_m));
        state += diff * 0.5;
      }
      if (retries >= max_retries) {
        res.outcome.status = ControllerStatus::Failed;
        res.outcome.retries = retries;
        res.outcome.iterations = res.steps;
        res.outcome.note = "retry budget exhausted";
        res.final_position = state;
        return res;
      }
      ++retries;
      state.z() += sample_retraction(rng, retract_range_m);
      continue;
    }

    // Clean descent: run chunks until the success head clears the threshold.
    constexpr int kMaxChunks = 100000;
    for (int chunk = 0; chunk < kMaxChunks; ++chunk) {
      const PolicyStep ps = policy_step(state, emu);
      if (ps.success_probability > emu.success_threshold) {
        res.outcome.status = ControllerStatus::Succeeded;
        res.outcome.retries = retries;
        res.outcome.iterations = res.steps;
        res.outcome.success_probability = ps.success_probability;
        res.final_position = state;
        return res;
      }
      for (const auto& a : ps.actions) {
        state += a;
        ++res.steps;
      }
    }
    res.outcome.status = ControllerStatus::Failed;
    res.outcome.retries = retries;
    res.outcome.iterations = res.steps;
    res.outcome.note = "success head never cleared threshold";
    res.final_position = state;
    return res;
  }
}

// ---------------------------------------------------------------------------
// Waypoint playback
// ---------------------------------------------------------------------------

struct Waypoint {
  Pose pose;
  double duration_s = 0.0;  // nominal, at speed ratio 1
};

/// Deterministic playback under an externally supplied per-tick speed ratio.
/// Progress freezes at ratio 0; the final tick is consumed fractionally so
/// elapsed time is exact.
template <typename RatioFn>
ControllerOutcome waypoint_execute(std::span<const Waypoint> waypoints,
                                   RatioFn&& ratio_at_tick, double dt = 0.1) {
  if (waypoints.empty())
    throw std::invalid_argument("waypoint_execute: empty waypoint list");
  double total = 0.0;
  for (const auto& w : waypoints) {
    if (!(w.duration_s > 0.0))
      throw std::invalid_argument("waypoint_execute: durations must be > 0");
    total += w.duration_s;
  }

  double progress = 0.0;
  double elapsed = 0.0;
  std::int64_t tick = 0;
  while (progress < total) {
    const double r = ratio_at_tick(tick);
    if (r <= 0.0) {
      elapsed += dt;
      ++tick;
      continue;
    }
    const double capacity = r * dt;
    if (progress + capacity >= total) {
      elapsed += (total - progress) / r;
      progress = total;
    } else {
      progress += capacity;
      elapsed += dt;
      ++tick;
    }
  }

  ControllerOutcome oc;
  oc.status = ControllerStatus::Succeeded;
  oc.iterations = static_cast<int>(waypoints.size());
  oc.elapsed_s = elapsed;
  return oc;
}

inline ControllerOutcome waypoint_execute(std::span<const Waypoint> waypoints,
                                          double dt = 0.1) {
  return waypoint_execute(waypoints, [](std::int64_t) { return 1.0; }, dt);
}

}  // namespace workcell
