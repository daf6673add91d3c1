#include "dream/world.hpp"

#include "dream/task_metrics.hpp"

namespace dream {

Pose World::initial_pose() const {
  const TaskGeometry& g = cfg_.geometry;
  return Pose(g.start, reference_yaw(g.start, g.target));
}

World::World(WorldConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      joystick_(cfg_.pid, cfg_.geometry.altitude()),
      command_(cfg_.command_channel, derive_seed(seed, 1)),
      feedback_(cfg_.feedback_channel, derive_seed(seed, 2)) {
  cfg_.validate();
  const Pose start = initial_pose();
  interaction_ = InteractionState::at(start);
  last_hand_ = {start, false};
  ruav_ = UavState::at_rest(start);
  pid_.config = cfg_.pid;
  phantom_ = PhantomState::at(start, 0.0);
  held_.mode = cfg_.mode;
  held_.setpoint = start;
  interaction_.visual = visual_state(interaction_, last_hand_.hand, cfg_.hitbox);
}

TickOutcome World::tick(const OperatorInput& input) {
  TickOutcome out;
  const double now = time();
  const double dt = cfg_.dt;

  CommandMessage cmd;
  cmd.stamp = now;
  cmd.mode = cfg_.mode;
  if (cfg_.mode == ControlMode::Dream) {
    if (input.hand) last_hand_ = *input.hand;
    const InteractionState before = interaction_;
    interaction_ = step_interaction(interaction_, last_hand_.hand, last_hand_.take_pressed, cfg_.hitbox);
    if (last_hand_.take_pressed != before.button_was_pressed)
      out.events.push_back({now, LogEventKind::Button, Json{{"pressed", last_hand_.take_pressed}}});
    if (before.mode != interaction_.mode) {
      const LogEventKind kind =
          interaction_.mode == InteractionMode::Taken ? LogEventKind::Grab : LogEventKind::Release;
      out.events.push_back({now, kind, Json{{"vuav", pose_json(interaction_.vuav)}}});
    }
    cmd.setpoint = interaction_.vuav;
  } else {
    if (input.sticks) last_sticks_ = clamp_sticks(*input.sticks, &out.sticks_clamped);
    cmd.sticks = last_sticks_;
  }
  command_.send(cmd, now);

  for (auto& d : command_.poll(now)) held_ = d.payload;

  VelocityCommand vel;
  if (cfg_.mode == ControlMode::Dream) {
    const Pose setpoint = held_.setpoint.with_position(cfg_.plant.limits.volume.clamp(held_.setpoint.position()));
    PidOutput pid = pid_step(pid_, setpoint, ruav_, dt, cfg_.plant.limits);
    pid_ = pid.state;
    vel = pid.command;
  } else {
    vel = joystick_.step(held_.sticks, ruav_, dt, cfg_.plant.limits).command;
  }
  ruav_ = plant_step(ruav_, vel, dt, cfg_.plant);
  ++ticks_;

  const double later = time();
  feedback_.send({later, ruav_.pose, ruav_.horizontal_speed()}, later);
  phantom_ = update_phantom(phantom_, feedback_.poll(later), later);
  return out;
}

Pose World::vuav_pose() const {
  return cfg_.mode == ControlMode::Dream ? interaction_.vuav : phantom_.pose;
}

VisualState World::visual() const {
  return cfg_.mode == ControlMode::Dream ? interaction_.visual : VisualState::CannotBeTaken;
}

double World::speed_intensity() const {
  return speed_feedback(phantom_.speed, cfg_.plant.limits.max_horizontal_speed);
}

LogSample World::sample() const {
  LogSample s;
  s.t = time();
  s.x = ruav_.pose.x();
  s.y = ruav_.pose.y();
  s.z = ruav_.pose.z();
  s.yaw = ruav_.pose.yaw();
  s.vx = ruav_.vx;
  s.vy = ruav_.vy;
  s.vz = ruav_.vz;
  s.yaw_rate = ruav_.yaw_rate;
  s.thrust = ruav_.thrust;
  return s;
}

}  // namespace dream
