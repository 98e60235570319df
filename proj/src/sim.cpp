#include "decap/sim.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace decap {

namespace {

using Eigen::Vector2d;

inline Vector2d rot(double phi_ccw, const Vector2d& v) {
  const double c = std::cos(phi_ccw), s = std::sin(phi_ccw);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

// d/dphi of a CCW-rotated vector.
inline Vector2d perp(const Vector2d& v) { return {-v.y(), v.x()}; }

// Per-body kinematic quantities. Index 0 is the base, 1 + i is link i.
// "Bias" accelerations are the point accelerations with all generalized
// accelerations held at zero (the centripetal terms).
struct BodyKin {
  double phi = 0.0;    // world frame angle, CCW
  double omega = 0.0;  // frame angular rate, CCW
  Vector2d origin, origin_vel, origin_bias;
  Vector2d com, com_vel, com_bias;
  Vector2d tip, tip_vel;
};

struct Kinematics {
  std::vector<BodyKin> body;  // size 1 + n_links

  static Kinematics compute(const SimState& s, const RobotModel& m) {
    const int n = m.n_joints();
    Kinematics k;
    k.body.resize(1 + n);
    BodyKin& base = k.body[0];
    // Base pitch is positive toward +x, i.e. a clockwise frame rotation.
    base.phi = -s.base_pitch;
    base.omega = -s.pitch_rate;
    base.origin = s.base_pos;
    base.origin_vel = s.base_vel;
    base.origin_bias = Vector2d::Zero();
    base.com = base.origin;
    base.com_vel = base.origin_vel;
    base.com_bias = Vector2d::Zero();
    base.tip = base.origin + rot(base.phi, Vector2d(m.base_half_length, 0.0));
    base.tip_vel = base.origin_vel + base.omega * perp(base.tip - base.origin);
    for (int i = 0; i < n; ++i) {
      const LinkSpec& l = m.links[i];
      const BodyKin& p = k.body[l.parent + 1];
      BodyKin& b = k.body[i + 1];
      const Vector2d w = rot(p.phi, l.attach);
      b.origin = p.origin + w;
      b.origin_vel = p.origin_vel + p.omega * perp(w);
      b.origin_bias = p.origin_bias - p.omega * p.omega * w;
      b.phi = p.phi + s.q[i];
      b.omega = p.omega + s.qdot[i];
      const Vector2d axis = rot(b.phi, Vector2d(0.0, -1.0));
      const Vector2d u_com = l.com_ratio * l.length * axis;
      b.com = b.origin + u_com;
      b.com_vel = b.origin_vel + b.omega * perp(u_com);
      b.com_bias = b.origin_bias - b.omega * b.omega * u_com;
      const Vector2d u_tip = l.length * axis;
      b.tip = b.origin + u_tip;
      b.tip_vel = b.origin_vel + b.omega * perp(u_tip);
    }
    return k;
  }
};

// Jacobian of a world point attached to body `body_index` (0 = base),
// w.r.t. generalized coordinates [x, z, pitch, q...]. Rows are (x, z).
Eigen::Matrix<double, 2, Eigen::Dynamic> point_jacobian(const Kinematics& k,
                                                        const RobotModel& m, int body_index,
                                                        const Vector2d& point) {
  const int dof = 3 + m.n_joints();
  Eigen::Matrix<double, 2, Eigen::Dynamic> J(2, dof);
  J.setZero();
  J(0, 0) = 1.0;
  J(1, 1) = 1.0;
  const Vector2d r = point - k.body[0].origin;
  J.col(2) = -perp(r);  // d(frame angle)/d(pitch) = -1 for every body
  for (int j = body_index - 1; j >= 0; j = m.links[j].parent) {
    J.col(3 + j) = perp(point - k.body[j + 1].origin);
  }
  return J;
}

Eigen::VectorXd angular_jacobian(const RobotModel& m, int body_index) {
  const int dof = 3 + m.n_joints();
  Eigen::VectorXd j = Eigen::VectorXd::Zero(dof);
  j[2] = -1.0;
  for (int i = body_index - 1; i >= 0; i = m.links[i].parent) j[3 + i] = 1.0;
  return j;
}

ContactReport contact_from_kinematics(const Kinematics& k, const RobotModel& m) {
  const int nf = m.n_feet();
  ContactReport r;
  r.normal_force = Eigen::VectorXd::Zero(nf);
  r.tangential_force = Eigen::VectorXd::Zero(nf);
  r.penetration = Eigen::VectorXd::Zero(nf);
  r.in_contact.assign(nf, false);
  r.foot_vel_x = Eigen::VectorXd::Zero(nf);
  for (int f = 0; f < nf; ++f) {
    const BodyKin& b = k.body[m.feet[f] + 1];
    r.foot_vel_x[f] = b.tip_vel.x();
    const double depth = -b.tip.y();
    if (depth <= 0.0) continue;
    r.in_contact[f] = true;
    r.penetration[f] = depth;
    const double depth_rate = -b.tip_vel.y();
    const double fn = std::max(0.0, m.contact.k_n * depth + m.contact.c_n * depth_rate);
    const double ft_demand = -m.contact.k_t * b.tip_vel.x();
    const double ft_max = m.contact.mu * fn;
    r.normal_force[f] = fn;
    r.tangential_force[f] = std::clamp(ft_demand, -ft_max, ft_max);
  }
  // Non-foot collision flags: base endpoints plus every joint origin and
  // every non-foot tip.
  r.body_collision.assign(1 + m.n_joints(), false);
  const BodyKin& base = k.body[0];
  const Vector2d half = base.tip - base.origin;
  if ((base.origin + half).y() < 0.0 || (base.origin - half).y() < 0.0 || base.origin.y() < 0.0) {
    r.body_collision[0] = true;
  }
  std::vector<bool> is_foot(m.n_joints(), false);
  for (int f : m.feet) is_foot[f] = true;
  for (int i = 0; i < m.n_joints(); ++i) {
    const BodyKin& b = k.body[i + 1];
    if (b.origin.y() < 0.0) r.body_collision[i + 1] = true;
    if (!is_foot[i] && b.tip.y() < 0.0) r.body_collision[i + 1] = true;
  }
  return r;
}

}  // namespace

bool SimState::finite() const {
  return q.allFinite() && qdot.allFinite() && base_pos.allFinite() && base_vel.allFinite() &&
         std::isfinite(base_pitch) && std::isfinite(pitch_rate);
}

SimState default_state(const RobotModel& model) {
  SimState s;
  s.q = model.q_nom;
  s.qdot = Eigen::VectorXd::Zero(model.n_joints());
  s.base_pos = Eigen::Vector2d(0.0, model.h_nom);
  return s;
}

FkResult forward_kinematics(const Eigen::VectorXd& q, const Eigen::Vector2d& base_pos,
                            double base_pitch, const RobotModel& model) {
  SimState s;
  s.q = q;
  s.qdot = Eigen::VectorXd::Zero(model.n_joints());
  s.base_pos = base_pos;
  s.base_pitch = base_pitch;
  const Kinematics k = Kinematics::compute(s, model);
  FkResult out;
  out.foot_world.reserve(model.n_feet());
  out.ee_body.reserve(model.n_feet());
  for (int f : model.feet) {
    const Vector2d tip = k.body[f + 1].tip;
    out.foot_world.push_back(tip);
    // Body frame: undo the base rotation (base frame angle is -pitch CCW).
    out.ee_body.push_back(rot(base_pitch, tip - base_pos));
  }
  return out;
}

ContactReport contact_forces(const SimState& state, const RobotModel& model) {
  return contact_from_kinematics(Kinematics::compute(state, model), model);
}

std::pair<SimState, ContactReport> step(const SimState& state, const Eigen::VectorXd& torques,
                                        const RobotModel& model, double dt) {
  const int n = model.n_joints();
  if (!(dt > 0.0)) throw std::invalid_argument("sim::step: dt must be > 0");
  if (static_cast<int>(torques.size()) != n) {
    throw std::invalid_argument("sim::step: torque vector length mismatch");
  }
  if (!state.finite() || !torques.allFinite()) {
    throw std::invalid_argument("sim::step: non-finite state or torques");
  }

  const Eigen::VectorXd tau =
      torques.cwiseMin(model.torque_limits).cwiseMax(-model.torque_limits);

  const Kinematics kin = Kinematics::compute(state, model);
  const ContactReport contact = contact_from_kinematics(kin, model);

  const int dof = 3 + n;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dof, dof);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dof);
  const Vector2d gravity(0.0, -model.gravity);

  // Base body.
  M(0, 0) += model.base_mass;
  M(1, 1) += model.base_mass;
  M(2, 2) += model.base_inertia;
  rhs[1] += model.base_mass * gravity.y();

  for (int i = 0; i < n; ++i) {
    const LinkSpec& l = model.links[i];
    const BodyKin& b = kin.body[i + 1];
    const auto J = point_jacobian(kin, model, i + 1, b.com);
    const Eigen::VectorXd ja = angular_jacobian(model, i + 1);
    M.noalias() += l.mass * J.transpose() * J;
    M.noalias() += l.inertia * ja * ja.transpose();
    rhs.noalias() += J.transpose() * (l.mass * (gravity - b.com_bias));
  }

  for (int i = 0; i < n; ++i) {
    rhs[3 + i] += tau[i] - model.links[i].damping * state.qdot[i];
  }
  for (int f = 0; f < model.n_feet(); ++f) {
    if (!contact.in_contact[f]) continue;
    const int link = model.feet[f];
    const auto J = point_jacobian(kin, model, link + 1, kin.body[link + 1].tip);
    const Vector2d force(contact.tangential_force[f], contact.normal_force[f]);
    rhs.noalias() += J.transpose() * force;
  }

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dof);
  if (model.base_fixed) {
    acc.tail(n) = M.bottomRightCorner(n, n).ldlt().solve(rhs.tail(n));
  } else {
    acc = M.ldlt().solve(rhs);
  }

  SimState next = state;
  next.base_vel += dt * acc.head<2>();
  next.pitch_rate += dt * acc[2];
  next.qdot += dt * acc.tail(n);
  if (model.base_fixed) {
    next.base_vel.setZero();
    next.pitch_rate = 0.0;
  }
  next.base_pos += dt * next.base_vel;
  next.base_pitch += dt * next.pitch_rate;
  next.q += dt * next.qdot;
  for (int i = 0; i < n; ++i) {
    if (next.q[i] < model.joint_lower[i]) {
      next.q[i] = model.joint_lower[i];
      next.qdot[i] = 0.0;
    } else if (next.q[i] > model.joint_upper[i]) {
      next.q[i] = model.joint_upper[i];
      next.qdot[i] = 0.0;
    }
  }
  next.time_step = state.time_step + 1;
  return {next, contact};
}

double mechanical_energy(const SimState& state, const RobotModel& model) {
  const Kinematics k = Kinematics::compute(state, model);
  double e = 0.5 * model.base_mass * state.base_vel.squaredNorm() +
             0.5 * model.base_inertia * state.pitch_rate * state.pitch_rate +
             model.base_mass * model.gravity * state.base_pos.y();
  for (int i = 0; i < model.n_joints(); ++i) {
    const LinkSpec& l = model.links[i];
    const BodyKin& b = k.body[i + 1];
    e += 0.5 * l.mass * b.com_vel.squaredNorm() + 0.5 * l.inertia * b.omega * b.omega;
    e += l.mass * model.gravity * b.com.y();
  }
  return e;
}

}  // namespace decap
