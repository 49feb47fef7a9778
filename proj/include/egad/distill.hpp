#pragma once

#include "egad/teacher.hpp"

namespace egad {

/// sigmoid(Z Z^T): the soft reconstruction of a frozen model.
inline Matrix soft_targets(const Matrix& z) {
  Matrix s = kernels::matmul_nt(z, z);
  for (double& x : s.data()) x = kernels::sigmoid(x);
  return s;
}

/// (1 - gamma) * L_T + gamma * L_S, where L_S is the student's reconstruction
/// loss and L_T the RMS deviation of the student's soft reconstruction from
/// the teacher's. Terms with a zero coefficient are not recorded, so the
/// boundaries reduce exactly to one term.
inline Var distillation_loss_from_targets(Var z_student, const Matrix& teacher_soft, const Matrix& adjacency,
                                          double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("distillation_loss: gamma must lie in [0, 1]");
  if (z_student.rows() != teacher_soft.rows() || !teacher_soft.same_shape(adjacency)) {
    throw ShapeError("distillation_loss: student rows " + std::to_string(z_student.rows()) + ", teacher targets " +
                     teacher_soft.shape_str() + ", adjacency " + adjacency.shape_str());
  }
  if (gamma == 1.0) return reconstruction_loss(z_student, adjacency);
  Var recon = sigmoid(matmul(z_student, transpose(z_student)));
  Var deviation = rms_error(recon, teacher_soft);
  if (gamma == 0.0) return deviation;
  Var own = rms_error(recon, adjacency);
  return add(scale(deviation, 1.0 - gamma), scale(own, gamma));
}

inline Var distillation_loss(Var z_student, const Matrix& z_teacher, const SnapshotGraph& g, double gamma) {
  if (z_teacher.rows() != g.node_count()) {
    throw ShapeError("distillation_loss: teacher embeddings have " + std::to_string(z_teacher.rows()) +
                     " rows, snapshot has " + std::to_string(g.node_count()) + " nodes");
  }
  return distillation_loss_from_targets(z_student, soft_targets(z_teacher), g.dense_adjacency(), gamma);
}

/// A frozen teacher, its final embeddings, and the student to train against it.
struct DistillationBundle {
  const EgadModel& teacher;
  const Embeddings& teacher_embeddings;
  ModelConfig student;  // gamma taken from here
};

/// Trains the student on the teacher's window with the blended loss.
inline TrainResult distill_student(const DistillationBundle& bundle, const EventSequence& event, std::size_t k) {
  const EgadModel& teacher = bundle.teacher;
  ModelConfig cfg = bundle.student;
  cfg.role = Role::student;
  cfg.validate();
  if (teacher.window_end != k || teacher.config.window != cfg.window) {
    throw ConfigError("distill: teacher window ends at " + std::to_string(teacher.window_end) + " with l=" +
                      std::to_string(teacher.config.window) + ", student asked for k=" + std::to_string(k) +
                      " l=" + std::to_string(cfg.window));
  }
  if (teacher.registry != event.registry().raw_ids()) throw ConfigError("distill: teacher registry differs from event");
  PreparedWindow win(build_window(event, k, cfg.window));
  if (bundle.teacher_embeddings.nodes != win.last().nodes()) {
    throw ConfigError("distill: teacher embeddings are not aligned with snapshot " + std::to_string(k));
  }
  const Matrix targets = soft_targets(bundle.teacher_embeddings.z);
  const double gamma = cfg.gamma;
  EgadModel student = EgadModel::init(cfg, event.registry(), k);
  return fit_chain(std::move(student), win, [&](Recorder&, const ChainVars& chain) {
    return distillation_loss_from_targets(chain.z.back(), targets, win.target, gamma);
  });
}

}  // namespace egad
