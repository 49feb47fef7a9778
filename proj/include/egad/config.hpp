#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "egad/errors.hpp"

namespace egad {

enum class Role : std::uint8_t { teacher = 0, student = 1 };

inline const char* to_string(Role r) { return r == Role::teacher ? "teacher" : "student"; }

inline Role role_from_string(const std::string& s) {
  if (s == "teacher") return Role::teacher;
  if (s == "student") return Role::student;
  throw ConfigError("unknown role '" + s + "'");
}

/// Hyperparameters of one chain of GCNs connected by evolving attention.
struct ModelConfig {
  std::size_t window = 3;  // l: previous snapshots chained before the current one
  std::size_t heads = 3;   // h
  std::size_t d1 = 32;
  std::size_t d2 = 16;
  double lr = 1e-3;
  std::size_t epochs = 200;
  double gamma = 0.5;  // distillation blend, student only
  std::uint64_t seed = 0;
  Role role = Role::teacher;

  void validate() const {
    if (heads < 1) throw ConfigError("config: heads must be >= 1");
    if (d2 < 1 || d2 > d1) throw ConfigError("config: need 0 < d2 <= d1");
    if (!(lr > 0.0)) throw ConfigError("config: learning rate must be positive");
    if (epochs < 1) throw ConfigError("config: epochs must be >= 1");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("config: gamma must lie in [0, 1]");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline ModelConfig default_teacher_config() { return ModelConfig{}; }

inline ModelConfig default_student_config() {
  ModelConfig c;
  c.heads = 1;
  c.d1 = 8;
  c.d2 = 4;
  c.role = Role::student;
  return c;
}

}  // namespace egad
