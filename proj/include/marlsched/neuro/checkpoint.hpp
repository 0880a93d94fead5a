#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "marlsched/errors.hpp"
#include "marlsched/neuro/layers.hpp"

namespace marlsched::neuro {

// Model snapshot format: magic line, 8-byte little-endian header length, a
// JSON header (format version, caller metadata, tensor directory), then the
// tensor payloads as column-major little-endian doubles in directory order.
// Doubles regardless of the training scalar, so a float model reloads to the
// exact same float values.

struct NamedTensor {
  std::string name;
  Eigen::MatrixXd value;
};

struct Checkpoint {
  nlohmann::json meta;
  std::vector<NamedTensor> tensors;

  // Throws ContractViolation when absent or shape-mismatched lookups occur.
  const Eigen::MatrixXd& tensor(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const std::vector<NamedTensor>& tensors);
Checkpoint load_checkpoint(const std::string& path);

template <typename Scalar>
NamedTensor to_named(const ParamTensor<Scalar>& p) {
  return {p.name, p.value.template cast<double>()};
}

template <typename Scalar>
void restore_param(const Checkpoint& ckpt, ParamTensor<Scalar>& p) {
  const Eigen::MatrixXd& v = ckpt.tensor(p.name);
  if (v.rows() != p.value.rows() || v.cols() != p.value.cols())
    throw ContractViolation("checkpoint tensor " + p.name + " has wrong shape");
  p.value = v.cast<Scalar>();
}

}  // namespace marlsched::neuro
