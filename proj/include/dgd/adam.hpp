#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dgd/tensor.hpp"

namespace dgd {

// Adam with bias correction and optional decoupled weight decay (applied
// multiplicatively to the value before the moment update, and only to
// parameters registered with decay=true). NaN gradients raise
// TrainingDivergedError naming the group.
class AdamState {
 public:
  AdamState() = default;
  AdamState(std::string group_name, double lr, double beta1 = 0.5, double beta2 = 0.7,
            double eps = 1e-8, double weight_decay = 0.0);

  void add_param(const ArrayRef& p, bool decay = false);
  void add_params(const std::vector<ArrayRef>& ps, bool decay = false);

  void step();
  void zero_grad();

  long step_count() const { return t_; }
  const std::string& group_name() const { return name_; }
  std::vector<ArrayRef> params() const;

  double lr = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.7;
  double eps = 1e-8;
  double weight_decay = 0.0;
  // When set, 2-D parameter rows whose gradient is identically zero are left
  // untouched (value and moments). Used for the representation matrix under
  // partial-epoch updates.
  bool skip_zero_grad_rows = false;

 private:
  struct Slot {
    ArrayRef p;
    std::vector<double> m, v;
    bool decay;
  };
  std::vector<Slot> slots_;
  long t_ = 0;
  std::string name_;
};

// One optimizer per parameter set: the decoder takes per-batch steps, the
// GMM takes per-batch steps, the representations take one step per epoch.
struct OptimizerTrio {
  AdamState decoder;
  AdamState representation;
  AdamState gmm;
};

}  // namespace dgd
