#pragma once

#include "tdg/attack.hpp"

namespace tdg {

/// One-shot injection: every injected node connected to d targets drawn
/// uniformly without replacement, features optimized with the configured
/// loss (inverse KL by default for this baseline).
AttackResult fgsm_attack(const Model& surrogate, const Dataset& ds, const Budget& budget,
                         const AttackConfig& config);

/// Sequential batches with random edge targets redrawn per batch over the
/// targets the surrogate still classifies correctly; inverse-KL optimization
/// per batch over all injected nodes so far.
AttackResult afgsm_attack(const Model& surrogate, const Dataset& ds, const Budget& budget,
                          const AttackConfig& config);

enum class EdgePolicy { defective, uniform, random };

EdgePolicy edge_policy_from_name(const std::string& name);
std::string edge_policy_name(EdgePolicy p);

/// Edge-selection ablation: `defective` is the TDGIA rule, `uniform` hands
/// targets out round-robin by ascending node id, `random` draws each edge
/// endpoint uniformly. Feature optimization is held fixed to smooth mode.
AttackResult edge_policy_ablation(EdgePolicy policy, const Model& surrogate,
                                  const Dataset& ds, const Budget& budget,
                                  const AttackConfig& config);

}  // namespace tdg
