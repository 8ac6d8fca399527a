#pragma once

#include <iosfwd>
#include <string>

#include "lorl/mdp.hpp"
#include "lorl/policy.hpp"

namespace lorl {

// Shortest decimal form that round-trips the double bit-exactly (<= 17
// significant digits).
std::string format_double(double v);

// Line-oriented text container. An MDP block:
//
//   mdp v1
//   H <H> d <d> states <X> actions <A> initial <x1>
//   name <x> <label>            (optional)
//   active <h> <x...>           (optional; absent step = all states)
//   features <h>                (then X*A lines: x a v_1 .. v_d)
//   transitions <h>             (then X*A lines: x a p_1 .. p_X)
//   rewards <h> <v_1 .. v_d>
//   end
//
// Steps are 1-based on disk, 0-based in memory.
void write_mdp(std::ostream& os, const FeatureMdp& mdp);
FeatureMdp read_mdp(std::istream& is);

// Policy block in the same container style:
//
//   policy v1
//   H <H> d <d> states <X> actions <A>
//   step <h> plinear <w_1 .. w_d> sigma <s>
//   step <h> softmax <w_1 .. w_d> eta <e>
//   step <h> tabular             (then X lines: x p_1 .. p_A)
//   end
void write_policy(std::ostream& os, const Policy& policy, int num_states, int num_actions,
                  int dim);
Policy read_policy(std::istream& is);

}  // namespace lorl
