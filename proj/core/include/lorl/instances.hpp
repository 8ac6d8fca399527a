#pragma once

#include "lorl/mdp.hpp"
#include "lorl/rng.hpp"

namespace lorl {

// One state, two orthogonal unit-feature actions, H = 1; rewards
// 0.5 +- gap/2. Zero inherent Bellman error, B = sqrt(2).
FeatureMdp two_arm_bandit(double gap);

// One-hot features over (state, action): every function of (x, a) is linear,
// so the inherent Bellman error is exactly zero. Random transitions and
// rewards drawn from the seed; B = sqrt(|X| |A|).
FeatureMdp one_hot_instance(int num_states, int num_actions, int horizon,
                            std::uint64_t seed, double reward_scale = 0.9);

}  // namespace lorl
