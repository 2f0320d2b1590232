#pragma once

#include <cstdint>
#include <string>

#include "lmdp/env.hpp"
#include "lmdp/hardgen.hpp"

namespace lmdp {

/// Single-context instance (an ordinary MDP with a trivial emission).
LmdpPsi tiny_mdp_fixture();

/// Two contexts, S = A = |O| = 2, |I| = 3, H = 3.
LmdpPsi mixed_m2_fixture();

/// Eight models around the M = 2 fixture; the truth sits at index 5.
ModelClass mixed_m2_class();

struct HardFixture {
  HardInstanceSpec spec;
  EmissionAssignment assignment;
  LmdpPsi hard;
  LmdpPsi reference;
};

/// M = 8, alpha = 0.003, eps = 0.04, |I_m| = 64, a* = (1, 0), signs drawn from `seed`.
HardFixture hard_m8_fixture(std::uint64_t seed = 7);

/// Random instance with strictly positive kernels unless `sparsity` > 0.
LmdpPsi random_instance(const Dims& dims, Rng& rng, double sparsity = 0.0);

/// Location of a bundled file; honours the LMDP_DATA_DIR environment variable.
std::string data_path(const std::string& name);

}  // namespace lmdp
