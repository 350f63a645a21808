#ifndef LUMPCOUPLE_LUMPCOUPLE_HPP
#define LUMPCOUPLE_LUMPCOUPLE_HPP

#include "lumpcouple/scalar.hpp"
#include "lumpcouple/error.hpp"
#include "lumpcouple/state_space.hpp"
#include "lumpcouple/chain.hpp"
#include "lumpcouple/linalg.hpp"
#include "lumpcouple/chain_ops.hpp"
#include "lumpcouple/lumping.hpp"
#include "lumpcouple/coupling.hpp"
#include "lumpcouple/coupling_variants.hpp"
#include "lumpcouple/verification.hpp"
#include "lumpcouple/io.hpp"
#include "lumpcouple/example_cases.hpp"

#endif  // LUMPCOUPLE_LUMPCOUPLE_HPP
